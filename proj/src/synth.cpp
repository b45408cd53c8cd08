#include "halfpel/synth.hpp"

#include <algorithm>
#include <cmath>

#include "halfpel/util.hpp"

namespace halfpel {

namespace {

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Bilinear-smoothstep interpolation of a random lattice with `cell` pixels
// between lattice points.
void add_value_noise(Plane& p, Rng& rng, int cell, double amplitude) {
  const int gw = p.width() / cell + 2, gh = p.height() / cell + 2;
  std::vector<double> grid(static_cast<std::size_t>(gw) * gh);
  for (double& g : grid) g = rng.uniform(-1.0, 1.0);
  const double ox = rng.uniform(0.0, cell), oy = rng.uniform(0.0, cell);
  for (int y = 0; y < p.height(); ++y) {
    const double fy = (y + oy) / cell;
    const int iy = static_cast<int>(fy);
    const double ty = smoothstep(fy - iy);
    for (int x = 0; x < p.width(); ++x) {
      const double fx = (x + ox) / cell;
      const int ix = static_cast<int>(fx);
      const double tx = smoothstep(fx - ix);
      auto g = [&](int gx, int gy) { return grid[static_cast<std::size_t>(std::min(gy, gh - 1)) * gw + std::min(gx, gw - 1)]; };
      const double top = g(ix, iy) * (1 - tx) + g(ix + 1, iy) * tx;
      const double bot = g(ix, iy + 1) * (1 - tx) + g(ix + 1, iy + 1) * tx;
      p.at(x, y) += amplitude * (top * (1 - ty) + bot * ty);
    }
  }
}

struct Shape {
  enum Kind { kEllipse, kRect } kind;
  double cx, cy, rx, ry, angle;
  double level;
  double grating_freq;   // cycles per pixel; 0 for a flat fill
  double grating_angle;
  double grating_amp;

  bool inside(double x, double y) const {
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = (x - cx) * c + (y - cy) * s;
    const double v = -(x - cx) * s + (y - cy) * c;
    if (kind == kEllipse) return (u * u) / (rx * rx) + (v * v) / (ry * ry) <= 1.0;
    return std::abs(u) <= rx && std::abs(v) <= ry;
  }

  double value(double x, double y) const {
    if (grating_freq == 0.0) return level;
    const double t = x * std::cos(grating_angle) + y * std::sin(grating_angle);
    return level + grating_amp * std::sin(2.0 * M_PI * grating_freq * t);
  }
};

}  // namespace

Plane synthetic_image(int width, int height, std::uint64_t seed) {
  Rng rng(seed);
  Plane p(width, height, rng.uniform(70.0, 180.0));

  // Illumination gradient.
  const double gx = rng.uniform(-0.4, 0.4), gy = rng.uniform(-0.4, 0.4);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) p.at(x, y) += gx * (x - width / 2.0) + gy * (y - height / 2.0);
  }

  // Octaves with amplitude roughly proportional to scale.
  for (int cell : {48, 24, 12, 6, 3}) add_value_noise(p, rng, cell, 1.6 * cell * rng.uniform(0.5, 1.0));

  const int shapes = 6 + static_cast<int>(rng.below(10));
  const double extent = std::min(width, height);
  for (int i = 0; i < shapes; ++i) {
    Shape s{};
    s.kind = rng.uniform() < 0.5 ? Shape::kEllipse : Shape::kRect;
    s.cx = rng.uniform(0.0, width);
    s.cy = rng.uniform(0.0, height);
    s.rx = rng.uniform(0.04, 0.25) * extent;
    s.ry = rng.uniform(0.04, 0.25) * extent;
    s.angle = rng.uniform(0.0, M_PI);
    s.level = rng.uniform(10.0, 245.0);
    if (rng.uniform() < 0.4) {
      s.grating_freq = rng.uniform(0.05, 0.3);
      s.grating_angle = rng.uniform(0.0, M_PI);
      s.grating_amp = rng.uniform(10.0, 50.0);
    }
    const double opacity = rng.uniform(0.6, 1.0);
    const int x0 = std::max(0, static_cast<int>(s.cx - std::max(s.rx, s.ry) * 1.5) - 1);
    const int x1 = std::min(width, static_cast<int>(s.cx + std::max(s.rx, s.ry) * 1.5) + 2);
    const int y0 = std::max(0, static_cast<int>(s.cy - std::max(s.rx, s.ry) * 1.5) - 1);
    const int y1 = std::min(height, static_cast<int>(s.cy + std::max(s.rx, s.ry) * 1.5) + 2);
    constexpr int kSuper = 4;
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        int hits = 0;
        for (int sy = 0; sy < kSuper; ++sy) {
          for (int sx = 0; sx < kSuper; ++sx) {
            hits += s.inside(x + (sx + 0.5) / kSuper, y + (sy + 0.5) / kSuper) ? 1 : 0;
          }
        }
        if (hits == 0) continue;
        const double alpha = opacity * hits / double(kSuper * kSuper);
        p.at(x, y) = (1.0 - alpha) * p.at(x, y) + alpha * s.value(x + 0.5, y + 0.5);
      }
    }
  }
  clip_in_place(p);
  return p;
}

std::vector<Plane> synthetic_clip(const ClipParams& params, const BlurKernel& kernel) {
  if (params.frames < 1 || params.width < 1 || params.height < 1) throw PreconditionError("synthetic_clip: bad clip size");
  const int span_x = std::abs(params.motion_x) * (params.frames - 1);
  const int span_y = std::abs(params.motion_y) * (params.frames - 1);
  const int margin = 8;
  const int cw = 2 * params.width + span_x + 2 * margin;
  const int ch = 2 * params.height + span_y + 2 * margin;
  const Plane canvas = blur(synthetic_image(cw, ch, params.seed), kernel);
  Rng noise(params.seed ^ 0x5bd1e995ULL);

  const int start_x = margin + (params.motion_x < 0 ? span_x : 0);
  const int start_y = margin + (params.motion_y < 0 ? span_y : 0);
  std::vector<Plane> frames;
  for (int t = 0; t < params.frames; ++t) {
    const int ox = start_x + t * params.motion_x;
    const int oy = start_y + t * params.motion_y;
    Plane f(params.width, params.height);
    for (int y = 0; y < params.height; ++y) {
      for (int x = 0; x < params.width; ++x) {
        double v = canvas.at(2 * x + ox, 2 * y + oy);
        if (params.noise_sigma > 0.0) v += params.noise_sigma * noise.normal();
        f.at(x, y) = to_byte(v);
      }
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace halfpel
