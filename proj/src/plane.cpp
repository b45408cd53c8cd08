#include "halfpel/plane.hpp"

#include <algorithm>

namespace halfpel {

Plane::Plane(int width, int height, double fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw PreconditionError("plane dimensions must be positive, got " + std::to_string(width) + "x" +
                            std::to_string(height));
  }
  samples_.assign(static_cast<std::size_t>(width) * height, fill);
}

Plane::Plane(int width, int height, std::vector<double> samples) : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw PreconditionError("plane dimensions must be positive");
  }
  if (samples.size() != static_cast<std::size_t>(width) * height) {
    throw PreconditionError("sample count " + std::to_string(samples.size()) + " does not match " +
                            std::to_string(width) + "x" + std::to_string(height));
  }
  samples_ = std::move(samples);
}

double Plane::clamped(int x, int y) const {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  return at(x, y);
}

Plane Plane::transposed() const {
  Plane t(height_, width_);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) t.at(y, x) = at(x, y);
  }
  return t;
}

Plane Plane::cropped(int x0, int y0, int width, int height) const {
  if (x0 < 0 || y0 < 0 || x0 + width > width_ || y0 + height > height_) {
    throw PreconditionError("crop window outside plane");
  }
  Plane c(width, height);
  for (int y = 0; y < height; ++y) {
    auto src = row(y0 + y).subspan(static_cast<std::size_t>(x0), static_cast<std::size_t>(width));
    std::copy(src.begin(), src.end(), c.row(y).begin());
  }
  return c;
}

std::string_view to_string(Position p) {
  switch (p) {
    case Position::kH: return "h";
    case Position::kV: return "v";
    case Position::kD: return "d";
    case Position::kSr: return "sr";
  }
  return "?";
}

Position parse_position(std::string_view s) {
  if (s == "h" || s == "H") return Position::kH;
  if (s == "v" || s == "V") return Position::kV;
  if (s == "d" || s == "D") return Position::kD;
  if (s == "sr" || s == "SR") return Position::kSr;
  throw ConfigError("unknown half-pel position '" + std::string(s) + "' (expected h, v, d or sr)");
}

const Plane& PhaseSet::at(Position p) const {
  switch (p) {
    case Position::kH: return b;
    case Position::kV: return h;
    case Position::kD: return j;
    case Position::kSr: break;
  }
  throw PreconditionError("phase set has no plane for position sr");
}

void clip_in_place(Plane& p) {
  for (double& v : p.samples()) v = clip_sample(v);
}

}  // namespace halfpel
