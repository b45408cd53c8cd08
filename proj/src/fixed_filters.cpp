#include "halfpel/fixed_filters.hpp"

#include <numeric>
#include <string>

namespace halfpel {

InterpKernel::InterpKernel(std::vector<int> taps, int scale) : taps_(std::move(taps)), scale_(scale) {
  if (taps_.empty() || taps_.size() % 2 != 0) throw ConfigError("interpolation kernel needs an even, non-zero tap count");
  if (scale_ <= 0) throw ConfigError("interpolation kernel scale must be positive");
  if (std::accumulate(taps_.begin(), taps_.end(), 0) != scale_) {
    throw ConfigError("interpolation kernel taps must sum to scale " + std::to_string(scale_));
  }
  for (std::size_t i = 0; i < taps_.size() / 2; ++i) {
    if (taps_[i] != taps_[taps_.size() - 1 - i]) throw ConfigError("interpolation kernel must be symmetric");
  }
}

const InterpKernel& InterpKernel::hevc_half() {
  static const InterpKernel k({-1, 4, -11, 40, 40, -11, 4, -1}, 64);
  return k;
}

const InterpKernel& InterpKernel::average2() {
  static const InterpKernel k({1, 1}, 2);
  return k;
}

Plane filter_rows_half(const Plane& plane, const InterpKernel& kernel) {
  const auto& taps = kernel.taps();
  const int off = kernel.first_offset();
  const double inv = 1.0 / kernel.scale();
  Plane out(plane.width(), plane.height());
  for (int y = 0; y < plane.height(); ++y) {
    for (int x = 0; x < plane.width(); ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < taps.size(); ++k) acc += taps[k] * plane.clamped(x + off + static_cast<int>(k), y);
      out.at(x, y) = acc * inv;
    }
  }
  return out;
}

Plane filter_cols_half(const Plane& plane, const InterpKernel& kernel) {
  const auto& taps = kernel.taps();
  const int off = kernel.first_offset();
  const double inv = 1.0 / kernel.scale();
  Plane out(plane.width(), plane.height());
  for (int y = 0; y < plane.height(); ++y) {
    for (int x = 0; x < plane.width(); ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < taps.size(); ++k) acc += taps[k] * plane.clamped(x, y + off + static_cast<int>(k));
      out.at(x, y) = acc * inv;
    }
  }
  return out;
}

Plane interp_half_h(const Plane& plane, const InterpKernel& kernel) {
  Plane out = filter_rows_half(plane, kernel);
  clip_in_place(out);
  return out;
}

Plane interp_half_v(const Plane& plane, const InterpKernel& kernel) {
  Plane out = filter_cols_half(plane, kernel);
  clip_in_place(out);
  return out;
}

Plane interp_half_d(const Plane& plane, const InterpKernel& kernel) {
  Plane out = filter_cols_half(filter_rows_half(plane, kernel), kernel);
  clip_in_place(out);
  return out;
}

Plane interp_half(const Plane& plane, Position position, const InterpKernel& kernel) {
  switch (position) {
    case Position::kH: return interp_half_h(plane, kernel);
    case Position::kV: return interp_half_v(plane, kernel);
    case Position::kD: return interp_half_d(plane, kernel);
    case Position::kSr: break;
  }
  throw PreconditionError("fixed filters interpolate only h, v and d positions");
}

Plane average2_half(const Plane& plane, Position position) {
  Plane out(plane.width(), plane.height());
  for (int y = 0; y < plane.height(); ++y) {
    for (int x = 0; x < plane.width(); ++x) {
      double v = 0.0;
      switch (position) {
        case Position::kH: v = 0.5 * (plane.at(x, y) + plane.clamped(x + 1, y)); break;
        case Position::kV: v = 0.5 * (plane.at(x, y) + plane.clamped(x, y + 1)); break;
        case Position::kD:
          v = 0.25 * (plane.at(x, y) + plane.clamped(x + 1, y) + plane.clamped(x, y + 1) + plane.clamped(x + 1, y + 1));
          break;
        case Position::kSr: throw PreconditionError("average2_half interpolates only h, v and d positions");
      }
      out.at(x, y) = v;
    }
  }
  return out;
}

const InterpKernel& catmull_rom_half() {
  static const InterpKernel k({-1, 9, 9, -1}, 16);
  return k;
}

Plane upscale2_bicubic(const Plane& plane) {
  const Plane right = filter_rows_half(plane, catmull_rom_half());
  const Plane below = filter_cols_half(plane, catmull_rom_half());
  const Plane diag = filter_cols_half(right, catmull_rom_half());
  Plane out(2 * plane.width(), 2 * plane.height());
  for (int y = 0; y < plane.height(); ++y) {
    for (int x = 0; x < plane.width(); ++x) {
      out.at(2 * x, 2 * y) = plane.at(x, y);
      out.at(2 * x + 1, 2 * y) = right.at(x, y);
      out.at(2 * x, 2 * y + 1) = below.at(x, y);
      out.at(2 * x + 1, 2 * y + 1) = diag.at(x, y);
    }
  }
  return out;
}

}  // namespace halfpel
