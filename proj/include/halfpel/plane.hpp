#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "halfpel/error.hpp"

namespace halfpel {

// Single-channel raster of real-valued samples on the 0..255 scale, row-major.
// Values are kept unrounded; rounding and clipping happen when a plane is
// written to disk or fed into a prediction.
class Plane {
 public:
  static constexpr int kBitDepth = 8;
  static constexpr double kMaxValue = 255.0;

  Plane() = default;
  Plane(int width, int height, double fill = 0.0);
  Plane(int width, int height, std::vector<double> samples);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  double& at(int x, int y) { return samples_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int x, int y) const { return samples_[static_cast<std::size_t>(y) * width_ + x]; }

  // Sample with coordinates clamped into the plane (replicate extension).
  double clamped(int x, int y) const;

  std::span<double> samples() { return samples_; }
  std::span<const double> samples() const { return samples_; }
  std::span<double> row(int y) { return {samples_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)}; }
  std::span<const double> row(int y) const {
    return {samples_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }

  bool same_shape(const Plane& other) const { return width_ == other.width_ && height_ == other.height_; }

  Plane transposed() const;
  Plane cropped(int x0, int y0, int width, int height) const;

  friend bool operator==(const Plane&, const Plane&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> samples_;
};

// Half-pel positions relative to an integer sample: b (right), h (below),
// j (diagonal). kSr tags super-resolution networks, which produce all phases.
enum class Position : std::uint8_t { kH = 0, kV = 1, kD = 2, kSr = 3 };

std::string_view to_string(Position p);
Position parse_position(std::string_view s);

// Four parity sub-planes of an even-dimension plane.
struct PhaseSet {
  Plane a;  // (even, even)
  Plane b;  // (odd, even)
  Plane h;  // (even, odd)
  Plane j;  // (odd, odd)

  const Plane& at(Position p) const;
};

inline double clip_sample(double v) { return v < 0.0 ? 0.0 : (v > Plane::kMaxValue ? Plane::kMaxValue : v); }

// Clamp to [0, 255] in place.
void clip_in_place(Plane& p);

}  // namespace halfpel
