#pragma once

#include <vector>

#include "halfpel/plane.hpp"

namespace halfpel {

// Even-length symmetric integer kernel for the half-sample phase; taps sum to
// scale. Tap k of an n-tap kernel reads sample x + k - (n/2 - 1), so the
// output sits at x + 0.5.
class InterpKernel {
 public:
  InterpKernel(std::vector<int> taps, int scale);

  const std::vector<int>& taps() const { return taps_; }
  int scale() const { return scale_; }
  // Offset of tap 0 relative to the output's integer anchor.
  int first_offset() const { return -(static_cast<int>(taps_.size()) / 2 - 1); }

  // HEVC luma half-sample DCT-based filter.
  static const InterpKernel& hevc_half();
  static const InterpKernel& average2();

 private:
  std::vector<int> taps_;
  int scale_;
};

// Samples at (x + 0.5, y); replicate edges; single clip to [0, 255].
Plane interp_half_h(const Plane& plane, const InterpKernel& kernel = InterpKernel::hevc_half());
// Samples at (x, y + 0.5).
Plane interp_half_v(const Plane& plane, const InterpKernel& kernel = InterpKernel::hevc_half());
// Samples at (x + 0.5, y + 0.5): horizontal pass, then vertical pass on the
// unclipped intermediate, then one clip.
Plane interp_half_d(const Plane& plane, const InterpKernel& kernel = InterpKernel::hevc_half());

Plane interp_half(const Plane& plane, Position position, const InterpKernel& kernel = InterpKernel::hevc_half());

// Unclipped single-direction passes, exposed for the separability checks.
Plane filter_rows_half(const Plane& plane, const InterpKernel& kernel);
Plane filter_cols_half(const Plane& plane, const InterpKernel& kernel);

// Mean of the 2 (H, V) or 4 (D) nearest integer samples, replicate edges.
Plane average2_half(const Plane& plane, Position position);

// Sample-aligned x2 upscale with the Catmull-Rom cubic (a = -0.5): output
// (2x, 2y) copies input (x, y); odd positions use the half-sample taps
// (-1, 9, 9, -1) / 16 separably, replicate edges, no clipping.
Plane upscale2_bicubic(const Plane& plane);

const InterpKernel& catmull_rom_half();

}  // namespace halfpel
