#pragma once

#include <cstdint>
#include <vector>

#include "halfpel/image_core.hpp"
#include "halfpel/plane.hpp"

namespace halfpel {

// Procedural natural-looking test content: multi-octave value noise with a
// 1/f-like spectrum, smooth illumination gradients, and anti-aliased flat
// and textured shapes with hard edges. Deterministic in `seed`.
Plane synthetic_image(int width, int height, std::uint64_t seed);

struct ClipParams {
  int width = 128;
  int height = 96;
  int frames = 4;
  // Global motion per frame in half-pel units of the output frames.
  int motion_x = 1;
  int motion_y = 0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
};

// Frames decimated by two from one blurred high-resolution canvas that pans
// by (motion_x, motion_y) canvas samples per frame: frame t at (x, y) equals
// frame t-1 at (x + motion_x / 2, y + motion_y / 2), i.e. the true motion
// vector is (motion_x, motion_y) in half-pel units.
std::vector<Plane> synthetic_clip(const ClipParams& params, const BlurKernel& kernel = BlurKernel::default_kernel());

}  // namespace halfpel
