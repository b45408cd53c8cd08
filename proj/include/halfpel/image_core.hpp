#pragma once

#include <array>
#include <filesystem>
#include <string_view>
#include <vector>

#include "halfpel/plane.hpp"

namespace halfpel {

// ---------------------------------------------------------------------------
// PGM (binary P5, maxval 255) I/O
// ---------------------------------------------------------------------------

Plane decode_pgm(std::string_view bytes);
std::string encode_pgm(const Plane& plane);

Plane load_pgm(const std::filesystem::path& path);
// Samples are rounded half away from zero and clipped to [0, 255].
void save_pgm(const Plane& plane, const std::filesystem::path& path);

std::uint8_t to_byte(double v);

// ---------------------------------------------------------------------------
// Low-pass blurring
// ---------------------------------------------------------------------------

// Separable symmetric kernel with odd length and unit DC gain.
class BlurKernel {
 public:
  explicit BlurKernel(std::vector<double> taps);

  // Odd-length sampled Gaussian, renormalized to sum 1.
  static BlurKernel gaussian(double sigma, int length = 5);
  static BlurKernel default_kernel() { return gaussian(0.8, 5); }

  const std::vector<double>& taps() const { return taps_; }
  int radius() const { return static_cast<int>(taps_.size() / 2); }

 private:
  std::vector<double> taps_;
};

// Horizontal then vertical pass, replicate padding at the edges.
Plane blur(const Plane& plane, const BlurKernel& kernel);

// ---------------------------------------------------------------------------
// Phase extraction
// ---------------------------------------------------------------------------

PhaseSet extract_phases(const Plane& plane);
Plane interleave_phases(const PhaseSet& phases);

// Drops the last row/column when odd.
Plane crop_to_even(const Plane& plane);

// ---------------------------------------------------------------------------
// Intra-coding surrogate: 8x8 DCT-II, uniform quantization, reconstruction
// ---------------------------------------------------------------------------

inline constexpr int kTransformSize = 8;
using Block8 = std::array<double, kTransformSize * kTransformSize>;

// Orthonormal 2-D DCT-II and its inverse on a row-major 8x8 block.
Block8 dct8x8(const Block8& block);
Block8 idct8x8(const Block8& coeffs);

// Quantizer step for a QP: 2^((qp - 4) / 6).
double qstep_for_qp(int qp);

// Calls fn(coefficient_index) for every quantized coefficient of every 8x8
// block of `plane` and returns the dequantized reconstruction (unclipped).
// Edge blocks are replicate-padded to 8x8 and cropped back.
Plane quantize_blocks(const Plane& plane, double qstep, std::vector<long long>* levels = nullptr);

// Replaces real intra coding: per 8x8 block DCT, rounding quantization with
// the QP step, inverse DCT, clip to [0, 255]. Deterministic.
Plane degrade_intra_surrogate(const Plane& plane, int qp);

}  // namespace halfpel
