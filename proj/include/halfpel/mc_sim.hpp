#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "halfpel/cnn.hpp"
#include "halfpel/eval_report.hpp"
#include "halfpel/plane.hpp"

namespace halfpel {

// Displacement in half-pel units.
struct MotionVector {
  int dx = 0;
  int dy = 0;

  bool is_half_pel() const { return (dx & 1) != 0 || (dy & 1) != 0; }
  friend bool operator==(const MotionVector&, const MotionVector&) = default;
};

// Integer samples plus the three whole-frame half-pel planes produced by one
// interpolator. b(x, y) sits at (x + 0.5, y), h at (x, y + 0.5), j at
// (x + 0.5, y + 0.5).
struct HalfPelField {
  Plane a, b, h, j;

  // Plane holding samples for MV parity (dx mod 2, dy mod 2).
  const Plane& select(const MotionVector& mv) const;
};

enum class InterpolatorKind { kDctif, kCnn, kAvg2, kSrAnchor };

std::string_view to_string(InterpolatorKind k);
InterpolatorKind parse_interpolator(std::string_view s);

struct InterpolatorSpec {
  InterpolatorKind kind = InterpolatorKind::kDctif;
  // kCnn: networks tagged h, v and d for one or more model QPs.
  // kSrAnchor: exactly one network (tagged sr).
  std::vector<Network> networks;

  static InterpolatorSpec dctif() { return {InterpolatorKind::kDctif, {}}; }
  static InterpolatorSpec avg2() { return {InterpolatorKind::kAvg2, {}}; }
  static InterpolatorSpec cnn(std::vector<Network> nets);
  static InterpolatorSpec sr_anchor(Network net);

  // Network for a position, choosing the model QP nearest to slice_qp among
  // those loaded (ties to the lower QP).
  const Network& cnn_for(Position position, int slice_qp) const;
  void validate() const;
};

// Loads cnnif_{h,v,d}_qp{NN}.cnif files from `dir`. With `qp` set only that
// model QP is loaded, otherwise every QP found.
InterpolatorSpec load_cnn_spec(const std::filesystem::path& dir, std::optional<int> qp = std::nullopt);
// "cnnif_h_qp22.cnif"; the super-resolution network is "cnnif_sr.cnif".
std::string cnn_weight_file_name(Position position, int qp);

HalfPelField build_halfpel_field(const Plane& ref, const InterpolatorSpec& spec, int slice_qp = 22, unsigned threads = 1);

// x2 Catmull-Rom upscale, network on the enlarged frame, phases 1-3 become
// b, h, j. Phase 0 is discarded so a == ref exactly.
HalfPelField sr_anchor_field(const Plane& ref, const Network& net, unsigned threads = 1);

struct McParams {
  int block_size = 16;
  int search_range = 8;  // integer pels
  unsigned threads = 1;
  int slice_qp = 22;
  // When set, each reference frame first passes through the intra surrogate
  // at this QP (a stand-in for a coded reconstruction).
  std::optional<int> reference_qp;

  void validate() const;
};

struct MotionField {
  int blocks_x = 0;
  int blocks_y = 0;
  std::vector<MotionVector> mvs;  // row-major over blocks
  std::vector<double> sad;
};

// Full integer search in +-search_range, then the 8 half-pel neighbours of
// the best integer vector. Candidates are ordered by (SAD, |dx| + |dy|, dy,
// dx); references outside the frame use replicate extension.
MotionField motion_estimate(const Plane& cur, const HalfPelField& field, const McParams& params);

Plane motion_compensate(const HalfPelField& field, const MotionField& motion, const McParams& params);

struct FrameStats {
  int frame = 0;
  double sse = 0.0;
  double psnr_db = 0.0;
  double mean_sad = 0.0;
  int int_mv_count = 0;
  int half_mv_count = 0;
  double entropy_bps = 0.0;  // order-0 entropy of rounded residuals
};

struct McReport {
  std::vector<FrameStats> frames;
  FrameStats total;  // frame = -1
  std::size_t samples = 0;
};

// Frame t is predicted from frame t - 1 (open loop).
McReport simulate_sequence(const std::vector<Plane>& frames, const InterpolatorSpec& spec, const McParams& params);

// Header: frame,sse,psnr_db,mean_sad,int_mv_count,half_mv_count,entropy_bps;
// the aggregate row has frame "all".
std::string mc_report_csv(const McReport& report);

// Rate-distortion proxy, one row per QP: reference degraded at the QP, the
// prediction residual is 8x8 DCT quantized with the QP step. rate = (order-0
// entropy of the residual levels + 6 bits per block) per sample; psnr is the
// reconstruction quality; sse is the prediction SSE.
std::vector<RDRow> simulate_rd(const std::vector<Plane>& frames, const InterpolatorSpec& spec, const McParams& params,
                               const std::vector<int>& qps = {22, 27, 32, 37});

inline constexpr double kMvBitsPerBlock = 6.0;

// Numbered frame files frame_0000.pgm, frame_0001.pgm, ...; numbering must
// start at 0 and be contiguous.
std::vector<Plane> load_frames(const std::filesystem::path& dir);
void save_frames(const std::vector<Plane>& frames, const std::filesystem::path& dir);

}  // namespace halfpel
