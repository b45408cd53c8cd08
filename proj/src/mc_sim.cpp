#include "halfpel/mc_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <regex>
#include <tuple>

#include "halfpel/datagen.hpp"
#include "halfpel/fixed_filters.hpp"
#include "halfpel/image_core.hpp"
#include "halfpel/util.hpp"

namespace halfpel {

namespace {

int floor_half(int v) { return v >= 0 ? v / 2 : -((-v + 1) / 2); }

}  // namespace

const Plane& HalfPelField::select(const MotionVector& mv) const {
  const bool ox = (mv.dx & 1) != 0, oy = (mv.dy & 1) != 0;
  if (!ox && !oy) return a;
  if (ox && !oy) return b;
  if (!ox && oy) return h;
  return j;
}

std::string_view to_string(InterpolatorKind k) {
  switch (k) {
    case InterpolatorKind::kDctif: return "dctif";
    case InterpolatorKind::kCnn: return "cnn";
    case InterpolatorKind::kAvg2: return "avg2";
    case InterpolatorKind::kSrAnchor: return "sr";
  }
  return "?";
}

InterpolatorKind parse_interpolator(std::string_view s) {
  if (s == "dctif") return InterpolatorKind::kDctif;
  if (s == "cnn") return InterpolatorKind::kCnn;
  if (s == "avg2") return InterpolatorKind::kAvg2;
  if (s == "sr") return InterpolatorKind::kSrAnchor;
  throw ConfigError("unknown interpolation method '" + std::string(s) + "' (expected dctif, cnn, avg2 or sr)");
}

InterpolatorSpec InterpolatorSpec::cnn(std::vector<Network> nets) {
  InterpolatorSpec s{InterpolatorKind::kCnn, std::move(nets)};
  s.validate();
  return s;
}

InterpolatorSpec InterpolatorSpec::sr_anchor(Network net) {
  InterpolatorSpec s{InterpolatorKind::kSrAnchor, {std::move(net)}};
  s.validate();
  return s;
}

const Network& InterpolatorSpec::cnn_for(Position position, int slice_qp) const {
  const Network* best = nullptr;
  for (const auto& n : networks) {
    if (n.position != position) continue;
    if (best == nullptr || std::abs(n.qp - slice_qp) < std::abs(best->qp - slice_qp) ||
        (std::abs(n.qp - slice_qp) == std::abs(best->qp - slice_qp) && n.qp < best->qp)) {
      best = &n;
    }
  }
  if (best == nullptr) throw ConfigError("no CNN model loaded for position " + std::string(to_string(position)));
  return *best;
}

void InterpolatorSpec::validate() const {
  switch (kind) {
    case InterpolatorKind::kDctif:
    case InterpolatorKind::kAvg2: return;
    case InterpolatorKind::kCnn: {
      for (const auto& n : networks) {
        validate_network(n);
        if (n.position == Position::kSr) throw ConfigError("CNN interpolator given a super-resolution network");
      }
      for (Position p : {Position::kH, Position::kV, Position::kD}) (void)cnn_for(p, 22);
      // Every model QP must provide all three positions.
      std::map<int, int> per_qp;
      for (const auto& n : networks) per_qp[n.qp] |= 1 << static_cast<int>(n.position);
      for (const auto& [qp, mask] : per_qp) {
        if (mask != 7) throw ConfigError("CNN models for qp " + std::to_string(qp) + " do not cover h, v and d");
      }
      return;
    }
    case InterpolatorKind::kSrAnchor:
      if (networks.size() != 1) throw ConfigError("SR anchor needs exactly one network");
      validate_network(networks.front());
      if (networks.front().position != Position::kSr) throw ConfigError("SR anchor network must be tagged sr");
      return;
  }
}

std::string cnn_weight_file_name(Position position, int qp) {
  if (position == Position::kSr) return "cnnif_sr.cnif";
  return "cnnif_" + std::string(to_string(position)) + "_qp" + std::to_string(qp) + ".cnif";
}

InterpolatorSpec load_cnn_spec(const std::filesystem::path& dir, std::optional<int> qp) {
  std::vector<Network> nets;
  for (int model_qp : kModelQps) {
    if (qp && *qp != model_qp) continue;
    int found = 0;
    for (Position p : {Position::kH, Position::kV, Position::kD}) {
      const auto path = dir / cnn_weight_file_name(p, model_qp);
      if (!std::filesystem::exists(path)) continue;
      nets.push_back(load_weights(path, LoadOptions{p, model_qp, true}));
      ++found;
    }
    if (found != 0 && found != 3) {
      throw ConfigError("weights directory '" + dir.string() + "' has an incomplete model set for qp " + std::to_string(model_qp));
    }
  }
  if (nets.empty()) throw ConfigError("no CNN weight files (cnnif_<pos>_qp<NN>.cnif) found in '" + dir.string() + "'");
  return InterpolatorSpec::cnn(std::move(nets));
}

HalfPelField sr_anchor_field(const Plane& ref, const Network& net, unsigned threads) {
  const Plane enlarged = apply_network(net, upscale2_bicubic(ref), threads);
  PhaseSet phases = extract_phases(enlarged);
  return HalfPelField{ref, std::move(phases.b), std::move(phases.h), std::move(phases.j)};
}

HalfPelField build_halfpel_field(const Plane& ref, const InterpolatorSpec& spec, int slice_qp, unsigned threads) {
  switch (spec.kind) {
    case InterpolatorKind::kDctif:
      return HalfPelField{ref, interp_half_h(ref), interp_half_v(ref), interp_half_d(ref)};
    case InterpolatorKind::kAvg2:
      return HalfPelField{ref, average2_half(ref, Position::kH), average2_half(ref, Position::kV), average2_half(ref, Position::kD)};
    case InterpolatorKind::kCnn:
      return HalfPelField{ref, apply_network(spec.cnn_for(Position::kH, slice_qp), ref, threads),
                          apply_network(spec.cnn_for(Position::kV, slice_qp), ref, threads),
                          apply_network(spec.cnn_for(Position::kD, slice_qp), ref, threads)};
    case InterpolatorKind::kSrAnchor:
      spec.validate();
      return sr_anchor_field(ref, spec.networks.front(), threads);
  }
  throw ConfigError("unknown interpolator kind");
}

void McParams::validate() const {
  if (block_size < 1) throw ConfigError("block_size must be positive");
  if (search_range < 0) throw ConfigError("search_range must be non-negative");
  if (reference_qp && (*reference_qp < 0 || *reference_qp > 51)) throw ConfigError("reference qp outside 0..51");
  if (slice_qp < 0 || slice_qp > 51) throw ConfigError("slice qp outside 0..51");
}

namespace {

struct BlockRect {
  int x0, y0, w, h;
};

BlockRect block_rect(int bx, int by, int block, int width, int height) {
  const int x0 = bx * block, y0 = by * block;
  return {x0, y0, std::min(block, width - x0), std::min(block, height - y0)};
}

double block_sad(const Plane& cur, const Plane& ref, const BlockRect& r, int ox, int oy) {
  double acc = 0.0;
  const bool inside = r.x0 + ox >= 0 && r.y0 + oy >= 0 && r.x0 + r.w + ox <= ref.width() && r.y0 + r.h + oy <= ref.height();
  for (int y = r.y0; y < r.y0 + r.h; ++y) {
    for (int x = r.x0; x < r.x0 + r.w; ++x) {
      const double p = inside ? ref.at(x + ox, y + oy) : ref.clamped(x + ox, y + oy);
      acc += std::abs(cur.at(x, y) - p);
    }
  }
  return acc;
}

double candidate_sad(const Plane& cur, const HalfPelField& field, const BlockRect& r, const MotionVector& mv) {
  return block_sad(cur, field.select(mv), r, floor_half(mv.dx), floor_half(mv.dy));
}

// Lexicographic candidate order: SAD, then |dx| + |dy|, then dy, then dx.
bool better(double sad, const MotionVector& mv, double best_sad, const MotionVector& best) {
  return std::make_tuple(sad, std::abs(mv.dx) + std::abs(mv.dy), mv.dy, mv.dx) <
         std::make_tuple(best_sad, std::abs(best.dx) + std::abs(best.dy), best.dy, best.dx);
}

}  // namespace

MotionField motion_estimate(const Plane& cur, const HalfPelField& field, const McParams& params) {
  params.validate();
  if (!cur.same_shape(field.a) || !field.a.same_shape(field.b) || !field.a.same_shape(field.h) || !field.a.same_shape(field.j)) {
    throw PreconditionError("motion_estimate: frame and field dimensions differ");
  }
  if (cur.width() < params.block_size || cur.height() < params.block_size) {
    throw PreconditionError("motion_estimate: frame smaller than one block");
  }
  MotionField mf;
  mf.blocks_x = (cur.width() + params.block_size - 1) / params.block_size;
  mf.blocks_y = (cur.height() + params.block_size - 1) / params.block_size;
  const std::size_t n = static_cast<std::size_t>(mf.blocks_x) * mf.blocks_y;
  mf.mvs.resize(n);
  mf.sad.resize(n);
  const int range = params.search_range;
  parallel_for(n, params.threads, [&](std::size_t i) {
    const int bx = static_cast<int>(i % mf.blocks_x), by = static_cast<int>(i / mf.blocks_x);
    const BlockRect r = block_rect(bx, by, params.block_size, cur.width(), cur.height());
    MotionVector best{0, 0};
    double best_sad = block_sad(cur, field.a, r, 0, 0);
    for (int iy = -range; iy <= range; ++iy) {
      for (int ix = -range; ix <= range; ++ix) {
        const MotionVector mv{2 * ix, 2 * iy};
        const double s = block_sad(cur, field.a, r, ix, iy);
        if (better(s, mv, best_sad, best)) {
          best_sad = s;
          best = mv;
        }
      }
    }
    const MotionVector center = best;
    for (int sy = -1; sy <= 1; ++sy) {
      for (int sx = -1; sx <= 1; ++sx) {
        if (sx == 0 && sy == 0) continue;
        const MotionVector mv{center.dx + sx, center.dy + sy};
        if (std::abs(mv.dx) > 2 * range || std::abs(mv.dy) > 2 * range) continue;
        const double s = candidate_sad(cur, field, r, mv);
        if (better(s, mv, best_sad, best)) {
          best_sad = s;
          best = mv;
        }
      }
    }
    mf.mvs[i] = best;
    mf.sad[i] = best_sad;
  });
  return mf;
}

Plane motion_compensate(const HalfPelField& field, const MotionField& motion, const McParams& params) {
  const int width = field.a.width(), height = field.a.height();
  const int bx_count = (width + params.block_size - 1) / params.block_size;
  const int by_count = (height + params.block_size - 1) / params.block_size;
  if (motion.blocks_x != bx_count || motion.blocks_y != by_count ||
      motion.mvs.size() != static_cast<std::size_t>(bx_count) * by_count) {
    throw PreconditionError("motion_compensate: MV grid does not match the block partition");
  }
  Plane pred(width, height);
  for (int by = 0; by < by_count; ++by) {
    for (int bx = 0; bx < bx_count; ++bx) {
      const MotionVector& mv = motion.mvs[static_cast<std::size_t>(by) * bx_count + bx];
      const Plane& src = field.select(mv);
      const int ox = floor_half(mv.dx), oy = floor_half(mv.dy);
      const BlockRect r = block_rect(bx, by, params.block_size, width, height);
      for (int y = r.y0; y < r.y0 + r.h; ++y) {
        for (int x = r.x0; x < r.x0 + r.w; ++x) pred.at(x, y) = src.clamped(x + ox, y + oy);
      }
    }
  }
  return pred;
}

namespace {

double entropy_bits(const std::map<long long, std::size_t>& histogram, std::size_t total) {
  if (total == 0) return 0.0;
  double h = 0.0;
  for (const auto& [value, count] : histogram) {
    const double p = static_cast<double>(count) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h == 0.0 ? 0.0 : h;  // avoid -0
}

Plane reference_for(const Plane& frame, std::optional<int> qp) { return qp ? degrade_intra_surrogate(frame, *qp) : frame; }

void check_frames(const std::vector<Plane>& frames) {
  if (frames.size() < 2) throw PreconditionError("need at least 2 frames");
  for (const auto& f : frames) {
    if (!f.same_shape(frames.front())) throw PreconditionError("frames differ in dimensions");
  }
}

}  // namespace

McReport simulate_sequence(const std::vector<Plane>& frames, const InterpolatorSpec& spec, const McParams& params) {
  check_frames(frames);
  params.validate();
  spec.validate();
  McReport report;
  std::map<long long, std::size_t> pooled;
  std::size_t total_blocks = 0;
  double total_sad = 0.0;
  for (std::size_t t = 1; t < frames.size(); ++t) {
    const Plane& cur = frames[t];
    const HalfPelField field = build_halfpel_field(reference_for(frames[t - 1], params.reference_qp), spec, params.slice_qp, params.threads);
    const MotionField motion = motion_estimate(cur, field, params);
    const Plane pred = motion_compensate(field, motion, params);

    FrameStats fs;
    fs.frame = static_cast<int>(t);
    fs.sse = sse(cur, pred);
    fs.psnr_db = psnr_from_sse(fs.sse, cur.size());
    double sad_sum = 0.0;
    for (double s : motion.sad) sad_sum += s;
    fs.mean_sad = sad_sum / static_cast<double>(motion.sad.size());
    for (const auto& mv : motion.mvs) (mv.is_half_pel() ? fs.half_mv_count : fs.int_mv_count)++;
    std::map<long long, std::size_t> hist;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const long long r = std::llround(cur.samples()[i] - pred.samples()[i]);
      ++hist[r];
      ++pooled[r];
    }
    fs.entropy_bps = entropy_bits(hist, cur.size());

    report.total.sse += fs.sse;
    report.total.int_mv_count += fs.int_mv_count;
    report.total.half_mv_count += fs.half_mv_count;
    report.samples += cur.size();
    total_sad += sad_sum;
    total_blocks += motion.sad.size();
    report.frames.push_back(fs);
  }
  report.total.frame = -1;
  report.total.psnr_db = psnr_from_sse(report.total.sse, report.samples);
  report.total.mean_sad = total_sad / static_cast<double>(total_blocks);
  report.total.entropy_bps = entropy_bits(pooled, report.samples);
  return report;
}

std::string mc_report_csv(const McReport& report) {
  std::string out = "frame,sse,psnr_db,mean_sad,int_mv_count,half_mv_count,entropy_bps\n";
  auto row = [&](const std::string& name, const FrameStats& f) {
    out += name + "," + format_real(f.sse) + "," + format_real(f.psnr_db) + "," + format_real(f.mean_sad) + "," +
           std::to_string(f.int_mv_count) + "," + std::to_string(f.half_mv_count) + "," + format_real(f.entropy_bps) + "\n";
  };
  for (const auto& f : report.frames) row(std::to_string(f.frame), f);
  row("all", report.total);
  return out;
}

std::vector<RDRow> simulate_rd(const std::vector<Plane>& frames, const InterpolatorSpec& spec, const McParams& params,
                               const std::vector<int>& qps) {
  check_frames(frames);
  params.validate();
  spec.validate();
  std::vector<RDRow> rows;
  for (int qp : qps) {
    McParams p = params;
    p.slice_qp = qp;
    const double step = qstep_for_qp(qp);
    std::map<long long, std::size_t> hist;
    std::size_t levels_total = 0, samples = 0, blocks = 0;
    double recon_sse = 0.0, pred_sse = 0.0;
    for (std::size_t t = 1; t < frames.size(); ++t) {
      const Plane& cur = frames[t];
      const HalfPelField field = build_halfpel_field(degrade_intra_surrogate(frames[t - 1], qp), spec, qp, p.threads);
      const MotionField motion = motion_estimate(cur, field, p);
      const Plane pred = motion_compensate(field, motion, p);
      Plane residual(cur.width(), cur.height());
      for (std::size_t i = 0; i < cur.size(); ++i) residual.samples()[i] = cur.samples()[i] - pred.samples()[i];
      std::vector<long long> levels;
      const Plane coded = quantize_blocks(residual, step, &levels);
      for (long long l : levels) ++hist[l];
      levels_total += levels.size();
      Plane recon(cur.width(), cur.height());
      for (std::size_t i = 0; i < cur.size(); ++i) recon.samples()[i] = clip_sample(pred.samples()[i] + coded.samples()[i]);
      recon_sse += sse(cur, recon);
      pred_sse += sse(cur, pred);
      samples += cur.size();
      blocks += motion.mvs.size();
    }
    const double bits = entropy_bits(hist, levels_total) * static_cast<double>(levels_total) + kMvBitsPerBlock * static_cast<double>(blocks);
    rows.push_back(RDRow{qp, bits / static_cast<double>(samples), psnr_from_sse(recon_sse, samples), pred_sse});
  }
  return rows;
}

std::vector<Plane> load_frames(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("frames directory '" + dir.string() + "' not found");
  static const std::regex kPattern(R"(frame_(\d{4})\.pgm)");
  std::map<int, std::filesystem::path> numbered;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, kPattern)) numbered[std::stoi(m[1].str())] = entry.path();
  }
  if (numbered.empty()) throw ConfigError("no frame_NNNN.pgm files in '" + dir.string() + "'");
  std::vector<Plane> frames;
  int expect = 0;
  for (const auto& [idx, path] : numbered) {
    if (idx != expect) throw ConfigError("frame numbering gap: expected frame_" + std::to_string(expect) + " in '" + dir.string() + "'");
    frames.push_back(load_pgm(path));
    ++expect;
  }
  return frames;
}

void save_frames(const std::vector<Plane>& frames, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04zu.pgm", i);
    save_pgm(frames[i], dir / name);
  }
}

}  // namespace halfpel
