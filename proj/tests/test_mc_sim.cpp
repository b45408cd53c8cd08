#include <doctest.h>

#include <cmath>
#include <tuple>

#include "halfpel/fixed_filters.hpp"
#include "halfpel/image_core.hpp"
#include "halfpel/mc_sim.hpp"
#include "halfpel/synth.hpp"
#include "test_support.hpp"

using namespace halfpel;
using halfpel::testing::integer_plane;
using halfpel::testing::random_plane;
using halfpel::testing::TempDir;

namespace {

Plane shifted(const Plane& p, int sx, int sy) {
  Plane out(p.width(), p.height());
  for (int y = 0; y < p.height(); ++y) {
    for (int x = 0; x < p.width(); ++x) out.at(x, y) = p.clamped(x - sx, y - sy);
  }
  return out;
}

double brute_sad(const Plane& cur, const HalfPelField& f, int x0, int y0, int w, int h, const MotionVector& mv) {
  const Plane& src = f.select(mv);
  const int ox = static_cast<int>(std::floor(mv.dx / 2.0)), oy = static_cast<int>(std::floor(mv.dy / 2.0));
  double acc = 0.0;
  for (int y = y0; y < y0 + h; ++y) {
    for (int x = x0; x < x0 + w; ++x) acc += std::abs(cur.at(x, y) - src.clamped(x + ox, y + oy));
  }
  return acc;
}

auto rank(double sad, const MotionVector& mv) { return std::make_tuple(sad, std::abs(mv.dx) + std::abs(mv.dy), mv.dy, mv.dx); }

Network bias_net(Position pos, int qp, double b) {
  Network n = zero_network(NetworkShape::standard(), pos, qp);
  n.layers[2].bias[0] = b;
  return n;
}

}  // namespace

TEST_CASE("DCTIF field equals the fixed filter outputs") {
  const Plane ref = integer_plane(40, 24, 3);
  const HalfPelField f = build_halfpel_field(ref, InterpolatorSpec::dctif());
  CHECK(f.a == ref);
  CHECK(f.b == interp_half_h(ref));
  CHECK(f.h == interp_half_v(ref));
  CHECK(f.j == interp_half_d(ref));
  const HalfPelField g = build_halfpel_field(ref, InterpolatorSpec::avg2());
  CHECK(g.j == average2_half(ref, Position::kD));
}

TEST_CASE("field plane selection by MV parity") {
  const HalfPelField f{Plane(1, 1, 0), Plane(1, 1, 1), Plane(1, 1, 2), Plane(1, 1, 3)};
  CHECK(f.select({0, 0}).at(0, 0) == 0);
  CHECK(f.select({-4, 2}).at(0, 0) == 0);
  CHECK(f.select({1, 0}).at(0, 0) == 1);
  CHECK(f.select({-3, 2}).at(0, 0) == 1);
  CHECK(f.select({0, -1}).at(0, 0) == 2);
  CHECK(f.select({5, 7}).at(0, 0) == 3);
  CHECK(MotionVector{-1, 0}.is_half_pel());
  CHECK_FALSE(MotionVector{-2, 4}.is_half_pel());
}

TEST_CASE("identical frames: zero vectors and zero error") {
  const Plane f0 = integer_plane(48, 32, 1);
  McParams p;
  const McReport r = simulate_sequence({f0, f0, f0}, InterpolatorSpec::dctif(), p);
  REQUIRE(r.frames.size() == 2);
  CHECK(r.total.sse == 0.0);
  CHECK(std::isinf(r.total.psnr_db));
  CHECK(r.total.half_mv_count == 0);
  CHECK(r.total.int_mv_count == 2 * 3 * 2);
  CHECK(r.total.entropy_bps == 0.0);
  CHECK(r.samples == 2 * f0.size());
}

TEST_CASE("integer translation is found exactly") {
  const Plane ref = integer_plane(64, 64, 2);
  const Plane cur = shifted(ref, 3, -2);
  McParams p;
  const HalfPelField f = build_halfpel_field(ref, InterpolatorSpec::dctif());
  const MotionField m = motion_estimate(cur, f, p);
  REQUIRE(m.blocks_x == 4);
  REQUIRE(m.blocks_y == 4);
  // Interior blocks see the true displacement.
  for (int by = 1; by < 3; ++by) {
    for (int bx = 1; bx < 3; ++bx) {
      CHECK(m.mvs[by * 4 + bx] == MotionVector{-6, 4});
      CHECK(m.sad[by * 4 + bx] == 0.0);
    }
  }
}

TEST_CASE("half-pel translation is found on a smooth clip") {
  ClipParams cp;
  cp.width = 96;
  cp.height = 64;
  cp.frames = 2;
  cp.motion_x = 1;
  cp.motion_y = 0;
  const auto frames = synthetic_clip(cp, BlurKernel::default_kernel());
  McParams p;
  const HalfPelField f = build_halfpel_field(frames[0], InterpolatorSpec::dctif());
  const MotionField m = motion_estimate(frames[1], f, p);
  int half = 0;
  for (const auto& mv : m.mvs) half += mv.is_half_pel();
  CHECK(half * 2 > static_cast<int>(m.mvs.size()));
  int exact = 0;
  for (const auto& mv : m.mvs) exact += mv == MotionVector{1, 0};
  CHECK(exact * 2 > static_cast<int>(m.mvs.size()));
}

TEST_CASE("motion search agrees with a brute-force rescan") {
  const Plane ref = random_plane(37, 29, 4);
  const Plane cur = shifted(random_plane(37, 29, 4), 1, 1);
  McParams p;
  p.block_size = 8;
  p.search_range = 3;
  for (const InterpolatorSpec& spec : {InterpolatorSpec::dctif(), InterpolatorSpec::avg2()}) {
    const HalfPelField f = build_halfpel_field(ref, spec);
    const MotionField m = motion_estimate(cur, f, p);
    REQUIRE(m.blocks_x == 5);
    REQUIRE(m.blocks_y == 4);
    for (int by = 0; by < m.blocks_y; ++by) {
      for (int bx = 0; bx < m.blocks_x; ++bx) {
        const int x0 = bx * 8, y0 = by * 8, w = std::min(8, 37 - x0), h = std::min(8, 29 - y0);
        MotionVector best{0, 0};
        double best_sad = brute_sad(cur, f, x0, y0, w, h, best);
        for (int dy = -3; dy <= 3; ++dy) {
          for (int dx = -3; dx <= 3; ++dx) {
            const MotionVector mv{2 * dx, 2 * dy};
            const double s = brute_sad(cur, f, x0, y0, w, h, mv);
            if (rank(s, mv) < rank(best_sad, best)) best = mv, best_sad = s;
          }
        }
        const MotionVector centre = best;
        for (int ddy = -1; ddy <= 1; ++ddy) {
          for (int ddx = -1; ddx <= 1; ++ddx) {
            const MotionVector mv{centre.dx + ddx, centre.dy + ddy};
            if ((ddx == 0 && ddy == 0) || std::abs(mv.dx) > 6 || std::abs(mv.dy) > 6) continue;
            const double s = brute_sad(cur, f, x0, y0, w, h, mv);
            if (rank(s, mv) < rank(best_sad, best)) best = mv, best_sad = s;
          }
        }
        const std::size_t k = static_cast<std::size_t>(by * m.blocks_x + bx);
        CHECK(m.mvs[k] == best);
        CHECK(m.sad[k] == doctest::Approx(best_sad).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("compensation reproduces the SAD of the chosen vectors") {
  const Plane ref = integer_plane(33, 21, 6);
  const Plane cur = integer_plane(33, 21, 7);
  McParams p;
  p.block_size = 8;
  p.search_range = 2;
  const HalfPelField f = build_halfpel_field(ref, InterpolatorSpec::dctif());
  const MotionField m = motion_estimate(cur, f, p);
  const Plane pred = motion_compensate(f, m, p);
  double sad_total = 0.0, direct = 0.0;
  for (double s : m.sad) sad_total += s;
  for (std::size_t i = 0; i < cur.size(); ++i) direct += std::abs(cur.samples()[i] - pred.samples()[i]);
  CHECK(direct == doctest::Approx(sad_total).epsilon(1e-12));
}

TEST_CASE("simulate_sequence is deterministic and thread independent") {
  ClipParams cp;
  cp.width = 64;
  cp.height = 48;
  cp.frames = 3;
  cp.motion_x = 1;
  cp.motion_y = 1;
  const auto frames = synthetic_clip(cp, BlurKernel::default_kernel());
  McParams p1, p3;
  p3.threads = 3;
  const McReport a = simulate_sequence(frames, InterpolatorSpec::dctif(), p1);
  const McReport b = simulate_sequence(frames, InterpolatorSpec::dctif(), p3);
  CHECK(mc_report_csv(a) == mc_report_csv(b));
  const std::string csv = mc_report_csv(a);
  CHECK(csv.rfind("frame,sse,psnr_db,mean_sad,int_mv_count,half_mv_count,entropy_bps\n", 0) == 0);
  CHECK(csv.find("\nall,") != std::string::npos);
  CHECK(a.total.sse == doctest::Approx(a.frames[0].sse + a.frames[1].sse));
}

TEST_CASE("mc parameter validation") {
  const Plane f0(16, 16, 0.0);
  McParams p;
  p.block_size = 0;
  CHECK_THROWS_AS(simulate_sequence({f0, f0}, InterpolatorSpec::dctif(), p), ConfigError);
  p = {};
  p.search_range = -1;
  CHECK_THROWS_AS(simulate_sequence({f0, f0}, InterpolatorSpec::dctif(), p), ConfigError);
  p = {};
  CHECK_THROWS_AS(simulate_sequence({f0}, InterpolatorSpec::dctif(), p), PreconditionError);
  CHECK_THROWS_AS(simulate_sequence({f0, Plane(8, 16)}, InterpolatorSpec::dctif(), p), PreconditionError);
}

TEST_CASE("CNN interpolator specs") {
  std::vector<Network> nets;
  for (int qp : {22, 37}) {
    for (Position pos : {Position::kH, Position::kV, Position::kD}) nets.push_back(bias_net(pos, qp, qp / 100.0));
  }
  const InterpolatorSpec spec = InterpolatorSpec::cnn(nets);
  CHECK(spec.cnn_for(Position::kV, 22).qp == 22);
  CHECK(spec.cnn_for(Position::kV, 29).qp == 22);
  CHECK(spec.cnn_for(Position::kV, 30).qp == 37);
  CHECK(spec.cnn_for(Position::kD, 51).position == Position::kD);

  const Plane ref = integer_plane(24, 24, 1);
  const HalfPelField f = build_halfpel_field(ref, spec, 37);
  CHECK(f.a == ref);
  for (double v : f.b.samples()) CHECK(v == doctest::Approx(0.37 * 255.0));

  std::vector<Network> missing(nets.begin(), nets.begin() + 2);
  CHECK_THROWS_AS(InterpolatorSpec::cnn(missing), ConfigError);
  CHECK_THROWS_AS(InterpolatorSpec::sr_anchor(bias_net(Position::kH, 22, 0.0)), ConfigError);

  TempDir dir;
  for (const auto& n : nets) save_weights(n, dir / cnn_weight_file_name(n.position, n.qp));
  CHECK(cnn_weight_file_name(Position::kH, 22) == "cnnif_h_qp22.cnif");
  CHECK(load_cnn_spec(dir.path()).networks.size() == 6);
  CHECK(load_cnn_spec(dir.path(), 37).networks.size() == 3);
  CHECK_THROWS_AS(load_cnn_spec(dir.path(), 27), ConfigError);
}

TEST_CASE("super-resolution anchor field") {
  Network sr = zero_network(NetworkShape::standard(), Position::kSr, 0);
  sr.layers[2].bias[0] = 0.5;
  const Plane ref = integer_plane(20, 16, 2);
  const HalfPelField f = sr_anchor_field(ref, sr);
  CHECK(f.a == ref);
  for (double v : f.j.samples()) CHECK(v == 127.5);
  CHECK(f.b.same_shape(ref));
  const HalfPelField g = build_halfpel_field(ref, InterpolatorSpec::sr_anchor(sr));
  CHECK(g.h == f.h);
}

TEST_CASE("reference degradation and RD rows") {
  ClipParams cp;
  cp.width = 64;
  cp.height = 48;
  cp.frames = 3;
  const auto frames = synthetic_clip(cp, BlurKernel::default_kernel());
  McParams p;
  const auto rows = simulate_rd(frames, InterpolatorSpec::dctif(), p);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].qp > rows[i - 1].qp);
    CHECK(rows[i].rate < rows[i - 1].rate);
    CHECK(rows[i].psnr < rows[i - 1].psnr);
  }
  CHECK_NOTHROW(curve_from_rows(rows));
  p.reference_qp = 37;
  const McReport degraded = simulate_sequence(frames, InterpolatorSpec::dctif(), p);
  p.reference_qp.reset();
  CHECK(degraded.total.sse > simulate_sequence(frames, InterpolatorSpec::dctif(), p).total.sse);
}

TEST_CASE("frame directories") {
  TempDir dir;
  const std::vector<Plane> frames{integer_plane(8, 6, 1), integer_plane(8, 6, 2), integer_plane(8, 6, 3)};
  save_frames(frames, dir.path());
  CHECK(std::filesystem::exists(dir / "frame_0002.pgm"));
  const auto back = load_frames(dir.path());
  REQUIRE(back.size() == 3);
  CHECK(back[1] == frames[1]);
  std::filesystem::remove(dir / "frame_0001.pgm");
  CHECK_THROWS_AS(load_frames(dir.path()), ConfigError);
  CHECK_THROWS_AS(load_frames(dir / "nowhere"), IoError);
}
