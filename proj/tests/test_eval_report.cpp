#include <doctest.h>

#include <cmath>
#include <limits>

#include "halfpel/eval_report.hpp"
#include "test_support.hpp"

using namespace halfpel;
using halfpel::testing::random_plane;

namespace {

std::vector<RDPoint> anchor_points() { return {{100.0, 32.0}, {180.0, 34.5}, {320.0, 37.2}, {600.0, 40.1}}; }

std::vector<RDPoint> scaled(std::vector<RDPoint> pts, double factor) {
  for (auto& p : pts) p.rate *= factor;
  return pts;
}

int bd_kind(const std::vector<RDPoint>& a, const std::vector<RDPoint>& b) {
  try {
    bd_rate(RDCurve(a), RDCurve(b));
  } catch (const BdRateError& e) {
    return static_cast<int>(e.kind());
  }
  return -1;
}

}  // namespace

TEST_CASE("mse, sse and psnr") {
  const Plane a(4, 4, 10.0), b(4, 4, 12.0);
  CHECK(sse(a, b) == 64.0);
  CHECK(mse(a, b) == 4.0);
  CHECK(psnr(a, b) == doctest::Approx(10.0 * std::log10(255.0 * 255.0 / 4.0)));
  CHECK(std::isinf(psnr(a, a)));
  CHECK(psnr_from_sse(64.0, 16) == psnr(a, b));
  CHECK(psnr(Plane(3, 3, 0.0), Plane(3, 3, 255.0)) == doctest::Approx(0.0));
  CHECK_THROWS_AS(mse(a, Plane(4, 5)), PreconditionError);
}

TEST_CASE("format_real round-trips") {
  for (double v : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 123456.789e-9}) CHECK(parse_real(format_real(v)) == v);
  CHECK(format_real(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(std::isinf(parse_real("inf")));
  CHECK_THROWS_AS(parse_real("abc"), ConfigError);
}

TEST_CASE("bd_rate of identical curves is zero") {
  CHECK(std::abs(bd_rate(RDCurve(anchor_points()), RDCurve(anchor_points()))) < 1e-9);
}

TEST_CASE("bd_rate of uniformly scaled rates") {
  CHECK(std::abs(bd_rate(RDCurve(anchor_points()), RDCurve(scaled(anchor_points(), 0.9))) - (-10.0)) < 1e-9);
  CHECK(std::abs(bd_rate(RDCurve(anchor_points()), RDCurve(scaled(anchor_points(), 1.1))) - 10.0) < 1e-9);
}

TEST_CASE("bd_rate sign flips when curves are swapped") {
  std::vector<RDPoint> test = {{90.0, 32.3}, {170.0, 34.9}, {300.0, 37.5}, {560.0, 40.2}};
  const double fwd = bd_rate(RDCurve(anchor_points()), RDCurve(test));
  const double rev = bd_rate(RDCurve(test), RDCurve(anchor_points()));
  CHECK(fwd < 0.0);
  CHECK(rev > 0.0);
  // Average log-rate differences are exact negatives.
  CHECK(std::log10(1.0 + fwd / 100.0) == doctest::Approx(-std::log10(1.0 + rev / 100.0)).epsilon(1e-9));
}

TEST_CASE("bd_rate input order does not matter") {
  auto pts = anchor_points();
  std::swap(pts[0], pts[3]);
  std::swap(pts[1], pts[2]);
  CHECK(std::abs(bd_rate(RDCurve(pts), RDCurve(scaled(anchor_points(), 0.9))) + 10.0) < 1e-9);
}

TEST_CASE("bd_rate error kinds") {
  auto three = anchor_points();
  three.pop_back();
  CHECK(bd_kind(three, anchor_points()) == static_cast<int>(BdRateErrorKind::kTooFewPoints));
  auto flat = anchor_points();
  flat[2].psnr = flat[1].psnr;
  CHECK(bd_kind(flat, anchor_points()) == static_cast<int>(BdRateErrorKind::kNotMonotonic));
  auto neg = anchor_points();
  neg[0].rate = 0.0;
  CHECK(bd_kind(neg, anchor_points()) == static_cast<int>(BdRateErrorKind::kBadRate));
  std::vector<RDPoint> far = {{100.0, 50.0}, {200.0, 51.0}, {300.0, 52.0}, {400.0, 53.0}};
  CHECK(bd_kind(anchor_points(), far) == static_cast<int>(BdRateErrorKind::kNoOverlap));
  CHECK_THROWS_AS(RDCurve{three}, PreconditionError);
}

TEST_CASE("RD csv round trip") {
  const std::vector<RDRow> rows = {{22, 1.5, 40.25, 1000.0}, {27, 0.75, 37.125, 2000.0}, {32, 0.4, 34.0, 4000.5}, {37, 0.2, 31.5, 9000.0}};
  const std::string csv = rd_rows_csv(rows);
  CHECK(csv.rfind("qp,rate,psnr,sse\n", 0) == 0);
  const auto back = parse_rd_csv(csv);
  REQUIRE(back.size() == 4);
  CHECK(back[2].qp == 32);
  CHECK(back[2].sse == 4000.5);
  CHECK(back[3].psnr == 31.5);
  const auto minimal = parse_rd_csv("psnr,rate\n30,1\n31,2\n32,3\n33,4\n");
  CHECK(minimal[1].rate == 2.0);
  CHECK(curve_from_rows(minimal).points().size() == 4);
  CHECK_THROWS_AS(parse_rd_csv("qp,psnr\n22,30\n"), ConfigError);
  CHECK_THROWS_AS(parse_rd_csv("rate,psnr\n1,x\n"), ConfigError);
}

TEST_CASE("comparison report and csv") {
  auto rows_for = [](double rate_scale, double psnr_shift) {
    std::vector<RDRow> rows;
    const int qps[] = {22, 27, 32, 37};
    for (int i = 0; i < 4; ++i) {
      rows.push_back({qps[i], 2.0 * std::pow(0.5, i) * rate_scale, 40.0 - 3.0 * i + psnr_shift, 100.0 * (i + 1) - psnr_shift});
    }
    return rows;
  };
  const std::vector<SequenceRD> anchor = {{"clipA", rows_for(1.0, 0.0)}, {"clipB", rows_for(1.0, 0.0)}};
  const std::vector<SequenceRD> test = {{"clipA", rows_for(0.9, 0.0)}, {"clipB", rows_for(1.0, 0.5)}};
  const Comparison c = compare_report(anchor, test);
  REQUIRE(c.rows.size() == 3);
  CHECK(c.qps == std::vector<int>{22, 27, 32, 37});
  CHECK(c.rows[0].bd_rate == doctest::Approx(-10.0).epsilon(1e-9));
  CHECK(c.rows[0].psnr_delta[1] == 0.0);
  CHECK(c.rows[1].psnr_delta[2] == doctest::Approx(0.5));
  CHECK(c.rows[1].sse_delta[0] == doctest::Approx(-0.5));
  CHECK(c.rows[1].bd_rate < 0.0);
  CHECK(c.rows[2].sequence == "Overall");
  CHECK(c.rows[2].bd_rate == doctest::Approx((c.rows[0].bd_rate + c.rows[1].bd_rate) / 2.0));
  CHECK(c.rows[2].psnr_delta[3] == doctest::Approx(0.25));

  const std::string csv = comparison_csv(c);
  CHECK(csv.rfind("sequence,psnr_delta_qp22,psnr_delta_qp27,psnr_delta_qp32,psnr_delta_qp37,sse_delta_qp22", 0) == 0);
  const Comparison back = parse_comparison_csv(csv);
  REQUIRE(back.rows.size() == 3);
  CHECK(back.qps == c.qps);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.rows[i].sequence == c.rows[i].sequence);
    CHECK(back.rows[i].bd_rate == c.rows[i].bd_rate);
    CHECK(back.rows[i].psnr_delta == c.rows[i].psnr_delta);
    CHECK(back.rows[i].sse_delta == c.rows[i].sse_delta);
  }

  const std::vector<SequenceRD> other = {{"clipC", rows_for(1.0, 0.0)}, {"clipB", rows_for(1.0, 0.0)}};
  CHECK_THROWS_AS(compare_report(anchor, other), PreconditionError);
}

TEST_CASE("csv table reader") {
  const CsvTable t = parse_csv("a,b,c\n1,2,3\r\n4,5,6\n\n");
  CHECK(t.header.size() == 3);
  CHECK(t.rows.size() == 2);
  CHECK(t.column("b") == 1);
  CHECK(t.column("z") == -1);
  CHECK(t.rows[1][2] == "6");
  CHECK_THROWS_AS(parse_csv("a,b\n1\n"), ConfigError);
}
