#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "halfpel/plane.hpp"

namespace halfpel {

double mse(const Plane& a, const Plane& b);
double sse(const Plane& a, const Plane& b);
// 10 log10(255^2 / MSE); +infinity when the planes are identical.
double psnr(const Plane& a, const Plane& b);
double psnr_from_mse(double mse_value);
double psnr_from_sse(double sse_value, std::size_t samples);

// Shortest decimal text that parses back to the same double; "inf" for +inf.
std::string format_real(double v);
double parse_real(std::string_view s);

struct RDPoint {
  double rate = 0.0;  // any positive unit, consistent within a curve
  double psnr = 0.0;  // dB
};

enum class BdRateErrorKind { kTooFewPoints, kNotMonotonic, kNoOverlap, kBadRate };

class BdRateError : public PreconditionError {
 public:
  BdRateError(BdRateErrorKind kind, const std::string& what) : PreconditionError(what), kind_(kind) {}
  BdRateErrorKind kind() const { return kind_; }

 private:
  BdRateErrorKind kind_;
};

// At least four points, strictly increasing in both rate and PSNR once sorted
// by rate.
class RDCurve {
 public:
  explicit RDCurve(std::vector<RDPoint> points);
  const std::vector<RDPoint>& points() const { return points_; }

 private:
  std::vector<RDPoint> points_;
};

// Bjontegaard delta rate in percent: cubic least-squares fit of log10(rate)
// against PSNR for each curve, exact integration of the difference over the
// shared PSNR interval, (10^avg - 1) * 100. Negative means the test curve
// needs fewer bits for equal quality.
double bd_rate(const RDCurve& anchor, const RDCurve& test);

// ---------------------------------------------------------------------------
// RD curve CSV: header with at least "rate" and "psnr" columns; "qp" and
// "sse" are optional.
// ---------------------------------------------------------------------------

struct RDRow {
  int qp = 0;
  double rate = 0.0;
  double psnr = 0.0;
  double sse = 0.0;
};

std::string rd_rows_csv(const std::vector<RDRow>& rows);
std::vector<RDRow> parse_rd_csv(std::string_view text);
RDCurve curve_from_rows(const std::vector<RDRow>& rows);

// ---------------------------------------------------------------------------
// Interpolator comparison (one row per sequence plus an overall mean row)
// ---------------------------------------------------------------------------

struct SequenceRD {
  std::string name;
  std::vector<RDRow> rows;  // one per QP
};

struct ComparisonRow {
  std::string sequence;
  std::vector<double> psnr_delta;  // test - anchor, per QP
  std::vector<double> sse_delta;   // test - anchor, per QP
  double bd_rate = 0.0;
};

struct Comparison {
  std::vector<int> qps;
  std::vector<ComparisonRow> rows;  // last row is "Overall": arithmetic means
};

Comparison compare_report(const std::vector<SequenceRD>& anchor, const std::vector<SequenceRD>& test);
std::string comparison_csv(const Comparison& c);
Comparison parse_comparison_csv(std::string_view text);

// Minimal comma-separated table reader: header row plus data rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int column(std::string_view name) const;  // -1 if absent
};
CsvTable parse_csv(std::string_view text);

}  // namespace halfpel
