#include "halfpel/eval_report.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "halfpel/util.hpp"

namespace halfpel {

double sse(const Plane& a, const Plane& b) {
  if (!a.same_shape(b)) throw PreconditionError("sse: dimension mismatch");
  double acc = 0.0;
  auto sa = a.samples();
  auto sb = b.samples();
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const double d = sa[i] - sb[i];
    acc += d * d;
  }
  return acc;
}

double mse(const Plane& a, const Plane& b) { return sse(a, b) / static_cast<double>(a.size()); }

double psnr_from_mse(double mse_value) {
  if (mse_value <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(Plane::kMaxValue * Plane::kMaxValue / mse_value);
}

double psnr_from_sse(double sse_value, std::size_t samples) { return psnr_from_mse(sse_value / static_cast<double>(samples)); }

double psnr(const Plane& a, const Plane& b) { return psnr_from_mse(mse(a, b)); }

std::string format_real(double v) {
  if (std::isinf(v) && v > 0) return "inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

double parse_real(std::string_view s) {
  std::string t = trim(s);
  if (t == "inf") return std::numeric_limits<double>::infinity();
  return parse_double(t, "csv value");
}

RDCurve::RDCurve(std::vector<RDPoint> points) : points_(std::move(points)) {
  if (points_.size() < 4) {
    throw BdRateError(BdRateErrorKind::kTooFewPoints, "RD curve needs at least 4 points, got " + std::to_string(points_.size()));
  }
  for (const auto& p : points_) {
    if (!(p.rate > 0.0) || !std::isfinite(p.rate)) throw BdRateError(BdRateErrorKind::kBadRate, "RD curve rates must be positive");
    if (!std::isfinite(p.psnr)) throw BdRateError(BdRateErrorKind::kNotMonotonic, "RD curve PSNR must be finite");
  }
  std::sort(points_.begin(), points_.end(), [](const RDPoint& a, const RDPoint& b) { return a.rate < b.rate; });
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (!(points_[i].rate > points_[i - 1].rate) || !(points_[i].psnr > points_[i - 1].psnr)) {
      throw BdRateError(BdRateErrorKind::kNotMonotonic, "RD curve must increase strictly in rate and PSNR");
    }
  }
}

namespace {

// log10(rate) ~ c0 + c1 t + c2 t^2 + c3 t^3 with t = (psnr - center) / scale.
struct CubicFit {
  Eigen::Vector4d coeffs;
  double center;
  double scale;

  // Integral over psnr in [lo, hi].
  double integral(double lo, double hi) const {
    auto antiderivative = [&](double psnr) {
      const double t = (psnr - center) / scale;
      return scale * (coeffs[0] * t + coeffs[1] * t * t / 2 + coeffs[2] * t * t * t / 3 + coeffs[3] * t * t * t * t / 4);
    };
    return antiderivative(hi) - antiderivative(lo);
  }
};

CubicFit fit_log_rate(const RDCurve& curve) {
  const auto& pts = curve.points();
  const auto n = static_cast<Eigen::Index>(pts.size());
  double lo = pts.front().psnr, hi = pts.back().psnr;
  CubicFit fit{{}, 0.5 * (lo + hi), std::max(0.5 * (hi - lo), 1e-12)};
  Eigen::MatrixXd design(n, 4);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = (pts[static_cast<std::size_t>(i)].psnr - fit.center) / fit.scale;
    design(i, 0) = 1.0;
    design(i, 1) = t;
    design(i, 2) = t * t;
    design(i, 3) = t * t * t;
    y(i) = std::log10(pts[static_cast<std::size_t>(i)].rate);
  }
  fit.coeffs = design.colPivHouseholderQr().solve(y);
  return fit;
}

}  // namespace

double bd_rate(const RDCurve& anchor, const RDCurve& test) {
  const double lo = std::max(anchor.points().front().psnr, test.points().front().psnr);
  const double hi = std::min(anchor.points().back().psnr, test.points().back().psnr);
  if (!(hi > lo)) throw BdRateError(BdRateErrorKind::kNoOverlap, "RD curves share no PSNR interval");
  const CubicFit fa = fit_log_rate(anchor);
  const CubicFit ft = fit_log_rate(test);
  const double avg = (ft.integral(lo, hi) - fa.integral(lo, hi)) / (hi - lo);
  return (std::pow(10.0, avg) - 1.0) * 100.0;
}

int CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto cells = split(line, ',');
    if (t.header.empty()) {
      t.header = std::move(cells);
    } else {
      if (cells.size() != t.header.size()) throw ConfigError("csv: row has " + std::to_string(cells.size()) + " cells, header has " +
                                                             std::to_string(t.header.size()));
      t.rows.push_back(std::move(cells));
    }
  }
  if (t.header.empty()) throw ConfigError("csv: missing header row");
  return t;
}

std::string rd_rows_csv(const std::vector<RDRow>& rows) {
  std::string out = "qp,rate,psnr,sse\n";
  for (const auto& r : rows) {
    out += std::to_string(r.qp) + "," + format_real(r.rate) + "," + format_real(r.psnr) + "," + format_real(r.sse) + "\n";
  }
  return out;
}

std::vector<RDRow> parse_rd_csv(std::string_view text) {
  const CsvTable t = parse_csv(text);
  const int rate = t.column("rate"), psnr_col = t.column("psnr"), qp = t.column("qp"), sse_col = t.column("sse");
  if (rate < 0 || psnr_col < 0) throw ConfigError("RD csv needs 'rate' and 'psnr' columns");
  std::vector<RDRow> rows;
  for (const auto& cells : t.rows) {
    RDRow r;
    r.rate = parse_double(cells[static_cast<std::size_t>(rate)], "rate");
    r.psnr = parse_real(cells[static_cast<std::size_t>(psnr_col)]);
    if (qp >= 0) r.qp = static_cast<int>(parse_int(cells[static_cast<std::size_t>(qp)], "qp"));
    if (sse_col >= 0) r.sse = parse_double(cells[static_cast<std::size_t>(sse_col)], "sse");
    rows.push_back(r);
  }
  return rows;
}

RDCurve curve_from_rows(const std::vector<RDRow>& rows) {
  std::vector<RDPoint> pts;
  for (const auto& r : rows) pts.push_back({r.rate, r.psnr});
  return RDCurve(std::move(pts));
}

Comparison compare_report(const std::vector<SequenceRD>& anchor, const std::vector<SequenceRD>& test) {
  if (anchor.empty()) throw PreconditionError("compare_report: no sequences");
  if (anchor.size() != test.size()) throw PreconditionError("compare_report: sequence sets differ in size");
  std::map<std::string, const SequenceRD*> by_name;
  for (const auto& s : test) by_name[s.name] = &s;

  Comparison c;
  for (const auto& r : anchor.front().rows) c.qps.push_back(r.qp);
  ComparisonRow overall{"Overall", std::vector<double>(c.qps.size(), 0.0), std::vector<double>(c.qps.size(), 0.0), 0.0};
  for (const auto& a : anchor) {
    auto it = by_name.find(a.name);
    if (it == by_name.end()) throw PreconditionError("compare_report: sequence '" + a.name + "' missing from test set");
    const SequenceRD& t = *it->second;
    if (a.rows.size() != c.qps.size() || t.rows.size() != c.qps.size()) {
      throw PreconditionError("compare_report: sequence '" + a.name + "' has a different QP set");
    }
    ComparisonRow row{a.name, {}, {}, 0.0};
    for (std::size_t i = 0; i < c.qps.size(); ++i) {
      if (a.rows[i].qp != c.qps[i] || t.rows[i].qp != c.qps[i]) {
        throw PreconditionError("compare_report: sequence '" + a.name + "' has a different QP set");
      }
      row.psnr_delta.push_back(t.rows[i].psnr - a.rows[i].psnr);
      row.sse_delta.push_back(t.rows[i].sse - a.rows[i].sse);
    }
    row.bd_rate = bd_rate(curve_from_rows(a.rows), curve_from_rows(t.rows));
    c.rows.push_back(std::move(row));
  }
  const double n = static_cast<double>(c.rows.size());
  for (const auto& row : c.rows) {
    for (std::size_t i = 0; i < c.qps.size(); ++i) {
      overall.psnr_delta[i] += row.psnr_delta[i] / n;
      overall.sse_delta[i] += row.sse_delta[i] / n;
    }
    overall.bd_rate += row.bd_rate / n;
  }
  c.rows.push_back(std::move(overall));
  return c;
}

std::string comparison_csv(const Comparison& c) {
  std::string out = "sequence";
  for (int qp : c.qps) out += ",psnr_delta_qp" + std::to_string(qp);
  for (int qp : c.qps) out += ",sse_delta_qp" + std::to_string(qp);
  out += ",bd_rate\n";
  for (const auto& r : c.rows) {
    out += r.sequence;
    for (double v : r.psnr_delta) out += "," + format_real(v);
    for (double v : r.sse_delta) out += "," + format_real(v);
    out += "," + format_real(r.bd_rate) + "\n";
  }
  return out;
}

Comparison parse_comparison_csv(std::string_view text) {
  const CsvTable t = parse_csv(text);
  if (t.header.empty() || t.header.front() != "sequence" || t.header.back() != "bd_rate" || t.header.size() % 2 != 0) {
    throw ConfigError("comparison csv: unexpected header");
  }
  Comparison c;
  const std::size_t nq = (t.header.size() - 2) / 2;
  for (std::size_t i = 0; i < nq; ++i) {
    const std::string& h = t.header[1 + i];
    const std::string prefix = "psnr_delta_qp";
    if (h.rfind(prefix, 0) != 0) throw ConfigError("comparison csv: unexpected column '" + h + "'");
    c.qps.push_back(static_cast<int>(parse_int(h.substr(prefix.size()), "qp")));
  }
  for (const auto& cells : t.rows) {
    ComparisonRow r{cells.front(), {}, {}, 0.0};
    for (std::size_t i = 0; i < nq; ++i) r.psnr_delta.push_back(parse_real(cells[1 + i]));
    for (std::size_t i = 0; i < nq; ++i) r.sse_delta.push_back(parse_real(cells[1 + nq + i]));
    r.bd_rate = parse_real(cells.back());
    c.rows.push_back(std::move(r));
  }
  return c;
}

}  // namespace halfpel
