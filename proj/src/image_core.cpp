#include "halfpel/image_core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

#include "halfpel/util.hpp"

namespace halfpel {

namespace {

// Header tokenizer for "P5 <w> <h> <maxval>" with '#' comments.
class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(std::string_view data) : data_(data) {}

  std::string token() {
    skip_space_and_comments();
    std::size_t start = pos_;
    while (pos_ < data_.size() && !std::isspace(static_cast<unsigned char>(data_[pos_]))) ++pos_;
    return std::string(data_.substr(start, pos_ - start));
  }

  long long number(const char* what) {
    std::string t = token();
    if (t.empty() || !std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      throw PgmParseError(PgmErrorKind::kMalformedHeader, std::string("PGM header: bad ") + what + " '" + t + "'");
    }
    if (t.size() > 9) throw PgmParseError(PgmErrorKind::kMalformedHeader, std::string("PGM header: ") + what + " too large");
    return std::stoll(t);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t payload_offset() {
    if (pos_ >= data_.size() || !std::isspace(static_cast<unsigned char>(data_[pos_]))) {
      throw PgmParseError(PgmErrorKind::kMalformedHeader, "PGM header: missing separator before raster");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < data_.size()) {
      char c = data_[pos_];
      if (c == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(clip_sample(std::round(v))); }

Plane decode_pgm(std::string_view bytes) {
  PgmHeaderReader reader(bytes);
  if (reader.token() != "P5") throw PgmParseError(PgmErrorKind::kMalformedHeader, "not a binary PGM (missing P5 magic)");
  long long w = reader.number("width");
  long long h = reader.number("height");
  long long maxval = reader.number("maxval");
  if (w < 1 || h < 1) throw PgmParseError(PgmErrorKind::kMalformedHeader, "PGM header: zero dimension");
  if (maxval != 255) {
    throw PgmParseError(PgmErrorKind::kUnsupportedMaxval, "PGM maxval " + std::to_string(maxval) + " unsupported (need 255)");
  }
  std::size_t off = reader.payload_offset();
  std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() < off || bytes.size() - off < need) {
    throw PgmParseError(PgmErrorKind::kTruncatedPayload, "PGM payload truncated: need " + std::to_string(need) + " bytes, have " +
                                                             std::to_string(bytes.size() > off ? bytes.size() - off : 0));
  }
  std::vector<double> samples(need);
  for (std::size_t i = 0; i < need; ++i) samples[i] = static_cast<unsigned char>(bytes[off + i]);
  return Plane(static_cast<int>(w), static_cast<int>(h), std::move(samples));
}

std::string encode_pgm(const Plane& plane) {
  std::string out = "P5\n" + std::to_string(plane.width()) + " " + std::to_string(plane.height()) + "\n255\n";
  out.reserve(out.size() + plane.size());
  for (double v : plane.samples()) out.push_back(static_cast<char>(to_byte(v)));
  return out;
}

Plane load_pgm(const std::filesystem::path& path) { return decode_pgm(read_file_bytes(path)); }

void save_pgm(const Plane& plane, const std::filesystem::path& path) { write_file_bytes(path, encode_pgm(plane)); }

BlurKernel::BlurKernel(std::vector<double> taps) : taps_(std::move(taps)) {
  if (taps_.empty() || taps_.size() % 2 == 0) throw ConfigError("blur kernel needs an odd number of taps");
  double sum = std::accumulate(taps_.begin(), taps_.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("blur kernel taps must sum to 1, got " + std::to_string(sum));
  for (std::size_t i = 0; i < taps_.size() / 2; ++i) {
    if (taps_[i] != taps_[taps_.size() - 1 - i]) throw ConfigError("blur kernel must be symmetric");
  }
}

BlurKernel BlurKernel::gaussian(double sigma, int length) {
  if (!(sigma > 0.0)) throw ConfigError("blur sigma must be positive");
  if (length < 1 || length % 2 == 0) throw ConfigError("gaussian kernel length must be odd");
  const int r = length / 2;
  std::vector<double> taps(static_cast<std::size_t>(length));
  for (int i = -r; i <= r; ++i) taps[static_cast<std::size_t>(i + r)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
  // Normalize symmetric pairs identically so the result stays exactly symmetric.
  double sum = std::accumulate(taps.begin(), taps.end(), 0.0);
  for (double& t : taps) t /= sum;
  return BlurKernel(std::move(taps));
}

Plane blur(const Plane& plane, const BlurKernel& kernel) {
  const auto& taps = kernel.taps();
  const int r = kernel.radius();
  const int w = plane.width(), h = plane.height();
  Plane tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) acc += taps[static_cast<std::size_t>(k + r)] * plane.clamped(x + k, y);
      tmp.at(x, y) = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) acc += taps[static_cast<std::size_t>(k + r)] * tmp.clamped(x, y + k);
      out.at(x, y) = acc;
    }
  }
  return out;
}

PhaseSet extract_phases(const Plane& plane) {
  if (plane.width() % 2 != 0 || plane.height() % 2 != 0) {
    throw PreconditionError("extract_phases needs even dimensions, got " + std::to_string(plane.width()) + "x" +
                            std::to_string(plane.height()));
  }
  const int w = plane.width() / 2, h = plane.height() / 2;
  PhaseSet s{Plane(w, h), Plane(w, h), Plane(w, h), Plane(w, h)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      s.a.at(x, y) = plane.at(2 * x, 2 * y);
      s.b.at(x, y) = plane.at(2 * x + 1, 2 * y);
      s.h.at(x, y) = plane.at(2 * x, 2 * y + 1);
      s.j.at(x, y) = plane.at(2 * x + 1, 2 * y + 1);
    }
  }
  return s;
}

Plane interleave_phases(const PhaseSet& s) {
  if (!s.a.same_shape(s.b) || !s.a.same_shape(s.h) || !s.a.same_shape(s.j) || s.a.empty()) {
    throw PreconditionError("interleave_phases: sub-planes must share dimensions");
  }
  const int w = s.a.width(), h = s.a.height();
  Plane out(2 * w, 2 * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.at(2 * x, 2 * y) = s.a.at(x, y);
      out.at(2 * x + 1, 2 * y) = s.b.at(x, y);
      out.at(2 * x, 2 * y + 1) = s.h.at(x, y);
      out.at(2 * x + 1, 2 * y + 1) = s.j.at(x, y);
    }
  }
  return out;
}

Plane crop_to_even(const Plane& plane) {
  const int w = plane.width() & ~1, h = plane.height() & ~1;
  if (w < 2 || h < 2) throw PreconditionError("plane too small to crop to even dimensions");
  if (w == plane.width() && h == plane.height()) return plane;
  return plane.cropped(0, 0, w, h);
}

namespace {

using Basis = std::array<double, kTransformSize * kTransformSize>;

// basis[k * 8 + n] = c(k) cos((2n + 1) k pi / 16)
const Basis& dct_basis() {
  static const Basis basis = [] {
    Basis b{};
    for (int k = 0; k < kTransformSize; ++k) {
      const double ck = k == 0 ? std::sqrt(1.0 / kTransformSize) : std::sqrt(2.0 / kTransformSize);
      for (int n = 0; n < kTransformSize; ++n) {
        b[static_cast<std::size_t>(k * kTransformSize + n)] = ck * std::cos((2 * n + 1) * k * M_PI / (2.0 * kTransformSize));
      }
    }
    return b;
  }();
  return basis;
}

}  // namespace

Block8 dct8x8(const Block8& block) {
  const Basis& c = dct_basis();
  constexpr int N = kTransformSize;
  Block8 tmp{}, out{};
  // Rows: tmp[y][k] = sum_x c[k][x] block[y][x]
  for (int y = 0; y < N; ++y) {
    for (int k = 0; k < N; ++k) {
      double acc = 0.0;
      for (int x = 0; x < N; ++x) acc += c[k * N + x] * block[y * N + x];
      tmp[y * N + k] = acc;
    }
  }
  for (int k = 0; k < N; ++k) {
    for (int u = 0; u < N; ++u) {
      double acc = 0.0;
      for (int y = 0; y < N; ++y) acc += c[k * N + y] * tmp[y * N + u];
      out[k * N + u] = acc;
    }
  }
  return out;
}

Block8 idct8x8(const Block8& coeffs) {
  const Basis& c = dct_basis();
  constexpr int N = kTransformSize;
  Block8 tmp{}, out{};
  for (int k = 0; k < N; ++k) {
    for (int x = 0; x < N; ++x) {
      double acc = 0.0;
      for (int u = 0; u < N; ++u) acc += c[u * N + x] * coeffs[k * N + u];
      tmp[k * N + x] = acc;
    }
  }
  for (int y = 0; y < N; ++y) {
    for (int x = 0; x < N; ++x) {
      double acc = 0.0;
      for (int k = 0; k < N; ++k) acc += c[k * N + y] * tmp[k * N + x];
      out[y * N + x] = acc;
    }
  }
  return out;
}

double qstep_for_qp(int qp) { return std::exp2((qp - 4) / 6.0); }

Plane quantize_blocks(const Plane& plane, double qstep, std::vector<long long>* levels) {
  constexpr int N = kTransformSize;
  const int w = plane.width(), h = plane.height();
  Plane out(w, h);
  for (int by = 0; by < h; by += N) {
    for (int bx = 0; bx < w; bx += N) {
      Block8 block{};
      for (int y = 0; y < N; ++y) {
        for (int x = 0; x < N; ++x) block[y * N + x] = plane.clamped(bx + x, by + y);
      }
      Block8 coeffs = dct8x8(block);
      for (double& c : coeffs) {
        const double level = std::round(c / qstep);
        if (levels != nullptr) levels->push_back(static_cast<long long>(level));
        c = level * qstep;
      }
      Block8 rec = idct8x8(coeffs);
      for (int y = 0; y < N && by + y < h; ++y) {
        for (int x = 0; x < N && bx + x < w; ++x) out.at(bx + x, by + y) = rec[y * N + x];
      }
    }
  }
  return out;
}

Plane degrade_intra_surrogate(const Plane& plane, int qp) {
  if (qp < 0 || qp > 51) throw PreconditionError("qp " + std::to_string(qp) + " outside 0..51");
  Plane out = quantize_blocks(plane, qstep_for_qp(qp));
  clip_in_place(out);
  return out;
}

}  // namespace halfpel
