#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace halfpel {

// Portable random source. std::mt19937_64 output is fully specified by the
// standard, while the std:: distributions are not, so conversions to real
// values and shuffles are done here to keep runs bit-reproducible everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t k = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[k]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
// concurrency). Indices are split into contiguous chunks; callers write
// results to disjoint slots so output never depends on the schedule.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

unsigned resolve_threads(unsigned requested);

// Plain-text key=value file; '#' starts a comment, blank lines ignored.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(std::string_view text, const std::string& origin = "<string>");
KeyValues read_key_value_file(const std::filesystem::path& path);
std::string format_key_values(const KeyValues& kv);

std::vector<std::string> split(std::string_view s, char sep);
std::string trim(std::string_view s);
double parse_double(std::string_view s, const std::string& what);
long long parse_int(std::string_view s, const std::string& what);

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

// Little-endian binary helpers for the weight and shard formats.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void f64(double v);
  void raw(std::string_view s) { buf_.append(s); }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}
  bool has(std::size_t n) const { return data_.size() - pos_ >= n; }
  std::size_t remaining() const { return data_.size() - pos_; }
  // The read functions assume has(n) was checked by the caller.
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  double f64();
  std::string_view raw(std::size_t n);

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

// Logging controlled by HALFPEL_LOG={error,info,debug}; default info.
enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };
LogLevel log_level();
void log(LogLevel level, const std::string& msg);

}  // namespace halfpel
