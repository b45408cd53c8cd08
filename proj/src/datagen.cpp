#include "halfpel/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>

#include "halfpel/eval_report.hpp"
#include "halfpel/fixed_filters.hpp"

namespace halfpel {

int select_model_qp(int slice_qp) {
  if (slice_qp < 0 || slice_qp > 51) throw PreconditionError("slice qp " + std::to_string(slice_qp) + " outside 0..51");
  int best = kModelQps[0];
  for (int qp : kModelQps) {
    // Strict comparison keeps the earlier (lower) QP on ties.
    if (std::abs(qp - slice_qp) < std::abs(best - slice_qp)) best = qp;
  }
  return best;
}

BlurKernel DatasetManifest::blur_kernel() const {
  return blur_taps.empty() ? BlurKernel::gaussian(blur_sigma, 5) : BlurKernel(blur_taps);
}

void DatasetManifest::validate() const {
  if (sources.empty()) throw ConfigError("manifest: empty source list");
  if (qps.empty()) throw ConfigError("manifest: no qps");
  for (int qp : qps) {
    if (std::find(std::begin(kModelQps), std::end(kModelQps), qp) == std::end(kModelQps)) {
      throw ConfigError("manifest: qp " + std::to_string(qp) + " is not one of 22, 27, 32, 37");
    }
  }
  if (std::set<int>(qps.begin(), qps.end()).size() != qps.size()) throw ConfigError("manifest: duplicate qps");
  if (patch_size < 1) throw ConfigError("manifest: patch_size must be positive");
  if (stride < 1) throw ConfigError("manifest: stride must be positive");
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw ConfigError("manifest: split_fraction must lie in (0, 1)");
  (void)blur_kernel();
}

DatasetManifest parse_manifest(const KeyValues& kv, const std::filesystem::path& base_dir) {
  static const std::set<std::string> kKeys = {"sources", "blur_taps", "blur_sigma", "qps",     "patch_size",
                                              "stride",  "split_fraction", "seed", "degrade", "sr_pairs"};
  for (const auto& [k, v] : kv) {
    if (!kKeys.contains(k)) throw ConfigError("manifest: unknown key '" + k + "'");
  }
  if (kv.contains("blur_taps") && kv.contains("blur_sigma")) throw ConfigError("manifest: give blur_taps or blur_sigma, not both");
  DatasetManifest m;
  if (auto it = kv.find("sources"); it != kv.end()) {
    for (const auto& s : split(it->second, ',')) {
      if (s.empty()) continue;
      std::filesystem::path p(s);
      m.sources.push_back(p.is_absolute() || base_dir.empty() ? p : base_dir / p);
    }
  }
  if (auto it = kv.find("blur_taps"); it != kv.end()) {
    for (const auto& s : split(it->second, ',')) m.blur_taps.push_back(parse_double(s, "blur_taps"));
  }
  if (auto it = kv.find("blur_sigma"); it != kv.end()) m.blur_sigma = parse_double(it->second, "blur_sigma");
  if (auto it = kv.find("qps"); it != kv.end()) {
    m.qps.clear();
    for (const auto& s : split(it->second, ',')) m.qps.push_back(static_cast<int>(parse_int(s, "qps")));
  }
  if (auto it = kv.find("patch_size"); it != kv.end()) m.patch_size = static_cast<int>(parse_int(it->second, "patch_size"));
  if (auto it = kv.find("stride"); it != kv.end()) m.stride = static_cast<int>(parse_int(it->second, "stride"));
  if (auto it = kv.find("split_fraction"); it != kv.end()) m.split_fraction = parse_double(it->second, "split_fraction");
  if (auto it = kv.find("seed"); it != kv.end()) m.seed = static_cast<std::uint64_t>(parse_int(it->second, "seed"));
  if (auto it = kv.find("degrade"); it != kv.end()) m.degrade = parse_int(it->second, "degrade") != 0;
  if (auto it = kv.find("sr_pairs"); it != kv.end()) m.sr_pairs = parse_int(it->second, "sr_pairs") != 0;
  m.validate();
  return m;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_key_value_file(path), path.parent_path());
}

namespace {

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_real(v[i]);
  return out;
}

}  // namespace

KeyValues manifest_to_key_values(const DatasetManifest& m) {
  KeyValues kv;
  std::string sources;
  for (std::size_t i = 0; i < m.sources.size(); ++i) sources += (i ? "," : "") + m.sources[i].string();
  kv["sources"] = sources;
  if (m.blur_taps.empty()) {
    kv["blur_sigma"] = join_doubles({m.blur_sigma});
  } else {
    kv["blur_taps"] = join_doubles(m.blur_taps);
  }
  std::string qps;
  for (std::size_t i = 0; i < m.qps.size(); ++i) qps += (i ? "," : "") + std::to_string(m.qps[i]);
  kv["qps"] = qps;
  kv["patch_size"] = std::to_string(m.patch_size);
  kv["stride"] = std::to_string(m.stride);
  kv["split_fraction"] = join_doubles({m.split_fraction});
  kv["seed"] = std::to_string(m.seed);
  kv["degrade"] = m.degrade ? "1" : "0";
  kv["sr_pairs"] = m.sr_pairs ? "1" : "0";
  return kv;
}

const PairSet& BuiltDataset::find(Position position, int qp) const {
  if (position == Position::kSr && sr) return *sr;
  for (const auto& s : sets) {
    if (s.position == position && s.qp == qp) return s;
  }
  throw ConfigError("dataset has no pairs for position " + std::string(to_string(position)) + " qp " + std::to_string(qp));
}

namespace {

std::vector<int> grid_positions(int extent, int patch, int stride) {
  std::vector<int> out;
  for (int p = 0; p + patch <= extent; p += stride) out.push_back(p);
  return out;
}

constexpr Position kHalfPelPositions[] = {Position::kH, Position::kV, Position::kD};

// Pairs of one source image, indexed [position][qp index], plus SR pairs.
struct ImagePairs {
  std::vector<std::vector<std::vector<TrainingPair>>> by_tag;
  std::vector<TrainingPair> sr;
};

ImagePairs build_image_pairs(const DatasetManifest& m, const BlurKernel& kernel, const SourceImage& src) {
  const Plane blurred = blur(crop_to_even(src.plane), kernel);
  const PhaseSet phases = extract_phases(blurred);
  const int pw = phases.a.width(), ph = phases.a.height();
  if (pw < m.patch_size || ph < m.patch_size) {
    throw ConfigError("source '" + src.id + "' is too small: phase planes " + std::to_string(pw) + "x" + std::to_string(ph) +
                      " < patch_size " + std::to_string(m.patch_size));
  }
  const auto xs = grid_positions(pw, m.patch_size, m.stride);
  const auto ys = grid_positions(ph, m.patch_size, m.stride);

  ImagePairs out;
  out.by_tag.assign(3, std::vector<std::vector<TrainingPair>>(m.qps.size()));
  for (std::size_t qi = 0; qi < m.qps.size(); ++qi) {
    // Degrade the whole phase-0 plane so block edges fall inside patches.
    const Plane input = m.degrade ? degrade_intra_surrogate(phases.a, m.qps[qi]) : phases.a;
    for (std::size_t pi = 0; pi < 3; ++pi) {
      const Plane& label_plane = phases.at(kHalfPelPositions[pi]);
      auto& dst = out.by_tag[pi][qi];
      for (int y : ys) {
        for (int x : xs) {
          dst.push_back(TrainingPair{input.cropped(x, y, m.patch_size, m.patch_size),
                                     label_plane.cropped(x, y, m.patch_size, m.patch_size), kHalfPelPositions[pi], m.qps[qi],
                                     src.id});
        }
      }
    }
  }
  if (m.sr_pairs) {
    const Plane upscaled = upscale2_bicubic(phases.a);
    const int n = 2 * m.patch_size;
    for (int y : ys) {
      for (int x : xs) {
        out.sr.push_back(TrainingPair{upscaled.cropped(2 * x, 2 * y, n, n), blurred.cropped(2 * x, 2 * y, n, n), Position::kSr, 0,
                                      src.id});
      }
    }
  }
  return out;
}

}  // namespace

BuiltDataset build_dataset(const DatasetManifest& manifest, std::span<const SourceImage> images, unsigned threads) {
  manifest.validate();
  if (images.empty()) throw ConfigError("build_dataset: empty corpus");
  const BlurKernel kernel = manifest.blur_kernel();
  std::vector<ImagePairs> per_image(images.size());
  parallel_for(images.size(), threads, [&](std::size_t i) { per_image[i] = build_image_pairs(manifest, kernel, images[i]); });

  BuiltDataset out;
  for (std::size_t pi = 0; pi < 3; ++pi) {
    for (std::size_t qi = 0; qi < manifest.qps.size(); ++qi) {
      PairSet set{kHalfPelPositions[pi], manifest.qps[qi], {}};
      for (auto& img : per_image) {
        auto& src = img.by_tag[pi][qi];
        std::move(src.begin(), src.end(), std::back_inserter(set.pairs));
      }
      out.sets.push_back(std::move(set));
    }
  }
  if (manifest.sr_pairs) {
    PairSet sr{Position::kSr, 0, {}};
    for (auto& img : per_image) std::move(img.sr.begin(), img.sr.end(), std::back_inserter(sr.pairs));
    out.sr = std::move(sr);
  }
  return out;
}

BuiltDataset build_dataset(const DatasetManifest& manifest, unsigned threads) {
  manifest.validate();
  std::vector<SourceImage> images;
  std::set<std::string> ids;
  for (const auto& path : manifest.sources) {
    if (!std::filesystem::exists(path)) throw IoError("source image '" + path.string() + "' not found");
    std::string id = path.filename().string();
    if (!ids.insert(id).second) throw ConfigError("duplicate source id '" + id + "'");
    images.push_back(SourceImage{id, load_pgm(path)});
  }
  return build_dataset(manifest, images, threads);
}

std::pair<std::vector<TrainingPair>, std::vector<TrainingPair>> split_train_val(std::span<const TrainingPair> pairs,
                                                                                double split_fraction, std::uint64_t seed) {
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw PreconditionError("split_fraction must lie in (0, 1)");
  std::vector<std::string> sources;
  std::set<std::string> seen;
  for (const auto& p : pairs) {
    if (seen.insert(p.source_id).second) sources.push_back(p.source_id);
  }
  if (sources.size() < 2) throw PreconditionError("split_train_val needs at least 2 distinct sources");
  Rng rng(seed);
  rng.shuffle(sources);
  const long long n = static_cast<long long>(sources.size());
  const long long n_train = std::clamp<long long>(std::llround(split_fraction * static_cast<double>(n)), 1, n - 1);
  const std::set<std::string> train_sources(sources.begin(), sources.begin() + n_train);
  std::pair<std::vector<TrainingPair>, std::vector<TrainingPair>> out;
  for (const auto& p : pairs) (train_sources.contains(p.source_id) ? out.first : out.second).push_back(p);
  return out;
}

std::string serialize_shard(const PairSet& set) {
  int w = 0, h = 0;
  if (!set.pairs.empty()) {
    w = set.pairs.front().input.width();
    h = set.pairs.front().input.height();
  }
  std::vector<std::string> sources;
  std::map<std::string, std::uint32_t> index;
  for (const auto& p : set.pairs) {
    if (p.input.width() != w || p.input.height() != h || !p.input.same_shape(p.label)) {
      throw PreconditionError("shard pairs must share one patch size");
    }
    if (p.position != set.position || p.qp != set.qp) throw PreconditionError("shard pair tag differs from set tag");
    if (p.source_id.size() > 0xffff) throw PreconditionError("source id too long");
    if (index.emplace(p.source_id, static_cast<std::uint32_t>(sources.size())).second) sources.push_back(p.source_id);
  }
  ByteWriter wr;
  wr.raw("CNDS");
  wr.u16(kShardFormatVersion);
  wr.u8(static_cast<std::uint8_t>(set.position));
  wr.u8(static_cast<std::uint8_t>(set.qp));
  wr.u32(static_cast<std::uint32_t>(set.pairs.size()));
  wr.u32(static_cast<std::uint32_t>(w));
  wr.u32(static_cast<std::uint32_t>(h));
  wr.u32(static_cast<std::uint32_t>(sources.size()));
  for (const auto& s : sources) {
    wr.u16(static_cast<std::uint16_t>(s.size()));
    wr.raw(s);
  }
  for (const auto& p : set.pairs) {
    wr.u32(index.at(p.source_id));
    for (double v : p.input.samples()) wr.f64(v);
    for (double v : p.label.samples()) wr.f64(v);
  }
  return wr.bytes();
}

PairSet deserialize_shard(std::string_view bytes) {
  ByteReader r(bytes);
  if (!r.has(4) || r.raw(4) != "CNDS") throw FormatError(FormatErrorKind::kBadMagic, "shard: bad magic (expected CNDS)");
  if (!r.has(2 + 2 + 16)) throw FormatError(FormatErrorKind::kPayloadSize, "shard: truncated header");
  const std::uint16_t version = r.u16();
  if (version != kShardFormatVersion) throw FormatError(FormatErrorKind::kBadVersion, "shard: unsupported version " + std::to_string(version));
  const std::uint8_t tag = r.u8();
  if (tag > static_cast<std::uint8_t>(Position::kSr)) throw FormatError(FormatErrorKind::kTagMismatch, "shard: invalid position tag");
  PairSet set;
  set.position = static_cast<Position>(tag);
  set.qp = r.u8();
  const std::uint32_t count = r.u32(), w = r.u32(), h = r.u32(), nsrc = r.u32();
  if (count > 0 && (w == 0 || h == 0 || w > 1 << 14 || h > 1 << 14)) {
    throw FormatError(FormatErrorKind::kShapeMismatch, "shard: implausible patch size");
  }
  std::vector<std::string> sources;
  for (std::uint32_t i = 0; i < nsrc; ++i) {
    if (!r.has(2)) throw FormatError(FormatErrorKind::kPayloadSize, "shard: truncated source table");
    const std::uint16_t len = r.u16();
    if (!r.has(len)) throw FormatError(FormatErrorKind::kPayloadSize, "shard: truncated source table");
    sources.emplace_back(r.raw(len));
  }
  const std::size_t samples = static_cast<std::size_t>(w) * h;
  const std::size_t per_pair = 4 + 16 * samples;
  if (r.remaining() != per_pair * count) {
    throw FormatError(FormatErrorKind::kPayloadSize, "shard: payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                                                         std::to_string(per_pair * count));
  }
  set.pairs.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t src = r.u32();
    if (src >= sources.size()) throw FormatError(FormatErrorKind::kShapeMismatch, "shard: source index out of range");
    std::vector<double> in(samples), lab(samples);
    for (double& v : in) v = r.f64();
    for (double& v : lab) v = r.f64();
    set.pairs.push_back(TrainingPair{Plane(static_cast<int>(w), static_cast<int>(h), std::move(in)),
                                     Plane(static_cast<int>(w), static_cast<int>(h), std::move(lab)), set.position, set.qp,
                                     sources[src]});
  }
  return set;
}

void save_shard(const PairSet& set, const std::filesystem::path& path) { write_file_bytes(path, serialize_shard(set)); }

PairSet load_shard(const std::filesystem::path& path) { return deserialize_shard(read_file_bytes(path)); }

std::string shard_file_name(Position position, int qp) {
  if (position == Position::kSr) return "pairs_sr.cnds";
  return "pairs_" + std::string(to_string(position)) + "_qp" + std::to_string(qp) + ".cnds";
}

std::string build_report_csv(const BuiltDataset& data) {
  std::string out = "position,qp,pairs,sources,patch_width,patch_height\n";
  auto row = [&](const PairSet& s) {
    std::set<std::string> src;
    for (const auto& p : s.pairs) src.insert(p.source_id);
    const int w = s.pairs.empty() ? 0 : s.pairs.front().input.width();
    const int h = s.pairs.empty() ? 0 : s.pairs.front().input.height();
    out += std::string(to_string(s.position)) + "," + std::to_string(s.qp) + "," + std::to_string(s.pairs.size()) + "," +
           std::to_string(src.size()) + "," + std::to_string(w) + "," + std::to_string(h) + "\n";
  };
  for (const auto& s : data.sets) row(s);
  if (data.sr) row(*data.sr);
  return out;
}

}  // namespace halfpel
