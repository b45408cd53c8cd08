#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "halfpel/image_core.hpp"
#include "halfpel/training_pair.hpp"
#include "halfpel/util.hpp"

namespace halfpel {

inline constexpr int kModelQps[] = {22, 27, 32, 37};

// Nearest of {22, 27, 32, 37}; ties go to the lower QP.
int select_model_qp(int slice_qp);

struct DatasetManifest {
  std::vector<std::filesystem::path> sources;
  std::vector<double> blur_taps;  // empty: Gaussian with blur_sigma
  double blur_sigma = 0.8;
  std::vector<int> qps = {22, 27, 32, 37};
  int patch_size = 32;
  int stride = 16;
  double split_fraction = 0.8;
  std::uint64_t seed = 1;
  // Diagnostic switch: when false the inputs are the clean phase-0 crops.
  bool degrade = true;
  // Also emit pairs for training a x2 super-resolution anchor network.
  bool sr_pairs = false;

  BlurKernel blur_kernel() const;
  void validate() const;
};

// Keys: sources (comma separated, relative to base_dir), blur_taps or
// blur_sigma, qps, patch_size, stride, split_fraction, seed, degrade,
// sr_pairs. Unknown keys are rejected.
DatasetManifest parse_manifest(const KeyValues& kv, const std::filesystem::path& base_dir = {});
DatasetManifest read_manifest(const std::filesystem::path& path);
// Canonical key=value form; source paths are written as given.
KeyValues manifest_to_key_values(const DatasetManifest& m);

struct SourceImage {
  std::string id;
  Plane plane;
};

// Pairs sharing one (position, qp) tag.
struct PairSet {
  Position position = Position::kH;
  int qp = 22;
  std::vector<TrainingPair> pairs;
};

struct BuiltDataset {
  std::vector<PairSet> sets;     // positions h, v, d (outer) x manifest qps (inner)
  std::optional<PairSet> sr;     // when manifest.sr_pairs

  const PairSet& find(Position position, int qp) const;
};

// Per image: crop to even size, blur, extract phases, degrade phase 0 once
// per QP, then cut (input, label) patches on a regular grid. Pair order is
// (source order, grid row, grid column).
BuiltDataset build_dataset(const DatasetManifest& manifest, std::span<const SourceImage> images, unsigned threads = 1);
// Loads manifest.sources; the file name is the source id.
BuiltDataset build_dataset(const DatasetManifest& manifest, unsigned threads = 1);

// Partitions pairs by source_id. Sources are shuffled with `seed` and the
// first round(fraction * n) (kept within [1, n - 1]) go to training.
std::pair<std::vector<TrainingPair>, std::vector<TrainingPair>> split_train_val(std::span<const TrainingPair> pairs,
                                                                                double split_fraction, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Dataset shards
// ---------------------------------------------------------------------------
//
//   "CNDS"              4 bytes
//   version             u16 (currently 1)
//   position            u8  (0=h, 1=v, 2=d, 3=sr)
//   qp                  u8  (0 for sr)
//   pair count          u32
//   patch width         u32
//   patch height        u32
//   source count        u32
//   source ids          per source: u16 length + UTF-8 bytes
//   pairs               per pair: u32 source index, then width*height input
//                       samples, then width*height label samples, as
//                       little-endian doubles on the 0..255 scale

inline constexpr std::uint16_t kShardFormatVersion = 1;

std::string serialize_shard(const PairSet& set);
PairSet deserialize_shard(std::string_view bytes);
void save_shard(const PairSet& set, const std::filesystem::path& path);
PairSet load_shard(const std::filesystem::path& path);

std::string shard_file_name(Position position, int qp);

// CSV with one row per tag: position,qp,pairs,sources,patch_width,patch_height
std::string build_report_csv(const BuiltDataset& data);

}  // namespace halfpel
