#include "halfpel/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>

#include "halfpel/cnn.hpp"
#include "halfpel/datagen.hpp"
#include "halfpel/error.hpp"
#include "halfpel/eval_report.hpp"
#include "halfpel/fixed_filters.hpp"
#include "halfpel/image_core.hpp"
#include "halfpel/mc_sim.hpp"
#include "halfpel/synth.hpp"
#include "halfpel/util.hpp"

namespace fs = std::filesystem;

namespace halfpel {
namespace {

constexpr const char* kResolvedConfigName = "resolved_config.txt";

struct OptionSpec {
  std::string key;
  std::string help{};
  std::string default_value{};  // empty: no default
  bool positional = false;
  bool required = false;
};

// Flags, config file and defaults merged into one key space.
class Resolved {
 public:
  Resolved(std::string command, KeyValues kv) : command_(std::move(command)), kv_(std::move(kv)) {}

  const std::string& command() const { return command_; }
  const KeyValues& values() const { return kv_; }
  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  const std::string& str(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing required option --" + key);
    return it->second;
  }
  long long integer(const std::string& key) const { return parse_int(str(key), "--" + key); }
  int small_int(const std::string& key) const {
    const long long v = integer(key);
    if (v < -1000000000LL || v > 1000000000LL) throw ConfigError("--" + key + " is out of range");
    return static_cast<int>(v);
  }
  double real(const std::string& key) const { return parse_double(str(key), "--" + key); }
  std::uint64_t seed() const {
    const long long v = integer("seed");
    if (v < 0) throw ConfigError("--seed must be non-negative");
    return static_cast<std::uint64_t>(v);
  }
  unsigned threads() const {
    const long long v = integer("threads");
    if (v < 0 || v > 1024) throw ConfigError("--threads must lie in [0, 1024]");
    return resolve_threads(static_cast<unsigned>(v));
  }
  fs::path out_dir() const { return fs::path(str("out")); }

 private:
  std::string command_;
  KeyValues kv_;
};

struct Command {
  std::string name;
  std::string description;
  std::vector<OptionSpec> options;
  bool writes_run_dir = true;
  std::function<void(const Resolved&, std::ostream&)> run;
};

OptionSpec out_option() { return {"out", "Run directory for every output file", "", false, true}; }
OptionSpec threads_option() { return {"threads", "Worker threads (0 = all cores)", "0", false, false}; }

Position require_half_position(const std::string& s) {
  const Position p = parse_position(s);
  if (p == Position::kSr) throw ConfigError("--position must be one of h, v, d");
  return p;
}

int require_qp(const Resolved& r, const std::string& key) {
  const int qp = r.small_int(key);
  if (qp < 0 || qp > 51) throw ConfigError("--" + key + " must lie in [0, 51]");
  return qp;
}

std::vector<int> parse_qp_list(const std::string& text) {
  std::vector<int> qps;
  for (const auto& part : split(text, ',')) {
    const long long v = parse_int(trim(part), "qp list");
    if (v < 0 || v > 51) throw ConfigError("qp list entries must lie in [0, 51]");
    qps.push_back(static_cast<int>(v));
  }
  if (qps.empty()) throw ConfigError("empty qp list");
  return qps;
}

void write_text(const fs::path& path, const std::string& text) { write_file_bytes(path, text); }

// ---------------------------------------------------------------------------
// prep
// ---------------------------------------------------------------------------

void cmd_prep(const Resolved& r, std::ostream& out) {
  DatasetManifest m = read_manifest(r.str("manifest"));
  if (r.has("seed")) m.seed = r.seed();
  if (r.has("patch-size")) m.patch_size = r.small_int("patch-size");
  if (r.has("stride")) m.stride = r.small_int("stride");
  m.validate();
  const BuiltDataset data = build_dataset(m, r.threads());
  const fs::path dir = r.out_dir();
  int files = 0;
  for (const auto& set : data.sets) {
    save_shard(set, dir / shard_file_name(set.position, set.qp));
    ++files;
  }
  if (data.sr) {
    save_shard(*data.sr, dir / shard_file_name(Position::kSr, 0));
    ++files;
  }
  write_text(dir / "build_report.csv", build_report_csv(data));
  write_text(dir / "manifest.txt", format_key_values(manifest_to_key_values(m)));
  out << "wrote " << files << " shards to " << dir.string() << "\n";
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

void cmd_train(const Resolved& r, std::ostream& out) {
  const fs::path dataset = r.str("dataset");
  const Position position = parse_position(r.str("position"));
  const int qp = position == Position::kSr ? 0 : require_qp(r, "qp");
  const fs::path shard = dataset / shard_file_name(position, qp);
  if (!fs::exists(shard)) {
    throw ConfigError("no training pairs tagged position=" + std::string(to_string(position)) + " qp=" + std::to_string(qp) +
                      " in '" + dataset.string() + "' (expected " + shard.filename().string() + ")");
  }
  const PairSet set = load_shard(shard);

  Hyperparams hp;
  hp.lr_front = r.real("lr-front");
  hp.lr_last = r.real("lr-last");
  hp.momentum = r.real("momentum");
  hp.batch_size = r.small_int("batch-size");
  hp.epochs = r.small_int("epochs");
  hp.init_std = r.real("init-std");
  hp.seed = r.seed();
  hp.validate();

  double split_fraction = 0.8;
  std::uint64_t split_seed = 1;
  if (fs::exists(dataset / "manifest.txt")) {
    const KeyValues mkv = read_key_value_file(dataset / "manifest.txt");
    if (auto it = mkv.find("split_fraction"); it != mkv.end()) split_fraction = parse_double(it->second, "split_fraction");
    if (auto it = mkv.find("seed"); it != mkv.end()) split_seed = static_cast<std::uint64_t>(parse_int(it->second, "seed"));
  }
  std::set<std::string> sources;
  for (const auto& p : set.pairs) sources.insert(p.source_id);
  std::vector<TrainingPair> train_pairs, val_pairs;
  if (sources.size() >= 2) {
    std::tie(train_pairs, val_pairs) = split_train_val(set.pairs, split_fraction, split_seed);
  } else {
    train_pairs = set.pairs;
    log(LogLevel::kInfo, "single source in shard: training without a validation split");
  }

  TrainOptions options;
  options.threads = r.threads();
  options.log_progress = true;
  const TrainResult result = train(train_pairs, val_pairs, hp, options);

  const fs::path dir = r.out_dir();
  const fs::path weights = dir / cnn_weight_file_name(position, qp);
  save_weights(result.net, weights);
  std::string csv = "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < result.curve.train.size(); ++e) {
    csv += std::to_string(e + 1) + "," + format_real(result.curve.train[e]) + ",";
    if (e < result.curve.validation.size()) csv += format_real(result.curve.validation[e]);
    csv += "\n";
  }
  write_text(dir / "loss_curve.csv", csv);
  out << "trained " << weights.filename().string() << " on " << train_pairs.size() << " pairs";
  if (!result.curve.train.empty()) out << ", final train loss " << format_real(result.curve.train.back());
  if (!result.curve.validation.empty()) out << ", val loss " << format_real(result.curve.validation.back());
  out << "\n";
}

// ---------------------------------------------------------------------------
// interp
// ---------------------------------------------------------------------------

InterpolatorSpec spec_from_flags(const Resolved& r) {
  const InterpolatorKind kind = parse_interpolator(r.str("method"));
  switch (kind) {
    case InterpolatorKind::kDctif:
      return InterpolatorSpec::dctif();
    case InterpolatorKind::kAvg2:
      return InterpolatorSpec::avg2();
    case InterpolatorKind::kCnn: {
      if (r.has("weights-dir")) return load_cnn_spec(r.str("weights-dir"));
      if (r.has("weights")) return InterpolatorSpec::cnn({load_weights(r.str("weights"))});
      throw ConfigError("method cnn needs --weights-dir (or --weights for a single position)");
    }
    case InterpolatorKind::kSrAnchor: {
      if (r.has("weights")) return InterpolatorSpec::sr_anchor(load_weights(r.str("weights"), LoadOptions{Position::kSr, 0, true}));
      if (r.has("weights-dir")) {
        const fs::path p = fs::path(r.str("weights-dir")) / cnn_weight_file_name(Position::kSr, 0);
        return InterpolatorSpec::sr_anchor(load_weights(p, LoadOptions{Position::kSr, 0, true}));
      }
      throw ConfigError("method sr needs --weights or --weights-dir");
    }
  }
  throw ConfigError("unknown method");
}

void cmd_interp(const Resolved& r, std::ostream& out) {
  const Plane image = load_pgm(r.str("image"));
  const Position position = require_half_position(r.str("position"));
  const int qp = require_qp(r, "qp");
  const InterpolatorKind kind = parse_interpolator(r.str("method"));
  Plane result;
  if (kind == InterpolatorKind::kCnn && !r.has("weights-dir")) {
    // A single weight file: it must be tagged with the requested position.
    if (!r.has("weights")) throw ConfigError("method cnn needs --weights or --weights-dir");
    const Network net = load_weights(r.str("weights"), LoadOptions{position, std::nullopt, true});
    result = apply_network(net, image, r.threads());
  } else {
    const HalfPelField field = build_halfpel_field(image, spec_from_flags(r), qp, r.threads());
    result = position == Position::kH ? field.b : position == Position::kV ? field.h : field.j;
  }
  const fs::path path = r.out_dir() / ("half_" + std::string(to_string(position)) + ".pgm");
  save_pgm(result, path);
  out << "wrote " << path.string() << "\n";
}

// ---------------------------------------------------------------------------
// mc-eval
// ---------------------------------------------------------------------------

void cmd_mc_eval(const Resolved& r, std::ostream& out) {
  const std::vector<Plane> frames = load_frames(r.str("frames"));
  McParams params;
  params.block_size = r.small_int("block-size");
  params.search_range = r.small_int("search-range");
  params.slice_qp = require_qp(r, "qp");
  params.threads = r.threads();
  if (r.has("ref-qp")) params.reference_qp = require_qp(r, "ref-qp");
  params.validate();
  const InterpolatorSpec spec = spec_from_flags(r);
  const McReport report = simulate_sequence(frames, spec, params);
  const fs::path dir = r.out_dir();
  write_text(dir / "mc_report.csv", mc_report_csv(report));
  out << "method " << r.str("method") << ": sse " << format_real(report.total.sse) << ", psnr "
      << format_real(report.total.psnr_db) << " dB over " << report.frames.size() << " predicted frames\n";
  if (r.integer("rd") != 0) {
    const auto rows = simulate_rd(frames, spec, params, parse_qp_list(r.str("rd-qps")));
    write_text(dir / "rd_curve.csv", rd_rows_csv(rows));
    out << "wrote rd_curve.csv (" << rows.size() << " points)\n";
  }
}

// ---------------------------------------------------------------------------
// bd-rate / compare
// ---------------------------------------------------------------------------

std::string format_percent(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

void cmd_bd_rate(const Resolved& r, std::ostream& out) {
  const RDCurve anchor = curve_from_rows(parse_rd_csv(read_file_bytes(r.str("anchor"))));
  const RDCurve test = curve_from_rows(parse_rd_csv(read_file_bytes(r.str("test"))));
  out << format_percent(bd_rate(anchor, test)) << "\n";
}

// An mc-eval run directory (rd_curve.csv, named after its frames directory)
// or a bare RD CSV file (named after its stem).
SequenceRD load_sequence(const std::string& item) {
  const fs::path p(item);
  if (fs::is_directory(p)) {
    std::string name = p.filename().string();
    if (name.empty()) name = p.parent_path().filename().string();
    if (fs::exists(p / kResolvedConfigName)) {
      const KeyValues kv = read_key_value_file(p / kResolvedConfigName);
      if (auto it = kv.find("frames"); it != kv.end()) {
        fs::path frames(it->second);
        name = frames.filename().empty() ? frames.parent_path().filename().string() : frames.filename().string();
      }
    }
    return {name, parse_rd_csv(read_file_bytes(p / "rd_curve.csv"))};
  }
  return {p.stem().string(), parse_rd_csv(read_file_bytes(p))};
}

void cmd_compare(const Resolved& r, std::ostream& out) {
  std::vector<SequenceRD> anchor, test;
  for (const auto& item : split(r.str("anchor"), ',')) anchor.push_back(load_sequence(trim(item)));
  for (const auto& item : split(r.str("test"), ',')) test.push_back(load_sequence(trim(item)));
  const Comparison c = compare_report(anchor, test);
  write_text(r.out_dir() / "compare.csv", comparison_csv(c));
  for (const auto& row : c.rows) out << row.sequence << " " << format_percent(row.bd_rate) << "\n";
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

void cmd_synth(const Resolved& r, std::ostream& out) {
  const fs::path dir = r.out_dir();
  const std::string kind = r.str("kind");
  const int width = r.small_int("width"), height = r.small_int("height");
  if (width < 1 || height < 1) throw ConfigError("--width and --height must be positive");
  if (kind == "images") {
    const int count = r.small_int("count");
    if (count < 1) throw ConfigError("--count must be positive");
    std::vector<std::string> names;
    for (int i = 0; i < count; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "img_%03d.pgm", i);
      save_pgm(synthetic_image(width, height, r.seed() * 1000003ULL + static_cast<std::uint64_t>(i)), dir / name);
      names.push_back(name);
    }
    std::string sources;
    for (const auto& n : names) sources += (sources.empty() ? "" : ",") + n;
    write_text(dir / "manifest.txt", "sources=" + sources + "\n");
    out << "wrote " << count << " images and manifest.txt to " << dir.string() << "\n";
  } else if (kind == "clip") {
    ClipParams cp;
    cp.width = width;
    cp.height = height;
    cp.frames = r.small_int("frames");
    cp.motion_x = r.small_int("motion-x");
    cp.motion_y = r.small_int("motion-y");
    cp.noise_sigma = r.real("noise");
    cp.seed = r.seed();
    if (cp.frames < 1) throw ConfigError("--frames must be positive");
    if (cp.noise_sigma < 0.0) throw ConfigError("--noise must be non-negative");
    save_frames(synthetic_clip(cp), dir);
    out << "wrote " << cp.frames << " frames to " << dir.string() << "\n";
  } else {
    throw ConfigError("--kind must be images or clip");
  }
}

// ---------------------------------------------------------------------------

std::vector<Command> commands() {
  const OptionSpec method{"method", "Interpolator: dctif, cnn, avg2 or sr", "dctif"};
  const OptionSpec weights{"weights", "Single weight file (cnn: one position; sr: the SR network)"};
  const OptionSpec weights_dir{"weights-dir", "Directory of cnnif_<pos>_qp<NN>.cnif files (or cnnif_sr.cnif)"};
  return {
      {"prep",
       "Build training pair shards from a dataset manifest",
       {{"manifest", "Dataset manifest (key=value)", "", true, true},
        out_option(),
        {"seed", "Override the manifest seed"},
        {"patch-size", "Override the manifest patch size"},
        {"stride", "Override the manifest stride"},
        threads_option()},
       true,
       cmd_prep},
      {"train",
       "Train one interpolation network from a prepared dataset",
       {{"dataset", "Directory written by prep", "", true, true},
        out_option(),
        {"position", "Half-pel position h, v, d (or sr)", "", false, true},
        {"qp", "Model QP", "22"},
        {"seed", "Initialization and shuffle seed", "1"},
        {"epochs", "Training epochs", "100"},
        {"lr-front", "Learning rate of layers 1-2", "0.0001"},
        {"lr-last", "Learning rate of layer 3", "0.00001"},
        {"momentum", "SGD momentum", "0.9"},
        {"batch-size", "Mini-batch size", "64"},
        {"init-std", "Standard deviation of the initial weights", "0.001"},
        threads_option()},
       true,
       cmd_train},
      {"interp",
       "Write one half-pel plane of an image",
       {{"image", "Input PGM", "", true, true},
        out_option(),
        method,
        {"position", "Half-pel position h, v or d", "h"},
        weights,
        weights_dir,
        {"qp", "Slice QP used to pick the CNN model", "22"},
        threads_option()},
       true,
       cmd_interp},
      {"mc-eval",
       "Motion-compensated prediction over a frame sequence",
       {{"frames", "Directory of frame_NNNN.pgm files", "", true, true},
        out_option(),
        method,
        weights,
        weights_dir,
        {"qp", "Slice QP used to pick the CNN model", "22"},
        {"ref-qp", "Degrade reference frames with the intra surrogate at this QP"},
        {"block-size", "Block size in samples", "16"},
        {"search-range", "Integer search range in samples", "8"},
        {"rd", "Also write rd_curve.csv (1) or not (0)", "0"},
        {"rd-qps", "QPs of the RD curve", "22,27,32,37"},
        threads_option()},
       true,
       cmd_mc_eval},
      {"bd-rate",
       "Print the BD-rate (percent) of a test RD curve against an anchor",
       {{"anchor", "Anchor RD CSV", "", true, true}, {"test", "Test RD CSV", "", true, true}},
       false,
       cmd_bd_rate},
      {"compare",
       "Per-sequence PSNR/SSE deltas and BD-rate between two interpolators",
       {out_option(),
        {"anchor", "Comma-separated mc-eval run dirs or RD CSV files", "", false, true},
        {"test", "Same sequences, test interpolator", "", false, true}},
       true,
       cmd_compare},
      {"synth",
       "Generate synthetic test images or a panning clip",
       {out_option(),
        {"kind", "images or clip", "images"},
        {"count", "Number of images", "20"},
        {"width", "Width in samples", "128"},
        {"height", "Height in samples", "128"},
        {"frames", "Clip length", "4"},
        {"motion-x", "Horizontal motion per frame, half-pel units", "1"},
        {"motion-y", "Vertical motion per frame, half-pel units", "0"},
        {"noise", "Gaussian noise sigma added per frame", "0"},
        {"seed", "Generator seed", "1"}},
       true,
       cmd_synth},
  };
}

Resolved resolve(const Command& cmd, const KeyValues& flags, const std::string& config_path) {
  std::set<std::string> known;
  for (const auto& o : cmd.options) known.insert(o.key);
  KeyValues kv;
  for (const auto& o : cmd.options) {
    if (!o.default_value.empty()) kv[o.key] = o.default_value;
  }
  if (!config_path.empty()) {
    for (const auto& [k, v] : read_key_value_file(config_path)) {
      if (!known.count(k)) throw ConfigError("config '" + config_path + "': unknown key '" + k + "' for " + cmd.name);
      kv[k] = v;
    }
  }
  for (const auto& [k, v] : flags) kv[k] = v;
  for (const auto& o : cmd.options) {
    if (o.required && !kv.count(o.key)) throw ConfigError(cmd.name + ": missing required option " + (o.positional ? o.key : "--" + o.key));
  }
  return Resolved(cmd.name, std::move(kv));
}

void echo_config(const Resolved& r) {
  std::string text = "# halfpel " + r.command() + " --config " + kResolvedConfigName + "\n";
  text += format_key_values(r.values());
  write_text(r.out_dir() / kResolvedConfigName, text);
}

int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Half-pel interpolation toolkit: fixed filters, CNN interpolators and a motion-compensation harness", "halfpel"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every command");

  const auto cmds = commands();
  std::vector<std::pair<CLI::App*, std::map<std::string, std::string>>> stores(cmds.size());
  std::vector<std::map<std::string, CLI::Option*>> handles(cmds.size());
  std::vector<std::string> config_paths(cmds.size());
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    CLI::App* sub = app.add_subcommand(cmds[i].name, cmds[i].description);
    stores[i].first = sub;
    sub->add_option("--config", config_paths[i], "key=value file; command-line flags take precedence");
    for (const auto& o : cmds[i].options) {
      std::string& slot = stores[i].second[o.key];
      std::string desc = o.help;
      if (!o.default_value.empty()) desc += " [" + o.default_value + "]";
      handles[i][o.key] = sub->add_option(o.positional ? o.key : "--" + o.key, slot, desc);
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  for (std::size_t i = 0; i < cmds.size(); ++i) {
    if (!stores[i].first->parsed()) continue;
    KeyValues flags;
    for (const auto& [key, opt] : handles[i]) {
      if (opt->count() > 0) flags[key] = stores[i].second[key];
    }
    const Resolved r = resolve(cmds[i], flags, config_paths[i]);
    if (cmds[i].writes_run_dir) {
      fs::create_directories(r.out_dir());
      echo_config(r);
    }
    cmds[i].run(r, out);
    return kExitOk;
  }
  return kExitUsage;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return execute(args, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const PgmParseError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace halfpel
