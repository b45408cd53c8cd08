#include <doctest.h>

#include <cstdlib>
#include <sstream>
#include <sys/wait.h>

#include "halfpel/cli.hpp"
#include "halfpel/cnn.hpp"
#include "halfpel/datagen.hpp"
#include "halfpel/eval_report.hpp"
#include "halfpel/fixed_filters.hpp"
#include "halfpel/image_core.hpp"
#include "halfpel/mc_sim.hpp"
#include "halfpel/synth.hpp"
#include "test_support.hpp"

using namespace halfpel;
using halfpel::testing::integer_plane;
using halfpel::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) { return read_file_bytes(p); }

void write(const fs::path& p, const std::string& text) { write_file_bytes(p, text); }

// One image and a manifest naming it.
fs::path one_image_manifest(const TempDir& dir, const Plane& image, const std::string& extra = "") {
  save_pgm(image, dir / "img.pgm");
  write(dir / "manifest.txt", "sources=img.pgm\npatch_size=16\nstride=8\n" + extra);
  return dir / "manifest.txt";
}

std::string rd_csv(double rate_scale) {
  std::vector<RDRow> rows = {{22, 1.6, 41.0, 0}, {27, 0.9, 38.2, 0}, {32, 0.5, 35.1, 0}, {37, 0.3, 32.4, 0}};
  for (auto& r : rows) r.rate *= rate_scale;
  return rd_rows_csv(rows);
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
  TempDir dir;
  const Run r = cli({"synth", "--out", (dir / "x").string(), "--bogus", "1"});
  CHECK(r.code == kExitUsage);
  CHECK(cli({"synth", "--out", (dir / "x").string(), "--kind", "movies"}).code == kExitUsage);
  CHECK(cli({"train", (dir / "nothing").string(), "--out", (dir / "t").string()}).code == kExitUsage);  // no --position
}

TEST_CASE("prep: one image gives 12 shards and a report, reproducibly") {
  TempDir dir;
  const fs::path manifest = one_image_manifest(dir, integer_plane(32, 32, 1));
  const Run r = cli({"prep", manifest.string(), "--out", (dir / "ds").string()});
  REQUIRE(r.code == 0);
  int shards = 0;
  for (const auto& e : fs::directory_iterator(dir / "ds")) shards += e.path().extension() == ".cnds";
  CHECK(shards == 12);
  const std::string report = slurp(dir / "ds/build_report.csv");
  CHECK(std::count(report.begin(), report.end(), '\n') == 13);
  CHECK(load_shard(dir / "ds/pairs_v_qp32.cnds").pairs.size() == 1);
  CHECK(fs::exists(dir / "ds/resolved_config.txt"));
  CHECK(fs::exists(dir / "ds/manifest.txt"));

  REQUIRE(cli({"prep", manifest.string(), "--out", (dir / "ds2").string(), "--threads", "3"}).code == 0);
  for (const auto& e : fs::directory_iterator(dir / "ds")) {
    if (e.path().extension() != ".cnds") continue;
    CHECK(slurp(e.path()) == slurp(dir / "ds2" / e.path().filename()));
  }
}

TEST_CASE("prep: missing source names the path") {
  TempDir dir;
  write(dir / "manifest.txt", "sources=absent_image.pgm\n");
  const Run r = cli({"prep", (dir / "manifest.txt").string(), "--out", (dir / "ds").string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("absent_image.pgm") != std::string::npos);
}

TEST_CASE("train: constant-white sanity shard reaches the bias-only solution") {
  TempDir dir;
  const fs::path manifest = one_image_manifest(dir, Plane(48, 48, 255.0), "qps=22\n");
  REQUIRE(cli({"prep", manifest.string(), "--out", (dir / "ds").string()}).code == 0);
  const std::vector<std::string> args = {"train",       (dir / "ds").string(), "--position", "h",         "--qp",
                                         "22",          "--epochs",            "50",         "--batch-size", "1",
                                         "--lr-front",  "0.001",               "--lr-last",  "0.02",      "--seed",
                                         "3",           "--out"};
  auto with_out = [&](const std::string& out) {
    auto a = args;
    a.push_back(out);
    return a;
  };
  const Run r = cli(with_out((dir / "t1").string()));
  REQUIRE(r.code == 0);
  const CsvTable curve = parse_csv(slurp(dir / "t1/loss_curve.csv"));
  CHECK(curve.header == std::vector<std::string>{"epoch", "train_loss", "val_loss"});
  REQUIRE(curve.rows.size() == 50);
  CHECK(parse_real(curve.rows.back()[1]) < 1.0);
  const Network net = load_weights(dir / "t1/cnnif_h_qp22.cnif", LoadOptions{Position::kH, 22, true});
  const Plane out = apply_network(net, Plane(24, 24, 254.6));
  for (double v : out.samples()) CHECK(v > 253.0);

  REQUIRE(cli(with_out((dir / "t2").string())).code == 0);
  CHECK(slurp(dir / "t1/cnnif_h_qp22.cnif") == slurp(dir / "t2/cnnif_h_qp22.cnif"));
  CHECK(slurp(dir / "t1/loss_curve.csv") == slurp(dir / "t2/loss_curve.csv"));

  // The echoed configuration reproduces the run.
  std::string cfg = slurp(dir / "t1/resolved_config.txt");
  const auto pos = cfg.find("out=");
  cfg.replace(pos, cfg.find('\n', pos) - pos, "out=" + (dir / "t3").string());
  write(dir / "t3.cfg", cfg);
  REQUIRE(cli({"train", "--config", (dir / "t3.cfg").string()}).code == 0);
  CHECK(slurp(dir / "t1/cnnif_h_qp22.cnif") == slurp(dir / "t3/cnnif_h_qp22.cnif"));

  const Run missing = cli({"train", (dir / "ds").string(), "--position", "d", "--qp", "37", "--out", (dir / "t4").string()});
  CHECK(missing.code == kExitUsage);
  CHECK(missing.err.find("qp=37") != std::string::npos);
}

TEST_CASE("flags override the config file") {
  TempDir dir;
  write(dir / "c.cfg", "# clip settings\nkind=clip\nframes=5\nwidth=40\nheight=32\n");
  REQUIRE(cli({"synth", "--config", (dir / "c.cfg").string(), "--frames", "2", "--out", (dir / "clip").string()}).code == 0);
  CHECK(load_frames(dir / "clip").size() == 2);
  CHECK(load_frames(dir / "clip")[0].width() == 40);
  const KeyValues echoed = read_key_value_file(dir / "clip/resolved_config.txt");
  CHECK(echoed.at("frames") == "2");
  CHECK(echoed.at("width") == "40");
  write(dir / "bad.cfg", "colour=blue\n");
  CHECK(cli({"synth", "--config", (dir / "bad.cfg").string(), "--out", (dir / "x").string()}).code == kExitUsage);
}

TEST_CASE("interp") {
  TempDir dir;
  save_pgm(Plane(24, 20, 77.0), dir / "flat.pgm");
  for (const char* method : {"dctif", "avg2"}) {
    REQUIRE(cli({"interp", (dir / "flat.pgm").string(), "--method", method, "--position", "d", "--out", (dir / method).string()}).code == 0);
    const Plane p = load_pgm(dir / method / "half_d.pgm");
    for (double v : p.samples()) CHECK(v == 77.0);
  }

  const Plane img = integer_plane(40, 30, 4);
  save_pgm(img, dir / "img.pgm");
  REQUIRE(cli({"interp", (dir / "img.pgm").string(), "--method", "dctif", "--position", "v", "--out", (dir / "v").string()}).code == 0);
  CHECK(slurp(dir / "v/half_v.pgm") == encode_pgm(interp_half_v(img)));

  Network net = zero_network(NetworkShape::standard(), Position::kH, 22);
  net.layers[2].bias[0] = 0.2;
  save_weights(net, dir / "bias.cnif");
  REQUIRE(cli({"interp", (dir / "img.pgm").string(), "--method", "cnn", "--weights", (dir / "bias.cnif").string(), "--out",
               (dir / "c").string()})
              .code == 0);
  const Plane constant = load_pgm(dir / "c/half_h.pgm");
  for (double v : constant.samples()) CHECK(v == 51.0);

  CHECK(cli({"interp", (dir / "img.pgm").string(), "--method", "cnn", "--out", (dir / "e").string()}).code == kExitUsage);
  // Weight file tagged for another position.
  CHECK(cli({"interp", (dir / "img.pgm").string(), "--method", "cnn", "--position", "v", "--weights", (dir / "bias.cnif").string(),
             "--out", (dir / "f").string()})
            .code == kExitUsage);
  write(dir / "junk.pgm", "P5\n4 4\n255\nxx");
  CHECK(cli({"interp", (dir / "junk.pgm").string(), "--out", (dir / "g").string()}).code == kExitUsage);
}

TEST_CASE("mc-eval") {
  TempDir dir;
  const Plane f = integer_plane(48, 32, 2);
  save_frames({f, f}, dir / "same");
  REQUIRE(cli({"mc-eval", (dir / "same").string(), "--out", (dir / "r0").string()}).code == 0);
  const std::string csv = slurp(dir / "r0/mc_report.csv");
  CHECK(csv.rfind("frame,sse,psnr_db,mean_sad,int_mv_count,half_mv_count,entropy_bps\n", 0) == 0);
  const CsvTable t = parse_csv(csv);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "0");
  CHECK(t.rows[1][0] == "all");

  ClipParams cp;
  cp.width = 64;
  cp.height = 48;
  cp.frames = 3;
  cp.motion_x = 1;
  cp.motion_y = 1;
  save_frames(synthetic_clip(cp), dir / "clip");
  REQUIRE(cli({"mc-eval", (dir / "clip").string(), "--method", "dctif", "--rd", "1", "--out", (dir / "rd").string()}).code == 0);
  REQUIRE(cli({"mc-eval", (dir / "clip").string(), "--method", "avg2", "--rd", "1", "--out", (dir / "ra").string()}).code == 0);
  const double sse_dctif = parse_real(parse_csv(slurp(dir / "rd/mc_report.csv")).rows.back()[1]);
  const double sse_avg2 = parse_real(parse_csv(slurp(dir / "ra/mc_report.csv")).rows.back()[1]);
  CHECK(sse_dctif <= sse_avg2);
  CHECK(parse_rd_csv(slurp(dir / "rd/rd_curve.csv")).size() == 4);

  REQUIRE(cli({"compare", "--anchor", (dir / "rd").string(), "--test", (dir / "ra").string(), "--out", (dir / "cmp").string()}).code == 0);
  const Comparison c = parse_comparison_csv(slurp(dir / "cmp/compare.csv"));
  REQUIRE(c.rows.size() == 2);
  CHECK(c.rows[0].sequence == "clip");
  CHECK(c.rows[1].sequence == "Overall");

  fs::create_directories(dir / "gap");
  save_pgm(f, dir / "gap/frame_0000.pgm");
  save_pgm(f, dir / "gap/frame_0002.pgm");
  CHECK(cli({"mc-eval", (dir / "gap").string(), "--out", (dir / "r1").string()}).code == kExitUsage);
  CHECK(cli({"mc-eval", (dir / "same").string(), "--block-size", "0", "--out", (dir / "r2").string()}).code == kExitUsage);
}

TEST_CASE("bd-rate prints two decimals") {
  TempDir dir;
  write(dir / "a.csv", rd_csv(1.0));
  write(dir / "up.csv", rd_csv(1.1));
  write(dir / "down.csv", rd_csv(0.9));
  write(dir / "bad.csv", "rate,psnr\n1,30\n");
  CHECK(cli({"bd-rate", (dir / "a.csv").string(), (dir / "a.csv").string()}).out == "0.00\n");
  CHECK(cli({"bd-rate", (dir / "a.csv").string(), (dir / "up.csv").string()}).out == "10.00\n");
  CHECK(cli({"bd-rate", (dir / "a.csv").string(), (dir / "down.csv").string()}).out == "-10.00\n");
  CHECK(cli({"bd-rate", (dir / "a.csv").string(), (dir / "bad.csv").string()}).code == kExitUsage);
  CHECK(cli({"bd-rate", (dir / "a.csv").string(), (dir / "missing.csv").string()}).code == kExitUsage);
}

TEST_CASE("executable exit codes") {
  TempDir dir;
  const std::string tool = HALFPEL_TOOL_PATH;
  auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  CHECK(status(tool + " synth --kind clip --frames 2 --width 32 --height 32 --out " + (dir / "c").string()) == 0);
  CHECK(status(tool + " mc-eval " + (dir / "c").string() + " --out " + (dir / "m").string()) == 0);
  CHECK(status(tool + " mc-eval " + (dir / "nowhere").string() + " --out " + (dir / "m2").string()) == 2);
  CHECK(status(tool + " --no-such-flag") == 2);
}
