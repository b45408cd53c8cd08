#include <pybind11/iostream.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <iostream>

#include "halfpel/cli.hpp"
#include "halfpel/cnn.hpp"
#include "halfpel/datagen.hpp"
#include "halfpel/eval_report.hpp"
#include "halfpel/fixed_filters.hpp"
#include "halfpel/image_core.hpp"
#include "halfpel/mc_sim.hpp"
#include "halfpel/synth.hpp"

namespace py = pybind11;
using namespace halfpel;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Plane to_plane(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array (height, width)");
  const auto h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  std::vector<double> samples(a.data(), a.data() + a.size());
  return Plane(w, h, std::move(samples));
}

Array to_array(const Plane& p) {
  Array a({p.height(), p.width()});
  std::copy(p.samples().begin(), p.samples().end(), a.mutable_data());
  return a;
}

std::vector<Plane> to_planes(const std::vector<Array>& arrays) {
  std::vector<Plane> out;
  out.reserve(arrays.size());
  for (const auto& a : arrays) out.push_back(to_plane(a));
  return out;
}

InterpolatorSpec make_spec(const std::string& method, const std::optional<std::filesystem::path>& weights_dir) {
  switch (parse_interpolator(method)) {
    case InterpolatorKind::kDctif:
      return InterpolatorSpec::dctif();
    case InterpolatorKind::kAvg2:
      return InterpolatorSpec::avg2();
    case InterpolatorKind::kCnn:
      if (!weights_dir) throw ConfigError("method cnn needs weights_dir");
      return load_cnn_spec(*weights_dir);
    case InterpolatorKind::kSrAnchor:
      if (!weights_dir) throw ConfigError("method sr needs weights_dir");
      return InterpolatorSpec::sr_anchor(load_weights(*weights_dir / cnn_weight_file_name(Position::kSr, 0)));
  }
  throw ConfigError("unknown method");
}

py::dict stats_dict(const FrameStats& f) {
  py::dict d;
  d["frame"] = f.frame;
  d["sse"] = f.sse;
  d["psnr_db"] = f.psnr_db;
  d["mean_sad"] = f.mean_sad;
  d["int_mv_count"] = f.int_mv_count;
  d["half_mv_count"] = f.half_mv_count;
  d["entropy_bps"] = f.entropy_bps;
  return d;
}

}  // namespace

PYBIND11_MODULE(_halfpel, m) {
  m.doc() = "Half-pel interpolation: fixed filters, CNN interpolators and a motion-compensation harness";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<PgmParseError>(m, "PgmParseError", PyExc_ValueError);

  // image_core
  m.def("load_pgm", [](const std::filesystem::path& p) { return to_array(load_pgm(p)); }, py::arg("path"));
  m.def("save_pgm", [](const Array& a, const std::filesystem::path& p) { save_pgm(to_plane(a), p); }, py::arg("image"), py::arg("path"));
  m.def(
      "blur", [](const Array& a, double sigma, int length) { return to_array(blur(to_plane(a), BlurKernel::gaussian(sigma, length))); },
      py::arg("image"), py::arg("sigma") = 0.8, py::arg("length") = 5);
  m.def(
      "extract_phases",
      [](const Array& a) {
        const PhaseSet p = extract_phases(to_plane(a));
        return py::make_tuple(to_array(p.a), to_array(p.b), to_array(p.h), to_array(p.j));
      },
      py::arg("image"), "Returns (a, b, h, j): phases (0,0), (1,0), (0,1), (1,1).");
  m.def(
      "interleave_phases",
      [](const Array& a, const Array& b, const Array& h, const Array& j) {
        return to_array(interleave_phases(PhaseSet{to_plane(a), to_plane(b), to_plane(h), to_plane(j)}));
      },
      py::arg("a"), py::arg("b"), py::arg("h"), py::arg("j"));
  m.def(
      "degrade_intra_surrogate", [](const Array& a, int qp) { return to_array(degrade_intra_surrogate(to_plane(a), qp)); },
      py::arg("image"), py::arg("qp"));

  // fixed_filters
  m.def(
      "interp_half",
      [](const Array& a, const std::string& position, const std::string& method) {
        const Position pos = parse_position(position);
        const Plane p = to_plane(a);
        if (method == "dctif") return to_array(interp_half(p, pos));
        if (method == "avg2") return to_array(average2_half(p, pos));
        throw ConfigError("interp_half: method must be dctif or avg2");
      },
      py::arg("image"), py::arg("position"), py::arg("method") = "dctif");

  // cnn_engine
  py::class_<Network>(m, "Network")
      .def_property_readonly("position", [](const Network& n) { return std::string(to_string(n.position)); })
      .def_readonly("qp", &Network::qp)
      .def("parameter_count", &Network::parameter_count)
      .def("__eq__", [](const Network& a, const Network& b) { return a == b; });
  m.def(
      "init_network",
      [](const std::string& position, int qp, double init_std, std::uint64_t seed) {
        return init_network(NetworkShape::standard(), parse_position(position), qp, init_std, seed);
      },
      py::arg("position"), py::arg("qp"), py::arg("init_std") = 1e-3, py::arg("seed") = 1);
  m.def("load_weights", [](const std::filesystem::path& p) { return load_weights(p); }, py::arg("path"));
  m.def("save_weights", &save_weights, py::arg("network"), py::arg("path"));
  m.def(
      "apply_network", [](const Network& n, const Array& a, unsigned threads) { return to_array(apply_network(n, to_plane(a), threads)); },
      py::arg("network"), py::arg("image"), py::arg("threads") = 1);
  m.def(
      "train",
      [](const std::vector<std::pair<Array, Array>>& pairs, const std::string& position, int qp, double lr_front, double lr_last,
         double momentum, int batch_size, int epochs, std::uint64_t seed, double init_std, unsigned threads) {
        std::vector<TrainingPair> set;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
          set.push_back({to_plane(pairs[i].first), to_plane(pairs[i].second), parse_position(position), qp, std::to_string(i)});
        }
        Hyperparams hp;
        hp.lr_front = lr_front;
        hp.lr_last = lr_last;
        hp.momentum = momentum;
        hp.batch_size = batch_size;
        hp.epochs = epochs;
        hp.seed = seed;
        hp.init_std = init_std;
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(set, {}, hp, {NetworkShape::standard(), threads, false});
        }
        return py::make_tuple(r.net, r.curve.train);
      },
      py::arg("pairs"), py::arg("position"), py::arg("qp") = 22, py::arg("lr_front") = 1e-4, py::arg("lr_last") = 1e-5,
      py::arg("momentum") = 0.9, py::arg("batch_size") = 64, py::arg("epochs") = 100, py::arg("seed") = 1, py::arg("init_std") = 1e-3,
      py::arg("threads") = 1,
      "Trains on (input, label) arrays on the 0..255 scale; returns (network, per-epoch training loss).");

  // datagen
  m.def("select_model_qp", &select_model_qp, py::arg("slice_qp"));
  m.def(
      "build_dataset",
      [](const std::filesystem::path& manifest) {
        const BuiltDataset data = build_dataset(read_manifest(manifest));
        py::dict out;
        for (const auto& s : data.sets) {
          py::list pairs;
          for (const auto& p : s.pairs) pairs.append(py::make_tuple(to_array(p.input), to_array(p.label), p.source_id));
          out[py::make_tuple(std::string(to_string(s.position)), s.qp)] = pairs;
        }
        return out;
      },
      py::arg("manifest"), "Maps (position, qp) to a list of (input, label, source_id).");

  // mc_sim
  m.def(
      "simulate_sequence",
      [](const std::vector<Array>& frames, const std::string& method, std::optional<std::filesystem::path> weights_dir, int block_size,
         int search_range, int slice_qp, std::optional<int> reference_qp) {
        McParams params;
        params.block_size = block_size;
        params.search_range = search_range;
        params.slice_qp = slice_qp;
        params.reference_qp = reference_qp;
        const McReport r = simulate_sequence(to_planes(frames), make_spec(method, weights_dir), params);
        py::dict d;
        py::list per_frame;
        for (const auto& f : r.frames) per_frame.append(stats_dict(f));
        d["frames"] = per_frame;
        d["total"] = stats_dict(r.total);
        d["samples"] = r.samples;
        return d;
      },
      py::arg("frames"), py::arg("method") = "dctif", py::arg("weights_dir") = py::none(), py::arg("block_size") = 16,
      py::arg("search_range") = 8, py::arg("slice_qp") = 22, py::arg("reference_qp") = py::none());
  m.def(
      "synthetic_clip",
      [](int width, int height, int frames, int motion_x, int motion_y, double noise_sigma, std::uint64_t seed) {
        ClipParams cp{width, height, frames, motion_x, motion_y, noise_sigma, seed};
        py::list out;
        for (const auto& f : synthetic_clip(cp)) out.append(to_array(f));
        return out;
      },
      py::arg("width") = 128, py::arg("height") = 96, py::arg("frames") = 4, py::arg("motion_x") = 1, py::arg("motion_y") = 0,
      py::arg("noise_sigma") = 0.0, py::arg("seed") = 1);
  m.def(
      "synthetic_image", [](int w, int h, std::uint64_t seed) { return to_array(synthetic_image(w, h, seed)); }, py::arg("width"),
      py::arg("height"), py::arg("seed") = 1);

  // eval_report
  m.def("mse", [](const Array& a, const Array& b) { return mse(to_plane(a), to_plane(b)); });
  m.def("psnr", [](const Array& a, const Array& b) { return psnr(to_plane(a), to_plane(b)); });
  m.def(
      "bd_rate",
      [](const std::vector<std::pair<double, double>>& anchor, const std::vector<std::pair<double, double>>& test) {
        auto curve = [](const std::vector<std::pair<double, double>>& pts) {
          std::vector<RDPoint> out;
          for (const auto& [rate, psnr] : pts) out.push_back({rate, psnr});
          return RDCurve(out);
        };
        return bd_rate(curve(anchor), curve(test));
      },
      py::arg("anchor"), py::arg("test"), "Points are (rate, psnr) pairs; result in percent.");

  // cli
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        py::scoped_ostream_redirect out(std::cout, py::module_::import("sys").attr("stdout"));
        py::scoped_ostream_redirect err(std::cerr, py::module_::import("sys").attr("stderr"));
        return run_cli(args, std::cout, std::cerr);
      },
      py::arg("args"), "Runs the command-line tool in-process and returns its exit code.");
}
