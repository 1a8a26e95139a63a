#include "lrprop/alignment.hpp"
#include "lrprop/checks.hpp"
#include "lrprop/commands.hpp"
#include "lrprop/encoder.hpp"
#include "lrprop/metrics.hpp"
#include "lrprop/priors_losses.hpp"
#include "lrprop/softdtw.hpp"
#include "lrprop/synthdata.hpp"
#include "lrprop/trainer.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <iostream>
#include <sstream>

namespace py = pybind11;
using namespace lrprop;

namespace {

using AlignmentInput = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

losses::AlignmentMatrix to_alignment(const AlignmentInput& a) {
  return a.cast<std::uint8_t>();
}

py::list path_to_list(const alignment::AlignmentPath& p) {
  py::list out;
  for (const alignment::Cell& c : p.steps) {
    out.append(py::make_tuple(c.row, c.col));
  }
  return out;
}

py::dict video_to_dict(const synthdata::SyntheticVideo& v) {
  py::dict d;
  d["features"] = v.features;
  d["phase_labels"] = v.phase_labels;
  d["progress"] = v.progress;
  d["canonical_time"] = v.canonical_time;
  d["split"] = v.split == synthdata::Split::train ? "train" : "test";
  d["class_id"] = v.class_id;
  return d;
}

py::dict report_to_dict(const losses::LossReport& r) {
  py::dict d;
  d["loss_same"] = r.loss_same;
  d["loss_prop"] = r.loss_prop;
  d["loss_sdtw"] = r.loss_sdtw;
  d["combined"] = r.combined;
  d["pair_kind"] = std::string(losses::to_string(r.pair_kind));
  return d;
}

}  // namespace

PYBIND11_MODULE(_lrprop, m) {
  m.doc() = "Alignment-driven frame representation learning core";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<RefusalError>(m, "RefusalError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

  m.def("distance_matrix",
        [](const Matrix& z1, const Matrix& z2) { return alignment::distance_matrix(z1, z2); },
        py::arg("z1"), py::arg("z2"));
  m.def("dtw_cost", &alignment::dtw_cost, py::arg("d"));
  m.def("dtw_path", [](const Matrix& d) { return path_to_list(alignment::dtw_path(d)); },
        py::arg("d"), "Minimum-cost path as a list of (row, col) tuples.");
  m.def("count_paths", &alignment::count_paths, py::arg("n"), py::arg("m"));

  m.def("soft_min",
        [](const std::vector<double>& values, double gamma) {
          return softdtw::soft_min(values, gamma);
        },
        py::arg("values"), py::arg("gamma"));
  m.def("softdtw_cost",
        [](const Matrix& d, double gamma) {
          const softdtw::SoftDtwResult r = softdtw::softdtw_cost(d, gamma);
          return py::make_tuple(r.cost, r.tables.grad_d);
        },
        py::arg("d"), py::arg("gamma") = softdtw::kDefaultGamma,
        "Returns (cost, gradient with respect to d).");
  m.def("softdtw_grad_embeddings",
        [](const Matrix& z1, const Matrix& z2, const Matrix& grad_d) {
          const auto g = softdtw::softdtw_grad_wrt_embeddings(z1, z2, grad_d);
          return py::make_tuple(g.grad_z1, g.grad_z2);
        },
        py::arg("z1"), py::arg("z2"), py::arg("grad_d"));

  m.def("similarity_distribution", &losses::similarity_distribution, py::arg("z_a"),
        py::arg("z_b"), py::arg("tau") = 0.1);
  m.def("same_video_prior",
        [](const std::vector<Index>& s_a, const std::vector<Index>& s_b, double sigma_sq) {
          return losses::same_video_prior(s_a, s_b, sigma_sq);
        },
        py::arg("s_a"), py::arg("s_b"), py::arg("sigma_sq") = 10.0);
  m.def("propagation_prior",
        [](const std::vector<Index>& s_b, const AlignmentInput& a, double sigma_sq) {
          return losses::propagation_prior(s_b, to_alignment(a), sigma_sq);
        },
        py::arg("s_b"), py::arg("alignment"), py::arg("sigma_sq") = 10.0);
  m.def("kl_row",
        [](const std::vector<double>& p, const std::vector<double>& q) {
          return losses::kl_row(p, q);
        },
        py::arg("p"), py::arg("q"));

  py::class_<losses::HyperParams>(m, "HyperParams")
      .def(py::init<>())
      .def_readwrite("tau", &losses::HyperParams::tau)
      .def_readwrite("sigma_sq", &losses::HyperParams::sigma_sq)
      .def_readwrite("lambda1", &losses::HyperParams::lambda1)
      .def_readwrite("lambda2", &losses::HyperParams::lambda2)
      .def_readwrite("gamma", &losses::HyperParams::gamma)
      .def_readwrite("clip_length", &losses::HyperParams::clip_length)
      .def_readwrite("sdtw_length_normalize", &losses::HyperParams::sdtw_length_normalize);

  m.def("pair_loss",
        [](const std::vector<Index>& s_a, const std::vector<Index>& s_b, const Matrix& z_a,
           const Matrix& z_b, const losses::HyperParams& hp, bool same_video) {
          const losses::PairLoss r = losses::pair_loss(s_a, s_b, z_a, z_b, hp, same_video);
          return py::make_tuple(report_to_dict(r.report), r.grad_a, r.grad_b);
        },
        py::arg("s_a"), py::arg("s_b"), py::arg("z_a"), py::arg("z_b"),
        py::arg("hp") = losses::HyperParams{}, py::arg("same_video") = false,
        "Returns (report dict, grad_a, grad_b).");

  py::class_<encoder::EncoderDims>(m, "EncoderDims")
      .def(py::init<>())
      .def(py::init([](Index input, Index hidden, Index output) {
             return encoder::EncoderDims{input, hidden, output};
           }),
           py::arg("input"), py::arg("hidden"), py::arg("output"))
      .def_readwrite("input", &encoder::EncoderDims::input)
      .def_readwrite("hidden", &encoder::EncoderDims::hidden)
      .def_readwrite("output", &encoder::EncoderDims::output);
  py::class_<encoder::EncoderSettings>(m, "EncoderSettings")
      .def(py::init<>())
      .def_readwrite("mix_weight", &encoder::EncoderSettings::mix_weight)
      .def_readwrite("positional_scale", &encoder::EncoderSettings::positional_scale);
  py::class_<encoder::EncoderParams>(m, "EncoderParams")
      .def_readonly("dims", &encoder::EncoderParams::dims)
      .def_readonly("mix_weight", &encoder::EncoderParams::mix_weight)
      .def_readonly("positional_scale", &encoder::EncoderParams::positional_scale)
      .def("size", &encoder::EncoderParams::size)
      .def("flatten", &encoder::EncoderParams::flatten)
      .def("assign", &encoder::EncoderParams::assign, py::arg("flat"));

  m.def("init_params", &encoder::init_params, py::arg("seed"),
        py::arg("dims") = encoder::EncoderDims{}, py::arg("settings") = encoder::EncoderSettings{});
  m.def("encode", &encoder::encode, py::arg("features"), py::arg("params"));
  m.def("encode_backward", &encoder::encode_backward, py::arg("features"), py::arg("params"),
        py::arg("upstream"));

  py::class_<synthdata::SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("train_videos", &synthdata::SynthConfig::train_videos)
      .def_readwrite("test_videos", &synthdata::SynthConfig::test_videos)
      .def_readwrite("phases", &synthdata::SynthConfig::phases)
      .def_readwrite("input_dim", &synthdata::SynthConfig::input_dim)
      .def_readwrite("latent_dim", &synthdata::SynthConfig::latent_dim)
      .def_readwrite("nuisance_dim", &synthdata::SynthConfig::nuisance_dim)
      .def_readwrite("min_frames", &synthdata::SynthConfig::min_frames)
      .def_readwrite("max_frames", &synthdata::SynthConfig::max_frames)
      .def_readwrite("noise", &synthdata::SynthConfig::noise)
      .def_readwrite("distractor", &synthdata::SynthConfig::distractor)
      .def_readwrite("warp_strength", &synthdata::SynthConfig::warp_strength);
  m.def("generate_dataset",
        [](const synthdata::SynthConfig& config, std::uint64_t seed) {
          py::list out;
          for (const auto& v : synthdata::generate_dataset(config, seed).videos) {
            out.append(video_to_dict(v));
          }
          return out;
        },
        py::arg("config") = synthdata::SynthConfig{}, py::arg("seed") = 7,
        "List of per-video dicts with features, labels, progress and split.");

  py::class_<trainer::TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &trainer::TrainConfig::learning_rate)
      .def_readwrite("weight_decay", &trainer::TrainConfig::weight_decay)
      .def_readwrite("epochs", &trainer::TrainConfig::epochs)
      .def_readwrite("seed", &trainer::TrainConfig::seed)
      .def_readwrite("hp", &trainer::TrainConfig::hp)
      .def_readwrite("dims", &trainer::TrainConfig::dims)
      .def_readwrite("encoder_settings", &trainer::TrainConfig::encoder_settings)
      .def_readwrite("cosine_decay", &trainer::TrainConfig::cosine_decay)
      .def_readwrite("augment_strength", &trainer::TrainConfig::augment_strength)
      .def_readwrite("threads", &trainer::TrainConfig::threads);
  m.def("train",
        [](const synthdata::SynthConfig& data, std::uint64_t data_seed,
           const trainer::TrainConfig& config) {
          const synthdata::Dataset ds = synthdata::generate_dataset(data, data_seed);
          trainer::TrainResult r;
          {
            py::gil_scoped_release release;
            r = trainer::train(ds, config);
          }
          py::list curve;
          for (const trainer::StepReport& s : r.curve) {
            py::dict d;
            d["step"] = s.step;
            d["loss_same"] = s.loss_same;
            d["loss_prop"] = s.loss_prop;
            d["loss_sdtw"] = s.loss_sdtw;
            d["combined"] = s.combined;
            d["lr"] = s.learning_rate;
            curve.append(d);
          }
          return py::make_tuple(r.params, curve);
        },
        py::arg("data"), py::arg("data_seed"), py::arg("config"),
        "Generates the dataset, trains, and returns (params, curve).");

  m.def("kendall_tau", &metrics::kendall_tau, py::arg("emb_a"), py::arg("emb_b"));
  m.def("dtw_accuracy",
        [](const Matrix& a, const std::vector<int>& la, const Matrix& b,
           const std::vector<int>& lb) { return metrics::dtw_accuracy(a, la, b, lb); },
        py::arg("emb_a"), py::arg("labels_a"), py::arg("emb_b"), py::arg("labels_b"));

  m.def("run_checks",
        [](std::uint64_t seed) {
          py::list out;
          for (const checks::CheckResult& r : checks::run_checks({seed, checks::Fault::none})) {
            py::dict d;
            d["name"] = r.name;
            d["tolerance"] = r.tolerance;
            d["worst_error"] = r.worst_error;
            d["cases"] = r.cases;
            d["passed"] = r.passed;
            out.append(d);
          }
          return out;
        },
        py::arg("seed") = 7);
  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::vector<const char*> argv{"lrprop"};
          for (const std::string& a : args) {
            argv.push_back(a.c_str());
          }
          std::ostringstream out;
          std::ostringstream err;
          const int code = commands::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line interface; returns (exit code, stdout, stderr).");
}
