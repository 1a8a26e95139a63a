#include "lrprop/commands.hpp"

#include "lrprop/alignment.hpp"
#include "lrprop/checkpoint.hpp"
#include "lrprop/priors_losses.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace lrprop::commands {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const fs::path& dir) {
  if (!dir.empty()) {
    fs::create_directories(dir);
  }
}

std::ofstream open_output(const fs::path& path) {
  ensure_dir(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  return out;
}

encoder::EncoderParams model_for(const config::ExperimentConfig& config, bool untrained) {
  if (untrained) {
    return encoder::init_params(config.train.seed, config.train.dims,
                                config.train.encoder_settings);
  }
  const fs::path path = config.checkpoint_path();
  if (!fs::exists(path)) {
    throw std::runtime_error("checkpoint not found: " + path.string() +
                             " (run `lrprop train` first or pass --checkpoint)");
  }
  return checkpoint::load_checkpoint(path).params;
}

}  // namespace

std::vector<metrics::LabeledSequence> embed_videos(
    const encoder::EncoderParams& params, std::span<const synthdata::SyntheticVideo* const> videos) {
  std::vector<metrics::LabeledSequence> out;
  out.reserve(videos.size());
  for (const synthdata::SyntheticVideo* v : videos) {
    out.push_back({encoder::encode(v->features, params), v->phase_labels, v->progress});
  }
  return out;
}

int cmd_generate(const config::ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const synthdata::Dataset ds = synthdata::generate_dataset(config.synth, config.seed);
  const fs::path path = config.dataset_path();
  ensure_dir(path.parent_path());
  synthdata::write_dataset(path, ds);
  Index lo = ds.videos.front().frames();
  Index hi = lo;
  for (const auto& v : ds.videos) {
    lo = std::min(lo, v.frames());
    hi = std::max(hi, v.frames());
  }
  log << "wrote " << path.string() << ": " << ds.videos.size() << " videos ("
      << config.synth.train_videos << " train, " << config.synth.test_videos
      << " test), frames " << lo << ".." << hi << ", P=" << config.synth.phases
      << ", d_in=" << config.synth.input_dim << '\n';
  return kExitOk;
}

int cmd_train(const config::ExperimentConfig& config, const TrainFlags& flags, std::ostream& log) {
  config.validate();
  const synthdata::Dataset ds = synthdata::read_dataset(config.dataset_path());
  trainer::TrainOptions options;
  const fs::path ckpt = config.checkpoint_path();
  if (flags.resume) {
    if (!fs::exists(ckpt)) {
      throw std::runtime_error("--resume given but no checkpoint at " + ckpt.string());
    }
    options.resume = checkpoint::load_checkpoint(ckpt);
  }
  options.stop_at_step = flags.stop_at_step;

  // Resumed runs extend the curve already on disk.
  const fs::path curve_path = config.out_dir / "curve.csv";
  std::vector<std::string> previous_rows;
  if (flags.resume && fs::exists(curve_path)) {
    std::ifstream in(curve_path);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (!line.empty()) {
        previous_rows.push_back(line);
      }
    }
  }

  const auto started = std::chrono::steady_clock::now();
  trainer::TrainResult result;
  try {
    result = trainer::train(ds, config.train, options);
  } catch (const trainer::NonFiniteLoss& e) {
    const auto& r = e.report();
    log << "error: " << e.what() << " (loss_same=" << r.loss_same << " loss_prop=" << r.loss_prop
        << " loss_sdtw=" << r.loss_sdtw << " lr=" << r.learning_rate << ")\n";
    return kExitRuntime;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  checkpoint::save_checkpoint(ckpt, result.params, &result.optimizer);
  std::ofstream curve = open_output(curve_path);
  std::ostringstream fresh;
  trainer::write_curve_csv(fresh, result.curve);
  std::string body = fresh.str();
  const auto header_end = body.find('\n') + 1;
  curve << body.substr(0, header_end);
  for (const std::string& row : previous_rows) {
    curve << row << '\n';
  }
  curve << body.substr(header_end);

  log << "trained " << result.curve.size() << " steps (" << result.optimizer.step << "/"
      << result.total_steps << " total) in " << std::fixed << std::setprecision(1) << seconds
      << " s; checkpoint " << ckpt.string() << '\n'
      << std::defaultfloat;
  if (!result.curve.empty()) {
    log << "final combined loss " << result.curve.back().combined << '\n';
  }
  return kExitOk;
}

metrics::EvalReport evaluate_params(const config::ExperimentConfig& config,
                                    const synthdata::Dataset& dataset,
                                    const encoder::EncoderParams& params) {
  const auto train_videos = dataset.split(synthdata::Split::train, config.train.class_id);
  const auto test_videos = dataset.split(synthdata::Split::test, config.train.class_id);
  require(!train_videos.empty() && test_videos.size() >= 2,
          "evaluation needs training videos and at least two test videos");
  const auto train_emb = embed_videos(params, train_videos);
  const auto test_emb = embed_videos(params, test_videos);
  return metrics::evaluate(train_emb, test_emb, config.fractions, config.ks);
}

int cmd_eval(const config::ExperimentConfig& config, bool untrained, std::ostream& log) {
  config.validate();
  const encoder::EncoderParams params = model_for(config, untrained);
  const synthdata::Dataset ds = synthdata::read_dataset(config.dataset_path());
  const metrics::EvalReport report = evaluate_params(config, ds, params);
  std::ofstream json_out = open_output(config.out_dir / "eval.json");
  metrics::write_report_json(json_out, report);
  std::ofstream csv_out = open_output(config.out_dir / "eval.csv");
  metrics::write_report_csv(csv_out, report);
  metrics::write_report_csv(log, report);
  return kExitOk;
}

int cmd_align(const config::ExperimentConfig& config, std::size_t video_a, std::size_t video_b,
              bool untrained, std::ostream& log) {
  config.validate();
  const encoder::EncoderParams params = model_for(config, untrained);
  const synthdata::Dataset ds = synthdata::read_dataset(config.dataset_path());
  require(video_a < ds.videos.size() && video_b < ds.videos.size(),
          "align: video index out of range (dataset has " + std::to_string(ds.videos.size()) +
              " videos)");
  const synthdata::SyntheticVideo& va = ds.videos[video_a];
  const synthdata::SyntheticVideo& vb = ds.videos[video_b];
  const EmbeddingSequence za = encoder::encode(va.features, params);
  const EmbeddingSequence zb = encoder::encode(vb.features, params);
  const alignment::DistanceMatrix d = alignment::distance_matrix(za, zb);
  const alignment::AlignmentPath path = alignment::dtw_path(d);
  // Row f: similarity distribution of frame f of video A over the frames of video B.
  const losses::RowStochasticMatrix q = losses::similarity_distribution(zb, za, config.train.hp.tau);

  nlohmann::json steps = nlohmann::json::array();
  nlohmann::json distances = nlohmann::json::array();
  for (const alignment::Cell& c : path.steps) {
    steps.push_back({c.row, c.col});
    distances.push_back(d(c.row, c.col));
  }
  nlohmann::json entropy = nlohmann::json::array();
  for (Index f = 0; f < q.rows(); ++f) {
    double h = 0.0;
    for (Index i = 0; i < q.cols(); ++i) {
      if (q(f, i) > 0.0) {
        h -= q(f, i) * std::log(q(f, i));
      }
    }
    entropy.push_back(h);
  }
  const nlohmann::json doc{{"video_a", video_a},
                           {"video_b", video_b},
                           {"frames_a", za.rows()},
                           {"frames_b", zb.rows()},
                           {"cost", alignment::dtw_cost(d)},
                           {"path", steps},
                           {"step_distances", distances},
                           {"q_row_entropy", entropy}};
  std::ofstream json_out = open_output(config.out_dir / "alignment.json");
  json_out << doc.dump(2) << '\n';

  std::ofstream csv = open_output(config.out_dir / "alignment.csv");
  csv << "step,frame_a,frame_b,distance,label_a,label_b,q_entropy_a\n" << std::setprecision(17);
  for (std::size_t k = 0; k < path.steps.size(); ++k) {
    const alignment::Cell& c = path.steps[k];
    csv << k << ',' << c.row << ',' << c.col << ',' << d(c.row, c.col) << ','
        << va.phase_labels[static_cast<std::size_t>(c.row)] << ','
        << vb.phase_labels[static_cast<std::size_t>(c.col)] << ','
        << entropy[static_cast<std::size_t>(c.row)].get<double>() << '\n';
  }
  log << "aligned videos " << video_a << " and " << video_b << ": " << path.size()
      << " steps, cost " << alignment::dtw_cost(d) << '\n';
  return kExitOk;
}

int cmd_check(const config::ExperimentConfig& config, checks::Fault fault, std::ostream& log) {
  const auto results = checks::run_checks({config.seed, fault});
  return checks::print_report(log, results) ? kExitOk : kExitRuntime;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"lrprop: alignment-driven frame representation learning on synthetic sequences"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  std::optional<std::string> dataset;
  std::optional<std::string> checkpoint_file;
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value configuration file");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads (0 = all cores)");
    sub->add_option("--dataset", dataset, "dataset file");
    sub->add_option("--checkpoint", checkpoint_file, "checkpoint file");
    sub->add_option("--set", overrides, "extra key=value setting (repeatable)");
  };

  CLI::App* gen = app.add_subcommand("generate", "write a synthetic dataset");
  CLI::App* train = app.add_subcommand("train", "train the encoder");
  CLI::App* eval = app.add_subcommand("eval", "evaluate all metrics on the test split");
  CLI::App* align = app.add_subcommand("align", "align two videos and emit plot data");
  CLI::App* check = app.add_subcommand("check", "run the oracle and gradient-check battery");
  for (CLI::App* sub : {gen, train, eval, align, check}) {
    add_common(sub);
  }
  TrainFlags train_flags;
  std::optional<int> epochs;
  std::optional<std::uint64_t> stop_at;
  train->add_flag("--resume", train_flags.resume, "continue from the checkpoint");
  train->add_option("--epochs", epochs, "number of epochs");
  train->add_option("--stop-at-step", stop_at, "stop after this many total steps");
  bool untrained = false;
  eval->add_flag("--untrained", untrained, "evaluate the random initialization");
  std::size_t video_a = 0;
  std::size_t video_b = 1;
  align->add_option("--a", video_a, "first video index")->required();
  align->add_option("--b", video_b, "second video index")->required();
  align->add_flag("--untrained", untrained, "use the random initialization");
  std::string fault_name = "none";
  check->add_option("--inject-fault", fault_name, "deliberate defect (test fixture)")
      ->check(CLI::IsMember({"none", "softdtw-sign", "similarity-sign"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  config::ExperimentConfig config;
  try {
    if (!config_path.empty()) {
      config::load_config(config, fs::path(config_path));
    }
    for (const std::string& kv : overrides) {
      const auto eq = kv.find('=');
      require(eq != std::string::npos, "--set expects key=value, got '" + kv + "'");
      config::apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) {
      config::apply_setting(config, "seed", std::to_string(*seed));
    }
    if (out_dir) {
      config.out_dir = *out_dir;
    }
    if (threads) {
      config.train.threads = *threads;
    }
    if (dataset) {
      config.dataset = *dataset;
    }
    if (checkpoint_file) {
      config.checkpoint = *checkpoint_file;
    }
    if (epochs) {
      config.train.epochs = *epochs;
    }
    train_flags.stop_at_step = stop_at;
    config.validate();
  } catch (const std::exception& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      return cmd_generate(config, out);
    }
    if (train->parsed()) {
      return cmd_train(config, train_flags, out);
    }
    if (eval->parsed()) {
      return cmd_eval(config, untrained, out);
    }
    if (align->parsed()) {
      return cmd_align(config, video_a, video_b, untrained, out);
    }
    checks::Fault fault = checks::Fault::none;
    if (fault_name == "softdtw-sign") {
      fault = checks::Fault::flip_softdtw_gradient_sign;
    } else if (fault_name == "similarity-sign") {
      fault = checks::Fault::flip_similarity_gradient_sign;
    }
    return cmd_check(config, fault, out);
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace lrprop::commands
