#include "lrprop/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace lrprop::config {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_double(std::string_view key, std::string_view value) {
  const std::string text = trim(value);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == text.size() && !text.empty(),
          "config: '" + std::string(key) + "' expects a number, got '" + text + "'");
  return out;
}

long long parse_int(std::string_view key, std::string_view value) {
  const std::string text = trim(value);
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == text.size() && !text.empty(),
          "config: '" + std::string(key) + "' expects an integer, got '" + text + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  std::string text = trim(value);
  std::transform(text.begin(), text.end(), text.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (text == "true" || text == "1" || text == "yes" || text == "on") {
    return true;
  }
  if (text == "false" || text == "0" || text == "no" || text == "off") {
    return false;
  }
  throw InvalidInput("config: '" + std::string(key) + "' expects a boolean, got '" + text + "'");
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is{std::string(value)};
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  train.seed = seed;
  synth.input_dim = train.dims.input;
}

std::filesystem::path ExperimentConfig::dataset_path() const {
  return dataset.empty() ? out_dir / "dataset.jsonl" : dataset;
}

std::filesystem::path ExperimentConfig::checkpoint_path() const {
  return checkpoint.empty() ? out_dir / "checkpoint.bin" : checkpoint;
}

void ExperimentConfig::validate() const {
  train.validate();
  synth.validate();
  require(train.dims.input == synth.input_dim, "input_dim must agree between data and encoder");
  require(train.hp.clip_length <= synth.min_frames,
          "clip_length must not exceed min_frames so every video can be cropped");
  require(!fractions.empty(), "fractions must be nonempty");
  for (double f : fractions) {
    require(f > 0.0 && f <= 1.0, "fractions must lie in (0, 1]");
  }
  require(!ks.empty(), "ks must be nonempty");
  for (Index k : ks) {
    require(k >= 1, "ks entries must be positive");
  }
  require(!out_dir.empty(), "out_dir must be set");
}

const std::vector<SchemaEntry>& config_schema() {
  static const std::vector<SchemaEntry> schema{
      {"out_dir", "output directory for all artifacts"},
      {"dataset", "dataset path (default <out_dir>/dataset.jsonl)"},
      {"checkpoint", "checkpoint path (default <out_dir>/checkpoint.bin)"},
      {"seed", "seed for data generation, initialization, and sampling"},
      {"threads", "worker threads; 0 = hardware concurrency"},
      {"learning_rate", "Adam base learning rate"},
      {"weight_decay", "decoupled weight decay"},
      {"epochs", "passes over all training-video pairs"},
      {"cosine_decay", "cosine learning-rate decay to 0 over the run"},
      {"augment_strength", "feature-space augmentation strength"},
      {"class", "train on one class id only; -1 = all"},
      {"tau", "similarity softmax temperature"},
      {"sigma_sq", "Gaussian prior variance"},
      {"lambda1", "weight of the propagation loss"},
      {"lambda2", "weight of the soft-DTW loss"},
      {"gamma", "soft-DTW smoothing"},
      {"clip_length", "frames per sampled clip (T)"},
      {"sdtw_length_normalize", "divide the soft-DTW loss by the clip length"},
      {"input_dim", "per-frame feature dimension"},
      {"hidden_dim", "encoder hidden width"},
      {"embed_dim", "embedding dimension"},
      {"mix_weight", "temporal mixing weight in [0,1]"},
      {"positional_scale", "sinusoidal positional-encoding scale"},
      {"train_videos", "synthetic training videos"},
      {"test_videos", "synthetic test videos"},
      {"phases", "phases per synthetic video (P)"},
      {"latent_dim", "dimension of the synthetic latent trajectory"},
      {"nuisance_dim", "latent channels carrying per-video nuisance"},
      {"min_frames", "minimum synthetic video length"},
      {"max_frames", "maximum synthetic video length"},
      {"noise", "i.i.d. observation noise std"},
      {"distractor", "per-video nuisance amplitude"},
      {"warp_strength", "per-video time-warp strength"},
      {"fractions", "phase-classification label fractions, comma separated"},
      {"ks", "AP@K retrieval sizes, comma separated"},
  };
  return schema;
}

void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view value) {
  const std::string k = trim(key);
  auto as_index = [&] { return static_cast<Index>(parse_int(k, value)); };
  auto as_double = [&] { return parse_double(k, value); };
  if (k == "out_dir") {
    c.out_dir = trim(value);
  } else if (k == "dataset") {
    c.dataset = trim(value);
  } else if (k == "checkpoint") {
    c.checkpoint = trim(value);
  } else if (k == "seed") {
    const long long s = parse_int(k, value);
    require(s >= 0, "config: seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
    c.train.seed = c.seed;
  } else if (k == "threads") {
    c.train.threads = static_cast<int>(parse_int(k, value));
  } else if (k == "learning_rate") {
    c.train.learning_rate = as_double();
  } else if (k == "weight_decay") {
    c.train.weight_decay = as_double();
  } else if (k == "epochs") {
    c.train.epochs = static_cast<int>(parse_int(k, value));
  } else if (k == "cosine_decay") {
    c.train.cosine_decay = parse_bool(k, value);
  } else if (k == "augment_strength") {
    c.train.augment_strength = as_double();
  } else if (k == "class") {
    c.train.class_id = static_cast<int>(parse_int(k, value));
  } else if (k == "tau") {
    c.train.hp.tau = as_double();
  } else if (k == "sigma_sq") {
    c.train.hp.sigma_sq = as_double();
  } else if (k == "lambda1") {
    c.train.hp.lambda1 = as_double();
  } else if (k == "lambda2") {
    c.train.hp.lambda2 = as_double();
  } else if (k == "gamma") {
    c.train.hp.gamma = as_double();
  } else if (k == "clip_length") {
    c.train.hp.clip_length = as_index();
  } else if (k == "sdtw_length_normalize") {
    c.train.hp.sdtw_length_normalize = parse_bool(k, value);
  } else if (k == "input_dim") {
    c.train.dims.input = as_index();
    c.synth.input_dim = c.train.dims.input;
  } else if (k == "hidden_dim") {
    c.train.dims.hidden = as_index();
  } else if (k == "embed_dim") {
    c.train.dims.output = as_index();
  } else if (k == "mix_weight") {
    c.train.encoder_settings.mix_weight = as_double();
  } else if (k == "positional_scale") {
    c.train.encoder_settings.positional_scale = as_double();
  } else if (k == "train_videos") {
    c.synth.train_videos = as_index();
  } else if (k == "test_videos") {
    c.synth.test_videos = as_index();
  } else if (k == "phases") {
    c.synth.phases = static_cast<int>(parse_int(k, value));
  } else if (k == "latent_dim") {
    c.synth.latent_dim = as_index();
  } else if (k == "nuisance_dim") {
    c.synth.nuisance_dim = as_index();
  } else if (k == "min_frames") {
    c.synth.min_frames = as_index();
  } else if (k == "max_frames") {
    c.synth.max_frames = as_index();
  } else if (k == "noise") {
    c.synth.noise = as_double();
  } else if (k == "distractor") {
    c.synth.distractor = as_double();
  } else if (k == "warp_strength") {
    c.synth.warp_strength = as_double();
  } else if (k == "fractions") {
    c.fractions.clear();
    for (const std::string& item : split_list(value)) {
      c.fractions.push_back(parse_double(k, item));
    }
  } else if (k == "ks") {
    c.ks.clear();
    for (const std::string& item : split_list(value)) {
      c.ks.push_back(static_cast<Index>(parse_int(k, item)));
    }
  } else {
    throw InvalidInput("config: unknown key '" + k + "'");
  }
}

void load_config(ExperimentConfig& config, std::istream& in) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text.front() == '#') {
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput("config line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_setting(config, std::string_view(text).substr(0, eq),
                  std::string_view(text).substr(eq + 1));
  }
}

void load_config(ExperimentConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidInput("config file not found: " + path.string());
  }
  load_config(config, in);
}

void write_config(std::ostream& out, const ExperimentConfig& c) {
  auto list = [](const auto& values) {
    std::ostringstream os;
    for (std::size_t k = 0; k < values.size(); ++k) {
      os << (k ? "," : "") << values[k];
    }
    return os.str();
  };
  out << std::setprecision(17);
  out << "out_dir = " << c.out_dir.string() << '\n'
      << "dataset = " << c.dataset.string() << '\n'
      << "checkpoint = " << c.checkpoint.string() << '\n'
      << "seed = " << c.seed << '\n'
      << "threads = " << c.train.threads << '\n'
      << "learning_rate = " << c.train.learning_rate << '\n'
      << "weight_decay = " << c.train.weight_decay << '\n'
      << "epochs = " << c.train.epochs << '\n'
      << "cosine_decay = " << (c.train.cosine_decay ? "true" : "false") << '\n'
      << "augment_strength = " << c.train.augment_strength << '\n'
      << "class = " << c.train.class_id << '\n'
      << "tau = " << c.train.hp.tau << '\n'
      << "sigma_sq = " << c.train.hp.sigma_sq << '\n'
      << "lambda1 = " << c.train.hp.lambda1 << '\n'
      << "lambda2 = " << c.train.hp.lambda2 << '\n'
      << "gamma = " << c.train.hp.gamma << '\n'
      << "clip_length = " << c.train.hp.clip_length << '\n'
      << "sdtw_length_normalize = " << (c.train.hp.sdtw_length_normalize ? "true" : "false") << '\n'
      << "input_dim = " << c.train.dims.input << '\n'
      << "hidden_dim = " << c.train.dims.hidden << '\n'
      << "embed_dim = " << c.train.dims.output << '\n'
      << "mix_weight = " << c.train.encoder_settings.mix_weight << '\n'
      << "positional_scale = " << c.train.encoder_settings.positional_scale << '\n'
      << "train_videos = " << c.synth.train_videos << '\n'
      << "test_videos = " << c.synth.test_videos << '\n'
      << "phases = " << c.synth.phases << '\n'
      << "latent_dim = " << c.synth.latent_dim << '\n'
      << "nuisance_dim = " << c.synth.nuisance_dim << '\n'
      << "min_frames = " << c.synth.min_frames << '\n'
      << "max_frames = " << c.synth.max_frames << '\n'
      << "noise = " << c.synth.noise << '\n'
      << "distractor = " << c.synth.distractor << '\n'
      << "warp_strength = " << c.synth.warp_strength << '\n'
      << "fractions = " << list(c.fractions) << '\n'
      << "ks = " << list(c.ks) << '\n';
}

}  // namespace lrprop::config
