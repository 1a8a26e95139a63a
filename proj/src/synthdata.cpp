#include "lrprop/synthdata.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace lrprop::synthdata {

using nlohmann::json;

void SynthConfig::validate() const {
  require(phases >= 2, "phases P must be at least 2");
  require(train_videos + test_videos >= 2, "dataset needs at least 2 videos");
  require(train_videos >= 0 && test_videos >= 0, "video counts must be nonnegative");
  require(input_dim > 0 && latent_dim > 0 && nuisance_dim >= 0, "dimensions must be positive");
  require(min_frames >= 2 && max_frames >= min_frames, "frame range must satisfy 2 <= min <= max");
  require(noise >= 0.0 && distractor >= 0.0 && warp_strength >= 0.0,
          "noise, distractor, and warp strength must be nonnegative");
}

std::vector<const SyntheticVideo*> Dataset::split(Split which, int class_id) const {
  std::vector<const SyntheticVideo*> out;
  for (const SyntheticVideo& v : videos) {
    if (v.split == which && (class_id < 0 || v.class_id == class_id)) {
      out.push_back(&v);
    }
  }
  return out;
}

CanonicalTrajectory::CanonicalTrajectory(int phases, Index latent_dim, std::mt19937_64& rng)
    : waypoints_(phases + 1, latent_dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index k = 0; k < waypoints_.size(); ++k) {
    waypoints_.data()[k] = normal(rng);
  }
}

RowVector CanonicalTrajectory::operator()(double u) const {
  const Index segments = waypoints_.rows() - 1;
  const double x = std::clamp(u, 0.0, 1.0) * static_cast<double>(segments);
  const Index k = std::min<Index>(static_cast<Index>(std::floor(x)), segments - 1);
  const double s = x - static_cast<double>(k);
  auto point = [&](Index idx) -> RowVector {
    if (idx < 0) {
      return 2.0 * waypoints_.row(0) - waypoints_.row(1);
    }
    if (idx > segments) {
      return 2.0 * waypoints_.row(segments) - waypoints_.row(segments - 1);
    }
    return waypoints_.row(idx);
  };
  const RowVector p0 = point(k - 1);
  const RowVector p1 = point(k);
  const RowVector p2 = point(k + 1);
  const RowVector p3 = point(k + 2);
  // Uniform Catmull-Rom segment between p1 and p2.
  const double s2 = s * s;
  const double s3 = s2 * s;
  return 0.5 * ((2.0 * p1) + (-p0 + p2) * s + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * s2 +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * s3);
}

std::vector<double> random_time_warp(Index frames, double warp_strength, std::mt19937_64& rng) {
  require(frames >= 2, "time warp needs at least 2 frames");
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  const double a1 = 0.5 + 0.5 * uniform(rng);
  const double a2 = 0.5 * uniform(rng);
  const double phi1 = two_pi * uniform(rng);
  const double phi2 = two_pi * uniform(rng);
  std::vector<double> t(static_cast<std::size_t>(frames), 0.0);
  for (Index f = 1; f < frames; ++f) {
    const double u = static_cast<double>(f) / static_cast<double>(frames - 1);
    const double log_speed = a1 * std::sin(two_pi * u + phi1) + a2 * std::sin(2.0 * two_pi * u + phi2) +
                             0.2 * normal(rng);
    t[static_cast<std::size_t>(f)] =
        t[static_cast<std::size_t>(f - 1)] + std::exp(warp_strength * log_speed);
  }
  const double total = t.back();
  for (double& v : t) {
    v /= total;
  }
  t.back() = 1.0;
  return t;
}

int phase_of(double progress, int phases) {
  const int label = static_cast<int>(std::floor(progress * static_cast<double>(phases)));
  return std::clamp(label, 0, phases - 1);
}

std::vector<SyntheticVideo> generate_videos(Index count, const SynthConfig& config,
                                            std::mt19937_64& rng) {
  config.validate();
  const CanonicalTrajectory trajectory(config.phases, config.latent_dim, rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const Index observed_dim = config.latent_dim + config.nuisance_dim;
  Matrix observe(config.input_dim, observed_dim);
  for (Index k = 0; k < observe.size(); ++k) {
    observe.data()[k] = normal(rng) / std::sqrt(static_cast<double>(observed_dim));
  }
  std::uniform_int_distribution<Index> frame_count(config.min_frames, config.max_frames);
  const double two_pi = 2.0 * std::numbers::pi;

  std::vector<SyntheticVideo> videos;
  videos.reserve(static_cast<std::size_t>(count));
  for (Index n = 0; n < count; ++n) {
    SyntheticVideo v;
    const Index frames = frame_count(rng);
    v.canonical_time = random_time_warp(frames, config.warp_strength, rng);
    v.progress = v.canonical_time;

    // Per-video nuisance: constant offset plus a slow sinusoid per channel,
    // driven by the video's own clock rather than canonical time.
    const Index nd = config.nuisance_dim;
    RowVector offset(nd);
    RowVector amplitude(nd);
    RowVector frequency(nd);
    RowVector phase(nd);
    for (Index c = 0; c < nd; ++c) {
      offset(c) = config.distractor * normal(rng);
      amplitude(c) = config.distractor * (0.5 + uniform(rng));
      frequency(c) = 0.5 + 1.5 * uniform(rng);
      phase(c) = two_pi * uniform(rng);
    }

    v.features.resize(frames, config.input_dim);
    v.phase_labels.resize(static_cast<std::size_t>(frames));
    for (Index f = 0; f < frames; ++f) {
      const auto uf = static_cast<std::size_t>(f);
      const double raw_time = static_cast<double>(f) / static_cast<double>(frames - 1);
      RowVector latent(observed_dim);
      latent.head(config.latent_dim) = trajectory(v.canonical_time[uf]);
      for (Index c = 0; c < nd; ++c) {
        latent(config.latent_dim + c) =
            offset(c) + amplitude(c) * std::sin(two_pi * frequency(c) * raw_time + phase(c));
      }
      RowVector x = latent * observe.transpose();
      for (Index c = 0; c < config.input_dim; ++c) {
        x(c) += config.noise * normal(rng);
      }
      v.features.row(f) = x;
      v.phase_labels[uf] = phase_of(v.progress[uf], config.phases);
    }
    videos.push_back(std::move(v));
  }
  return videos;
}

Dataset generate_dataset(const SynthConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  Dataset ds;
  ds.seed = seed;
  ds.config = config;
  ds.videos = generate_videos(config.train_videos + config.test_videos, config, rng);
  for (std::size_t k = 0; k < ds.videos.size(); ++k) {
    ds.videos[k].split =
        static_cast<Index>(k) < config.train_videos ? Split::train : Split::test;
  }
  return ds;
}

alignment::AlignmentPath ground_truth_alignment(const SyntheticVideo& v1,
                                                const SyntheticVideo& v2) {
  require(v1.frames() > 0 && v2.frames() > 0, "ground_truth_alignment: empty video");
  alignment::DistanceMatrix d(v1.frames(), v2.frames());
  for (Index i = 0; i < d.rows(); ++i) {
    for (Index j = 0; j < d.cols(); ++j) {
      d(i, j) = std::abs(v1.canonical_time[static_cast<std::size_t>(i)] -
                         v2.canonical_time[static_cast<std::size_t>(j)]);
    }
  }
  return alignment::dtw_path(d);
}

namespace {

json config_to_json(const SynthConfig& c) {
  return json{{"train_videos", c.train_videos}, {"test_videos", c.test_videos},
              {"phases", c.phases},             {"input_dim", c.input_dim},
              {"latent_dim", c.latent_dim},     {"nuisance_dim", c.nuisance_dim},
              {"min_frames", c.min_frames},
              {"max_frames", c.max_frames},     {"noise", c.noise},
              {"distractor", c.distractor},     {"warp_strength", c.warp_strength}};
}

SynthConfig config_from_json(const json& j) {
  SynthConfig c;
  c.train_videos = j.at("train_videos").get<Index>();
  c.test_videos = j.at("test_videos").get<Index>();
  c.phases = j.at("phases").get<int>();
  c.input_dim = j.at("input_dim").get<Index>();
  c.latent_dim = j.at("latent_dim").get<Index>();
  c.nuisance_dim = j.at("nuisance_dim").get<Index>();
  c.min_frames = j.at("min_frames").get<Index>();
  c.max_frames = j.at("max_frames").get<Index>();
  c.noise = j.at("noise").get<double>();
  c.distractor = j.at("distractor").get<double>();
  c.warp_strength = j.at("warp_strength").get<double>();
  return c;
}

json video_to_json(const SyntheticVideo& v) {
  std::vector<double> features(v.features.data(), v.features.data() + v.features.size());
  return json{{"split", v.split == Split::train ? "train" : "test"},
              {"class", v.class_id},
              {"frames", v.frames()},
              {"dim", v.features.cols()},
              {"features", features},
              {"phase_labels", v.phase_labels},
              {"progress", v.progress},
              {"canonical_time", v.canonical_time}};
}

SyntheticVideo video_from_json(const json& j) {
  SyntheticVideo v;
  const std::string split = j.at("split").get<std::string>();
  if (split != "train" && split != "test") {
    throw FormatError("dataset: unknown split '" + split + "'");
  }
  v.split = split == "train" ? Split::train : Split::test;
  v.class_id = j.value("class", 0);
  const auto frames = j.at("frames").get<Index>();
  const auto dim = j.at("dim").get<Index>();
  const auto features = j.at("features").get<std::vector<double>>();
  v.phase_labels = j.at("phase_labels").get<std::vector<int>>();
  v.progress = j.at("progress").get<std::vector<double>>();
  v.canonical_time = j.at("canonical_time").get<std::vector<double>>();
  const auto uf = static_cast<std::size_t>(frames);
  if (frames <= 0 || dim <= 0 || features.size() != uf * static_cast<std::size_t>(dim) ||
      v.phase_labels.size() != uf || v.progress.size() != uf || v.canonical_time.size() != uf) {
    throw FormatError("dataset: video record has inconsistent sizes");
  }
  v.features = Eigen::Map<const Matrix>(features.data(), frames, dim);
  return v;
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& dataset) {
  const json header{{"format", "lrprop-synthetic"},
                    {"version", kDatasetFormatVersion},
                    {"seed", dataset.seed},
                    {"videos", dataset.videos.size()},
                    {"config", config_to_json(dataset.config)}};
  out << header.dump() << '\n';
  for (const SyntheticVideo& v : dataset.videos) {
    out << video_to_json(v).dump() << '\n';
  }
}

void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  write_dataset(out, dataset);
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError("dataset: missing header line");
  }
  Dataset ds;
  try {
    const json header = json::parse(line);
    if (header.value("format", "") != "lrprop-synthetic") {
      throw FormatError("dataset: not an lrprop synthetic dataset");
    }
    const int version = header.at("version").get<int>();
    if (version != kDatasetFormatVersion) {
      throw VersionError("dataset: unsupported version " + std::to_string(version));
    }
    ds.seed = header.at("seed").get<std::uint64_t>();
    ds.config = config_from_json(header.at("config"));
    const auto expected = header.at("videos").get<std::size_t>();
    while (std::getline(in, line)) {
      if (line.empty()) {
        continue;
      }
      ds.videos.push_back(video_from_json(json::parse(line)));
    }
    if (ds.videos.size() != expected) {
      throw FormatError("dataset: header announces " + std::to_string(expected) +
                        " videos, found " + std::to_string(ds.videos.size()));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("dataset: ") + e.what());
  }
  return ds;
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open dataset " + path.string());
  }
  return read_dataset(in);
}

}  // namespace lrprop::synthdata
