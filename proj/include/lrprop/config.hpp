#pragma once

// Experiment configuration: a line-oriented `key = value` file. Blank lines
// and lines starting with '#' are ignored; list values are comma separated.
// See config_schema() for the accepted keys.

#include "lrprop/synthdata.hpp"
#include "lrprop/trainer.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace lrprop::config {

struct ExperimentConfig {
  std::filesystem::path out_dir = "lrprop-out";
  std::filesystem::path dataset;     ///< empty: <out_dir>/dataset.jsonl
  std::filesystem::path checkpoint;  ///< empty: <out_dir>/checkpoint.bin
  std::uint64_t seed = 7;
  trainer::TrainConfig train;
  synthdata::SynthConfig synth;
  std::vector<double> fractions{0.1, 0.25, 0.5, 1.0};
  std::vector<Index> ks{5, 10, 15};

  ExperimentConfig();

  [[nodiscard]] std::filesystem::path dataset_path() const;
  [[nodiscard]] std::filesystem::path checkpoint_path() const;

  /// Throws InvalidInput on the first invariant violation.
  void validate() const;
};

/// Applies one setting; throws InvalidInput for unknown keys or bad values.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Reads `key = value` lines on top of the current values.
void load_config(ExperimentConfig& config, std::istream& in);
void load_config(ExperimentConfig& config, const std::filesystem::path& path);

/// Writes every key with its current value, in schema order.
void write_config(std::ostream& out, const ExperimentConfig& config);

struct SchemaEntry {
  std::string_view key;
  std::string_view description;
};
const std::vector<SchemaEntry>& config_schema();

}  // namespace lrprop::config
