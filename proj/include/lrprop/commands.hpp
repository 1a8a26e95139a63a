#pragma once

// Subcommands behind the `lrprop` executable. Each writes its artifacts under
// the configured output directory and returns a process exit code:
// 0 success, 1 usage or configuration error, 2 runtime or numerical error.

#include "lrprop/checks.hpp"
#include "lrprop/config.hpp"
#include "lrprop/metrics.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace lrprop::commands {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Embeds each whole video (clip positions 0..F-1) with its labels and progress.
std::vector<metrics::LabeledSequence> embed_videos(
    const encoder::EncoderParams& params, std::span<const synthdata::SyntheticVideo* const> videos);

/// Writes <dataset path>; creates the output directory.
int cmd_generate(const config::ExperimentConfig& config, std::ostream& log);

struct TrainFlags {
  bool resume = false;
  std::optional<std::uint64_t> stop_at_step;
};
/// Writes <checkpoint path> and <out_dir>/curve.csv.
int cmd_train(const config::ExperimentConfig& config, const TrainFlags& flags, std::ostream& log);

/// Writes <out_dir>/eval.json and <out_dir>/eval.csv. With `untrained` the
/// seed's random initialization is evaluated instead of the checkpoint.
int cmd_eval(const config::ExperimentConfig& config, bool untrained, std::ostream& log);
metrics::EvalReport evaluate_params(const config::ExperimentConfig& config,
                                    const synthdata::Dataset& dataset,
                                    const encoder::EncoderParams& params);

/// Writes <out_dir>/alignment.json and <out_dir>/alignment.csv for two
/// dataset videos (indices into the dataset's video list).
int cmd_align(const config::ExperimentConfig& config, std::size_t video_a, std::size_t video_b,
              bool untrained, std::ostream& log);

int cmd_check(const config::ExperimentConfig& config, checks::Fault fault, std::ostream& log);

/// Parses argv and dispatches; never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lrprop::commands
