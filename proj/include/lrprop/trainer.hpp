#pragma once

#include "lrprop/checkpoint.hpp"
#include "lrprop/encoder.hpp"
#include "lrprop/priors_losses.hpp"
#include "lrprop/sampling.hpp"
#include "lrprop/synthdata.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace lrprop::trainer {

using checkpoint::OptimizerState;

struct TrainConfig {
  double learning_rate = 1e-4;
  double weight_decay = 1e-5;
  int epochs = 30;
  std::uint64_t seed = 7;
  losses::HyperParams hp;
  encoder::EncoderDims dims;
  encoder::EncoderSettings encoder_settings;
  bool cosine_decay = true;
  double augment_strength = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Drop the cross-video pairs from every batch.
  bool same_video_only = false;
  /// Restrict training to one class; -1 uses every training video.
  int class_id = -1;
  /// Worker threads for per-pair work; 0 picks the hardware concurrency.
  int threads = 0;

  void validate() const;
};

struct StepReport {
  std::uint64_t step = 0;
  double loss_same = 0.0;  ///< mean over same-video pairs
  double loss_prop = 0.0;  ///< mean over cross-video pairs
  double loss_sdtw = 0.0;  ///< mean over cross-video pairs
  double combined = 0.0;   ///< mean of per-pair combined losses; the optimized objective
  double grad_norm = 0.0;  ///< norm of the parameter gradient of `combined`
  double learning_rate = 0.0;
  Index zero_distance_cells = 0;
};

/// Thrown when a step produces a non-finite loss or gradient.
class NonFiniteLoss : public NumericalError {
 public:
  NonFiniteLoss(const std::string& what, StepReport report)
      : NumericalError(what), report_(report) {}
  [[nodiscard]] const StepReport& report() const { return report_; }

 private:
  StepReport report_;
};

struct BatchGradient {
  StepReport report;
  Vector grad;  ///< flattened like EncoderParams::flatten
  /// Alignment used by each pair (empty for same-video pairs).
  std::vector<alignment::AlignmentMatrix> alignments;
  std::vector<losses::LossReport> pair_reports;
};

/// Mean combined objective over the batch's pairs and its exact parameter
/// gradient. `frozen` supplies per-pair alignments; otherwise each
/// cross-video pair aligns its current embeddings.
BatchGradient batch_gradient(const encoder::EncoderParams& params, const sampling::Batch& batch,
                             const losses::HyperParams& hp, int threads,
                             const std::vector<alignment::AlignmentMatrix>* frozen = nullptr);

/// Mean objective only, for finite-difference checks.
double batch_objective(const encoder::EncoderParams& params, const sampling::Batch& batch,
                       const losses::HyperParams& hp,
                       const std::vector<alignment::AlignmentMatrix>& frozen);

/// Cosine decay from the base rate to 0 over `horizon` steps when enabled.
double scheduled_learning_rate(const TrainConfig& config, std::uint64_t step,
                               std::uint64_t horizon);

/// One Adam update with decoupled weight decay at the given rate.
void adam_update(encoder::EncoderParams& params, OptimizerState& state, const Vector& grad,
                 double learning_rate, const TrainConfig& config);

struct StepResult {
  encoder::EncoderParams params;
  OptimizerState optimizer;
  StepReport report;
};

/// Builds the clip batch for a video pair, computes the batch gradient, and
/// applies one update. `horizon` is the schedule length in steps.
StepResult train_step(const encoder::EncoderParams& params, const OptimizerState& optimizer,
                      const Matrix& video_a, const Matrix& video_b, const TrainConfig& config,
                      sampling::Rng& rng, std::uint64_t horizon);

/// Per-step rng derived from (seed, step) so resumed runs replay exactly.
sampling::Rng step_rng(std::uint64_t seed, std::uint64_t step);

struct TrainOptions {
  std::optional<checkpoint::Checkpoint> resume;
  /// Stop once the optimizer has taken this many steps in total.
  std::optional<std::uint64_t> stop_at_step;
  std::function<void(const StepReport&)> on_step;
};

struct TrainResult {
  encoder::EncoderParams params;
  OptimizerState optimizer;
  std::vector<StepReport> curve;
  std::uint64_t total_steps = 0;
  bool finished = false;
};

/// Unordered video pairs (i < j) in the epoch's shuffled order.
std::vector<std::pair<std::size_t, std::size_t>> epoch_pairs(std::size_t videos,
                                                             std::uint64_t seed, int epoch);

/// epochs × all unordered training-video pairs, shuffled per epoch.
TrainResult train(const synthdata::Dataset& dataset, const TrainConfig& config,
                  const TrainOptions& options = {});

/// CSV header plus one row per step: step,loss_same,loss_prop,loss_sdtw,combined,lr
void write_curve_csv(std::ostream& out, const std::vector<StepReport>& curve);

/// Calls fn(k) for k in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace lrprop::trainer
