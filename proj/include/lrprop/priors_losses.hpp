#pragma once

// Frame-correspondence priors, the embedding similarity distribution, and the
// KL-based training objective with analytic gradients.
//
// Row/column convention for every T×T distribution below: row j indexes a
// frame of clip B, column i a frame of clip A, and each row sums to one.

#include "lrprop/alignment.hpp"
#include "lrprop/common.hpp"
#include "lrprop/softdtw.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace lrprop::losses {

using alignment::AlignmentMatrix;

/// Nonnegative matrix whose rows each sum to one.
using RowStochasticMatrix = Matrix;

/// Floor applied to q inside kl_row.
inline constexpr double kProbabilityFloor = 1e-12;

struct HyperParams {
  double tau = 0.1;
  double sigma_sq = 10.0;
  double lambda1 = 0.01;
  double lambda2 = 0.8;
  double gamma = softdtw::kDefaultGamma;
  Index clip_length = 32;
  /// Divide L_Sdtw by max(n, m).
  bool sdtw_length_normalize = true;

  void validate() const;
};

enum class PairKind { same_video, cross_video };

std::string_view to_string(PairKind kind);

struct LossReport {
  double loss_same = 0.0;
  double loss_prop = 0.0;
  double loss_sdtw = 0.0;
  double combined = 0.0;
  double grad_norm = 0.0;
  PairKind pair_kind = PairKind::same_video;
};

/// Combined loss from its parts: δ·same + (1-δ)(λ1·prop + λ2·sdtw).
double combine(PairKind kind, double loss_same, double loss_prop, double loss_sdtw,
               const HyperParams& hp);

/// Row j = softmax_i(cos(zB_j, zA_i) / τ).
RowStochasticMatrix similarity_distribution(const EmbeddingSequence& z_a,
                                            const EmbeddingSequence& z_b, double tau);

/// Row j ∝ exp(-(sB_j - sA_i)² / 2σ²).
RowStochasticMatrix same_video_prior(std::span<const Index> s_a, std::span<const Index> s_b,
                                     double sigma_sq);

/// Smallest row index k with A(k,i) = 1, for every column i.
std::vector<Index> propagated_rows(const AlignmentMatrix& a);

/// Row j ∝ exp(-(sB_j - sB_{k*(i)})² / 2σ²), where k*(i) is the first row of
/// column i in A. A has rows for clip B and columns for clip A.
RowStochasticMatrix propagation_prior(std::span<const Index> s_b, const AlignmentMatrix& a,
                                      double sigma_sq);

/// Σ_i p_i log(p_i / q_i), with 0 log 0 = 0 and q floored at kProbabilityFloor.
/// Throws NumericalError when q_i = 0 where p_i > 0.
double kl_row(std::span<const double> p, std::span<const double> q);

/// Mean row KL divergence D(prior_j || q_j).
double mean_row_kl(const RowStochasticMatrix& prior, const RowStochasticMatrix& q);
double loss_same(const RowStochasticMatrix& prior, const RowStochasticMatrix& q);
double loss_prop(const RowStochasticMatrix& prior, const RowStochasticMatrix& q);

/// Gradient of mean_row_kl(prior, similarity_distribution(z_a, z_b, τ)) w.r.t.
/// both embedding sequences.
struct EmbeddingPairGradient {
  Matrix grad_a;
  Matrix grad_b;
};
EmbeddingPairGradient kl_similarity_gradient(const EmbeddingSequence& z_a,
                                             const EmbeddingSequence& z_b,
                                             const RowStochasticMatrix& prior,
                                             const RowStochasticMatrix& q, double tau);

struct PairLoss {
  LossReport report;
  Matrix grad_a;
  Matrix grad_b;
  /// Alignment used for the propagation prior (rows B, columns A); empty for same-video pairs.
  AlignmentMatrix alignment;
  Index zero_distance_cells = 0;
};

/// Combined loss and embedding gradients for one clip pair. Cross-video pairs recompute the DTW alignment
/// from the current embeddings and treat it as a constant.
PairLoss pair_loss(std::span<const Index> s_a, std::span<const Index> s_b,
                   const EmbeddingSequence& z_a, const EmbeddingSequence& z_b,
                   const HyperParams& hp, bool same_video);

/// Cross-video loss with a caller-supplied alignment (rows B, columns A).
PairLoss cross_video_loss(std::span<const Index> s_b, const EmbeddingSequence& z_a,
                          const EmbeddingSequence& z_b, const AlignmentMatrix& alignment,
                          const HyperParams& hp);

/// Alignment between the two clips: DTW path over d(zB_j, zA_i).
AlignmentMatrix current_alignment(const EmbeddingSequence& z_a, const EmbeddingSequence& z_b);

/// Max |row sum - 1| and min entry; used by sanity checks.
struct RowStochasticStats {
  double max_row_error = 0.0;
  double min_entry = 0.0;
};
RowStochasticStats row_stochastic_stats(const RowStochasticMatrix& p);

}  // namespace lrprop::losses
