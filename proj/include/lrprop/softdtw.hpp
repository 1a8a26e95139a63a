#pragma once

// Smoothed DTW: the hard minimum of the DTW recursion is replaced by
// min^γ{a} = -γ log Σ exp(-a_i/γ), which makes the cost differentiable in D.

#include "lrprop/alignment.hpp"
#include "lrprop/common.hpp"

#include <span>

namespace lrprop::softdtw {

using alignment::DistanceMatrix;

inline constexpr double kDefaultGamma = 0.1;

struct SoftDtwTables {
  double gamma = kDefaultGamma;
  Matrix forward;  ///< accumulated soft costs r^γ(i,j)
  Matrix grad_d;   ///< ∂cost/∂D(i,j)
};

struct SoftDtwResult {
  double cost = 0.0;
  SoftDtwTables tables;
};

/// Max-shifted log-sum-exp soft minimum. +inf entries contribute nothing.
double soft_min(std::span<const double> values, double gamma);

/// Forward and backward tables for D at smoothing gamma.
SoftDtwResult softdtw_cost(const DistanceMatrix& d, double gamma);

/// Backward recursion. Entry (i,j) is the expected alignment indicator
/// E[A(i,j)] under the Gibbs distribution over paths.
Matrix softdtw_grad_wrt_distance(const SoftDtwTables& tables, const DistanceMatrix& d);

struct EmbeddingGradients {
  Matrix grad_z1;
  Matrix grad_z2;
  /// Cells with zero distance and nonzero weight; they get a zero subgradient.
  Index zero_distance_cells = 0;
};

/// Chains grad_d through D(i,j) = ||z1_i - z2_j||.
EmbeddingGradients softdtw_grad_wrt_embeddings(const EmbeddingSequence& z1,
                                               const EmbeddingSequence& z2,
                                               const Matrix& grad_d);

}  // namespace lrprop::softdtw
