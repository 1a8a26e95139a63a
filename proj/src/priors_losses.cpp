#include "lrprop/priors_losses.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace lrprop::losses {

void HyperParams::validate() const {
  require(tau > 0.0 && std::isfinite(tau), "tau must be positive");
  require(sigma_sq > 0.0 && std::isfinite(sigma_sq), "sigma_sq must be positive");
  require(lambda1 >= 0.0 && std::isfinite(lambda1), "lambda1 must be nonnegative");
  require(lambda2 >= 0.0 && std::isfinite(lambda2), "lambda2 must be nonnegative");
  require(gamma > 0.0 && std::isfinite(gamma), "gamma must be positive");
  require(clip_length >= 2, "clip length T must be at least 2");
}

std::string_view to_string(PairKind kind) {
  return kind == PairKind::same_video ? "same-video" : "cross-video";
}

double combine(PairKind kind, double loss_same, double loss_prop, double loss_sdtw,
               const HyperParams& hp) {
  const double delta = kind == PairKind::same_video ? 1.0 : 0.0;
  return delta * loss_same + (1.0 - delta) * (hp.lambda1 * loss_prop + hp.lambda2 * loss_sdtw);
}

namespace {

Matrix normalized_rows(const EmbeddingSequence& z, Vector& norms) {
  norms = z.rowwise().norm();
  for (Index r = 0; r < z.rows(); ++r) {
    if (!(norms(r) > 0.0)) {
      throw InvalidInput("cosine similarity undefined: embedding row " + std::to_string(r) +
                         " has zero norm");
    }
  }
  return norms.cwiseInverse().asDiagonal() * z;
}

void softmax_rows_inplace(Matrix& logits) {
  for (Index j = 0; j < logits.rows(); ++j) {
    const double shift = logits.row(j).maxCoeff();
    logits.row(j) = (logits.row(j).array() - shift).exp();
    logits.row(j) /= logits.row(j).sum();
  }
}

// Row j ∝ exp(-(s_b[j] - centers[i])² / 2σ²).
RowStochasticMatrix gaussian_prior(std::span<const Index> s_b, std::span<const double> centers,
                                   double sigma_sq) {
  require(sigma_sq > 0.0, "sigma_sq must be positive");
  require(!s_b.empty() && !centers.empty(), "prior: index lists must be nonempty");
  const auto rows = static_cast<Index>(s_b.size());
  const auto cols = static_cast<Index>(centers.size());
  Matrix logits(rows, cols);
  for (Index j = 0; j < rows; ++j) {
    for (Index i = 0; i < cols; ++i) {
      const double offset = static_cast<double>(s_b[static_cast<std::size_t>(j)]) -
                            centers[static_cast<std::size_t>(i)];
      logits(j, i) = -offset * offset / (2.0 * sigma_sq);
    }
  }
  softmax_rows_inplace(logits);
  return logits;
}

}  // namespace

RowStochasticMatrix similarity_distribution(const EmbeddingSequence& z_a,
                                            const EmbeddingSequence& z_b, double tau) {
  require(tau > 0.0, "similarity_distribution: tau must be positive");
  require(z_a.rows() > 0 && z_b.rows() > 0, "similarity_distribution: empty sequence");
  require(z_a.cols() == z_b.cols(), "similarity_distribution: embedding dimensions differ");
  Vector norm_a;
  Vector norm_b;
  const Matrix unit_a = normalized_rows(z_a, norm_a);
  const Matrix unit_b = normalized_rows(z_b, norm_b);
  Matrix logits = (unit_b * unit_a.transpose()) / tau;
  softmax_rows_inplace(logits);
  return logits;
}

RowStochasticMatrix same_video_prior(std::span<const Index> s_a, std::span<const Index> s_b,
                                     double sigma_sq) {
  std::vector<double> centers(s_a.begin(), s_a.end());
  return gaussian_prior(s_b, centers, sigma_sq);
}

std::vector<Index> propagated_rows(const AlignmentMatrix& a) {
  std::vector<Index> rows(static_cast<std::size_t>(a.cols()), -1);
  for (Index i = 0; i < a.cols(); ++i) {
    for (Index k = 0; k < a.rows(); ++k) {
      if (a(k, i) != 0) {
        rows[static_cast<std::size_t>(i)] = k;
        break;
      }
    }
    require(rows[static_cast<std::size_t>(i)] >= 0,
            "alignment matrix column " + std::to_string(i) + " has no aligned row");
  }
  return rows;
}

RowStochasticMatrix propagation_prior(std::span<const Index> s_b, const AlignmentMatrix& a,
                                      double sigma_sq) {
  require(static_cast<Index>(s_b.size()) == a.rows(),
          "propagation_prior: alignment rows must match clip B length");
  const std::vector<Index> rows = propagated_rows(a);
  std::vector<double> centers;
  centers.reserve(rows.size());
  for (Index k : rows) {
    centers.push_back(static_cast<double>(s_b[static_cast<std::size_t>(k)]));
  }
  return gaussian_prior(s_b, centers, sigma_sq);
}

double kl_row(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size() && !p.empty(), "kl_row: distributions must have equal nonzero size");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) {
      continue;
    }
    if (q[i] <= 0.0) {
      throw NumericalError("kl_row: q is zero where p is positive (index " + std::to_string(i) +
                           ")");
    }
    total += p[i] * (std::log(p[i]) - std::log(std::max(q[i], kProbabilityFloor)));
  }
  return total;
}

double mean_row_kl(const RowStochasticMatrix& prior, const RowStochasticMatrix& q) {
  require(prior.rows() == q.rows() && prior.cols() == q.cols() && prior.rows() > 0,
          "KL loss: prior and q shapes differ");
  double total = 0.0;
  for (Index j = 0; j < prior.rows(); ++j) {
    total += kl_row(std::span<const double>(prior.row(j).data(), static_cast<std::size_t>(prior.cols())),
                    std::span<const double>(q.row(j).data(), static_cast<std::size_t>(q.cols())));
  }
  return total / static_cast<double>(prior.rows());
}

double loss_same(const RowStochasticMatrix& prior, const RowStochasticMatrix& q) {
  return mean_row_kl(prior, q);
}

double loss_prop(const RowStochasticMatrix& prior, const RowStochasticMatrix& q) {
  return mean_row_kl(prior, q);
}

EmbeddingPairGradient kl_similarity_gradient(const EmbeddingSequence& z_a,
                                             const EmbeddingSequence& z_b,
                                             const RowStochasticMatrix& prior,
                                             const RowStochasticMatrix& q, double tau) {
  Vector norm_a;
  Vector norm_b;
  const Matrix unit_a = normalized_rows(z_a, norm_a);
  const Matrix unit_b = normalized_rows(z_b, norm_b);
  const Matrix cosine = unit_b * unit_a.transpose();
  // ∂L/∂cos(j,i) = (Q - P)(j,i) / (T_B τ)
  const Matrix h = (q - prior) / (static_cast<double>(prior.rows()) * tau);
  const Matrix hc = h.cwiseProduct(cosine);
  EmbeddingPairGradient out;
  out.grad_a = h.transpose() * unit_b;
  out.grad_a -= hc.colwise().sum().transpose().asDiagonal() * unit_a;
  out.grad_a = norm_a.cwiseInverse().asDiagonal() * out.grad_a;
  out.grad_b = h * unit_a;
  out.grad_b -= hc.rowwise().sum().asDiagonal() * unit_b;
  out.grad_b = norm_b.cwiseInverse().asDiagonal() * out.grad_b;
  return out;
}

AlignmentMatrix current_alignment(const EmbeddingSequence& z_a, const EmbeddingSequence& z_b) {
  const alignment::DistanceMatrix d = alignment::distance_matrix(z_b, z_a);
  return alignment::alignment_matrix(alignment::dtw_path(d), d.rows(), d.cols());
}

PairLoss cross_video_loss(std::span<const Index> s_b, const EmbeddingSequence& z_a,
                          const EmbeddingSequence& z_b, const AlignmentMatrix& alignment,
                          const HyperParams& hp) {
  PairLoss out;
  out.report.pair_kind = PairKind::cross_video;
  out.alignment = alignment;
  out.grad_a = Matrix::Zero(z_a.rows(), z_a.cols());
  out.grad_b = Matrix::Zero(z_b.rows(), z_b.cols());

  const RowStochasticMatrix prior = propagation_prior(s_b, alignment, hp.sigma_sq);
  const RowStochasticMatrix q = similarity_distribution(z_a, z_b, hp.tau);
  out.report.loss_prop = loss_prop(prior, q);
  if (hp.lambda1 > 0.0) {
    const EmbeddingPairGradient g = kl_similarity_gradient(z_a, z_b, prior, q, hp.tau);
    out.grad_a += hp.lambda1 * g.grad_a;
    out.grad_b += hp.lambda1 * g.grad_b;
  }

  // D has rows for clip B and columns for clip A, matching the alignment.
  const alignment::DistanceMatrix d = alignment::distance_matrix(z_b, z_a);
  const softdtw::SoftDtwResult sdtw = softdtw::softdtw_cost(d, hp.gamma);
  const double scale =
      hp.sdtw_length_normalize ? 1.0 / static_cast<double>(std::max(d.rows(), d.cols())) : 1.0;
  out.report.loss_sdtw = sdtw.cost * scale;
  if (hp.lambda2 > 0.0) {
    const softdtw::EmbeddingGradients g =
        softdtw::softdtw_grad_wrt_embeddings(z_b, z_a, sdtw.tables.grad_d);
    out.grad_b += (hp.lambda2 * scale) * g.grad_z1;
    out.grad_a += (hp.lambda2 * scale) * g.grad_z2;
    out.zero_distance_cells = g.zero_distance_cells;
  }

  out.report.combined = combine(PairKind::cross_video, 0.0, out.report.loss_prop,
                                out.report.loss_sdtw, hp);
  out.report.grad_norm = std::sqrt(out.grad_a.squaredNorm() + out.grad_b.squaredNorm());
  return out;
}

PairLoss pair_loss(std::span<const Index> s_a, std::span<const Index> s_b,
                   const EmbeddingSequence& z_a, const EmbeddingSequence& z_b,
                   const HyperParams& hp, bool same_video) {
  require(static_cast<Index>(s_a.size()) == z_a.rows() &&
              static_cast<Index>(s_b.size()) == z_b.rows(),
          "pair_loss: index lists must match embedding lengths");
  if (!same_video) {
    return cross_video_loss(s_b, z_a, z_b, current_alignment(z_a, z_b), hp);
  }
  PairLoss out;
  out.report.pair_kind = PairKind::same_video;
  const RowStochasticMatrix prior = same_video_prior(s_a, s_b, hp.sigma_sq);
  const RowStochasticMatrix q = similarity_distribution(z_a, z_b, hp.tau);
  out.report.loss_same = loss_same(prior, q);
  const EmbeddingPairGradient g = kl_similarity_gradient(z_a, z_b, prior, q, hp.tau);
  out.grad_a = g.grad_a;
  out.grad_b = g.grad_b;
  out.report.combined = combine(PairKind::same_video, out.report.loss_same, 0.0, 0.0, hp);
  out.report.grad_norm = std::sqrt(out.grad_a.squaredNorm() + out.grad_b.squaredNorm());
  return out;
}

RowStochasticStats row_stochastic_stats(const RowStochasticMatrix& p) {
  RowStochasticStats stats;
  stats.min_entry = p.size() > 0 ? p.minCoeff() : 0.0;
  for (Index j = 0; j < p.rows(); ++j) {
    stats.max_row_error = std::max(stats.max_row_error, std::abs(p.row(j).sum() - 1.0));
  }
  return stats;
}

}  // namespace lrprop::losses
