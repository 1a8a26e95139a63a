#include "lrprop/softdtw.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace lrprop::softdtw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_gamma(double gamma) {
  require(gamma > 0.0 && std::isfinite(gamma), "soft-DTW gamma must be positive and finite");
}

}  // namespace

double soft_min(std::span<const double> values, double gamma) {
  require(!values.empty(), "soft_min: empty input");
  require_gamma(gamma);
  const double lowest = *std::min_element(values.begin(), values.end());
  if (lowest == kInf) {
    return kInf;
  }
  double sum = 0.0;
  for (double a : values) {
    sum += std::exp(-(a - lowest) / gamma);
  }
  return lowest - gamma * std::log(sum);
}

SoftDtwResult softdtw_cost(const DistanceMatrix& d, double gamma) {
  alignment::validate_distance_matrix(d);
  require_gamma(gamma);
  const Index n = d.rows();
  const Index m = d.cols();
  SoftDtwResult result;
  result.tables.gamma = gamma;
  Matrix& r = result.tables.forward;
  r.resize(n, m);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      if (i == 0 && j == 0) {
        r(i, j) = d(i, j);
        continue;
      }
      const std::array<double, 3> prev{i > 0 ? r(i - 1, j) : kInf, j > 0 ? r(i, j - 1) : kInf,
                                       (i > 0 && j > 0) ? r(i - 1, j - 1) : kInf};
      r(i, j) = d(i, j) + soft_min(prev, gamma);
    }
  }
  result.cost = r(n - 1, m - 1);
  result.tables.grad_d = softdtw_grad_wrt_distance(result.tables, d);
  return result;
}

Matrix softdtw_grad_wrt_distance(const SoftDtwTables& tables, const DistanceMatrix& d) {
  const Matrix& r = tables.forward;
  require(r.rows() == d.rows() && r.cols() == d.cols() && r.size() > 0,
          "softdtw_grad_wrt_distance: tables do not match the distance matrix");
  require_gamma(tables.gamma);
  const Index n = d.rows();
  const Index m = d.cols();
  const double gamma = tables.gamma;
  // e(i,j) = ∂r(n-1,m-1)/∂r(i,j); each successor s contributes
  // e(s) * exp((r(s) - D(s) - r(i,j)) / γ).
  Matrix e = Matrix::Zero(n, m);
  e(n - 1, m - 1) = 1.0;
  auto weight = [&](Index si, Index sj, Index i, Index j) {
    return std::exp((r(si, sj) - d(si, sj) - r(i, j)) / gamma);
  };
  for (Index i = n - 1; i >= 0; --i) {
    for (Index j = m - 1; j >= 0; --j) {
      if (i == n - 1 && j == m - 1) {
        continue;
      }
      double acc = 0.0;
      if (i + 1 < n) {
        acc += e(i + 1, j) * weight(i + 1, j, i, j);
      }
      if (j + 1 < m) {
        acc += e(i, j + 1) * weight(i, j + 1, i, j);
      }
      if (i + 1 < n && j + 1 < m) {
        acc += e(i + 1, j + 1) * weight(i + 1, j + 1, i, j);
      }
      e(i, j) = acc;
    }
  }
  return e;
}

EmbeddingGradients softdtw_grad_wrt_embeddings(const EmbeddingSequence& z1,
                                               const EmbeddingSequence& z2,
                                               const Matrix& grad_d) {
  require(z1.cols() == z2.cols(), "softdtw_grad_wrt_embeddings: embedding dimensions differ");
  require(grad_d.rows() == z1.rows() && grad_d.cols() == z2.rows(),
          "softdtw_grad_wrt_embeddings: grad_d must be n x m");
  EmbeddingGradients out;
  out.grad_z1 = Matrix::Zero(z1.rows(), z1.cols());
  out.grad_z2 = Matrix::Zero(z2.rows(), z2.cols());
  for (Index i = 0; i < z1.rows(); ++i) {
    for (Index j = 0; j < z2.rows(); ++j) {
      const double w = grad_d(i, j);
      if (w == 0.0) {
        continue;
      }
      const RowVector diff = z1.row(i) - z2.row(j);
      const double dist = diff.norm();
      if (dist == 0.0) {
        ++out.zero_distance_cells;
        continue;
      }
      const RowVector unit = diff * (w / dist);
      out.grad_z1.row(i) += unit;
      out.grad_z2.row(j) -= unit;
    }
  }
  return out;
}

}  // namespace lrprop::softdtw
