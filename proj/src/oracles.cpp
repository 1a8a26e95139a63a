#include "lrprop/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace lrprop::oracles {

namespace {

std::vector<double> path_costs(const alignment::DistanceMatrix& d,
                               const std::vector<alignment::AlignmentPath>& paths) {
  std::vector<double> costs;
  costs.reserve(paths.size());
  for (const alignment::AlignmentPath& p : paths) {
    double c = 0.0;
    for (const alignment::Cell& cell : p.steps) {
      c += d(cell.row, cell.col);
    }
    costs.push_back(c);
  }
  return costs;
}

}  // namespace

double brute_force_dtw(const alignment::DistanceMatrix& d) {
  const auto paths = alignment::enumerate_paths(d.rows(), d.cols());
  const auto costs = path_costs(d, paths);
  return *std::min_element(costs.begin(), costs.end());
}

double brute_force_softdtw(const alignment::DistanceMatrix& d, double gamma) {
  const auto costs = path_costs(d, alignment::enumerate_paths(d.rows(), d.cols()));
  const double lowest = *std::min_element(costs.begin(), costs.end());
  double sum = 0.0;
  for (double c : costs) {
    sum += std::exp(-(c - lowest) / gamma);
  }
  return lowest - gamma * std::log(sum);
}

Matrix gibbs_expectation(const alignment::DistanceMatrix& d, double gamma) {
  const auto paths = alignment::enumerate_paths(d.rows(), d.cols());
  const auto costs = path_costs(d, paths);
  const double lowest = *std::min_element(costs.begin(), costs.end());
  Matrix expectation = Matrix::Zero(d.rows(), d.cols());
  double z = 0.0;
  for (std::size_t k = 0; k < paths.size(); ++k) {
    const double w = std::exp(-(costs[k] - lowest) / gamma);
    z += w;
    for (const alignment::Cell& cell : paths[k].steps) {
      expectation(cell.row, cell.col) += w;
    }
  }
  return expectation / z;
}

Vector finite_difference(const std::function<double(const Vector&)>& f, const Vector& x,
                         double h) {
  Vector grad(x.size());
  Vector probe = x;
  for (Index k = 0; k < x.size(); ++k) {
    probe(k) = x(k) + h;
    const double up = f(probe);
    probe(k) = x(k) - h;
    const double down = f(probe);
    probe(k) = x(k);
    grad(k) = (up - down) / (2.0 * h);
  }
  return grad;
}

double relative_error(const Vector& a, const Vector& b) {
  const double scale = std::max(a.norm(), b.norm());
  if (scale == 0.0) {
    return 0.0;
  }
  return (a - b).norm() / scale;
}

double relative_error(const Matrix& a, const Matrix& b) {
  return relative_error(flatten(a), flatten(b));
}

Vector flatten(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unflatten(const Vector& v, Index rows, Index cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

}  // namespace lrprop::oracles
