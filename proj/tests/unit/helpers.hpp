#pragma once

#include "lrprop/common.hpp"

#include <random>

namespace lrprop::test {

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed, double lo = 0.0,
                            double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Index k = 0; k < m.size(); ++k) {
    m.data()[k] = u(rng);
  }
  return m;
}

inline Matrix random_normal(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index k = 0; k < m.size(); ++k) {
    m.data()[k] = n(rng);
  }
  return m;
}

inline Matrix unit_rows(Matrix m) {
  for (Index r = 0; r < m.rows(); ++r) {
    m.row(r).normalize();
  }
  return m;
}

}  // namespace lrprop::test
