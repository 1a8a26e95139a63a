#pragma once

// Independent reference computations used by the check battery and the test
// suites. Nothing here calls the dynamic programs it is meant to verify.

#include "lrprop/alignment.hpp"
#include "lrprop/common.hpp"

#include <functional>

namespace lrprop::oracles {

/// min over every enumerated path of <A, D>.
double brute_force_dtw(const alignment::DistanceMatrix& d);

/// -γ log Σ_paths exp(-<A,D>/γ), evaluated with its own max-shift.
double brute_force_softdtw(const alignment::DistanceMatrix& d, double gamma);

/// E[A] under the Gibbs distribution p(A) ∝ exp(-<A,D>/γ) over all paths.
Matrix gibbs_expectation(const alignment::DistanceMatrix& d, double gamma);

/// Central differences of f at x with step h.
Vector finite_difference(const std::function<double(const Vector&)>& f, const Vector& x,
                         double h);

/// ||a - b|| / max(||a||, ||b||); 0 when both vanish.
double relative_error(const Vector& a, const Vector& b);
double relative_error(const Matrix& a, const Matrix& b);

/// Row-major flattening helpers for finite differences over matrices.
Vector flatten(const Matrix& m);
Matrix unflatten(const Vector& v, Index rows, Index cols);

}  // namespace lrprop::oracles
