#pragma once

// Oracle and gradient-check battery run by `lrprop check`.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace lrprop::checks {

/// Deliberate defects used to confirm that the battery catches them.
enum class Fault {
  none,
  flip_softdtw_gradient_sign,
  flip_similarity_gradient_sign,
};

struct CheckOptions {
  std::uint64_t seed = 7;
  Fault fault = Fault::none;
};

struct CheckResult {
  std::string name;
  std::string criterion;  ///< what "error" measures
  double tolerance = 0.0;
  double worst_error = 0.0;
  int cases = 0;
  bool passed = false;
};

std::vector<CheckResult> run_checks(const CheckOptions& options);

/// One line per check; returns true when every check passed.
bool print_report(std::ostream& out, const std::vector<CheckResult>& results);

}  // namespace lrprop::checks
