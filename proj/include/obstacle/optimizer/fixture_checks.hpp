#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace obstacle::opt {

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;   // worst observed value of the checked quantity
  double threshold = 0.0;  // pass iff measured < threshold (or <= where noted)
  std::string detail;
  double seconds = 0.0;
};

/// Envelope gradient from the prox point vs central differences of the
/// closed-form envelope; measured = max relative error over `points`.
CheckResult check_envelope_gradient(std::uint64_t seed = 1, int points = 100, bool flip_sign = false);

/// z-iteration with theta frozen, full-batch oracle; measured = max over
/// steps of ratio - (1 - eta (1/gamma - rho)), pass iff <= 1e-10. Runs each
/// eta in a spread across the admissible range.
CheckResult check_contraction(std::uint64_t seed = 1, int steps = 200);

struct MeritDescentConfig {
  double gamma = 1.0;
  double c0 = 1.0;
  double c_exp = 0.3;
  double step = 2e-3;  // alpha = beta; eta is set from the contraction range
  double eta = 0.5;
  int steps = 5000;
  int burn_in = 10;
};

/// Deterministic S2-FOBA on the fixture; measured = max increase
/// V_{k+1} - V_k after burn-in (pass iff <= 0 up to 1e-13 relative rounding).
CheckResult check_merit_descent(std::uint64_t seed = 1, const MeritDescentConfig& cfg = {});

std::vector<CheckResult> run_fixture_checks(std::uint64_t seed = 1, bool flip_sign = false);

}  // namespace obstacle::opt
