#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace obstacle::opt {

enum class StepMode { experimental, theoretical };

StepMode step_mode_from_name(std::string_view name);
std::string_view step_mode_name(StepMode m);

/// alpha_k, beta_k, eta_k.
///
/// experimental: base * decay^floor(k / decay_every); the factor is built by
/// repeated multiplication so the emitted values change exactly at the
/// multiples of decay_every.
/// theoretical: alpha0 (k+1)^-p, beta0 (k+1)^-p, eta0 (k+1)^-q with
/// q in (1/2, 1) and p in ((q+1)/2, 1).
struct StepSchedule {
  StepMode mode = StepMode::experimental;
  double alpha0 = 1e-3;
  double beta0 = 1e-3;
  double eta0 = 1e-3;
  double decay = 0.8;
  std::uint64_t decay_every = 1000;
  double p = 0.9;
  double q = 0.7;

  double alpha(std::uint64_t k) const { return alpha0 * factor(k, p); }
  double beta(std::uint64_t k) const { return beta0 * factor(k, p); }
  double eta(std::uint64_t k) const { return eta0 * factor(k, q); }
  void validate() const;

 private:
  double factor(std::uint64_t k, double exponent) const;
};

/// c_k = c0 (k+1)^exponent
struct PenaltySchedule {
  double c0 = 5.0;
  double exponent = 0.3;

  double at(std::uint64_t k) const;
  void validate() const;
};

/// sgd: the plain updates x <- x - step * d. adam: each of the three
/// directions d_z, d_y, d_u is passed through its own Adam moment estimate
/// before the step (opt-in; the step sizes keep their schedule).
enum class UpdateRule { sgd, adam };

UpdateRule update_rule_from_name(std::string_view name);
std::string_view update_rule_name(UpdateRule r);

struct HyperParams {
  double gamma = 20.0;
  PenaltySchedule penalty;
  StepSchedule steps;
  std::size_t batch = 512;
  std::uint64_t iterations = 20000;
  std::uint64_t seed = 0;
  double divergence_limit = 1e6;
  UpdateRule update = UpdateRule::sgd;

  void validate() const;
};

struct AdamParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t iterations = 5000;

  void validate() const;
};

}  // namespace obstacle::opt
