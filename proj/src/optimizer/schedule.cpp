#include "obstacle/optimizer/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "obstacle/autodiff/tape.hpp"

namespace obstacle::opt {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ad::InputError(what);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

StepMode step_mode_from_name(std::string_view name) {
  if (name == "experimental") return StepMode::experimental;
  if (name == "theoretical") return StepMode::theoretical;
  throw ad::InputError("unknown step mode '" + std::string(name) + "'");
}

std::string_view step_mode_name(StepMode m) {
  return m == StepMode::experimental ? "experimental" : "theoretical";
}

UpdateRule update_rule_from_name(std::string_view name) {
  if (name == "sgd") return UpdateRule::sgd;
  if (name == "adam") return UpdateRule::adam;
  throw ad::InputError("unknown update rule '" + std::string(name) + "'");
}

std::string_view update_rule_name(UpdateRule r) { return r == UpdateRule::sgd ? "sgd" : "adam"; }

double StepSchedule::factor(std::uint64_t k, double exponent) const {
  if (mode == StepMode::theoretical) return std::pow(static_cast<double>(k) + 1.0, -exponent);
  double f = 1.0;
  for (std::uint64_t i = 0; i < k / decay_every; ++i) f *= decay;
  return f;
}

void StepSchedule::validate() const {
  require(positive(alpha0) && positive(beta0) && positive(eta0), "step sizes must be positive");
  if (mode == StepMode::experimental) {
    require(positive(decay) && decay <= 1.0, "decay must lie in (0, 1]");
    require(decay_every >= 1, "decay_every must be >= 1");
    return;
  }
  require(q > 0.5 && q < 1.0, "theoretical schedule needs q in (1/2, 1)");
  require(p > 0.5 * (q + 1.0) && p < 1.0, "theoretical schedule needs p in ((q+1)/2, 1)");
}

double PenaltySchedule::at(std::uint64_t k) const {
  return c0 * std::pow(static_cast<double>(k) + 1.0, exponent);
}

void PenaltySchedule::validate() const {
  require(positive(c0), "c0 must be positive");
  require(std::isfinite(exponent) && exponent >= 0.0, "c_exp must be >= 0");
}

void HyperParams::validate() const {
  require(positive(gamma), "gamma must be positive");
  penalty.validate();
  steps.validate();
  require(batch >= 1, "batch size must be >= 1");
  require(positive(divergence_limit), "divergence limit must be positive");
}

void AdamParams::validate() const {
  require(positive(lr), "adam lr must be positive");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "adam betas must lie in [0, 1)");
  require(positive(eps), "adam eps must be positive");
}

}  // namespace obstacle::opt
