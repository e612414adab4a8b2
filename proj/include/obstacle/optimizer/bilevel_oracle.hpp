#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace obstacle::opt {

/// Batch means of the upper (L) and lower (l) integrands.
struct LossEstimate {
  double upper = 0.0;
  double lower = 0.0;
};

/// One state argument contributing upper_weight * L + lower_weight * l to a
/// control gradient.
struct StateTerm {
  std::span<const double> state;
  double upper_weight = 0.0;
  double lower_weight = 0.0;
};

/// Stochastic first-order access to j = E[L] and e = E[l] as functions of
/// (theta_y, theta_u). All evaluations refer to the batch selected by the
/// last resample().
class BilevelOracle {
 public:
  virtual ~BilevelOracle() = default;

  virtual std::size_t state_size() const = 0;
  virtual std::size_t control_size() const = 0;

  /// Selects the batch for substream `stream`. Calling twice with the same
  /// stream reproduces the same batch.
  virtual void resample(std::uint64_t stream) = 0;

  virtual LossEstimate evaluate(std::span<const double> state, std::span<const double> control) = 0;

  /// grad_y mean(wU L + wL l) at (state, control) written to `grad`; returns
  /// the batch means of L and l at that point.
  virtual LossEstimate state_gradient(std::span<const double> state, std::span<const double> control,
                                      double upper_weight, double lower_weight, std::span<double> grad) = 0;

  /// grad_u of sum over terms of mean(wU L(y_t, u) + wL l(y_t, u)).
  virtual void control_gradient(std::span<const StateTerm> terms, std::span<const double> control,
                                std::span<double> grad) = 0;
};

}  // namespace obstacle::opt
