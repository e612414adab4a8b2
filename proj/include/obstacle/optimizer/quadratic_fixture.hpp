#pragma once

// Closed-form bilevel fixture:
//   e(y, u) = 1/2 |y - M u|^2,   j(y, u) = 1/2 |y - a|^2 + 1/2 |u|^2.
// e is convex (rho = 0), so every gamma > 0 is admissible and
//   z*(y, u)   = (gamma M u + y) / (1 + gamma)
//   e_gamma    = |y - M u|^2 / (2 (1 + gamma))
//   grad e_gamma = ((y - z*) / gamma, grad_u e(z*, u)).
// With noise > 0 each batch shifts both targets by Gaussian offsets, giving
// unbiased stochastic gradients.

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "obstacle/optimizer/bilevel_oracle.hpp"

namespace obstacle::opt {

class QuadraticFixture final : public BilevelOracle {
 public:
  using Vec = Eigen::VectorXd;

  /// Random M (entries in [-1, 1]) and a (entries in [-1, 1]) from `seed`.
  explicit QuadraticFixture(std::size_t dim = 3, std::uint64_t seed = 7, double noise = 0.0);
  QuadraticFixture(Eigen::MatrixXd m, Vec a, double noise = 0.0, std::uint64_t seed = 7);

  std::size_t state_size() const override { return static_cast<std::size_t>(m_.rows()); }
  std::size_t control_size() const override { return static_cast<std::size_t>(m_.cols()); }
  void resample(std::uint64_t stream) override;
  LossEstimate evaluate(std::span<const double> state, std::span<const double> control) override;
  LossEstimate state_gradient(std::span<const double> state, std::span<const double> control,
                              double upper_weight, double lower_weight, std::span<double> grad) override;
  void control_gradient(std::span<const StateTerm> terms, std::span<const double> control,
                        std::span<double> grad) override;

  const Eigen::MatrixXd& m() const { return m_; }
  const Vec& a() const { return a_; }

  // Noise-free closed forms.
  double lower(const Vec& y, const Vec& u) const;
  double upper(const Vec& y, const Vec& u) const;
  Vec prox_point(const Vec& y, const Vec& u, double gamma) const;
  double envelope(const Vec& y, const Vec& u, double gamma) const;
  /// Envelope gradient assembled from the prox point; flip_sign negates the
  /// (y - z*)/gamma term (mutation hook for the checks).
  std::pair<Vec, Vec> envelope_gradient(const Vec& y, const Vec& u, double gamma, bool flip_sign = false) const;
  double phi(double c, const Vec& y, const Vec& u, double gamma) const;
  std::pair<Vec, Vec> phi_gradient(double c, const Vec& y, const Vec& u, double gamma) const;
  /// V = phi_c + C_z |z - z*|^2 with C_z = 6 (1 + L_e^2) / (gamma - gamma^2 rho).
  double merit(double c, const Vec& y, const Vec& u, const Vec& z, double gamma) const;

  double lipschitz_lower() const;  // L_e = 1 + |M|_2^2
  double weak_convexity() const { return 0.0; }

 private:
  Eigen::MatrixXd m_;
  Vec a_;
  double noise_;
  std::uint64_t seed_;
  Vec xi_;    // shift of the lower target
  Vec zeta_;  // shift of the upper target
};

QuadraticFixture::Vec to_vec(std::span<const double> v);

}  // namespace obstacle::opt
