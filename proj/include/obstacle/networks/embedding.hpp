#pragma once

// Output layers that make network outputs feasible by construction. All
// functions act on spatial jets so the lower-level integrands can see the
// derivatives of the embedded field, not just of the raw network.

#include <span>
#include <string>
#include <utility>

#include "obstacle/autodiff/jet.hpp"
#include "obstacle/networks/network.hpp"

namespace obstacle::net {

using ad::lift_jet;
using ad::relu;

/// y = m N^2 + psi  (state_square) or  y = relu(N m - psi) + psi  (state_relu).
/// Either way y >= psi; the square form also gives y = psi wherever m = 0.
template <class T>
SpatialJet<T> embed_state(Embedding kind, const SpatialJet<T>& raw, const SpatialJet<double>& mask,
                          const SpatialJet<double>& obstacle) {
  const SpatialJet<T> m = lift_jet<T>(mask);
  const SpatialJet<T> psi = lift_jet<T>(obstacle);
  switch (kind) {
    case Embedding::state_square:
      return m * square(raw) + psi;
    case Embedding::state_relu:
      return relu(raw * m - psi) + psi;
    default:
      throw InputError("embedding '" + std::string(embedding_name(kind)) + "' is not a state embedding");
  }
}

/// u = -relu(u_b - [relu(N - u_a) + u_a]) + u_b, i.e. N clipped to [u_a, u_b].
template <class T>
T clamp_control(const T& raw, double lower, double upper) {
  if (lower > upper) throw InputError("control bounds must satisfy u_a <= u_b");
  const T inner = relu(raw - lower) + lower;
  return -relu(upper - inner) + upper;
}

/// psi_hat = m N_psi and y = -relu(psi_hat - m N_y) + psi_hat, so y <= psi_hat.
template <class T>
std::pair<SpatialJet<T>, SpatialJet<T>> embed_obstacle_control(const SpatialJet<T>& raw_obstacle,
                                                               const SpatialJet<T>& raw_state,
                                                               const SpatialJet<double>& mask) {
  const SpatialJet<T> m = lift_jet<T>(mask);
  const SpatialJet<T> psi = m * raw_obstacle;
  const SpatialJet<T> y = -relu(psi - m * raw_state) + psi;
  return {psi, y};
}

// Convenience forms on plain values, evaluating the network at x.

double embed_state(const NetworkSpec& spec, std::span<const double> theta, std::span<const double> x,
                   double obstacle, double mask);
double embed_control(const NetworkSpec& spec, std::span<const double> theta, std::span<const double> x,
                     double lower, double upper);
std::pair<double, double> embed_obstacle_control(const NetworkSpec& obstacle_spec,
                                                 std::span<const double> theta_obstacle,
                                                 const NetworkSpec& state_spec,
                                                 std::span<const double> theta_state,
                                                 std::span<const double> x, double mask);

}  // namespace obstacle::net
