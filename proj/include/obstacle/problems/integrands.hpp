#pragma once

// Pointwise upper- and lower-level integrands, generic in the scalar type so
// the same code runs on plain doubles, on tape variables for the reference
// gradient path, and on tape leaves standing in for raw network jets in the
// fused path.

#include <stdexcept>

#include "obstacle/autodiff/jet.hpp"
#include "obstacle/networks/embedding.hpp"
#include "obstacle/problems/problem.hpp"
#include "obstacle/problems/sampler.hpp"

namespace obstacle::problems {

using ad::max;
using ad::square;

/// L = 1/2 |y - y_d|^2 + sigma/2 |u|^2
template <class T>
T upper_integrand(const SamplePoint& s, const T& state, const T& control, const ProblemSpec& p) {
  return 0.5 * square(state - s.target) + (0.5 * p.sigma) * square(control);
}

/// l = 1/2 |grad y|^2 - (f + u) y
template <class T>
T lower_integrand_energy(const SamplePoint& s, const SpatialJet<T>& state, const T& control) {
  if (state.order < 1) throw std::logic_error("energy integrand needs a first-order jet");
  return 0.5 * state.grad_norm2() - (control + s.source) * state.value;
}

/// scale * |P((1 - tau A) y + tau f + tau u) - y|^2 with P(v) = max(v, psi(x))
/// and A y = -Laplace(y) + b . grad(y).
template <class T>
T lower_integrand_evi(const SamplePoint& s, const SpatialJet<T>& state, const T& control,
                      const ProblemSpec& p) {
  if (state.order < 2) throw std::logic_error("EVI residual needs a second-order jet");
  T a_y = -state.laplacian();
  for (int i = 0; i < state.dim; ++i)
    a_y = a_y + p.evi.convection[static_cast<std::size_t>(i)] * state.grad[static_cast<std::size_t>(i)];
  const T v = state.value - p.evi.tau * a_y + p.evi.tau * (control + s.source);
  const T r = max(v, s.obstacle.value) - state.value;
  return p.evi.scale * square(r);
}

template <class T>
struct EmbeddedFields {
  SpatialJet<T> state;
  SpatialJet<T> control;  // distributed control (value only) or obstacle jet
};

template <class T>
EmbeddedFields<T> embed_fields(const ProblemSpec& p, const SamplePoint& s, const SpatialJet<T>& raw_state,
                               const SpatialJet<T>& raw_control) {
  EmbeddedFields<T> out;
  if (p.obstacle_is_control()) {
    auto [psi, y] = net::embed_obstacle_control(raw_control, raw_state, s.mask);
    out.state = y;
    out.control = psi;
    return out;
  }
  out.state = net::embed_state(p.state_embedding, raw_state, s.mask, s.obstacle);
  out.control = raw_control;
  if (p.control_embedding == net::Embedding::control_clamp)
    out.control.value = net::clamp_control(raw_control.value, p.bounds->lower, p.bounds->upper);
  return out;
}

template <class T>
struct Integrands {
  T upper;
  T lower;
};

template <class T>
Integrands<T> integrands(const ProblemSpec& p, const SamplePoint& s, const SpatialJet<T>& raw_state,
                         const SpatialJet<T>& raw_control) {
  const EmbeddedFields<T> f = embed_fields(p, s, raw_state, raw_control);
  if (p.obstacle_is_control()) {
    // The obstacle is the control: H^1 seminorm regularizer, source f only.
    const T upper = 0.5 * square(f.state.value - s.target) + (0.5 * p.sigma) * f.control.grad_norm2();
    if (p.lower != LowerLossKind::energy)
      throw ProblemError("obstacle control supports the energy lower level only");
    return {upper, lower_integrand_energy(s, f.state, T(0.0))};
  }
  const T upper = upper_integrand(s, f.state.value, f.control.value, p);
  if (p.lower == LowerLossKind::energy) return {upper, lower_integrand_energy(s, f.state, f.control.value)};
  return {upper, lower_integrand_evi(s, f.state, f.control.value, p)};
}

}  // namespace obstacle::problems
