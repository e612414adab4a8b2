#pragma once

#include <string>
#include <string_view>

#include "obstacle/autodiff/jet.hpp"
#include "obstacle/autodiff/tape.hpp"

namespace obstacle::ad {

enum class Activation { swish, tanh, softplus };

Activation activation_from_name(std::string_view name);
std::string_view activation_name(Activation a);

/// phi and its first two derivatives. Works for double and Var; with Var the
/// derivatives are themselves differentiable.
template <class T>
struct ActivationTaylor {
  T f0, f1, f2;
};

template <class T>
ActivationTaylor<T> activation_taylor(Activation act, const T& t) {
  switch (act) {
    case Activation::swish: {
      const T s = sigmoid(t);
      const T ds = s * (1.0 - s);
      return {t * s, s + t * ds, ds * (2.0 + t * (1.0 - 2.0 * s))};
    }
    case Activation::tanh: {
      const T th = tanh(t);
      const T d1 = 1.0 - th * th;
      return {th, d1, -2.0 * (th * d1)};
    }
    case Activation::softplus: {
      const T s = sigmoid(t);
      return {softplus(t), s, s * (1.0 - s)};
    }
  }
  return {t, T(1.0), T(0.0)};
}

/// phi, phi', phi'', phi''' at a double; the fused kernels need the third
/// derivative to push adjoints through second-order jets.
struct ActivationDerivs {
  double f0, f1, f2, f3;
};

inline ActivationDerivs activation_derivs(Activation act, double t) {
  switch (act) {
    case Activation::swish: {
      const double s = sigmoid(t);
      const double s1 = s * (1.0 - s);
      const double s2 = s1 * (1.0 - 2.0 * s);
      const double s3 = s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1;
      return {t * s, s + t * s1, 2.0 * s1 + t * s2, 3.0 * s2 + t * s3};
    }
    case Activation::tanh: {
      const double th = std::tanh(t);
      const double d1 = 1.0 - th * th;
      const double d2 = -2.0 * th * d1;
      return {th, d1, d2, -2.0 * (d1 * d1 + th * d2)};
    }
    case Activation::softplus: {
      const double s = sigmoid(t);
      const double s1 = s * (1.0 - s);
      return {softplus(t), s, s1, s1 * (1.0 - 2.0 * s)};
    }
  }
  return {t, 1.0, 0.0, 0.0};
}

template <class T>
SpatialJet<T> activate(Activation act, const SpatialJet<T>& a) {
  const auto tay = activation_taylor(act, a.value);
  return compose(a, tay.f0, tay.f1, tay.f2);
}

}  // namespace obstacle::ad
