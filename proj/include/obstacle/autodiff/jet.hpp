#pragma once

// Truncated Taylor jets in the spatial input x: value, the d first partials
// and the d pure second partials d^2/dx_i^2. The scalar type T is either
// double (plain evaluation) or ad::Var, in which case every jet entry stays
// differentiable with respect to whatever produced it (forward-over-reverse).
//
// Mixed partials are never formed; the pure second partials are closed under
// the operations below because (ab)_ii = a_ii b + 2 a_i b_i + a b_ii and
// phi(a)_ii = phi''(a) a_i^2 + phi'(a) a_ii.

#include <array>
#include <cmath>
#include <span>

#include "obstacle/autodiff/tape.hpp"

namespace obstacle::ad {

inline constexpr int kMaxDim = 3;

template <class T>
struct SpatialJet {
  int dim = 0;
  int order = 0;  // 0: value only, 1: + gradient, 2: + pure second partials
  T value{};
  std::array<T, kMaxDim> grad{};
  std::array<T, kMaxDim> second{};

  static SpatialJet constant(const T& c, int dim, int order) {
    SpatialJet j;
    j.dim = dim;
    j.order = order;
    j.value = c;
    return j;
  }

  /// The coordinate function x_i evaluated at `xi`.
  static SpatialJet coordinate(double xi, int i, int dim, int order) {
    SpatialJet j = constant(T(xi), dim, order);
    if (order >= 1) j.grad[static_cast<std::size_t>(i)] = T(1.0);
    return j;
  }

  T laplacian() const {
    T acc(0.0);
    for (int i = 0; i < dim; ++i) acc = acc + second[static_cast<std::size_t>(i)];
    return acc;
  }

  T grad_norm2() const {
    T acc(0.0);
    for (int i = 0; i < dim; ++i) acc = acc + grad[static_cast<std::size_t>(i)] * grad[static_cast<std::size_t>(i)];
    return acc;
  }
};

/// Promotes a jet of plain doubles to scalar type T (as constants).
template <class T>
SpatialJet<T> lift_jet(const SpatialJet<double>& a) {
  SpatialJet<T> r;
  r.dim = a.dim;
  r.order = a.order;
  r.value = T(a.value);
  for (int i = 0; i < a.dim; ++i) {
    const auto k = static_cast<std::size_t>(i);
    r.grad[k] = T(a.grad[k]);
    r.second[k] = T(a.second[k]);
  }
  return r;
}

namespace jet_detail {
inline int min_order(int a, int b) { return a < b ? a : b; }
inline int max_dim(int a, int b) { return a > b ? a : b; }
}  // namespace jet_detail

template <class T>
SpatialJet<T> operator+(const SpatialJet<T>& a, const SpatialJet<T>& b) {
  SpatialJet<T> r;
  r.dim = jet_detail::max_dim(a.dim, b.dim);
  r.order = jet_detail::min_order(a.order, b.order);
  r.value = a.value + b.value;
  for (int i = 0; i < r.dim; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (r.order >= 1) r.grad[k] = a.grad[k] + b.grad[k];
    if (r.order >= 2) r.second[k] = a.second[k] + b.second[k];
  }
  return r;
}

template <class T>
SpatialJet<T> operator-(const SpatialJet<T>& a) {
  SpatialJet<T> r = a;
  r.value = -a.value;
  for (int i = 0; i < a.dim; ++i) {
    const auto k = static_cast<std::size_t>(i);
    r.grad[k] = -a.grad[k];
    r.second[k] = -a.second[k];
  }
  return r;
}

template <class T>
SpatialJet<T> operator-(const SpatialJet<T>& a, const SpatialJet<T>& b) {
  return a + (-b);
}

template <class T>
SpatialJet<T> operator*(const SpatialJet<T>& a, const SpatialJet<T>& b) {
  SpatialJet<T> r;
  r.dim = jet_detail::max_dim(a.dim, b.dim);
  r.order = jet_detail::min_order(a.order, b.order);
  r.value = a.value * b.value;
  for (int i = 0; i < r.dim; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (r.order >= 1) r.grad[k] = a.grad[k] * b.value + a.value * b.grad[k];
    if (r.order >= 2)
      r.second[k] = a.second[k] * b.value + 2.0 * (a.grad[k] * b.grad[k]) + a.value * b.second[k];
  }
  return r;
}

template <class T, class S>
SpatialJet<T> scale(const SpatialJet<T>& a, const S& c) {
  SpatialJet<T> r = a;
  r.value = a.value * c;
  for (int i = 0; i < a.dim; ++i) {
    const auto k = static_cast<std::size_t>(i);
    r.grad[k] = a.grad[k] * c;
    r.second[k] = a.second[k] * c;
  }
  return r;
}

template <class T, class S>
SpatialJet<T> shift(const SpatialJet<T>& a, const S& c) {
  SpatialJet<T> r = a;
  r.value = a.value + c;
  return r;
}

/// phi(a) given phi, phi' and phi'' evaluated at a.value.
template <class T>
SpatialJet<T> compose(const SpatialJet<T>& a, const T& f0, const T& f1, const T& f2) {
  SpatialJet<T> r;
  r.dim = a.dim;
  r.order = a.order;
  r.value = f0;
  for (int i = 0; i < a.dim; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (a.order >= 1) r.grad[k] = f1 * a.grad[k];
    if (a.order >= 2) r.second[k] = f2 * (a.grad[k] * a.grad[k]) + f1 * a.second[k];
  }
  return r;
}

template <class T>
SpatialJet<T> square(const SpatialJet<T>& a) {
  return compose(a, a.value * a.value, 2.0 * a.value, T(2.0));
}

/// ReLU with subderivative 0 at the kink; the second derivative is 0 a.e.
template <class T>
SpatialJet<T> relu(const SpatialJet<T>& a) {
  const double h = value_of(a.value) > 0.0 ? 1.0 : 0.0;
  return compose(a, a.value * h, T(h), T(0.0));
}

// The functions below are only meaningful for plain doubles; they are used
// to build jets of analytic fields such as boundary masks and obstacles.

inline SpatialJet<double> sin(const SpatialJet<double>& a) {
  const double s = std::sin(a.value), c = std::cos(a.value);
  return compose(a, s, c, -s);
}

inline SpatialJet<double> cos(const SpatialJet<double>& a) {
  const double s = std::sin(a.value), c = std::cos(a.value);
  return compose(a, c, -s, -c);
}

inline SpatialJet<double> reciprocal(const SpatialJet<double>& a) {
  const double v = 1.0 / a.value;
  return compose(a, v, -v * v, 2.0 * v * v * v);
}

/// Polar angle atan2(x2, x1) of a 2-D point as a jet in (x1, x2). At the
/// origin the derivatives are undefined and reported as 0.
SpatialJet<double> polar_angle(std::span<const double> x, int order);

}  // namespace obstacle::ad
