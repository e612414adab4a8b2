#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "obstacle/problems/sampler.hpp"

namespace testing {

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  auto rng = obstacle::problems::stream_rng(seed, 99);
  std::vector<double> v(n);
  for (double& x : v) x = scale * (2.0 * obstacle::problems::unit_uniform(rng) - 1.0);
  return v;
}

/// Central differences of f at theta along every coordinate.
inline std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                       std::vector<double> theta, double h = 1e-5) {
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double t = theta[i];
    theta[i] = t + h;
    const double fp = f(theta);
    theta[i] = t - h;
    const double fm = f(theta);
    theta[i] = t;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// |a - b| / max(1, |b|)
inline double rel_err(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(d) / std::max(1.0, norm(b));
}

}  // namespace testing
