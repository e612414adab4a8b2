#include "obstacle/optimizer/fixture_checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "obstacle/optimizer/quadratic_fixture.hpp"
#include "obstacle/optimizer/s2foba.hpp"
#include "obstacle/problems/sampler.hpp"

namespace obstacle::opt {

namespace {

using Vec = QuadraticFixture::Vec;
using Clock = std::chrono::steady_clock;

Vec random_vec(std::mt19937_64& rng, Eigen::Index n, double scale) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * (2.0 * problems::unit_uniform(rng) - 1.0);
  return v;
}

std::vector<double> as_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace

CheckResult check_envelope_gradient(std::uint64_t seed, int points, bool flip_sign) {
  const auto t0 = Clock::now();
  CheckResult r{"envelope_gradient", false, 0.0, 1e-8, {}, 0.0};
  auto rng = problems::stream_rng(seed, 1);
  const double h = 1e-4;
  for (int p = 0; p < points; ++p) {
    QuadraticFixture fx(1 + p % 4, seed + static_cast<std::uint64_t>(p));
    const auto n = static_cast<Eigen::Index>(fx.state_size());
    const double gamma = 0.1 + 10.0 * problems::unit_uniform(rng);
    const Vec y = random_vec(rng, n, 2.0), u = random_vec(rng, n, 2.0);
    const auto [gy, gu] = fx.envelope_gradient(y, u, gamma, flip_sign);
    Vec fd(2 * n), an(2 * n);
    an << gy, gu;
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
      Vec yp = y, ym = y, up = u, um = u;
      if (i < n) {
        yp(i) += h;
        ym(i) -= h;
      } else {
        up(i - n) += h;
        um(i - n) -= h;
      }
      fd(i) = (fx.envelope(yp, up, gamma) - fx.envelope(ym, um, gamma)) / (2.0 * h);
    }
    const double rel = (an - fd).norm() / std::max(fd.norm(), 1e-300);
    r.measured = std::max(r.measured, rel);
  }
  r.pass = r.measured < r.threshold;
  std::ostringstream os;
  os << points << " random points, dims 1-4, central differences h=" << h;
  r.detail = os.str();
  r.seconds = seconds_since(t0);
  return r;
}

CheckResult check_contraction(std::uint64_t seed, int steps) {
  const auto t0 = Clock::now();
  CheckResult r{"proximal_contraction", false, -1.0, 1e-10, {}, 0.0};
  QuadraticFixture fx(3, seed);
  const double gamma = 20.0;
  const double rho = fx.weak_convexity();
  // grad_z of e(z, u) + |z - y|^2/(2 gamma) has modulus 1 + 1/gamma here;
  // the admissible range is (0, 2 / (L + 2/gamma - rho)) with L = 1.
  const double eta_max = 2.0 / (1.0 + 2.0 / gamma - rho);
  auto rng = problems::stream_rng(seed, 2);
  std::ostringstream os;
  os << "gamma=" << gamma << " eta in {";
  for (double frac : {0.005, 0.03, 0.999}) {
    const double eta = frac * eta_max;
    os << eta << (frac < 0.999 ? ", " : "}");
    const Vec y = random_vec(rng, 3, 1.0), u = random_vec(rng, 3, 1.0);
    const Vec zs = fx.prox_point(y, u, gamma);
    std::vector<double> z = as_std(random_vec(rng, 3, 3.0));
    const std::vector<double> ys = as_std(y), us = as_std(u);
    std::vector<double> g(3);
    const double bound = 1.0 - eta * (1.0 / gamma - rho);
    double dist = (to_vec(z) - zs).norm();
    for (int k = 0; k < steps; ++k) {
      fx.resample(static_cast<std::uint64_t>(k));
      fx.state_gradient(z, us, 0.0, 1.0, g);
      for (std::size_t i = 0; i < 3; ++i) z[i] -= eta * (g[i] + (z[i] - ys[i]) / gamma);
      const double next = (to_vec(z) - zs).norm();
      r.measured = std::max(r.measured, next / dist - bound);
      dist = next;
    }
  }
  r.pass = r.measured <= r.threshold;
  os << ", " << steps << " steps each; measured = max(ratio - bound)";
  r.detail = os.str();
  r.seconds = seconds_since(t0);
  return r;
}

CheckResult check_merit_descent(std::uint64_t seed, const MeritDescentConfig& cfg) {
  const auto t0 = Clock::now();
  CheckResult r{"merit_descent", false, -INFINITY, 0.0, {}, 0.0};
  QuadraticFixture fx(3, seed);
  HyperParams hp;
  hp.gamma = cfg.gamma;
  hp.penalty = {cfg.c0, cfg.c_exp};
  hp.steps.mode = StepMode::experimental;
  hp.steps.alpha0 = hp.steps.beta0 = cfg.step;
  hp.steps.eta0 = cfg.eta;
  hp.steps.decay = 1.0;
  hp.iterations = static_cast<std::uint64_t>(cfg.steps);
  auto rng = problems::stream_rng(seed, 3);
  TrainState s;
  s.state = as_std(random_vec(rng, 3, 1.0));
  s.control = as_std(random_vec(rng, 3, 1.0));
  s.aux = s.state;
  auto merit = [&](const TrainState& st) {
    return fx.merit(hp.penalty.at(st.k), to_vec(st.state), to_vec(st.control), to_vec(st.aux), hp.gamma);
  };
  double prev = merit(s);
  double first = prev;
  double worst_rel = -INFINITY;
  for (int k = 0; k < cfg.steps; ++k) {
    s2foba_step(fx, s, hp);
    const double v = merit(s);
    if (k >= cfg.burn_in) {
      r.measured = std::max(r.measured, v - prev);
      worst_rel = std::max(worst_rel, (v - prev) / std::max(1.0, std::abs(prev)));
    }
    prev = v;
  }
  r.pass = worst_rel <= 1e-13;
  std::ostringstream os;
  os << "gamma=" << cfg.gamma << " c_k=" << cfg.c0 << "(k+1)^" << cfg.c_exp << " alpha=beta=" << cfg.step
     << " eta=" << cfg.eta << ", " << cfg.steps << " steps, burn-in " << cfg.burn_in << "; V_0=" << first
     << " V_end=" << prev;
  r.detail = os.str();
  r.seconds = seconds_since(t0);
  return r;
}

std::vector<CheckResult> run_fixture_checks(std::uint64_t seed, bool flip_sign) {
  return {check_envelope_gradient(seed, 100, flip_sign), check_contraction(seed), check_merit_descent(seed)};
}

}  // namespace obstacle::opt
