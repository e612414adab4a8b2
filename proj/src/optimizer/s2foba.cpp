#include "obstacle/optimizer/s2foba.hpp"

#include <atomic>
#include <chrono>
#include <cmath>

#include "obstacle/autodiff/tape.hpp"
#include "obstacle/optimizer/adam.hpp"

namespace obstacle::opt {

namespace {

std::atomic<std::uint64_t> g_training_calls{0};

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

bool healthy(std::span<const double> v, double limit) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::isfinite(s) && std::sqrt(s) <= limit;
}

void guard(const TrainState& s, double limit) {
  if (healthy(s.state, limit) && healthy(s.control, limit) && healthy(s.aux, limit)) return;
  throw TrainingDiverged(s.k, norm2(s.state), norm2(s.control), norm2(s.aux));
}

/// x <- x - step * d, or the Adam-preconditioned form of it.
void step_with(TrainState& s, std::size_t slot, const HyperParams& hp, std::span<double> x,
               std::span<const double> d, double step) {
  if (hp.update == UpdateRule::sgd) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= step * d[i];
    return;
  }
  if (s.moments.empty()) {
    s.moments.emplace_back(s.aux.size(), AdamParams{});
    s.moments.emplace_back(s.state.size(), AdamParams{});
    s.moments.emplace_back(s.control.size(), AdamParams{});
  }
  s.moments[slot].step(x, d, step);
}

void check_sizes(const BilevelOracle& oracle, const TrainState& s) {
  if (s.state.size() != oracle.state_size() || s.aux.size() != oracle.state_size() ||
      s.control.size() != oracle.control_size())
    throw ad::InputError("train state does not match the oracle's parameter sizes");
}

}  // namespace

TrainingDiverged::TrainingDiverged(std::uint64_t it, double sn, double cn, double an)
    : std::runtime_error("training diverged at iteration " + std::to_string(it) +
                         ": |theta_y| = " + std::to_string(sn) + ", |theta_u| = " + std::to_string(cn) +
                         ", |z| = " + std::to_string(an)),
      iteration(it),
      state_norm(sn),
      control_norm(cn),
      aux_norm(an) {}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::uint64_t training_calls() { return g_training_calls.load(); }

TrajectoryRow s2foba_step(BilevelOracle& oracle, TrainState& s, const HyperParams& hp) {
  check_sizes(oracle, s);
  ++g_training_calls;
  const std::uint64_t k = s.k;
  const double alpha = hp.steps.alpha(k);
  const double beta = hp.steps.beta(k);
  const double eta = hp.steps.eta(k);
  const double c = hp.penalty.at(k);
  const double inv_gamma = 1.0 / hp.gamma;
  const std::size_t ny = s.state.size();

  oracle.resample(2 * k);
  std::vector<double> gz(ny), gy(ny);
  oracle.state_gradient(s.aux, s.control, 0.0, 1.0, gz);
  const LossEstimate loss = oracle.state_gradient(s.state, s.control, 1.0 / c, 1.0, gy);

  std::vector<double> dz(ny), dy(ny);
  for (std::size_t i = 0; i < ny; ++i) dz[i] = gz[i] + (s.aux[i] - s.state[i]) * inv_gamma;
  std::vector<double> z_new = s.aux;
  step_with(s, 0, hp, z_new, dz, eta);
  for (std::size_t i = 0; i < ny; ++i) dy[i] = gy[i] - (s.state[i] - z_new[i]) * inv_gamma;
  std::vector<double> y_new = s.state;
  step_with(s, 1, hp, y_new, dy, alpha);

  oracle.resample(2 * k + 1);
  const StateTerm terms[2] = {{y_new, 1.0 / c, 1.0}, {z_new, 0.0, -1.0}};
  std::vector<double> gu(s.control.size());
  oracle.control_gradient(terms, s.control, gu);
  step_with(s, 2, hp, s.control, gu, beta);

  s.aux = std::move(z_new);
  s.state = std::move(y_new);
  s.k = k + 1;
  guard(s, hp.divergence_limit);
  return {k, loss.upper, loss.lower, alpha, beta, eta, c, 0.0};
}

Stage1Result train_stage1(BilevelOracle& oracle, TrainState init, const HyperParams& hp,
                          const StepObserver& observer) {
  hp.validate();
  if (init.aux.empty()) init.aux = init.state;
  check_sizes(oracle, init);
  Stage1Result out;
  out.rows.reserve(hp.iterations);
  const auto t0 = Clock::now();
  const std::uint64_t end = init.k + hp.iterations;
  out.state = std::move(init);
  while (out.state.k < end) {
    TrajectoryRow row = s2foba_step(oracle, out.state, hp);
    row.wall_ms = elapsed_ms(t0);
    if (observer) observer(out.state, row);
    out.rows.push_back(row);
  }
  return out;
}

Stage2Result train_stage2(BilevelOracle& oracle, std::span<const double> control, std::vector<double> state,
                          const AdamParams& adam) {
  adam.validate();
  if (state.size() != oracle.state_size() || control.size() != oracle.control_size())
    throw ad::InputError("stage 2: parameter sizes do not match the oracle");
  Adam opt(state.size(), adam);
  Stage2Result out;
  out.rows.reserve(adam.iterations);
  std::vector<double> g(state.size());
  const auto t0 = Clock::now();
  for (std::uint64_t k = 0; k < adam.iterations; ++k) {
    ++g_training_calls;
    oracle.resample(kStage2StreamBase + k);
    const LossEstimate loss = oracle.state_gradient(state, control, 0.0, 1.0, g);
    opt.step(state, g);
    if (!healthy(state, 1e6) || !std::isfinite(loss.lower))
      throw TrainingDiverged(k, norm2(state), norm2(control), 0.0);
    out.rows.push_back({k, loss.upper, loss.lower, adam.lr, 0.0, 0.0, 0.0, elapsed_ms(t0)});
  }
  out.state = std::move(state);
  return out;
}

SingleLevelResult train_single_level(BilevelOracle& oracle, std::vector<double> state,
                                     std::vector<double> control, double w, const HyperParams& hp) {
  hp.validate();
  if (!(w > 0.0) || !std::isfinite(w)) throw ad::InputError("single-level weight must be positive");
  if (state.size() != oracle.state_size() || control.size() != oracle.control_size())
    throw ad::InputError("single level: parameter sizes do not match the oracle");
  SingleLevelResult out;
  out.rows.reserve(hp.iterations);
  std::vector<double> gy(state.size()), gu(control.size());
  const auto t0 = Clock::now();
  for (std::uint64_t k = 0; k < hp.iterations; ++k) {
    ++g_training_calls;
    const double alpha = hp.steps.alpha(k);
    const double beta = hp.steps.beta(k);
    oracle.resample(k);
    const LossEstimate loss = oracle.state_gradient(state, control, 1.0, w, gy);
    const StateTerm term{state, 1.0, w};
    oracle.control_gradient({&term, 1}, control, gu);
    for (std::size_t i = 0; i < state.size(); ++i) state[i] -= alpha * gy[i];
    for (std::size_t i = 0; i < control.size(); ++i) control[i] -= beta * gu[i];
    if (!healthy(state, hp.divergence_limit) || !healthy(control, hp.divergence_limit))
      throw TrainingDiverged(k, norm2(state), norm2(control), 0.0);
    out.rows.push_back({k, loss.upper, loss.lower, alpha, beta, 0.0, 0.0, elapsed_ms(t0)});
  }
  out.state = std::move(state);
  out.control = std::move(control);
  return out;
}

MeritRecord merit_diagnostics(BilevelOracle& oracle, const TrainState& s, const HyperParams& hp,
                              std::uint64_t probe_stream) {
  check_sizes(oracle, s);
  oracle.resample(probe_stream);
  const LossEstimate at_theta = oracle.evaluate(s.state, s.control);
  std::vector<double> gz(s.aux.size());
  const LossEstimate at_z = oracle.state_gradient(s.aux, s.control, 0.0, 1.0, gz);
  double dist2 = 0.0, res2 = 0.0;
  for (std::size_t i = 0; i < gz.size(); ++i) {
    const double d = s.aux[i] - s.state[i];
    dist2 += d * d;
    const double r = gz[i] + d / hp.gamma;
    res2 += r * r;
  }
  MeritRecord m;
  m.upper = at_theta.upper;
  m.lower = at_theta.lower;
  m.envelope_hat = at_z.lower + dist2 / (2.0 * hp.gamma);
  m.phi_hat = at_theta.upper / hp.penalty.at(s.k) + at_theta.lower - m.envelope_hat;
  m.prox_residual = std::sqrt(res2);
  return m;
}

}  // namespace obstacle::opt
