#include "obstacle/optimizer/quadratic_fixture.hpp"

#include <random>

#include "obstacle/autodiff/tape.hpp"
#include "obstacle/problems/sampler.hpp"

namespace obstacle::opt {

namespace {

using Vec = QuadraticFixture::Vec;
using ConstMap = Eigen::Map<const Eigen::VectorXd>;
using Map = Eigen::Map<Eigen::VectorXd>;

ConstMap view(std::span<const double> v) { return {v.data(), static_cast<Eigen::Index>(v.size())}; }

}  // namespace

Vec to_vec(std::span<const double> v) { return view(v); }

QuadraticFixture::QuadraticFixture(std::size_t dim, std::uint64_t seed, double noise)
    : noise_(noise), seed_(seed) {
  if (dim < 1) throw ad::InputError("fixture dimension must be >= 1");
  auto rng = problems::stream_rng(seed, 0);
  const auto n = static_cast<Eigen::Index>(dim);
  m_.resize(n, n);
  a_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m_(i, j) = 2.0 * problems::unit_uniform(rng) - 1.0;
  for (Eigen::Index i = 0; i < n; ++i) a_(i) = 2.0 * problems::unit_uniform(rng) - 1.0;
  xi_ = Vec::Zero(n);
  zeta_ = Vec::Zero(n);
}

QuadraticFixture::QuadraticFixture(Eigen::MatrixXd m, Vec a, double noise, std::uint64_t seed)
    : m_(std::move(m)), a_(std::move(a)), noise_(noise), seed_(seed) {
  if (a_.size() != m_.rows()) throw ad::InputError("fixture: a must have as many entries as M has rows");
  xi_ = Vec::Zero(m_.rows());
  zeta_ = Vec::Zero(m_.rows());
}

void QuadraticFixture::resample(std::uint64_t stream) {
  if (noise_ == 0.0) return;
  auto rng = problems::stream_rng(seed_ ^ 0x5eedULL, stream);
  std::normal_distribution<double> g(0.0, noise_);
  for (Eigen::Index i = 0; i < xi_.size(); ++i) xi_(i) = g(rng);
  for (Eigen::Index i = 0; i < zeta_.size(); ++i) zeta_(i) = g(rng);
}

LossEstimate QuadraticFixture::evaluate(std::span<const double> state, std::span<const double> control) {
  const Vec y = view(state), u = view(control);
  return {0.5 * (y - a_ - zeta_).squaredNorm() + 0.5 * u.squaredNorm(), 0.5 * (y - m_ * u - xi_).squaredNorm()};
}

LossEstimate QuadraticFixture::state_gradient(std::span<const double> state, std::span<const double> control,
                                              double wu, double wl, std::span<double> grad) {
  const Vec y = view(state), u = view(control);
  const Vec ru = y - a_ - zeta_;
  const Vec rl = y - m_ * u - xi_;
  Map(grad.data(), static_cast<Eigen::Index>(grad.size())) = wu * ru + wl * rl;
  return {0.5 * ru.squaredNorm() + 0.5 * u.squaredNorm(), 0.5 * rl.squaredNorm()};
}

void QuadraticFixture::control_gradient(std::span<const StateTerm> terms, std::span<const double> control,
                                        std::span<double> grad) {
  const Vec u = view(control);
  Vec g = Vec::Zero(u.size());
  for (const StateTerm& t : terms) {
    const Vec y = view(t.state);
    g += t.upper_weight * u - t.lower_weight * (m_.transpose() * (y - m_ * u - xi_));
  }
  Map(grad.data(), static_cast<Eigen::Index>(grad.size())) = g;
}

double QuadraticFixture::lower(const Vec& y, const Vec& u) const { return 0.5 * (y - m_ * u).squaredNorm(); }

double QuadraticFixture::upper(const Vec& y, const Vec& u) const {
  return 0.5 * (y - a_).squaredNorm() + 0.5 * u.squaredNorm();
}

Vec QuadraticFixture::prox_point(const Vec& y, const Vec& u, double gamma) const {
  return (gamma * (m_ * u) + y) / (1.0 + gamma);
}

double QuadraticFixture::envelope(const Vec& y, const Vec& u, double gamma) const {
  return (y - m_ * u).squaredNorm() / (2.0 * (1.0 + gamma));
}

std::pair<Vec, Vec> QuadraticFixture::envelope_gradient(const Vec& y, const Vec& u, double gamma,
                                                        bool flip_sign) const {
  const Vec z = prox_point(y, u, gamma);
  Vec gy = (y - z) / gamma;
  if (flip_sign) gy = -gy;
  const Vec gu = -(m_.transpose() * (z - m_ * u));
  return {gy, gu};
}

double QuadraticFixture::phi(double c, const Vec& y, const Vec& u, double gamma) const {
  return upper(y, u) / c + lower(y, u) - envelope(y, u, gamma);
}

std::pair<Vec, Vec> QuadraticFixture::phi_gradient(double c, const Vec& y, const Vec& u, double gamma) const {
  const auto [ey, eu] = envelope_gradient(y, u, gamma);
  const Vec r = y - m_ * u;
  const Vec gy = (y - a_) / c + r - ey;
  const Vec gu = u / c - m_.transpose() * r - eu;
  return {gy, gu};
}

double QuadraticFixture::lipschitz_lower() const {
  const double s = m_.jacobiSvd().singularValues()(0);
  return 1.0 + s * s;
}

double QuadraticFixture::merit(double c, const Vec& y, const Vec& u, const Vec& z, double gamma) const {
  const double le = lipschitz_lower();
  const double cz = 6.0 * (1.0 + le * le) / (gamma - gamma * gamma * weak_convexity());
  return phi(c, y, u, gamma) + cz * (z - prox_point(y, u, gamma)).squaredNorm();
}

}  // namespace obstacle::opt
