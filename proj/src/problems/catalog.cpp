#include <algorithm>
#include <cmath>
#include <numbers>

#include "obstacle/problems/problem.hpp"

namespace obstacle::problems {

namespace {

using J = SpatialJet<double>;

J coord(Point x, int i, int order) { return J::coordinate(x[static_cast<std::size_t>(i)], i, static_cast<int>(x.size()), order); }

J one(int dim, int order) { return J::constant(1.0, dim, order); }

J square_mask(Point x, int order) {
  const int d = static_cast<int>(x.size());
  J m = one(d, order);
  for (int i = 0; i < d; ++i) {
    const J xi = coord(x, i, order);
    m = m * (xi * (one(d, order) - xi));
  }
  return m;
}

J star_mask(Point x, int order) {
  const J x1 = coord(x, 0, order), x2 = coord(x, 1, order);
  const J q = x1 * x1 + x2 * x2;
  const J rho = star_radius(ad::polar_angle(x, order));
  return one(2, order) - q * ad::reciprocal(rho * rho);
}

J zero_field(Point x, int order) { return J::constant(0.0, static_cast<int>(x.size()), order); }

// t^3 - t^2 + t/4 = t (t - 1/2)^2 and its second derivative
double cubic(double t) { return t * t * t - t * t + 0.25 * t; }
double cubic_dd(double t) { return 6.0 * t - 2.0; }

bool in_support(Point x) { return x[0] > 0.0 && x[0] < 0.5 && x[1] > 0.0 && x[1] < 0.5; }

ProblemSpec unit_square_base(const std::string& id) {
  ProblemSpec p;
  p.id = id;
  p.domain.kind = DomainKind::unit_square;
  p.domain.dim = 2;
  p.mask = square_mask;
  p.obstacle = zero_field;
  return p;
}

}  // namespace

double star_radius(double zeta) {
  return 2.25 + 0.21 * std::sin(4.0 * zeta) + 0.18 * std::cos(6.0 * zeta) + 0.135 * std::cos(5.0 * zeta);
}

SpatialJet<double> star_radius(const SpatialJet<double>& zeta) {
  return shift(scale(ad::sin(scale(zeta, 4.0)), 0.21) + scale(ad::cos(scale(zeta, 6.0)), 0.18) +
                   scale(ad::cos(scale(zeta, 5.0)), 0.135),
               2.25);
}

bool Domain::contains(Point x) const {
  if (static_cast<int>(x.size()) != dim) return false;
  if (kind == DomainKind::unit_square)
    return std::all_of(x.begin(), x.end(), [](double v) { return v > 0.0 && v < 1.0; });
  const double r = std::hypot(x[0], x[1]);
  return r < radius(std::atan2(x[1], x[0]));
}

std::array<double, 2> Domain::box_lower() const {
  if (kind == DomainKind::unit_square) return {0.0, 0.0};
  // |rho_1| <= 2.25 + 0.21 + 0.18 + 0.135
  return {-2.775, -2.775};
}

std::array<double, 2> Domain::box_upper() const {
  if (kind == DomainKind::unit_square) return {1.0, 1.0};
  return {2.775, 2.775};
}

void ProblemSpec::validate() const {
  if (!(sigma > 0.0)) throw ProblemError("sigma must be > 0");
  if (!source || !target || !mask) throw ProblemError("problem '" + id + "' is missing field callbacks");
  if (!obstacle && !obstacle_is_control()) throw ProblemError("problem '" + id + "' has no obstacle");
  if (bounds && bounds->lower > bounds->upper) throw ProblemError("control bounds must satisfy u_a <= u_b");
  if (control_embedding == net::Embedding::control_clamp && !bounds)
    throw ProblemError("clamped control embedding needs bounds");
  if (obstacle_is_control() && state_embedding != net::Embedding::state_below_obstacle)
    throw ProblemError("obstacle control needs the state_below_obstacle embedding");
  if (lower == LowerLossKind::evi_residual && !(evi.tau > 0.0)) throw ProblemError("EVI tau must be > 0");
}

namespace example1 {

double exact_state(Point x) {
  if (!in_support(x)) return 0.0;
  return 160.0 * kScale * cubic(x[0]) * cubic(x[1]);
}

double multiplier(Point x) {
  return std::max(0.0, -2.0 * std::abs(x[0] - 0.8) - 2.0 * std::abs(x[0] * x[1] - 0.3) + 0.5);
}

double laplacian_exact(Point x) {
  if (!in_support(x)) return 0.0;
  return 160.0 * kScale * (cubic_dd(x[0]) * cubic(x[1]) + cubic(x[0]) * cubic_dd(x[1]));
}

double source(Point x) { return -laplacian_exact(x) - exact_state(x) - multiplier(x); }
double target(Point x) { return exact_state(x) + multiplier(x) - laplacian_exact(x); }

}  // namespace example1

std::vector<std::string> catalog_ids() {
  return {"example1", "example1_constrained", "example2", "example3", "example4", "example5"};
}

ProblemSpec catalog(const std::string& id) {
  if (id == "example1" || id == "example1_constrained") {
    ProblemSpec p = unit_square_base(id);
    p.sigma = 1.0;
    p.source = example1::source;
    p.target = example1::target;
    if (id == "example1") {
      p.exact_state = example1::exact_state;
      p.exact_control = example1::exact_state;
    } else {
      p.bounds = ControlBounds{0.0, 0.7};
      p.control_embedding = net::Embedding::control_clamp;
    }
    return p;
  }
  if (id == "example2") {
    ProblemSpec p = unit_square_base(id);
    p.sigma = 0.02;
    p.source = [](Point x) { return -5.0 * std::abs(x[0] * x[1] - 0.5) + 1.25; };
    p.target = p.source;
    return p;
  }
  if (id == "example3") {
    ProblemSpec p;
    p.id = id;
    p.domain.kind = DomainKind::star;
    p.domain.dim = 2;
    p.domain.radius = [](double z) { return star_radius(z); };
    p.sigma = 1.0;
    p.source = [](Point) { return 2.0; };
    p.target = p.source;
    p.mask = star_mask;
    p.obstacle = [](Point x, int order) { return scale(star_mask(x, order), 3.0); };
    p.state_embedding = net::Embedding::state_relu;
    p.control_embedding = net::Embedding::control_raw;
    return p;
  }
  if (id == "example4") {
    ProblemSpec p = unit_square_base(id);
    p.sigma = 0.5;
    p.source = [](Point x) { return (x[1] > 0.25 && x[1] < 0.65) ? -100.0 : 150.0; };
    p.target = [](Point) { return 5.0; };
    p.obstacle = nullptr;
    p.state_embedding = net::Embedding::state_below_obstacle;
    p.control_embedding = net::Embedding::obstacle_raw;
    return p;
  }
  if (id == "example5") {
    ProblemSpec p = unit_square_base(id);
    p.sigma = 0.01;
    p.source = [](Point x) { return 10.0 * (std::sin(2.0 * std::numbers::pi * x[1]) + x[0]); };
    p.target = [](Point x) { return x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]); };
    p.lower = LowerLossKind::evi_residual;
    p.evi.tau = 0.01;
    p.evi.scale = 10.0;
    p.evi.convection = {1.0, -1.0, 0.0};
    return p;
  }
  throw ProblemError("unknown example id '" + id + "'");
}

ExampleDefaults example_defaults(const std::string& id) {
  const auto ids = catalog_ids();
  if (std::find(ids.begin(), ids.end(), id) == ids.end())
    throw ProblemError("unknown example id '" + id + "'");
  ExampleDefaults d;
  if (id == "example2") d.gamma = 500.0;
  if (id == "example3") {
    d.gamma = 50.0;
    d.c_exp = 0.2;
  }
  if (id == "example4") {
    d.gamma = 50.0;
    d.c0 = 0.2;
    d.c_exp = 0.2;
    d.iterations = 10000;
  }
  if (id == "example5") {
    d.gamma = 200000.0;
    d.step = 2e-4;
  }
  return d;
}

}  // namespace obstacle::problems
