#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "obstacle/evalio/metrics.hpp"
#include "obstacle/oracle/lower_level.hpp"
#include "obstacle/oracle/pdas.hpp"
#include "obstacle/problems/problem.hpp"

using namespace obstacle;
using oracle::GridField;

namespace {

double max_abs(const GridField& g) {
  double m = 0.0;
  for (double v : g.values) m = std::max(m, std::abs(v));
  return m;
}

GridField linear_combination(double a, const GridField& x, double b, const GridField& y) {
  GridField out(x.n);
  for (std::size_t i = 0; i < x.size(); ++i) out.values[i] = a * x.values[i] + b * y.values[i];
  return out;
}

void check_kkt(const oracle::PdasResult& r, const GridField& psi) {
  CHECK(r.inactive_residual <= 1e-10);
  CHECK(r.min_active_multiplier >= -1e-10);
  CHECK(r.active_violation == 0.0);
  for (std::size_t i = 0; i < psi.size(); ++i) {
    CHECK(r.y.values[i] >= psi.values[i] - 1e-12);
    CHECK(r.lambda.values[i] * (r.y.values[i] - psi.values[i]) == 0.0);
  }
}

}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("grid layout") {
    GridField g(4);
    CHECK(g.size() == 9);
    CHECK(g.side() == 3);
    CHECK(g.index(1, 1) == 0);
    CHECK(g.index(1, 3) == 2);
    CHECK(g.index(2, 1) == 3);
    CHECK(g.coord(2) == 0.5);
    g.at(2, 3) = 7.0;
    CHECK(g.padded(2, 3) == 7.0);
    CHECK(g.padded(0, 3) == 0.0);
    CHECK(g.padded(4, 1) == 0.0);
    CHECK(GridField(1).size() == 0);
    CHECK_THROWS_AS(GridField(0), oracle::OracleError);
    const auto s = GridField::sample(4, [](std::span<const double> x) { return 10 * x[0] + x[1]; });
    CHECK(s.at(1, 3) == doctest::Approx(2.5 + 0.75));
    CHECK_THROWS_AS(oracle::require_same_grid(GridField(4), GridField(8)), oracle::OracleError);
  }

  TEST_CASE("poisson: manufactured solution converges at second order") {
    double prev = 0.0;
    for (int n : {16, 32, 64}) {
      const auto rhs = GridField::sample(n, [](std::span<const double> x) {
        return 2.0 * std::numbers::pi * std::numbers::pi * std::sin(std::numbers::pi * x[0]) *
               std::sin(std::numbers::pi * x[1]);
      });
      const auto exact = GridField::sample(
          n, [](std::span<const double> x) { return std::sin(std::numbers::pi * x[0]) * std::sin(std::numbers::pi * x[1]); });
      const auto y = oracle::poisson_solve(rhs);
      const double err = max_abs(linear_combination(1.0, y, -1.0, exact));
      CHECK(err < 2.0 * (1.0 / n) * (1.0 / n));
      if (prev > 0.0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.05));
      prev = err;
      // residual
      const auto r = linear_combination(1.0, oracle::GridOperator{}.apply(y), -1.0, rhs);
      CHECK(max_abs(r) <= 1e-10 * max_abs(rhs));
    }
  }

  TEST_CASE("poisson: zero and linearity, iterative path included") {
    for (int limit : {256, 8}) {
      oracle::SolveOptions opt;
      opt.direct_limit = limit;
      CHECK(max_abs(oracle::poisson_solve(GridField(32), opt)) == 0.0);
      GridField rhs(32);
      const auto v = testing::random_vector(rhs.size(), 4);
      rhs.values = v;
      const auto y1 = oracle::poisson_solve(rhs, opt);
      const auto y3 = oracle::poisson_solve(linear_combination(3.0, rhs, 0.0, rhs), opt);
      CHECK(max_abs(linear_combination(3.0, y1, -1.0, y3)) <= 1e-10 * max_abs(y3));
    }
    // direct and iterative agree
    GridField rhs(24, 1.0);
    oracle::SolveOptions it;
    it.direct_limit = 4;
    CHECK(max_abs(linear_combination(1.0, oracle::poisson_solve(rhs), -1.0, oracle::poisson_solve(rhs, it))) < 1e-10);
  }

  TEST_CASE("convection operator: direct and BiCGSTAB agree") {
    oracle::SolveOptions a, b;
    a.op.convection = b.op.convection = {1.0, -1.0};
    b.direct_limit = 4;
    GridField rhs(32);
    rhs.values = testing::random_vector(rhs.size(), 6);
    const auto ya = oracle::poisson_solve(rhs, a), yb = oracle::poisson_solve(rhs, b);
    CHECK(max_abs(linear_combination(1.0, ya, -1.0, yb)) < 1e-9 * max_abs(ya));
    CHECK(max_abs(linear_combination(1.0, a.op.apply(ya), -1.0, rhs)) < 1e-10 * max_abs(rhs));
  }

  TEST_CASE("pdas: trivial cases") {
    GridField rhs(32, 5.0);
    const auto never = oracle::pdas_solve(GridField(32, -1e6), rhs);
    const auto free = oracle::poisson_solve(rhs);
    CHECK(max_abs(linear_combination(1.0, never.y, -1.0, free)) <= 1e-12 * max_abs(free));
    CHECK(never.active == 0);
    const auto zero = oracle::pdas_solve(GridField(32), GridField(32));
    CHECK(max_abs(zero.y) == 0.0);
    CHECK(max_abs(zero.lambda) == 0.0);
    CHECK_THROWS_AS(oracle::pdas_solve(GridField(3), GridField(3)), oracle::OracleError);
    oracle::PdasOptions bad;
    bad.c = 0.0;
    CHECK_THROWS_AS(oracle::pdas_solve(GridField(8), GridField(8), bad), oracle::OracleError);
  }

  TEST_CASE("pdas: KKT conditions and finite termination on a contact problem") {
    for (int n : {16, 48}) {
      const auto psi = GridField::sample(n, [](std::span<const double> x) {
        return 0.05 - 2.0 * ((x[0] - 0.5) * (x[0] - 0.5) + (x[1] - 0.4) * (x[1] - 0.4));
      });
      GridField rhs(n, -3.0);
      const auto r = oracle::pdas_solve(psi, rhs);
      CHECK(r.active > 0);
      CHECK(r.active < psi.size());
      CHECK(r.iterations < 100);
      check_kkt(r, psi);
      // the constrained state dominates the unconstrained one
      const auto free = oracle::poisson_solve(rhs);
      for (std::size_t i = 0; i < free.size(); ++i) CHECK(r.y.values[i] >= free.values[i] - 1e-12);
    }
  }

  TEST_CASE("pdas: upper obstacle") {
    const int n = 32;
    GridField psi(n, 0.01), rhs(n, 10.0);
    const auto r = oracle::pdas_solve_upper(psi, rhs);
    CHECK(r.active > 0);
    for (std::size_t i = 0; i < psi.size(); ++i) CHECK(r.y.values[i] <= psi.values[i] + 1e-12);
  }

  TEST_CASE("pdas: sweep limit is an error") {
    const auto psi = GridField::sample(32, [](std::span<const double> x) { return 0.3 - std::abs(x[0] - 0.5); });
    oracle::PdasOptions opt;
    opt.max_sweeps = 1;
    CHECK_THROWS_AS(oracle::pdas_solve(psi, GridField(32, -50.0), opt), oracle::OracleError);
  }

  TEST_CASE("example 1: grid refinement against the analytic state") {
    const auto p = problems::catalog("example1");
    std::vector<double> errs;
    for (int n : {32, 64, 128}) {
      const auto r = oracle::lower_level_solve(p, p.exact_control, n);
      check_kkt(r, GridField(n));
      errs.push_back(evalio::relative_l2(r.y, GridField::sample(n, p.exact_state)));
    }
    MESSAGE("errors " << errs[0] << " " << errs[1] << " " << errs[2]);
    CHECK(errs[1] <= errs[0]);
    CHECK(errs[2] <= errs[1]);
    const double factor = errs[1] / errs[2];
    CHECK(factor >= 1.5);
    CHECK(factor <= 4.5);
  }

  TEST_CASE("recovered objective") {
    const auto p = problems::catalog("example1");
    const problems::ScalarField zero = [](problems::Point) { return 0.0; };
    const auto r0 = oracle::recovered_objective(p, zero, 64);
    // J = 1/2 |y0 - y_d|^2 with y0 the PDAS state under f alone
    const auto y0 = oracle::lower_level_solve(p, zero, 64).y;
    const double manual = oracle::trapezoid(64, [&](problems::Point x) {
      const int i = static_cast<int>(std::lround(x[0] * 64)), j = static_cast<int>(std::lround(x[1] * 64));
      const double d = y0.padded(i, j) - p.target(x);
      return 0.5 * d * d;
    });
    CHECK(r0.value == doctest::Approx(manual).epsilon(1e-12));
    CHECK(r0.value >= 0.0);
    CHECK(oracle::trapezoid(16, [](problems::Point x) { return x[0] * x[1]; }) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK_THROWS_AS(oracle::recovered_objective(problems::catalog("example4"), zero, 16), oracle::OracleError);
    CHECK_THROWS_AS(oracle::lower_level_grid(problems::catalog("example3"), zero, 16), oracle::OracleError);
  }

  TEST_CASE("lower-level grids of the catalog problems terminate") {
    const problems::ScalarField zero = [](problems::Point) { return 0.0; };
    for (const std::string id : {"example2", "example5"}) {
      const auto p = problems::catalog(id);
      const auto r = oracle::lower_level_solve(p, zero, 64);
      CHECK(r.inactive_residual <= 1e-10);
      for (double v : r.y.values) CHECK(v >= -1e-12);
    }
    const auto p4 = problems::catalog("example4");
    const problems::ScalarField bump = [](problems::Point x) { return 2.0 * x[0] * (1 - x[0]) * x[1] * (1 - x[1]); };
    const auto g = oracle::lower_level_grid(p4, bump, 32);
    CHECK(g.upper);
    const auto r = oracle::lower_level_solve(p4, bump, 32);
    for (std::size_t i = 0; i < r.y.size(); ++i) CHECK(r.y.values[i] <= g.psi.values[i] + 1e-12);
  }
}
