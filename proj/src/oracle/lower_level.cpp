#include "obstacle/oracle/lower_level.hpp"

#include <cmath>

namespace obstacle::oracle {

namespace {

void require_square(const problems::ProblemSpec& p) {
  if (p.domain.kind != problems::DomainKind::unit_square)
    throw OracleError("grid oracle supports the unit square only (problem '" + p.id + "')");
}

}  // namespace

LowerLevelGrid lower_level_grid(const problems::ProblemSpec& p, const problems::ScalarField& control, int n) {
  require_square(p);
  if (!control) throw OracleError("grid oracle needs a control field");
  LowerLevelGrid g;
  if (p.lower == problems::LowerLossKind::evi_residual) g.op.convection = {p.evi.convection[0], p.evi.convection[1]};
  if (p.obstacle_is_control()) {
    g.upper = true;
    g.psi = GridField::sample(n, control);
    g.rhs = GridField::sample(n, p.source);
    return g;
  }
  g.psi = p.obstacle ? GridField::sample(n, [&](problems::Point x) { return p.obstacle(x, 0).value; })
                     : GridField(n, 0.0);
  g.rhs = GridField::sample(n, [&](problems::Point x) { return p.source(x) + control(x); });
  return g;
}

PdasResult lower_level_solve(const problems::ProblemSpec& p, const problems::ScalarField& control, int n,
                             PdasOptions opt) {
  const LowerLevelGrid g = lower_level_grid(p, control, n);
  opt.solve.op = g.op;
  return g.upper ? pdas_solve_upper(g.psi, g.rhs, opt) : pdas_solve(g.psi, g.rhs, opt);
}

double trapezoid(int n, const std::function<double(problems::Point)>& g) {
  if (n < 1) throw OracleError("trapezoid rule needs n >= 1");
  const double h = 1.0 / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double wi = (i == 0 || i == n) ? 0.5 : 1.0;
    double row = 0.0;
    for (int j = 0; j <= n; ++j) {
      const double wj = (j == 0 || j == n) ? 0.5 : 1.0;
      const double x[2] = {i * h, j * h};
      row += wj * g(x);
    }
    sum += wi * row;
  }
  return sum * h * h;
}

RecoveredObjective recovered_objective(const problems::ProblemSpec& p, const problems::ScalarField& control,
                                       int n, PdasOptions opt) {
  if (p.obstacle_is_control())
    throw OracleError("recovered objective is defined for distributed controls only");
  RecoveredObjective r;
  r.lower = lower_level_solve(p, control, n, opt);
  const GridField& y = r.lower.y;
  r.value = trapezoid(n, [&](problems::Point x) {
    const int i = static_cast<int>(std::lround(x[0] * n)), j = static_cast<int>(std::lround(x[1] * n));
    const double dy = y.padded(i, j) - p.target(x);
    const double u = control(x);
    return 0.5 * dy * dy + 0.5 * p.sigma * u * u;
  });
  return r;
}

double analytic_objective(const problems::ProblemSpec& p, int n) {
  if (!p.exact_state || !p.exact_control) throw OracleError("problem '" + p.id + "' has no closed-form pair");
  return trapezoid(n, [&](problems::Point x) {
    const double dy = p.exact_state(x) - p.target(x);
    const double u = p.exact_control(x);
    return 0.5 * dy * dy + 0.5 * p.sigma * u * u;
  });
}

}  // namespace obstacle::oracle
