#include "obstacle/oracle/pdas.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <string>

namespace obstacle::oracle {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

struct Stencil {
  double center, east, west, north, south;  // east/west step x1, north/south step x2
};

Stencil stencil(int n, const GridOperator& op) {
  const double h = 1.0 / n;
  const double d = 1.0 / (h * h);
  const double b1 = op.convection[0] / (2.0 * h), b2 = op.convection[1] / (2.0 * h);
  return {4.0 * d, -d + b1, -d - b1, -d + b2, -d - b2};
}

// Restricts K to the unknowns with map[k] >= 0; known values (fixed) move to
// the right-hand side.
SpMat reduced_matrix(int n, const Stencil& s, const std::vector<int>& map, int unknowns) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(unknowns) * 5);
  const GridField shape(n);
  for (int i = 1; i < n; ++i)
    for (int j = 1; j < n; ++j) {
      const int r = map[shape.index(i, j)];
      if (r < 0) continue;
      t.emplace_back(r, r, s.center);
      auto add = [&](int ii, int jj, double w) {
        if (ii <= 0 || jj <= 0 || ii >= n || jj >= n) return;
        const int c = map[shape.index(ii, jj)];
        if (c >= 0) t.emplace_back(r, c, w);
      };
      add(i + 1, j, s.east);
      add(i - 1, j, s.west);
      add(i, j + 1, s.north);
      add(i, j - 1, s.south);
    }
  SpMat a(unknowns, unknowns);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

Eigen::VectorXd solve_system(const SpMat& a, const Eigen::VectorXd& b, int n, const SolveOptions& opt) {
  if (a.rows() == 0) return {};
  Eigen::VectorXd x;
  if (n <= opt.direct_limit) {
    if (opt.op.symmetric()) {
      Eigen::SimplicialLDLT<SpMat> f(a);
      if (f.info() != Eigen::Success) throw OracleError("sparse LDLT factorization failed");
      x = f.solve(b);
    } else {
      Eigen::SparseLU<SpMat> f;
      f.analyzePattern(a);
      f.factorize(a);
      if (f.info() != Eigen::Success) throw OracleError("sparse LU factorization failed");
      x = f.solve(b);
    }
  } else if (opt.op.symmetric()) {
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
    cg.setTolerance(opt.krylov_tolerance);
    cg.setMaxIterations(20 * a.rows());
    cg.compute(a);
    x = cg.solve(b);
    if (cg.info() != Eigen::Success) throw OracleError("conjugate gradient did not converge");
  } else {
    Eigen::BiCGSTAB<SpMat, Eigen::DiagonalPreconditioner<double>> bi;
    bi.setTolerance(opt.krylov_tolerance);
    bi.setMaxIterations(20 * a.rows());
    bi.compute(a);
    x = bi.solve(b);
    if (bi.info() != Eigen::Success) throw OracleError("BiCGSTAB did not converge");
  }
  if (!x.allFinite()) throw OracleError("linear solve produced non-finite values");
  return x;
}

// Solves K y = rhs on the nodes with fixed[k] == false, y = value on the rest.
GridField constrained_solve(const GridField& rhs, const std::vector<char>& fixed, const GridField& value,
                            const SolveOptions& opt) {
  const int n = rhs.n;
  std::vector<int> map(rhs.size(), -1);
  int unknowns = 0;
  for (std::size_t k = 0; k < rhs.size(); ++k)
    if (!fixed[k]) map[k] = unknowns++;
  const Stencil s = stencil(n, opt.op);
  Eigen::VectorXd b(unknowns);
  for (int i = 1; i < n; ++i)
    for (int j = 1; j < n; ++j) {
      const int r = map[rhs.index(i, j)];
      if (r < 0) continue;
      double v = rhs.at(i, j);
      auto known = [&](int ii, int jj, double w) {
        if (ii <= 0 || jj <= 0 || ii >= n || jj >= n) return;
        const std::size_t k = rhs.index(ii, jj);
        if (fixed[k]) v -= w * value.values[k];
      };
      known(i + 1, j, s.east);
      known(i - 1, j, s.west);
      known(i, j + 1, s.north);
      known(i, j - 1, s.south);
      b(r) = v;
    }
  const Eigen::VectorXd x = solve_system(reduced_matrix(n, s, map, unknowns), b, n, opt);
  GridField y(n);
  for (std::size_t k = 0; k < rhs.size(); ++k) y.values[k] = fixed[k] ? value.values[k] : x(map[k]);
  return y;
}

}  // namespace

GridField GridOperator::apply(const GridField& y) const {
  const Stencil s = stencil(y.n, *this);
  GridField out(y.n);
  for (int i = 1; i < y.n; ++i)
    for (int j = 1; j < y.n; ++j)
      out.at(i, j) = s.center * y.at(i, j) + s.east * y.padded(i + 1, j) + s.west * y.padded(i - 1, j) +
                     s.north * y.padded(i, j + 1) + s.south * y.padded(i, j - 1);
  return out;
}

GridField poisson_solve(const GridField& rhs, const SolveOptions& opt) {
  const std::vector<char> none(rhs.size(), 0);
  return constrained_solve(rhs, none, GridField(rhs.n), opt);
}

PdasResult pdas_solve(const GridField& psi, const GridField& rhs, const PdasOptions& opt) {
  require_same_grid(psi, rhs);
  if (!(opt.c > 0.0)) throw OracleError("PDAS constant c must be positive");
  if (rhs.n < 4) throw OracleError("PDAS needs N >= 4, got " + std::to_string(rhs.n));
  const std::size_t nn = rhs.size();
  PdasResult r;
  r.lambda = GridField(rhs.n);
  r.y = poisson_solve(rhs, opt.solve);
  std::vector<char> active(nn, 0);
  for (std::size_t k = 0; k < nn; ++k) active[k] = opt.c * (psi.values[k] - r.y.values[k]) > 0.0;
  for (int sweep = 1;; ++sweep) {
    if (sweep > opt.max_sweeps) {
      std::size_t changed = 0;
      for (std::size_t k = 0; k < nn; ++k)
        changed += active[k] != (r.lambda.values[k] + opt.c * (psi.values[k] - r.y.values[k]) > 0.0);
      throw OracleError("PDAS did not terminate in " + std::to_string(opt.max_sweeps) +
                        " sweeps; active set still changing at " + std::to_string(changed) + " nodes");
    }
    r.y = constrained_solve(rhs, active, psi, opt.solve);
    const GridField ky = opt.solve.op.apply(r.y);
    for (std::size_t k = 0; k < nn; ++k) r.lambda.values[k] = active[k] ? ky.values[k] - rhs.values[k] : 0.0;
    r.iterations = sweep;
    bool same = true;
    std::vector<char> next(nn);
    for (std::size_t k = 0; k < nn; ++k) {
      next[k] = r.lambda.values[k] + opt.c * (psi.values[k] - r.y.values[k]) > 0.0;
      same = same && next[k] == active[k];
    }
    if (same) {
      double rhs_max = 0.0, res = 0.0;
      r.min_active_multiplier = 0.0;
      r.active = 0;
      r.active_violation = 0.0;
      bool first = true;
      for (std::size_t k = 0; k < nn; ++k) {
        rhs_max = std::max(rhs_max, std::abs(rhs.values[k]));
        if (active[k]) {
          ++r.active;
          r.min_active_multiplier = first ? r.lambda.values[k] : std::min(r.min_active_multiplier, r.lambda.values[k]);
          r.active_violation = std::max(r.active_violation, std::abs(r.y.values[k] - psi.values[k]));
          first = false;
        } else {
          res = std::max(res, std::abs(ky.values[k] - rhs.values[k]));
        }
      }
      r.inactive_residual = rhs_max > 0.0 ? res / rhs_max : res;
      return r;
    }
    active.swap(next);
  }
}

PdasResult pdas_solve_upper(const GridField& psi, const GridField& rhs, const PdasOptions& opt) {
  GridField mpsi = psi, mrhs = rhs;
  for (double& v : mpsi.values) v = -v;
  for (double& v : mrhs.values) v = -v;
  PdasResult r = pdas_solve(mpsi, mrhs, opt);
  for (double& v : r.y.values) v = -v;
  return r;
}

}  // namespace obstacle::oracle
