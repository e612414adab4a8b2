#pragma once

#include <array>

#include "obstacle/oracle/grid.hpp"

namespace obstacle::oracle {

/// K = 5-point -Laplace / h^2 plus central differences of b . grad.
struct GridOperator {
  std::array<double, 2> convection{0.0, 0.0};

  bool symmetric() const { return convection[0] == 0.0 && convection[1] == 0.0; }
  GridField apply(const GridField& y) const;
};

struct SolveOptions {
  GridOperator op;
  /// Direct sparse factorization up to this N, preconditioned Krylov above.
  int direct_limit = 256;
  double krylov_tolerance = 1e-13;
};

/// K y = rhs with zero Dirichlet data.
GridField poisson_solve(const GridField& rhs, const SolveOptions& opt = {});

struct PdasOptions {
  SolveOptions solve;
  double c = 1.0;
  int max_sweeps = 100;
};

struct PdasResult {
  GridField y;
  GridField lambda;
  int iterations = 0;
  std::size_t active = 0;
  /// max |K y - rhs| over inactive nodes divided by max |rhs|.
  double inactive_residual = 0.0;
  /// min lambda over active nodes (0 if none are active).
  double min_active_multiplier = 0.0;
  /// max |y - psi| over active nodes.
  double active_violation = 0.0;
};

/// Solves K y - rhs = lambda, lambda >= 0, y >= psi, lambda (y - psi) = 0 by
/// the primal-dual active set method with
///   A_{k+1} = { lambda + c (psi - y) > 0 },
/// stopping when the active set repeats. Throws OracleError after
/// max_sweeps.
PdasResult pdas_solve(const GridField& psi, const GridField& rhs, const PdasOptions& opt = {});

/// Upper obstacle y <= psi via y' = -y.
PdasResult pdas_solve_upper(const GridField& psi, const GridField& rhs, const PdasOptions& opt = {});

}  // namespace obstacle::oracle
