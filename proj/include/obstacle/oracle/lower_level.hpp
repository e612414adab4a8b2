#pragma once

// Grid version of a catalog problem's lower level, for a given control.
// Unit square only; the star domain has no Cartesian discretization here.

#include <functional>

#include "obstacle/oracle/pdas.hpp"
#include "obstacle/problems/problem.hpp"

namespace obstacle::oracle {

struct LowerLevelGrid {
  GridField psi;
  GridField rhs;
  bool upper = false;  // y <= psi (obstacle control) instead of y >= psi
  GridOperator op;
};

/// `control` is the distributed control u, or the obstacle psi when the
/// problem controls the obstacle.
LowerLevelGrid lower_level_grid(const problems::ProblemSpec& p, const problems::ScalarField& control, int n);

PdasResult lower_level_solve(const problems::ProblemSpec& p, const problems::ScalarField& control, int n,
                             PdasOptions opt = {});

/// Composite trapezoid rule on the (n+1)^2 nodes of the unit square.
double trapezoid(int n, const std::function<double(problems::Point)>& g);

struct RecoveredObjective {
  double value = 0.0;
  PdasResult lower;
};

/// J(y_h(u), u) with y_h the PDAS grid state for control u (zero on the
/// boundary), integrated by the trapezoid rule on the same grid.
RecoveredObjective recovered_objective(const problems::ProblemSpec& p, const problems::ScalarField& control,
                                       int n, PdasOptions opt = {});

/// J(y*, u*) from the closed-form pair by the trapezoid rule at resolution n.
double analytic_objective(const problems::ProblemSpec& p, int n);

}  // namespace obstacle::oracle
