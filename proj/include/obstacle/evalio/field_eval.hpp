#pragma once

#include <span>
#include <vector>

#include "obstacle/networks/network.hpp"
#include "obstacle/oracle/grid.hpp"
#include "obstacle/problems/problem.hpp"

namespace obstacle::evalio {

struct EmbeddedValue {
  double state = 0.0;
  double control = 0.0;  // distributed control, or the obstacle for obstacle control
};

/// Pointwise embedded fields of a trained pair; pure, safe to share between
/// threads.
class FieldEvaluator {
 public:
  FieldEvaluator(problems::ProblemSpec problem, net::NetworkSpec state_spec, std::vector<double> state,
                 net::NetworkSpec control_spec, std::vector<double> control);

  EmbeddedValue at(problems::Point x) const;
  double state(problems::Point x) const { return at(x).state; }
  double control(problems::Point x) const { return at(x).control; }
  const problems::ProblemSpec& problem() const { return problem_; }

 private:
  problems::ProblemSpec problem_;
  net::NetworkSpec state_spec_;
  net::NetworkSpec control_spec_;
  std::vector<double> state_;
  std::vector<double> control_;
};

struct GridFields {
  oracle::GridField state;
  oracle::GridField control;
};

/// Network values at every interior node of the N-grid (OpenMP over nodes).
GridFields evaluate_on_grid(const FieldEvaluator& f, int n);

}  // namespace obstacle::evalio
