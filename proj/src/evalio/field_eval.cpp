#include "obstacle/evalio/field_eval.hpp"

#include "obstacle/problems/integrands.hpp"

namespace obstacle::evalio {

FieldEvaluator::FieldEvaluator(problems::ProblemSpec problem, net::NetworkSpec state_spec,
                               std::vector<double> state, net::NetworkSpec control_spec,
                               std::vector<double> control)
    : problem_(std::move(problem)),
      state_spec_(state_spec),
      control_spec_(control_spec),
      state_(std::move(state)),
      control_(std::move(control)) {
  problem_.validate();
  state_spec_.validate();
  control_spec_.validate();
  if (state_spec_.embedding != problem_.state_embedding || control_spec_.embedding != problem_.control_embedding)
    throw ad::InputError("network embeddings do not match problem '" + problem_.id + "'");
  if (state_spec_.input_dim != problem_.domain.dim || control_spec_.input_dim != problem_.domain.dim)
    throw ad::InputError("network input dimension does not match problem '" + problem_.id + "'");
  net::check_params(state_spec_, state_.size());
  net::check_params(control_spec_, control_.size());
}

EmbeddedValue FieldEvaluator::at(problems::Point x) const {
  const problems::SamplePoint s = problems::make_sample(problem_, x, 0);
  const auto rs = net::forward_jet<double>(state_spec_, state_, x, 0);
  const auto rc = net::forward_jet<double>(control_spec_, control_, x, 0);
  const auto f = problems::embed_fields<double>(problem_, s, rs, rc);
  return {f.state.value, f.control.value};
}

GridFields evaluate_on_grid(const FieldEvaluator& f, int n) {
  GridFields out{oracle::GridField(n), oracle::GridField(n)};
  const long side = static_cast<long>(out.state.side());
  const long total = side * side;
  std::exception_ptr error;
#pragma omp parallel for schedule(static)
  for (long k = 0; k < total; ++k) {
    try {
      const int i = static_cast<int>(k / side) + 1, j = static_cast<int>(k % side) + 1;
      const double x[2] = {out.state.coord(i), out.state.coord(j)};
      const EmbeddedValue v = f.at(x);
      out.state.values[static_cast<std::size_t>(k)] = v.state;
      out.control.values[static_cast<std::size_t>(k)] = v.control;
    } catch (...) {
#pragma omp critical(obstacle_grid_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace obstacle::evalio
