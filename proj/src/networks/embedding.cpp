#include "obstacle/networks/embedding.hpp"

namespace obstacle::net {

double embed_state(const NetworkSpec& spec, std::span<const double> theta, std::span<const double> x,
                   double obstacle, double mask) {
  const auto raw = forward_jet<double>(spec, theta, x, 0);
  const auto m = SpatialJet<double>::constant(mask, spec.input_dim, 0);
  const auto psi = SpatialJet<double>::constant(obstacle, spec.input_dim, 0);
  return embed_state<double>(spec.embedding, raw, m, psi).value;
}

double embed_control(const NetworkSpec& spec, std::span<const double> theta, std::span<const double> x,
                     double lower, double upper) {
  const double raw = raw_forward(spec, theta, x);
  switch (spec.embedding) {
    case Embedding::control_raw: return raw;
    case Embedding::control_clamp: return clamp_control(raw, lower, upper);
    default:
      throw InputError("embedding '" + std::string(embedding_name(spec.embedding)) +
                       "' is not a control embedding");
  }
}

std::pair<double, double> embed_obstacle_control(const NetworkSpec& obstacle_spec,
                                                 std::span<const double> theta_obstacle,
                                                 const NetworkSpec& state_spec,
                                                 std::span<const double> theta_state,
                                                 std::span<const double> x, double mask) {
  const auto np = forward_jet<double>(obstacle_spec, theta_obstacle, x, 0);
  const auto ny = forward_jet<double>(state_spec, theta_state, x, 0);
  const auto m = SpatialJet<double>::constant(mask, obstacle_spec.input_dim, 0);
  const auto [psi, y] = embed_obstacle_control<double>(np, ny, m);
  return {psi.value, y.value};
}

}  // namespace obstacle::net
