#pragma once

// Residual MLP used for every state/control/obstacle network:
//
//   h_0     = W_lift x + b_lift                      (affine lift, no activation)
//   a       = phi(W_1 h + b_1)
//   h      <- h + phi(W_2 a + b_2)                   (one residual block, x blocks)
//   N(x)    = w_out . h + b_out
//
// Parameters live in one flat vector, layer-major; inside a layer the weight
// matrix comes first (row-major, out x in) followed by the bias.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "obstacle/autodiff/activation.hpp"
#include "obstacle/autodiff/jet.hpp"

namespace obstacle::net {

using ad::Activation;
using ad::InputError;
using ad::SpatialJet;

using ParamVector = std::vector<double>;

enum class Embedding {
  state_square,          // y = m N^2 + psi
  state_relu,            // y = relu(N m - psi) + psi
  control_raw,           // u = N
  control_clamp,         // u = clip(N, u_a, u_b) via two ReLUs
  obstacle_raw,          // psi = m N
  state_below_obstacle,  // y = -relu(psi - m N) + psi
};

Embedding embedding_from_name(std::string_view name);
std::string_view embedding_name(Embedding e);

struct NetworkSpec {
  int input_dim = 2;
  int blocks = 3;
  int width = 16;
  Activation activation = Activation::swish;
  Embedding embedding = Embedding::state_square;
  std::uint64_t seed = 0;

  std::size_t param_count() const;
  void validate() const;
  bool same_architecture(const NetworkSpec& other) const;
};

/// Offsets of one dense layer inside the flat parameter vector.
struct DenseLayout {
  std::size_t weights = 0;  // rows x cols, row-major
  std::size_t bias = 0;
  int rows = 0;
  int cols = 0;
};

struct NetworkLayout {
  DenseLayout lift;
  std::vector<DenseLayout> hidden;  // 2 per block, in order
  DenseLayout output;
  std::size_t total = 0;
};

NetworkLayout layout_of(const NetworkSpec& spec);

/// Xavier-uniform weights, zero biases; deterministic in spec.seed.
ParamVector init_xavier(const NetworkSpec& spec);

/// Reference forward pass carrying spatial jets. Serial and generic in the
/// scalar type: with T = ad::Var the returned jet is differentiable in theta.
template <class T>
SpatialJet<T> forward_jet(const NetworkSpec& spec, std::span<const T> theta,
                          std::span<const double> x, int order);

/// Plain value of the raw network N(x; theta).
double raw_forward(const NetworkSpec& spec, std::span<const double> theta,
                   std::span<const double> x);

/// Raw value and spatial derivatives as plain doubles.
SpatialJet<double> eval_with_spatial_jet(const NetworkSpec& spec, std::span<const double> theta,
                                         std::span<const double> x, int order);

void check_input(const NetworkSpec& spec, std::span<const double> x);
void check_params(const NetworkSpec& spec, std::size_t size);

extern template SpatialJet<double> forward_jet<double>(const NetworkSpec&, std::span<const double>,
                                                       std::span<const double>, int);
extern template SpatialJet<ad::Var> forward_jet<ad::Var>(const NetworkSpec&,
                                                         std::span<const ad::Var>,
                                                         std::span<const double>, int);

}  // namespace obstacle::net
