#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "obstacle/autodiff/jet.hpp"
#include "obstacle/networks/network.hpp"

namespace obstacle::problems {

using ad::SpatialJet;
using Point = std::span<const double>;
using ScalarField = std::function<double(Point)>;
using JetField = std::function<SpatialJet<double>(Point, int order)>;

class ProblemError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class DomainKind { unit_square, star };

/// rho_1(zeta) = 2.25 + 0.21 sin 4z + 0.18 cos 6z + 0.135 cos 5z
double star_radius(double zeta);
SpatialJet<double> star_radius(const SpatialJet<double>& zeta);

struct Domain {
  DomainKind kind = DomainKind::unit_square;
  int dim = 2;
  std::function<double(double)> radius;  // star only

  bool contains(Point x) const;  // open domain
  /// Axis-aligned box used for rejection sampling.
  std::array<double, 2> box_lower() const;
  std::array<double, 2> box_upper() const;
};

enum class LowerLossKind { energy, evi_residual };

/// A y = -Laplace(y) + b . grad(y), the operator of the EVI lower level.
struct EviOperator {
  double tau = 0.01;
  double scale = 10.0;
  std::array<double, ad::kMaxDim> convection{};
};

struct ControlBounds {
  double lower = 0.0;
  double upper = 0.0;
};

struct ProblemSpec {
  std::string id;
  Domain domain;
  double sigma = 1.0;
  ScalarField source;  // f
  ScalarField target;  // y_d
  JetField obstacle;   // empty when the obstacle is itself a network
  JetField mask;       // m(x): zero on the boundary, positive inside
  std::optional<ControlBounds> bounds;
  LowerLossKind lower = LowerLossKind::energy;
  EviOperator evi;
  net::Embedding state_embedding = net::Embedding::state_square;
  net::Embedding control_embedding = net::Embedding::control_raw;
  // Closed-form optimal pair, when one is known.
  ScalarField exact_state;
  ScalarField exact_control;

  bool obstacle_is_control() const { return control_embedding == net::Embedding::obstacle_raw; }
  /// Jet order the state network must provide for the lower-level loss.
  int state_order() const { return lower == LowerLossKind::evi_residual ? 2 : 1; }
  /// Jet order of the control network (gradient regularizer for obstacle control).
  int control_order() const { return obstacle_is_control() ? 1 : 0; }
  void validate() const;
};

/// Recommended training setup for a catalog entry.
struct ExampleDefaults {
  double gamma = 20.0;
  double c0 = 5.0;
  double c_exp = 0.3;
  double step = 1e-3;
  long iterations = 20000;
};

std::vector<std::string> catalog_ids();
ProblemSpec catalog(const std::string& id);
ExampleDefaults example_defaults(const std::string& id);

// Closed forms of the first example, exposed for tests and oracles.
namespace example1 {
inline constexpr double kScale = 20.0;
double exact_state(Point x);     // y-dagger
double multiplier(Point x);      // xi-dagger
double laplacian_exact(Point x); // Laplace(y-dagger), analytic
double source(Point x);
double target(Point x);
}  // namespace example1

}  // namespace obstacle::problems
