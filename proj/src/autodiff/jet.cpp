#include "obstacle/autodiff/jet.hpp"

#include <stdexcept>
#include <string>

#include "obstacle/autodiff/activation.hpp"

namespace obstacle::ad {

SpatialJet<double> polar_angle(std::span<const double> x, int order) {
  if (x.size() != 2) throw InputError("polar_angle needs a 2-D point");
  const double x1 = x[0], x2 = x[1];
  SpatialJet<double> j = SpatialJet<double>::constant(std::atan2(x2, x1), 2, order);
  const double q = x1 * x1 + x2 * x2;
  if (q == 0.0) return j;
  if (order >= 1) {
    j.grad[0] = -x2 / q;
    j.grad[1] = x1 / q;
  }
  if (order >= 2) {
    j.second[0] = 2.0 * x1 * x2 / (q * q);
    j.second[1] = -2.0 * x1 * x2 / (q * q);
  }
  return j;
}

Activation activation_from_name(std::string_view name) {
  if (name == "swish") return Activation::swish;
  if (name == "tanh") return Activation::tanh;
  if (name == "softplus") return Activation::softplus;
  throw UnsupportedPrimitive("activation '" + std::string(name) + "'");
}

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::swish: return "swish";
    case Activation::tanh: return "tanh";
    case Activation::softplus: return "softplus";
  }
  return "?";
}

}  // namespace obstacle::ad
