#include "obstacle/optimizer/adam.hpp"

#include <cmath>

#include "obstacle/autodiff/tape.hpp"

namespace obstacle::opt {

Adam::Adam(std::size_t n, AdamParams params) : params_(params), m_(n, 0.0), v_(n, 0.0) { params_.validate(); }

void Adam::step(std::span<double> x, std::span<const double> grad, double lr) {
  if (x.size() != m_.size() || grad.size() != m_.size()) throw ad::InputError("adam: size mismatch");
  ++t_;
  b1t_ *= params_.beta1;
  b2t_ *= params_.beta2;
  const double c1 = 1.0 / (1.0 - b1t_);
  const double c2 = 1.0 / (1.0 - b2t_);
  for (std::size_t i = 0; i < x.size(); ++i) {
    m_[i] = params_.beta1 * m_[i] + (1.0 - params_.beta1) * grad[i];
    v_[i] = params_.beta2 * v_[i] + (1.0 - params_.beta2) * grad[i] * grad[i];
    x[i] -= lr * (m_[i] * c1) / (std::sqrt(v_[i] * c2) + params_.eps);
  }
}

}  // namespace obstacle::opt
