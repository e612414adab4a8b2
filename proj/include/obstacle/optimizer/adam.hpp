#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "obstacle/optimizer/schedule.hpp"

namespace obstacle::opt {

class Adam {
 public:
  Adam(std::size_t n, AdamParams params);

  /// One bias-corrected Adam update of x in place.
  void step(std::span<double> x, std::span<const double> grad) { step(x, grad, params_.lr); }
  /// Same with an explicit step size in place of params.lr.
  void step(std::span<double> x, std::span<const double> grad, double lr);
  std::uint64_t steps() const { return t_; }

 private:
  AdamParams params_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t t_ = 0;
  double b1t_ = 1.0;
  double b2t_ = 1.0;
};

}  // namespace obstacle::opt
