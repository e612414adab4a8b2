#pragma once

// Hand-fused forward-over-reverse pass for the residual network.
//
// forward() propagates the spatial jet (value, d first partials, d pure
// second partials) through every layer and keeps the intermediates in a
// Workspace; backward() takes the adjoints of the output jet and accumulates
// d(loss)/d(theta). Mathematically identical to running net::forward_jet on
// ad::Var and sweeping the tape, but without per-scalar nodes.
//
// Activations are stored component-major: entry [c * width + j] is component
// c of neuron j, with c = 0 the value, 1..d the gradient and d+1..2d the
// second partials.

#include <cstddef>
#include <span>
#include <vector>

#include "obstacle/autodiff/jet.hpp"
#include "obstacle/networks/network.hpp"

namespace obstacle::kernels {

using ad::SpatialJet;

class ResNetJetKernel {
 public:
  struct Workspace {
    std::vector<double> x;
    std::vector<double> stream;   // (blocks + 1) residual states, C x W each
    std::vector<double> pre1;     // per block, C x W
    std::vector<double> post1;    // per block, C x W
    std::vector<double> pre2;     // per block, C x W
    std::vector<double> derivs1;  // per block, 3 x W (phi', phi'', phi''')
    std::vector<double> derivs2;
    std::vector<double> bar_stream;  // scratch for the reverse sweep
    std::vector<double> bar_a;
    std::vector<double> bar_z;
  };

  ResNetJetKernel(const net::NetworkSpec& spec, int order);

  int order() const { return order_; }
  int components() const { return components_; }
  std::size_t param_count() const { return layout_.total; }
  const net::NetworkSpec& spec() const { return spec_; }

  Workspace make_workspace() const;

  SpatialJet<double> forward(std::span<const double> theta, std::span<const double> x,
                             Workspace& ws) const;

  /// Adds d(loss)/d(theta) to `grad` given the adjoint of each jet entry of
  /// the most recent forward() on `ws`.
  void backward(std::span<const double> theta, Workspace& ws, const SpatialJet<double>& adjoint,
                std::span<double> grad) const;

 private:
  std::size_t block_size() const {
    return static_cast<std::size_t>(components_) * static_cast<std::size_t>(width_);
  }

  net::NetworkSpec spec_;
  net::NetworkLayout layout_;
  int order_;
  int dim_;
  int width_;
  int components_;
};

}  // namespace obstacle::kernels
