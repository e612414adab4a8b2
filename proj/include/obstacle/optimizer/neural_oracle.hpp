#pragma once

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "obstacle/kernels/resnet_jet.hpp"
#include "obstacle/networks/network.hpp"
#include "obstacle/optimizer/bilevel_oracle.hpp"
#include "obstacle/problems/problem.hpp"
#include "obstacle/problems/sampler.hpp"

namespace obstacle::opt {

/// fused: per-sample fused kernels, OpenMP over fixed-size sample chunks,
/// chunk partials reduced in index order (bitwise independent of the thread
/// count). reference: the whole batch on one tape, serial; slow, kept as the
/// independent check for the fused path.
enum class Backend { fused, reference };

Backend backend_from_name(std::string_view name);
std::string_view backend_name(Backend b);

class NeuralOracle final : public BilevelOracle {
 public:
  static constexpr std::size_t kChunk = 16;

  NeuralOracle(problems::ProblemSpec problem, net::NetworkSpec state_spec, net::NetworkSpec control_spec,
               std::size_t batch_size, std::uint64_t seed, Backend backend = Backend::fused);
  ~NeuralOracle() override;
  NeuralOracle(const NeuralOracle&) = delete;
  NeuralOracle& operator=(const NeuralOracle&) = delete;

  std::size_t state_size() const override { return state_kernel_.param_count(); }
  std::size_t control_size() const override { return control_kernel_.param_count(); }

  void resample(std::uint64_t stream) override;
  /// Installs an explicit batch (tests, probe sets).
  void set_batch(problems::SampleBatch batch);
  const problems::SampleBatch& batch() const { return batch_; }
  int jet_order() const;

  LossEstimate evaluate(std::span<const double> state, std::span<const double> control) override;
  LossEstimate state_gradient(std::span<const double> state, std::span<const double> control,
                              double upper_weight, double lower_weight, std::span<double> grad) override;
  void control_gradient(std::span<const StateTerm> terms, std::span<const double> control,
                        std::span<double> grad) override;

  const problems::ProblemSpec& problem() const { return problem_; }
  const net::NetworkSpec& state_spec() const { return state_spec_; }
  const net::NetworkSpec& control_spec() const { return control_spec_; }
  Backend backend() const { return backend_; }

 private:
  struct ThreadScratch;

  LossEstimate state_gradient_fused(std::span<const double> state, std::span<const double> control,
                                    double wu, double wl, std::span<double> grad);
  LossEstimate state_gradient_reference(std::span<const double> state, std::span<const double> control,
                                        double wu, double wl, std::span<double> grad);
  void control_gradient_fused(std::span<const StateTerm> terms, std::span<const double> control,
                              std::span<double> grad);
  void control_gradient_reference(std::span<const StateTerm> terms, std::span<const double> control,
                                  std::span<double> grad);
  std::size_t chunk_count() const { return (batch_.size() + kChunk - 1) / kChunk; }

  problems::ProblemSpec problem_;
  net::NetworkSpec state_spec_;
  net::NetworkSpec control_spec_;
  kernels::ResNetJetKernel state_kernel_;
  kernels::ResNetJetKernel control_kernel_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  Backend backend_;
  problems::SampleBatch batch_;
  std::vector<std::unique_ptr<ThreadScratch>> scratch_;
  std::vector<double> chunk_grad_;
  std::vector<double> chunk_loss_;
};

/// Default specs for the state and control networks of a problem.
net::NetworkSpec default_state_spec(const problems::ProblemSpec& p, std::uint64_t seed);
net::NetworkSpec default_control_spec(const problems::ProblemSpec& p, std::uint64_t seed);

/// Xavier initialization, except that a ReLU state embedding gets an output
/// bias of 1 + max(psi / m) so that N m - psi > 0 at the start; with zero
/// bias the ReLU is usually inactive on the whole domain and the state
/// network receives no gradient.
net::ParamVector initial_params(const problems::ProblemSpec& p, const net::NetworkSpec& spec);

}  // namespace obstacle::opt
