#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "obstacle/optimizer/adam.hpp"
#include "obstacle/optimizer/bilevel_oracle.hpp"
#include "obstacle/optimizer/schedule.hpp"

namespace obstacle::opt {

/// (theta_y, theta_u, z) plus the iteration counter. Batches are derived
/// from (seed, k), so k is the whole RNG state.
struct TrainState {
  std::vector<double> state;
  std::vector<double> control;
  std::vector<double> aux;
  std::uint64_t k = 0;
  std::vector<Adam> moments;  // z, theta_y, theta_u under UpdateRule::adam; created on first use
};

struct TrajectoryRow {
  std::uint64_t iter = 0;
  double upper_loss = 0.0;
  double lower_loss = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double eta = 0.0;
  double c_k = 0.0;
  double wall_ms = 0.0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::uint64_t iteration, double state_norm, double control_norm, double aux_norm);

  std::uint64_t iteration;
  double state_norm;
  double control_norm;
  double aux_norm;
};

/// Substream layout: T_k uses 2k, T_{k+1/2} uses 2k+1; Stage 2 and the
/// probe batch live far above any Stage-1 stream.
inline constexpr std::uint64_t kStage2StreamBase = std::uint64_t{1} << 40;
inline constexpr std::uint64_t kProbeStream = std::uint64_t{1} << 41;

/// One S2-FOBA iteration on `s`, advancing s.k. Returns the row for
/// iteration s.k (before the increment); losses are the T_k estimates of
/// j and e at the incoming (theta_y, theta_u).
TrajectoryRow s2foba_step(BilevelOracle& oracle, TrainState& s, const HyperParams& hp);

using StepObserver = std::function<void(const TrainState&, const TrajectoryRow&)>;

struct Stage1Result {
  TrainState state;
  std::vector<TrajectoryRow> rows;
};

/// hp.iterations S2-FOBA steps starting from `init` (z starts at theta_y if
/// init.aux is empty).
Stage1Result train_stage1(BilevelOracle& oracle, TrainState init, const HyperParams& hp,
                          const StepObserver& observer = {});

struct Stage2Result {
  std::vector<double> state;
  std::vector<TrajectoryRow> rows;  // upper/lower at the iterate, lr in alpha
};

/// Adam on the lower-level loss over theta_y with theta_u frozen.
Stage2Result train_stage2(BilevelOracle& oracle, std::span<const double> control, std::vector<double> state,
                          const AdamParams& adam);

struct SingleLevelResult {
  std::vector<double> state;
  std::vector<double> control;
  std::vector<TrajectoryRow> rows;
};

/// Plain SGD on j + w e, simultaneous updates, experimental/theoretical
/// schedule from hp (alpha for theta_y, beta for theta_u).
SingleLevelResult train_single_level(BilevelOracle& oracle, std::vector<double> state,
                                     std::vector<double> control, double w, const HyperParams& hp);

struct MeritRecord {
  double upper = 0.0;        // j at theta
  double lower = 0.0;        // e at theta
  double envelope_hat = 0.0; // e(z) + |z - theta_y|^2 / (2 gamma) >= e_gamma
  double phi_hat = 0.0;      // j / c + e - envelope_hat <= phi_c
  double prox_residual = 0.0;  // |grad_z (e(z) + |z - theta_y|^2 / (2 gamma))|
};

/// Penalty-function surrogate at the current iterate on the fixed batch
/// `probe_stream`.
MeritRecord merit_diagnostics(BilevelOracle& oracle, const TrainState& s, const HyperParams& hp,
                              std::uint64_t probe_stream = kProbeStream);

/// Number of training iterations (any stage) executed by this process.
std::uint64_t training_calls();

double norm2(std::span<const double> v);

}  // namespace obstacle::opt
