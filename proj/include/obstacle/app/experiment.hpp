#pragma once

// End-to-end runs shared by the command-line tool and the acceptance suite.

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "obstacle/evalio/config.hpp"
#include "obstacle/evalio/field_eval.hpp"
#include "obstacle/evalio/formats.hpp"
#include "obstacle/oracle/pdas.hpp"

namespace obstacle::app {

using Logger = std::function<void(const std::string&)>;

struct RunOptions {
  bool write = true;            // write artifacts into cfg.out_dir
  std::uint64_t log_every = 1000;  // progress lines, 0 = silent
  Logger log;
};

struct Errors {
  std::optional<double> state;
  std::optional<double> control;
};

struct RunResult {
  evalio::ExperimentConfig config;
  evalio::Checkpoint stage1;                 // Stage 1 (or the single-level result)
  std::optional<evalio::Checkpoint> stage2;  // present when Stage 2 ran
  std::vector<opt::TrajectoryRow> stage1_rows;
  std::vector<opt::TrajectoryRow> stage2_rows;
  Errors stage1_errors;  // at cfg.grid, against the closed-form pair if any
  Errors stage2_errors;
  double wall_seconds = 0.0;
};

/// Seeds of the two networks and the sampler, derived from the run seed.
net::NetworkSpec state_spec_for(const evalio::ExperimentConfig& c, const problems::ProblemSpec& p);
net::NetworkSpec control_spec_for(const evalio::ExperimentConfig& c, const problems::ProblemSpec& p);
std::uint64_t sampler_seed(std::uint64_t run_seed);

RunResult run_experiment(const evalio::ExperimentConfig& cfg, const RunOptions& opts = {});

/// Stage 2 from a Stage-1 checkpoint.
evalio::Checkpoint run_stage2(const evalio::ExperimentConfig& cfg, const evalio::Checkpoint& stage1,
                              std::vector<opt::TrajectoryRow>* rows = nullptr);

evalio::FieldEvaluator evaluator_for(const evalio::Checkpoint& c);

/// Relative errors against the closed-form pair at resolution n (absent
/// when the problem has none).
Errors errors_against_exact(const evalio::FieldEvaluator& f, int n);

struct Consistency {
  double relative_l2 = 0.0;  // network state vs PDAS state
  oracle::PdasResult pdas;
  evalio::GridFields network;
};

/// PDAS grid state for the checkpoint's control vs the checkpoint's state.
Consistency oracle_consistency(const evalio::FieldEvaluator& f, int n);

struct WindowTrend {
  std::vector<double> means;  // consecutive non-overlapping window means
  bool last_below_first = false;
  std::size_t increases = 0;  // number of window-to-window increases
};

WindowTrend window_trend(const std::vector<opt::TrajectoryRow>& rows, bool upper, std::size_t window = 500);

}  // namespace obstacle::app
