#include "obstacle/app/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "obstacle/evalio/metrics.hpp"
#include "obstacle/oracle/lower_level.hpp"
#include "obstacle/problems/sampler.hpp"

namespace obstacle::app {

namespace {

using Clock = std::chrono::steady_clock;

void say(const RunOptions& o, const std::string& s) {
  if (o.log) o.log(s);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

nlohmann::json errors_json(const Errors& e) {
  nlohmann::json j;
  j["state"] = e.state ? nlohmann::json(*e.state) : nlohmann::json(nullptr);
  j["control"] = e.control ? nlohmann::json(*e.control) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json last_losses(const std::vector<opt::TrajectoryRow>& rows) {
  if (rows.empty()) return nullptr;
  return {{"upper", rows.back().upper_loss}, {"lower", rows.back().lower_loss}};
}

evalio::Checkpoint make_checkpoint(const evalio::ExperimentConfig& c, const std::string& stage, std::uint64_t it,
                                   const net::NetworkSpec& ss, std::vector<double> y, const net::NetworkSpec& cs,
                                   std::vector<double> u) {
  return {c.problem, stage, c.hp.seed, it, ss, cs, std::move(y), std::move(u)};
}

}  // namespace

std::uint64_t sampler_seed(std::uint64_t run_seed) { return problems::derive_seed(run_seed, 3); }

net::NetworkSpec state_spec_for(const evalio::ExperimentConfig& c, const problems::ProblemSpec& p) {
  net::NetworkSpec s = opt::default_state_spec(p, problems::derive_seed(c.hp.seed, 1));
  s.blocks = c.blocks;
  s.width = c.width;
  s.activation = c.activation;
  return s;
}

net::NetworkSpec control_spec_for(const evalio::ExperimentConfig& c, const problems::ProblemSpec& p) {
  net::NetworkSpec s = opt::default_control_spec(p, problems::derive_seed(c.hp.seed, 2));
  s.blocks = c.blocks;
  s.width = c.width;
  s.activation = c.activation;
  return s;
}

evalio::FieldEvaluator evaluator_for(const evalio::Checkpoint& c) {
  return {problems::catalog(c.problem), c.state_spec, c.state, c.control_spec, c.control};
}

Errors errors_against_exact(const evalio::FieldEvaluator& f, int n) {
  const auto& p = f.problem();
  if (!p.exact_state && !p.exact_control) return {};
  const evalio::GridFields g = evalio::evaluate_on_grid(f, n);
  Errors e;
  if (p.exact_state) e.state = evalio::relative_l2(g.state, oracle::GridField::sample(n, p.exact_state));
  if (p.exact_control) e.control = evalio::relative_l2(g.control, oracle::GridField::sample(n, p.exact_control));
  return e;
}

Consistency oracle_consistency(const evalio::FieldEvaluator& f, int n) {
  Consistency c;
  c.network = evalio::evaluate_on_grid(f, n);
  c.pdas = oracle::lower_level_solve(f.problem(), [&](problems::Point x) { return f.control(x); }, n);
  c.relative_l2 = evalio::relative_l2(c.network.state, c.pdas.y);
  return c;
}

WindowTrend window_trend(const std::vector<opt::TrajectoryRow>& rows, bool upper, std::size_t window) {
  WindowTrend t;
  if (window == 0) return t;
  for (std::size_t s = 0; s + window <= rows.size(); s += window) {
    double sum = 0.0;
    for (std::size_t i = s; i < s + window; ++i) sum += upper ? rows[i].upper_loss : rows[i].lower_loss;
    t.means.push_back(sum / static_cast<double>(window));
  }
  for (std::size_t i = 1; i < t.means.size(); ++i) t.increases += t.means[i] > t.means[i - 1];
  t.last_below_first = t.means.size() >= 2 && t.means.back() < t.means.front();
  return t;
}

evalio::Checkpoint run_stage2(const evalio::ExperimentConfig& cfg, const evalio::Checkpoint& stage1,
                              std::vector<opt::TrajectoryRow>* rows) {
  const problems::ProblemSpec p = problems::catalog(stage1.problem);
  opt::NeuralOracle oracle(p, stage1.state_spec, stage1.control_spec, cfg.hp.batch, sampler_seed(cfg.hp.seed),
                           cfg.backend);
  opt::Stage2Result r = opt::train_stage2(oracle, stage1.control, stage1.state, cfg.adam);
  if (rows) *rows = std::move(r.rows);
  evalio::Checkpoint out = stage1;
  out.stage = "stage2";
  out.iteration = cfg.adam.iterations;
  out.state = std::move(r.state);
  return out;
}

RunResult run_experiment(const evalio::ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  const auto t0 = Clock::now();
  RunResult res;
  res.config = cfg;
  const problems::ProblemSpec p = problems::catalog(cfg.problem);
  const net::NetworkSpec ss = state_spec_for(cfg, p), cs = control_spec_for(cfg, p);
  opt::NeuralOracle oracle(p, ss, cs, cfg.hp.batch, sampler_seed(cfg.hp.seed), cfg.backend);
  const std::filesystem::path dir(cfg.out_dir);
  if (opts.write) {
    std::filesystem::create_directories(dir);
    evalio::write_config(dir / "config.ini", cfg);
  }

  auto progress = [&](std::uint64_t k, const opt::TrajectoryRow& row, const char* tag) {
    if (opts.log_every == 0 || (k + 1) % opts.log_every != 0) return;
    say(opts, std::string(tag) + fmt(" iter %.0f  upper %.6e  lower %.6e  %.1f s", static_cast<double>(k + 1),
                                      row.upper_loss, row.lower_loss, row.wall_ms / 1000.0));
  };

  if (cfg.algorithm == evalio::Algorithm::bilevel) {
    opt::TrainState init{opt::initial_params(p, ss), opt::initial_params(p, cs), {}, 0};
    opt::Stage1Result r = opt::train_stage1(oracle, std::move(init), cfg.hp,
                                            [&](const opt::TrainState&, const opt::TrajectoryRow& row) {
                                              progress(row.iter, row, "stage1");
                                            });
    res.stage1 = make_checkpoint(cfg, "stage1", r.state.k, ss, std::move(r.state.state), cs,
                                 std::move(r.state.control));
    res.stage1_rows = std::move(r.rows);
  } else {
    opt::SingleLevelResult r =
        opt::train_single_level(oracle, opt::initial_params(p, ss), opt::initial_params(p, cs), cfg.weight, cfg.hp);
    for (const auto& row : r.rows) progress(row.iter, row, "single");
    res.stage1 = make_checkpoint(cfg, "single_level", cfg.hp.iterations, ss, std::move(r.state), cs,
                                 std::move(r.control));
    res.stage1_rows = std::move(r.rows);
  }
  res.stage1_errors = errors_against_exact(evaluator_for(res.stage1), cfg.grid);

  if (cfg.stage2 && cfg.algorithm == evalio::Algorithm::bilevel && cfg.adam.iterations > 0) {
    say(opts, "stage2 adam, " + std::to_string(cfg.adam.iterations) + " iterations");
    res.stage2 = run_stage2(cfg, res.stage1, &res.stage2_rows);
    res.stage2_errors = errors_against_exact(evaluator_for(*res.stage2), cfg.grid);
  }
  res.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();

  if (opts.write) {
    const bool single = cfg.algorithm == evalio::Algorithm::single_level;
    evalio::write_trajectory(dir / (single ? "trajectory_single_level.csv" : "trajectory_stage1.csv"),
                             res.stage1_rows);
    evalio::save_checkpoint(dir / (single ? "checkpoint_single_level.bin" : "checkpoint_stage1.bin"), res.stage1);
    if (res.stage2) {
      evalio::write_trajectory(dir / "trajectory_stage2.csv", res.stage2_rows);
      evalio::save_checkpoint(dir / "checkpoint_stage2.bin", *res.stage2);
    }
    if (cfg.fields) {
      const evalio::Checkpoint& best = res.stage2 ? *res.stage2 : res.stage1;
      const evalio::GridFields g = evalio::evaluate_on_grid(evaluator_for(best), cfg.grid);
      evalio::write_field(dir / "state.dat", g.state, "state");
      evalio::write_field(dir / "control.dat", g.control, p.obstacle_is_control() ? "obstacle" : "control");
    }
    nlohmann::json s;
    s["problem"] = cfg.problem;
    s["algorithm"] = evalio::algorithm_name(cfg.algorithm);
    s["seed"] = cfg.hp.seed;
    s["iterations"] = cfg.hp.iterations;
    s["grid"] = cfg.grid;
    s["wall_seconds"] = res.wall_seconds;
    s["stage1"] = {{"final_losses", last_losses(res.stage1_rows)}, {"relative_l2", errors_json(res.stage1_errors)}};
    if (res.stage2)
      s["stage2"] = {{"final_losses", last_losses(res.stage2_rows)},
                     {"relative_l2", errors_json(res.stage2_errors)}};
    s["reference"] = p.exact_state ? "closed form" : "none";
    std::ofstream os(dir / "summary.json", std::ios::trunc);
    if (!os) throw evalio::IoError("cannot write summary.json");
    os << s.dump(2) << '\n';
  }
  return res;
}

}  // namespace obstacle::app
