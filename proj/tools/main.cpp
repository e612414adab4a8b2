// obstacle: train, evaluate and verify optimal control of obstacle problems.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "obstacle/app/experiment.hpp"
#include "obstacle/evalio/metrics.hpp"
#include "obstacle/optimizer/fixture_checks.hpp"
#include "obstacle/oracle/lower_level.hpp"

namespace fs = std::filesystem;
using namespace obstacle;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitDiverged = 3;

struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool json = false;
};

evalio::ExperimentConfig resolve(const Common& c, const std::string& fallback_problem = "example1") {
  evalio::ExperimentConfig cfg =
      c.config.empty() ? evalio::default_config(fallback_problem) : evalio::load_config(c.config);
  if (c.seed_set) cfg.hp.seed = c.seed;
  if (!c.out.empty()) cfg.out_dir = c.out;
  cfg.validate();
  return cfg;
}

std::string opt_str(const std::optional<double>& v) {
  if (!v) return "NA";
  return evalio::format_double(*v);
}

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

void log_line(const std::string& s) { std::cerr << s << '\n'; }

int cmd_run(const Common& c, bool dry_run) {
  const evalio::ExperimentConfig cfg = resolve(c);
  if (dry_run) {
    evalio::write_config(std::cout, cfg);
    return 0;
  }
  app::RunOptions o;
  o.log = log_line;
  const app::RunResult r = app::run_experiment(cfg, o);
  nlohmann::json j;
  j["out"] = cfg.out_dir;
  j["wall_seconds"] = r.wall_seconds;
  j["stage1"] = {{"state", opt_json(r.stage1_errors.state)}, {"control", opt_json(r.stage1_errors.control)}};
  if (r.stage2)
    j["stage2"] = {{"state", opt_json(r.stage2_errors.state)}, {"control", opt_json(r.stage2_errors.control)}};
  if (c.json) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "artifacts in " << cfg.out_dir << "\n";
    std::cout << "stage1 relative L2: state " << opt_str(r.stage1_errors.state) << ", control "
              << opt_str(r.stage1_errors.control) << "\n";
    if (r.stage2)
      std::cout << "stage2 relative L2: state " << opt_str(r.stage2_errors.state) << ", control "
                << opt_str(r.stage2_errors.control) << "\n";
  }
  return 0;
}

int cmd_stage2(const Common& c, const std::string& checkpoint) {
  evalio::Checkpoint s1 = evalio::load_checkpoint(checkpoint);
  evalio::ExperimentConfig cfg = c.config.empty() ? evalio::default_config(s1.problem) : evalio::load_config(c.config);
  if (c.seed_set) cfg.hp.seed = c.seed;
  cfg.out_dir = c.out.empty() ? fs::path(checkpoint).parent_path().string() : c.out;
  cfg.validate();
  std::vector<opt::TrajectoryRow> rows;
  const evalio::Checkpoint s2 = app::run_stage2(cfg, s1, &rows);
  const fs::path dir(cfg.out_dir.empty() ? "." : cfg.out_dir);
  fs::create_directories(dir);
  evalio::save_checkpoint(dir / "checkpoint_stage2.bin", s2);
  evalio::write_trajectory(dir / "trajectory_stage2.csv", rows);
  evalio::write_config(dir / "config_stage2.ini", cfg);
  const app::Errors e = app::errors_against_exact(app::evaluator_for(s2), cfg.grid);
  std::cout << "stage2 relative L2: state " << opt_str(e.state) << ", control " << opt_str(e.control) << "\n";
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& checkpoint, const std::vector<int>& grids) {
  const evalio::Checkpoint ck = evalio::load_checkpoint(checkpoint);
  const evalio::FieldEvaluator f = app::evaluator_for(ck);
  nlohmann::json rows = nlohmann::json::array();
  for (int n : grids) {
    const app::Errors e = app::errors_against_exact(f, n);
    rows.push_back({{"grid", n}, {"state", opt_json(e.state)}, {"control", opt_json(e.control)}});
    if (!c.json)
      std::cout << "N=" << n << "  state " << opt_str(e.state) << "  control " << opt_str(e.control) << "\n";
    if (!c.out.empty()) {
      fs::create_directories(c.out);
      const evalio::GridFields g = evalio::evaluate_on_grid(f, n);
      evalio::write_field(fs::path(c.out) / ("state_N" + std::to_string(n) + ".dat"), g.state, "state");
      evalio::write_field(fs::path(c.out) / ("control_N" + std::to_string(n) + ".dat"), g.control,
                          f.problem().obstacle_is_control() ? "obstacle" : "control");
    }
  }
  if (c.json) std::cout << nlohmann::json{{"checkpoint", checkpoint}, {"rows", rows}}.dump(2) << '\n';
  return 0;
}

int cmd_oracle(const Common& c, const std::string& checkpoint, const std::string& problem, int n) {
  nlohmann::json j;
  j["grid"] = n;
  if (!checkpoint.empty()) {
    const evalio::Checkpoint ck = evalio::load_checkpoint(checkpoint);
    const evalio::FieldEvaluator f = app::evaluator_for(ck);
    const app::Consistency s = app::oracle_consistency(f, n);
    j["problem"] = ck.problem;
    j["pdas_iterations"] = s.pdas.iterations;
    j["active_nodes"] = s.pdas.active;
    j["network_vs_pdas_state"] = s.relative_l2;
    if (!f.problem().obstacle_is_control()) {
      const auto rec = oracle::recovered_objective(f.problem(), [&](problems::Point x) { return f.control(x); }, n);
      j["recovered_objective"] = rec.value;
    }
    if (!c.out.empty()) {
      fs::create_directories(c.out);
      evalio::write_field(fs::path(c.out) / "pdas_state.dat", s.pdas.y, "pdas_state");
      evalio::write_field(fs::path(c.out) / "pdas_multiplier.dat", s.pdas.lambda, "multiplier");
    }
  } else {
    const problems::ProblemSpec p = problems::catalog(problem);
    problems::ScalarField u = p.exact_control ? p.exact_control : [](problems::Point) { return 0.0; };
    if (p.obstacle_is_control()) throw ad::InputError("obstacle control needs --checkpoint for the obstacle");
    const auto rec = oracle::recovered_objective(p, u, n);
    j["problem"] = problem;
    j["control"] = p.exact_control ? "closed form" : "zero";
    j["pdas_iterations"] = rec.lower.iterations;
    j["active_nodes"] = rec.lower.active;
    j["recovered_objective"] = rec.value;
    if (p.exact_state) {
      j["state_vs_closed_form"] = evalio::relative_l2(rec.lower.y, oracle::GridField::sample(n, p.exact_state));
      j["closed_form_objective"] = oracle::analytic_objective(p, std::max(n, 1024));
    }
    if (!c.out.empty()) {
      fs::create_directories(c.out);
      evalio::write_field(fs::path(c.out) / "pdas_state.dat", rec.lower.y, "pdas_state");
      evalio::write_field(fs::path(c.out) / "pdas_multiplier.dat", rec.lower.lambda, "multiplier");
    }
  }
  if (c.json) {
    std::cout << j.dump(2) << '\n';
  } else {
    for (auto it = j.begin(); it != j.end(); ++it) std::cout << it.key() << ": " << it.value().dump() << "\n";
  }
  return 0;
}

int cmd_compare(const Common& c, const std::vector<double>& weights) {
  const evalio::ExperimentConfig base = resolve(c);
  const fs::path dir(base.out_dir);
  fs::create_directories(dir);
  evalio::write_config(dir / "config.ini", base);
  std::ostringstream csv;
  csv << "method,weight,state_error,control_error,recovered_objective\n";
  auto row = [&](const std::string& method, const std::string& w, const app::Errors& e,
                 const evalio::Checkpoint& ck) {
    const evalio::FieldEvaluator f = app::evaluator_for(ck);
    std::string j = "NA";
    if (!f.problem().obstacle_is_control() && f.problem().domain.kind == problems::DomainKind::unit_square)
      j = evalio::format_double(
          oracle::recovered_objective(f.problem(), [&](problems::Point x) { return f.control(x); }, base.grid).value);
    csv << method << ',' << w << ',' << opt_str(e.state) << ',' << opt_str(e.control) << ',' << j << '\n';
  };
  app::RunOptions o;
  o.log = log_line;
  evalio::ExperimentConfig bi = base;
  bi.out_dir = (dir / "bilevel").string();
  const app::RunResult rb = app::run_experiment(bi, o);
  row("bilevel", "NA", rb.stage2 ? rb.stage2_errors : rb.stage1_errors, rb.stage2 ? *rb.stage2 : rb.stage1);
  for (double w : weights) {
    evalio::ExperimentConfig sl = base;
    sl.algorithm = evalio::Algorithm::single_level;
    sl.weight = w;
    sl.stage2 = false;
    sl.out_dir = (dir / ("single_level_w" + evalio::format_double(w))).string();
    const app::RunResult rs = app::run_experiment(sl, o);
    row("single_level", evalio::format_double(w), rs.stage1_errors, rs.stage1);
  }
  std::ofstream(dir / "comparison.csv") << csv.str();
  std::cout << csv.str();
  return 0;
}

int cmd_fixture_check(const Common& c, bool mutate) {
  const std::vector<opt::CheckResult> results = opt::run_fixture_checks(c.seed_set ? c.seed : 1, mutate);
  bool ok = true;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results) {
    ok = ok && r.pass;
    arr.push_back({{"name", r.name},
                   {"pass", r.pass},
                   {"measured", r.measured},
                   {"threshold", r.threshold},
                   {"detail", r.detail},
                   {"seconds", r.seconds}});
    if (!c.json)
      std::printf("%-22s %s  measured %.3e  threshold %.1e  (%s)\n", r.name.c_str(), r.pass ? "PASS" : "FAIL",
                  r.measured, r.threshold, r.detail.c_str());
  }
  if (c.json) std::cout << nlohmann::json{{"pass", ok}, {"checks", arr}}.dump(2) << '\n';
  return ok ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Optimal control of obstacle problems: bilevel training, grid oracles, checks"};
  cli.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "experiment config file")->check(CLI::ExistingFile);
    sub->add_option("--out", common.out, "output directory");
    sub->add_option("--seed", common.seed, "run seed (overrides the config)")
        ->each([&](const std::string&) { common.seed_set = true; });
    sub->add_flag("--json", common.json, "machine-readable output");
  };

  bool dry_run = false;
  auto* run = cli.add_subcommand("run", "Stage 1 + Stage 2 training with all artifacts");
  add_common(run);
  run->add_flag("--dry-run", dry_run, "print the resolved config and exit");

  std::string checkpoint;
  auto* stage2 = cli.add_subcommand("stage2", "Stage 2 refinement of a Stage-1 checkpoint");
  add_common(stage2);
  stage2->add_option("--checkpoint", checkpoint, "Stage-1 checkpoint")->required()->check(CLI::ExistingFile);

  std::vector<int> grids{128};
  auto* evaluate = cli.add_subcommand("evaluate", "evaluate a checkpoint on N x N grids (no training)");
  add_common(evaluate);
  evaluate->add_option("--checkpoint", checkpoint, "checkpoint")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--grid", grids, "grid resolutions")->check(CLI::Range(2, 1 << 14));

  int grid = 100;
  std::string problem = "example1";
  auto* orc = cli.add_subcommand("oracle", "PDAS grid solve of the lower level");
  add_common(orc);
  orc->add_option("--checkpoint", checkpoint, "use this checkpoint's control")->check(CLI::ExistingFile);
  orc->add_option("--problem", problem, "catalog problem when no checkpoint is given");
  orc->add_option("--grid", grid, "grid resolution N")->check(CLI::Range(4, 4096));

  std::vector<double> weights;
  auto* compare = cli.add_subcommand("compare", "bilevel vs single-level runs");
  add_common(compare);
  compare->add_option("--weights", weights, "single-level weights w");

  bool mutate = false;
  auto* fixture = cli.add_subcommand("fixture-check", "closed-form fixture checks");
  add_common(fixture);
  fixture->add_flag("--mutate-envelope-sign", mutate, "flip the sign in the envelope gradient (must fail)");

  CLI11_PARSE(cli, argc, argv);
  try {
    if (run->parsed()) return cmd_run(common, dry_run);
    if (stage2->parsed()) return cmd_stage2(common, checkpoint);
    if (evaluate->parsed()) return cmd_evaluate(common, checkpoint, grids);
    if (orc->parsed()) return cmd_oracle(common, checkpoint, problem, grid);
    if (compare->parsed()) return cmd_compare(common, weights);
    if (fixture->parsed()) return cmd_fixture_check(common, mutate);
  } catch (const opt::TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
