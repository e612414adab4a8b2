// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Training runs use the example defaults unless
// overridden on the command line; artifacts go to --work-dir.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "obstacle/app/experiment.hpp"
#include "obstacle/autodiff/tape.hpp"
#include "obstacle/evalio/config.hpp"
#include "obstacle/evalio/field_eval.hpp"
#include "obstacle/evalio/metrics.hpp"
#include "obstacle/networks/embedding.hpp"
#include "obstacle/optimizer/fixture_checks.hpp"
#include "obstacle/optimizer/neural_oracle.hpp"
#include "obstacle/optimizer/s2foba.hpp"
#include "obstacle/problems/integrands.hpp"
#include "obstacle/problems/sampler.hpp"

using namespace obstacle;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Options {
  fs::path work_dir = "acceptance_runs";
  std::uint64_t seed = 1;
  std::string update = "sgd";
  std::set<int> only;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string fixed(double v, int digits = 1) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void report(int id, const std::string& name, const Outcome& o, double seconds) {
  std::printf("C%-2d %s  %s: %s  [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), seconds);
  std::fflush(stdout);
}

void progress(const std::string& s) {
  std::fprintf(stderr, "  .. %s\n", s.c_str());
  std::fflush(stderr);
}

/// Training runs shared between criteria, computed on first use.
class Runs {
 public:
  explicit Runs(const Options& o) : opt_(o) {}

  const app::RunResult& get(const std::string& key) {
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    evalio::ExperimentConfig c = config_for(key);
    progress("training '" + key + "' (" + c.problem + ", T=" + std::to_string(c.hp.iterations) + ")");
    app::RunOptions ro;
    ro.log_every = 5000;
    ro.log = [&](const std::string& s) { progress(key + ": " + s); };
    const auto t0 = Clock::now();
    auto r = app::run_experiment(c, ro);
    progress(key + " finished in " + fixed(seconds_since(t0)) + " s");
    return cache_.emplace(key, std::move(r)).first->second;
  }

 private:
  evalio::ExperimentConfig config_for(const std::string& key) const {
    std::string problem = key;
    if (key == "example1_smoke" || key == "example1_single") problem = "example1";
    evalio::ExperimentConfig c = evalio::default_config(problem);
    c.hp.seed = opt_.seed;
    c.hp.update = opt::update_rule_from_name(opt_.update);
    c.out_dir = (opt_.work_dir / key).string();
    if (key == "example1_smoke") c.hp.iterations = 3000;
    if (key == "example1_single") {
      c.algorithm = evalio::Algorithm::single_level;
      c.weight = 1.0;
      c.stage2 = false;
    }
    c.validate();
    return c;
  }

  Options opt_;
  std::map<std::string, app::RunResult> cache_;
};

// Reported errors: refined (Stage 2) state, Stage 1 control.
app::Errors reported_errors(const app::RunResult& r) {
  app::Errors e = r.stage1_errors;
  if (r.stage2) e.state = r.stage2_errors.state;
  return e;
}

Outcome c1_envelope_gradient() {
  const auto r = opt::check_envelope_gradient(1, 100);
  return {r.pass && r.seconds < 1.0,
          "max rel err " + sci(r.measured) + " < 1e-8 over 100 points, " + fixed(r.seconds, 3) + " s < 1 s"};
}

Outcome c2_nested_differentiation() {
  const auto t0 = Clock::now();
  const auto p = problems::catalog("example1");
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    net::NetworkSpec s;
    s.blocks = 1 + static_cast<int>(trial % 2);
    s.width = 4 + static_cast<int>(trial % 3) * 2;
    s.activation = trial % 3 == 2 ? ad::Activation::tanh : ad::Activation::swish;
    s.seed = 100 + trial;
    net::NetworkSpec cs = s;
    cs.embedding = net::Embedding::control_raw;
    cs.seed = 200 + trial;
    auto theta = net::init_xavier(s);
    auto rng = problems::stream_rng(trial, 7);
    for (double& v : theta) v += 0.2 * (2.0 * problems::unit_uniform(rng) - 1.0);
    const auto phi = net::init_xavier(cs);
    const auto batch = problems::sample_batch(p, 8, rng, 1);
    auto loss_var = [&](std::span<const ad::Var> t, const problems::SampleBatch& b) {
      std::vector<ad::Var> terms;
      for (const auto& sp : b.points) {
        const auto raw = net::forward_jet<ad::Var>(s, t, sp.point(2), 1);
        const auto y = net::embed_state(s.embedding, raw, sp.mask, sp.obstacle);
        const double u = net::raw_forward(cs, phi, sp.point(2));
        terms.push_back(problems::lower_integrand_energy(sp, y, ad::Var(u)));
      }
      return ad::mean(terms);
    };
    auto loss = [&](const std::vector<double>& t) {
      double acc = 0.0;
      for (const auto& sp : batch.points) {
        const auto raw = net::eval_with_spatial_jet(s, t, sp.point(2), 1);
        const auto y = net::embed_state(s.embedding, raw, sp.mask, sp.obstacle);
        acc += problems::lower_integrand_energy(sp, y, net::raw_forward(cs, phi, sp.point(2)));
      }
      return acc / static_cast<double>(batch.size());
    };
    const auto g = ad::grad_params(loss_var, std::span<const double>(theta), batch);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      auto tp = theta, tm = theta;
      const double h = 1e-6;
      tp[i] += h;
      tm[i] -= h;
      const double fd = (loss(tp) - loss(tm)) / (2.0 * h);
      num += (g.grad[i] - fd) * (g.grad[i] - fd);
      den += fd * fd;
    }
    worst = std::max(worst, std::sqrt(num) / std::max(1e-300, std::sqrt(den)));
  }
  const double t = seconds_since(t0);
  return {worst < 1e-5 && t < 30.0, "max rel err " + sci(worst) + " < 1e-5 over 10 networks, " + fixed(t, 2) + " s"};
}

Outcome c3_contraction() {
  const auto r = opt::check_contraction(1, 200);
  return {r.pass && r.seconds < 1.0, "max(ratio - bound) " + sci(r.measured) + " <= 1e-10, " + r.detail};
}

Outcome c4_merit_descent() {
  const auto r = opt::check_merit_descent(1);
  return {r.pass && r.seconds < 5.0, "max V increase " + sci(r.measured) + " after burn-in 10 over 5000 steps, " +
                                         fixed(r.seconds, 2) + " s < 5 s"};
}

Outcome c5_example1_accuracy(Runs& runs) {
  const auto& full = runs.get("example1");
  const auto& smoke = runs.get("example1_smoke");
  const auto ef = reported_errors(full), es = reported_errors(smoke);
  const double full_min = full.wall_seconds / 60.0, smoke_min = smoke.wall_seconds / 60.0;
  const bool full_ok = *ef.state <= 2e-2 && *ef.control <= 6e-2 && full_min <= 45.0;
  const bool smoke_ok = *es.state <= 1e-1 && *es.control <= 2e-1 && smoke_min <= 8.0;
  return {full_ok && smoke_ok, "full: state " + sci(*ef.state) + " (<= 2e-2), control " + sci(*ef.control) +
                                   " (<= 6e-2), " + fixed(full_min) + " min; smoke T=3000: state " + sci(*es.state) +
                                   " (<= 1e-1), control " + sci(*es.control) + " (<= 2e-1), " + fixed(smoke_min) +
                                   " min"};
}

Outcome c6_resolution(Runs& runs) {
  const auto& full = runs.get("example1");
  const auto& ck = full.stage2 ? *full.stage2 : full.stage1;
  const auto f = app::evaluator_for(ck);
  const auto control_f = app::evaluator_for(full.stage1);
  const auto calls = opt::training_calls();
  std::vector<double> se, ce;
  std::string list;
  for (int n : {16, 32, 64, 128, 256, 512, 1024}) {
    se.push_back(*app::errors_against_exact(f, n).state);
    ce.push_back(*app::errors_against_exact(control_f, n).control);
    list += " N=" + std::to_string(n) + ":" + sci(se.back()) + "/" + sci(ce.back());
  }
  const bool no_training = opt::training_calls() == calls;
  auto spread = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return (*hi - *lo) / *lo;
  };
  const double ss = spread(se), cs = spread(ce);
  return {ss < 0.1 && cs < 0.1 && no_training,
          "spread (max-min)/min state " + fixed(100 * ss, 2) + "%, control " + fixed(100 * cs, 2) +
              "% (< 10%), training calls during evaluation: " + (no_training ? "0" : "nonzero") + ";" + list};
}

Outcome c7_single_level(Runs& runs) {
  const auto& single = runs.get("example1_single");
  const auto& bilevel = runs.get("example1");
  const double sl = *single.stage1_errors.control;
  const double bl = *reported_errors(bilevel).control;
  return {sl >= 0.5 && bl <= 0.1 * sl, "single-level w=1 control error " + sci(sl) + " (>= 0.5), bilevel " + sci(bl) +
                                           " (<= 0.1 x single-level = " + sci(0.1 * sl) + ")"};
}

Outcome c8_feasibility() {
  double worst_state = 0.0, worst_bounds = 0.0, worst_pair = 0.0;
  std::size_t points = 0;
  for (const auto& id : problems::catalog_ids()) {
    const auto p = problems::catalog(id);
    net::NetworkSpec ss = opt::default_state_spec(p, 41), cs = opt::default_control_spec(p, 42);
    auto ty = net::init_xavier(ss), tu = net::init_xavier(cs);
    // larger weights push the outputs through both branches of every ReLU
    for (double& v : ty) v *= 4.0;
    for (double& v : tu) v *= 4.0;
    auto rng = problems::stream_rng(43, 0);
    const auto batch = problems::sample_batch(p, 100000, rng, 0);
    for (const auto& sp : batch.points) {
      const auto rs = net::forward_jet<double>(ss, ty, sp.point(2), 0);
      const auto rc = net::forward_jet<double>(cs, tu, sp.point(2), 0);
      const auto f = problems::embed_fields<double>(p, sp, rs, rc);
      if (p.obstacle_is_control()) {
        worst_pair = std::max(worst_pair, f.state.value - f.control.value);
      } else {
        worst_state = std::max(worst_state, sp.obstacle.value - f.state.value);
      }
      if (p.bounds)
        worst_bounds = std::max({worst_bounds, p.bounds->lower - f.control.value, f.control.value - p.bounds->upper});
    }
    points += batch.size();
  }
  return {worst_state <= 1e-12 && worst_bounds <= 1e-12 && worst_pair <= 1e-12,
          std::to_string(points) + " points; max(psi - y) " + sci(worst_state) + ", max bound violation " +
              sci(worst_bounds) + ", max(y - psi_hat) " + sci(worst_pair) + " (all <= 1e-12)"};
}

Outcome c9_oracle_consistency(Runs& runs) {
  bool pass = true;
  std::string detail;
  for (const std::string id : {"example1", "example2", "example4", "example5"}) {
    const auto& r = runs.get(id);
    const auto c = app::oracle_consistency(app::evaluator_for(*r.stage2), 100);
    pass = pass && c.relative_l2 <= 5e-2;
    detail += id + " " + sci(c.relative_l2) + " (PDAS sweeps " + std::to_string(c.pdas.iterations) + "); ";
  }
  detail += "bound 5e-2 at N=100; example3 not reproducible (star domain has no Cartesian grid oracle)";
  return {pass, detail};
}

Outcome c10_trend(Runs& runs) {
  bool pass = true;
  std::string detail;
  for (const std::string id : {"example2", "example4"}) {
    const auto& r = runs.get(id);
    for (bool upper : {true, false}) {
      const auto t = app::window_trend(r.stage1_rows, upper, 500);
      const bool ok = t.last_below_first;
      pass = pass && ok;
      detail += id + (upper ? " upper " : " lower ") + sci(t.means.front()) + " -> " + sci(t.means.back()) + " (" +
                std::to_string(t.increases) + "/" + std::to_string(t.means.size() - 1) + " window increases); ";
    }
  }
  detail += "absolute error tables not reproducible (external reference solvers)";
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App cli{"acceptance criteria 1-10"};
  std::string work = o.work_dir.string();
  cli.add_option("--work-dir", work, "directory for training artifacts");
  cli.add_option("--seed", o.seed, "run seed for the training criteria");
  cli.add_option("--update", o.update, "S2-FOBA update rule (sgd|adam)")->check(CLI::IsMember({"sgd", "adam"}));
  std::vector<int> only;
  cli.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(cli, argc, argv);
  o.work_dir = work;
  o.only.insert(only.begin(), only.end());
  fs::create_directories(o.work_dir);

  Runs runs(o);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"envelope-gradient identity", c1_envelope_gradient},
      {"nested differentiation", c2_nested_differentiation},
      {"proximal contraction", c3_contraction},
      {"merit descent", c4_merit_descent},
      {"example 1 accuracy", [&] { return c5_example1_accuracy(runs); }},
      {"resolution independence", [&] { return c6_resolution(runs); }},
      {"single-level failure", [&] { return c7_single_level(runs); }},
      {"constraint feasibility", c8_feasibility},
      {"oracle self-consistency", [&] { return c9_oracle_consistency(runs); }},
      {"moving-average decrease (examples 2, 4)", [&] { return c10_trend(runs); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!o.only.empty() && !o.only.count(id)) continue;
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    report(id, criteria[i].first, out, seconds_since(t0));
    failed += !out.pass;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
