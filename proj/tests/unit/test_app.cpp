#include <doctest.h>

#include <filesystem>

#include "helpers.hpp"
#include "obstacle/app/experiment.hpp"
#include "obstacle/evalio/formats.hpp"

using namespace obstacle;
namespace fs = std::filesystem;

namespace {

evalio::ExperimentConfig tiny(const std::string& problem, const fs::path& out) {
  auto c = evalio::default_config(problem);
  c.hp.iterations = 40;
  c.hp.batch = 32;
  c.adam.iterations = 20;
  c.grid = 16;
  c.out_dir = out.string();
  return c;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("obstacle_unit_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("app") {
  TEST_CASE("window trend") {
    std::vector<opt::TrajectoryRow> rows;
    for (std::uint64_t k = 0; k < 2000; ++k) rows.push_back({k, 100.0 - 0.01 * k + ((k % 2) ? 3.0 : -3.0), 1.0});
    const auto t = app::window_trend(rows, true, 500);
    REQUIRE(t.means.size() == 4);
    CHECK(t.increases == 0);
    CHECK(t.last_below_first);
    CHECK(t.means[0] == doctest::Approx(100.0 - 0.01 * 249.5));
    const auto flat = app::window_trend(rows, false, 500);
    CHECK_FALSE(flat.last_below_first);
    CHECK(app::window_trend(rows, true, 3000).means.empty());
  }

  TEST_CASE("equal seeds give bitwise-identical checkpoints and logs") {
    app::RunOptions quiet;
    quiet.write = false;
    quiet.log_every = 0;
    const auto a = app::run_experiment(tiny("example1", scratch("a")), quiet);
    const auto b = app::run_experiment(tiny("example1", scratch("b")), quiet);
    CHECK(a.stage1.state == b.stage1.state);
    CHECK(a.stage1.control == b.stage1.control);
    REQUIRE(a.stage2);
    CHECK(a.stage2->state == b.stage2->state);
    REQUIRE(a.stage1_rows.size() == 40);
    for (std::size_t i = 0; i < 40; ++i) CHECK(a.stage1_rows[i].upper_loss == b.stage1_rows[i].upper_loss);
    auto other = tiny("example1", scratch("c"));
    other.hp.seed = 1;
    const auto c = app::run_experiment(other, quiet);
    CHECK(c.stage1.state != a.stage1.state);
    CHECK(a.stage1_errors.state.has_value());
    CHECK(a.stage2_errors.control.has_value());
  }

  TEST_CASE("run writes the documented artifacts") {
    const auto dir = scratch("artifacts");
    app::RunOptions opts;
    opts.log_every = 0;
    const auto cfg = tiny("example1", dir);
    const auto r = app::run_experiment(cfg, opts);
    for (const char* f : {"config.ini", "trajectory_stage1.csv", "trajectory_stage2.csv", "checkpoint_stage1.bin",
                          "checkpoint_stage2.bin", "state.dat", "control.dat", "summary.json"})
      CHECK_MESSAGE(fs::exists(dir / f), f);
    const auto back = evalio::load_checkpoint(dir / "checkpoint_stage1.bin");
    CHECK(back.state == r.stage1.state);
    CHECK(evalio::read_trajectory(dir / "trajectory_stage1.csv").size() == 40);
    CHECK(evalio::load_config(dir / "config.ini").hp.iterations == 40);
    // stage 2 from the saved checkpoint reproduces the in-run stage 2
    const auto s2 = app::run_stage2(cfg, back);
    CHECK(s2.state == r.stage2->state);
    fs::remove_all(dir);
  }

  TEST_CASE("single-level runs and every example trains a few steps") {
    app::RunOptions quiet;
    quiet.write = false;
    quiet.log_every = 0;
    auto sl = tiny("example1", scratch("sl"));
    sl.algorithm = evalio::Algorithm::single_level;
    sl.stage2 = false;
    const auto r = app::run_experiment(sl, quiet);
    CHECK(r.stage1.stage == "single_level");
    CHECK_FALSE(r.stage2.has_value());
    for (const auto& id : problems::catalog_ids()) {
      auto c = tiny(id, scratch(id));
      c.hp.iterations = 5;
      c.adam.iterations = 5;
      INFO(id);
      CHECK_NOTHROW(app::run_experiment(c, quiet));
    }
  }

  TEST_CASE("oracle consistency compares against the PDAS state") {
    app::RunOptions quiet;
    quiet.write = false;
    quiet.log_every = 0;
    const auto r = app::run_experiment(tiny("example5", scratch("cons")), quiet);
    const auto f = app::evaluator_for(*r.stage2);
    const auto c = app::oracle_consistency(f, 20);
    CHECK(c.network.state.n == 20);
    CHECK(c.pdas.y.n == 20);
    CHECK(c.relative_l2 >= 0.0);
    CHECK(std::isfinite(c.relative_l2));
  }
}
