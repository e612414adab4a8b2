#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "obstacle/networks/embedding.hpp"
#include "obstacle/networks/network.hpp"
#include "obstacle/problems/integrands.hpp"

using namespace obstacle;
using ad::SpatialJet;

namespace {

double swish(double t) { return t / (1.0 + std::exp(-t)); }

SpatialJet<double> value_jet(double v) { return SpatialJet<double>::constant(v, 2, 0); }

}  // namespace

TEST_SUITE("networks") {
  TEST_CASE("default architecture") {
    net::NetworkSpec s;
    CHECK(s.blocks == 3);
    CHECK(s.width == 16);
    CHECK(s.activation == ad::Activation::swish);
    // lift 16*2+16, 6 hidden 16*16+16, output 16+1
    CHECK(s.param_count() == 48 + 6 * 272 + 17);
  }

  TEST_CASE("xavier: zero biases, bounded weights, deterministic") {
    net::NetworkSpec s;
    s.seed = 42;
    const auto t = net::init_xavier(s);
    const auto l = net::layout_of(s);
    CHECK(t.size() == s.param_count());
    auto biases_zero = [&](const net::DenseLayout& d) {
      for (int r = 0; r < d.rows; ++r) CHECK(t[d.bias + static_cast<std::size_t>(r)] == 0.0);
    };
    biases_zero(l.lift);
    biases_zero(l.output);
    const double bound = std::sqrt(6.0 / 32.0);
    CHECK(bound == doctest::Approx(0.4330).epsilon(1e-4));
    for (const auto& d : l.hidden) {
      biases_zero(d);
      double lo = 1.0, hi = -1.0;
      for (int k = 0; k < d.rows * d.cols; ++k) {
        const double w = t[d.weights + static_cast<std::size_t>(k)];
        lo = std::min(lo, w);
        hi = std::max(hi, w);
      }
      CHECK(lo >= -bound);
      CHECK(hi <= bound);
      CHECK(hi - lo > bound);  // actually spread over the interval
    }
    CHECK(net::init_xavier(s) == t);
    s.seed = 43;
    CHECK(net::init_xavier(s) != t);
  }

  TEST_CASE("zero parameters give zero output") {
    net::NetworkSpec s;
    const std::vector<double> t(s.param_count(), 0.0);
    for (const auto& x : {std::vector<double>{0.1, 0.9}, std::vector<double>{-3.0, 2.0}})
      CHECK(net::raw_forward(s, t, x) == 0.0);
  }

  TEST_CASE("one block, width one, by hand") {
    net::NetworkSpec s;
    s.blocks = 1;
    s.width = 1;
    const auto l = net::layout_of(s);
    std::vector<double> t(l.total, 0.0);
    t[l.lift.weights] = 1.0;      // h0 = x1 + 0.5 x2 - 0.25
    t[l.lift.weights + 1] = 0.5;
    t[l.lift.bias] = -0.25;
    t[l.hidden[0].weights] = 2.0;  // a1 = swish(2 h0 + 0.1)
    t[l.hidden[0].bias] = 0.1;
    t[l.hidden[1].weights] = -1.0;  // a2 = swish(-a1 + 0.3)
    t[l.hidden[1].bias] = 0.3;
    t[l.output.weights] = 3.0;  // out = 3 (h0 + a2) - 1
    t[l.output.bias] = -1.0;
    const double x[2] = {0.6, 0.2};
    const double h0 = 0.6 + 0.1 - 0.25;
    const double a1 = swish(2.0 * h0 + 0.1);
    const double a2 = swish(-a1 + 0.3);
    CHECK(net::raw_forward(s, t, x) == doctest::Approx(3.0 * (h0 + a2) - 1.0).epsilon(1e-15));
  }

  TEST_CASE("raw output is continuous") {
    net::NetworkSpec s;
    s.seed = 9;
    const auto t = net::init_xavier(s);
    const std::vector<double> x = {0.4, 0.6};
    double prev = 1.0;
    for (double d : {1e-2, 1e-4, 1e-6, 1e-8}) {
      const std::vector<double> xd = {0.4 + d, 0.6 - d};
      const double diff = std::abs(net::raw_forward(s, t, x) - net::raw_forward(s, t, xd));
      CHECK(diff <= prev);
      prev = diff;
    }
    CHECK(prev < 1e-7);
  }

  TEST_CASE("state embeddings") {
    using net::Embedding;
    const auto zero = value_jet(0.0);
    // boundary: m = 0 gives psi exactly
    CHECK(net::embed_state(Embedding::state_square, value_jet(7.3), zero, value_jet(0.4)).value == 0.4);
    CHECK(net::embed_state(Embedding::state_square, value_jet(-1.0), value_jet(0.2), zero).value ==
          doctest::Approx(0.2).epsilon(1e-15));
    // relu variant: N m < psi gives psi
    CHECK(net::embed_state(Embedding::state_relu, value_jet(1.0), value_jet(0.2), value_jet(0.5)).value == 0.5);
    CHECK(net::embed_state(Embedding::state_relu, value_jet(4.0), value_jet(0.2), value_jet(0.5)).value ==
          doctest::Approx(0.8).epsilon(1e-15));
    CHECK_THROWS_AS(net::embed_state(Embedding::control_raw, zero, zero, zero), ad::InputError);
  }

  TEST_CASE("control clamp") {
    CHECK(net::clamp_control(0.35, 0.0, 0.7) == doctest::Approx(0.35).epsilon(1e-15));
    CHECK(net::clamp_control(-2.0, 0.0, 0.7) == 0.0);
    CHECK(net::clamp_control(5.0, 0.0, 0.7) == 0.7);
    CHECK_THROWS_AS(net::clamp_control(0.1, 1.0, 0.0), ad::InputError);
    for (double raw : testing::random_vector(1000, 11, 3.0)) {
      const double u = net::clamp_control(raw, -0.2, 0.7);
      CHECK(net::clamp_control(u, -0.2, 0.7) == u);
    }
  }

  TEST_CASE("obstacle-control pair") {
    const auto m = value_jet(0.5);
    {
      const auto [psi, y] = net::embed_obstacle_control(value_jet(1.0), value_jet(3.0), m);
      CHECK(psi.value == 0.5);
      CHECK(y.value == 0.5);  // m N_y > psi: y = psi
    }
    {
      const auto [psi, y] = net::embed_obstacle_control(value_jet(1.0), value_jet(-2.0), m);
      CHECK(y.value == -1.0);  // m N_y < psi: y = m N_y
    }
    {
      const auto [psi, y] = net::embed_obstacle_control(value_jet(4.0), value_jet(-9.0), value_jet(0.0));
      CHECK(psi.value == 0.0);
      CHECK(y.value == 0.0);
    }
  }

  TEST_CASE("network-level convenience forms agree with the jet forms") {
    net::NetworkSpec s;
    s.seed = 5;
    const auto t = net::init_xavier(s);
    const double x[2] = {0.25, 0.5};
    const double n = net::raw_forward(s, t, x);
    CHECK(net::embed_state(s, t, x, 0.1, 0.3) == doctest::Approx(0.3 * n * n + 0.1).epsilon(1e-15));
    net::NetworkSpec c = s;
    c.embedding = net::Embedding::control_clamp;
    CHECK(net::embed_control(c, t, x, -0.01, 0.01) == std::clamp(n, -0.01, 0.01));
  }

  TEST_CASE("feasibility and boundary exactness on random points") {
    for (const std::string id : {"example1", "example1_constrained", "example2", "example3", "example4", "example5"}) {
      const auto p = problems::catalog(id);
      net::NetworkSpec ss;
      ss.embedding = p.state_embedding;
      ss.seed = 21;
      net::NetworkSpec cs;
      cs.embedding = p.control_embedding;
      cs.seed = 22;
      auto ty = net::init_xavier(ss), tu = net::init_xavier(cs);
      for (double& v : ty) v *= 4.0;  // push outputs through both ReLU branches
      for (double& v : tu) v *= 4.0;
      auto rng = problems::stream_rng(1, 1);
      const auto batch = problems::sample_batch(p, 10000, rng, 0);
      double worst = 0.0;
      for (const auto& sp : batch.points) {
        const auto rs = net::forward_jet<double>(ss, ty, sp.point(2), 0);
        const auto rc = net::forward_jet<double>(cs, tu, sp.point(2), 0);
        const auto f = problems::embed_fields<double>(p, sp, rs, rc);
        const double psi = p.obstacle_is_control() ? f.control.value : sp.obstacle.value;
        const double gap = p.obstacle_is_control() ? psi - f.state.value : f.state.value - psi;
        worst = std::min(worst, gap);
        if (p.bounds) {
          CHECK(f.control.value >= p.bounds->lower - 1e-12);
          CHECK(f.control.value <= p.bounds->upper + 1e-12);
        }
      }
      INFO(id);
      CHECK(worst >= -1e-12);
    }
    // boundary of the unit square, square embedding: y = psi = 0
    const auto p = problems::catalog("example1");
    net::NetworkSpec ss;
    ss.seed = 3;
    const auto ty = net::init_xavier(ss);
    auto rng = problems::stream_rng(2, 2);
    for (int k = 0; k < 1000; ++k) {
      const double s = problems::unit_uniform(rng);
      const double edge[4][2] = {{s, 0.0}, {s, 1.0}, {0.0, s}, {1.0, s}};
      const auto& e = edge[k % 4];
      const problems::SamplePoint sp = problems::make_sample(p, problems::Point(e, 2), 0);
      const auto rs = net::forward_jet<double>(ss, ty, sp.point(2), 0);
      const auto y = net::embed_state(ss.embedding, rs, sp.mask, sp.obstacle);
      CHECK(std::abs(y.value - sp.obstacle.value) <= 1e-12);
    }
  }
}
