#include <doctest.h>

#include <omp.h>

#include "helpers.hpp"
#include "obstacle/autodiff/tape.hpp"
#include "obstacle/kernels/resnet_jet.hpp"
#include "obstacle/optimizer/neural_oracle.hpp"

using namespace obstacle;
using ad::Var;

namespace {

std::vector<double> components(const ad::SpatialJet<double>& j) {
  std::vector<double> c = {j.value};
  for (int i = 0; i < j.dim; ++i) c.push_back(j.order >= 1 ? j.grad[static_cast<std::size_t>(i)] : 0.0);
  for (int i = 0; i < j.dim; ++i) c.push_back(j.order >= 2 ? j.second[static_cast<std::size_t>(i)] : 0.0);
  return c;
}

struct OraclePair {
  std::unique_ptr<opt::NeuralOracle> fused;
  std::unique_ptr<opt::NeuralOracle> reference;
  std::vector<double> y, u, z;
};

OraclePair make_oracles(const std::string& id, std::size_t batch) {
  const auto p = problems::catalog(id);
  const auto ss = opt::default_state_spec(p, 11);
  const auto cs = opt::default_control_spec(p, 12);
  OraclePair o;
  o.fused = std::make_unique<opt::NeuralOracle>(p, ss, cs, batch, 5, opt::Backend::fused);
  o.reference = std::make_unique<opt::NeuralOracle>(p, ss, cs, batch, 5, opt::Backend::reference);
  o.y = opt::initial_params(p, ss);
  o.u = opt::initial_params(p, cs);
  o.z = o.y;
  const auto noise = testing::random_vector(o.y.size(), 3, 0.05);
  for (std::size_t i = 0; i < o.y.size(); ++i) o.z[i] += noise[i];
  o.fused->resample(0);
  o.reference->resample(0);
  return o;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("fused forward matches the reference jet pass") {
    for (auto act : {ad::Activation::swish, ad::Activation::tanh, ad::Activation::softplus}) {
      for (int order : {0, 1, 2}) {
        net::NetworkSpec s;
        s.activation = act;
        s.seed = 31;
        const auto theta = net::init_xavier(s);
        kernels::ResNetJetKernel k(s, order);
        auto ws = k.make_workspace();
        for (const auto& x : {std::vector<double>{0.2, 0.9}, std::vector<double>{-1.5, 2.2}}) {
          const auto a = k.forward(theta, x, ws);
          const auto b = net::eval_with_spatial_jet(s, theta, x, order);
          CHECK(testing::rel_err(components(a), components(b)) < 1e-14);
        }
      }
    }
  }

  TEST_CASE("fused backward matches the tape") {
    for (auto act : {ad::Activation::swish, ad::Activation::tanh}) {
      net::NetworkSpec s;
      s.activation = act;
      s.seed = 7;
      auto theta = net::init_xavier(s);
      const auto bump = testing::random_vector(theta.size(), 8, 0.1);
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += bump[i];  // nonzero biases
      kernels::ResNetJetKernel k(s, 2);
      auto ws = k.make_workspace();
      const std::vector<double> x = {0.35, 0.65};
      const auto w = testing::random_vector(5, 9);
      k.forward(theta, x, ws);
      ad::SpatialJet<double> adj = ad::SpatialJet<double>::constant(w[0], 2, 2);
      adj.grad = {w[1], w[2], 0.0};
      adj.second = {w[3], w[4], 0.0};
      std::vector<double> g(theta.size(), 0.0);
      k.backward(theta, ws, adj, g);
      auto loss = [&](std::span<const Var> t, int) {
        const auto j = net::forward_jet<Var>(s, t, x, 2);
        return w[0] * j.value + w[1] * j.grad[0] + w[2] * j.grad[1] + w[3] * j.second[0] + w[4] * j.second[1];
      };
      const auto ref = ad::grad_params(loss, std::span<const double>(theta), 0);
      CHECK(testing::rel_err(g, ref.grad) < 1e-13);
      // backward accumulates
      k.backward(theta, ws, adj, g);
      for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(2.0 * ref.grad[i]).epsilon(1e-12));
    }
  }

  TEST_CASE("fused oracle gradients match the reference backend on every example") {
    for (const auto& id : problems::catalog_ids()) {
      INFO(id);
      auto o = make_oracles(id, 37);  // not a multiple of the chunk size
      std::vector<double> gf(o.y.size()), gr(o.y.size());
      const auto lf = o.fused->state_gradient(o.y, o.u, 0.2, 1.0, gf);
      const auto lr = o.reference->state_gradient(o.y, o.u, 0.2, 1.0, gr);
      CHECK(lf.upper == doctest::Approx(lr.upper).epsilon(1e-12));
      CHECK(lf.lower == doctest::Approx(lr.lower).epsilon(1e-12));
      CHECK(testing::rel_err(gf, gr) < 1e-12);
      const opt::StateTerm terms[2] = {{o.y, 0.2, 1.0}, {o.z, 0.0, -1.0}};
      std::vector<double> cf(o.u.size()), cr(o.u.size());
      o.fused->control_gradient(terms, o.u, cf);
      o.reference->control_gradient(terms, o.u, cr);
      CHECK(testing::rel_err(cf, cr) < 1e-12);
      const auto ef = o.fused->evaluate(o.y, o.u);
      CHECK(ef.upper == doctest::Approx(lf.upper).epsilon(1e-14));
      CHECK(ef.lower == doctest::Approx(lf.lower).epsilon(1e-14));
    }
  }

  TEST_CASE("oracle state gradient matches finite differences") {
    auto o = make_oracles("example1", 20);
    std::vector<double> g(o.y.size());
    o.fused->state_gradient(o.y, o.u, 1.0, 1.0, g);
    auto f = [&](std::span<const double> y) {
      const auto l = o.fused->evaluate(y, o.u);
      return l.upper + l.lower;
    };
    // spot-check 40 coordinates
    for (std::size_t i = 0; i < o.y.size(); i += o.y.size() / 40) {
      auto yp = o.y, ym = o.y;
      const double h = 1e-6;
      yp[i] += h;
      ym[i] -= h;
      const double fd = (f(yp) - f(ym)) / (2 * h);
      CHECK(std::abs(fd - g[i]) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }

  TEST_CASE("fused reduction is bitwise independent of the thread count") {
    for (const std::string id : {"example1", "example5"}) {
      auto o = make_oracles(id, 100);
      std::vector<std::vector<double>> grads;
      for (int threads : {1, 2, 3, 5}) {
        omp_set_num_threads(threads);
        std::vector<double> g(o.y.size());
        o.fused->state_gradient(o.y, o.u, 0.3, 1.0, g);
        std::vector<double> c(o.u.size());
        const opt::StateTerm terms[1] = {{o.y, 1.0, 1.0}};
        o.fused->control_gradient(terms, o.u, c);
        g.insert(g.end(), c.begin(), c.end());
        grads.push_back(g);
      }
      omp_set_num_threads(omp_get_num_procs());
      for (const auto& g : grads) CHECK(g == grads.front());
    }
  }

  TEST_CASE("resample is reproducible and streams differ") {
    auto o = make_oracles("example1", 16);
    const auto first = o.fused->batch().points.front().x;
    o.fused->resample(1);
    CHECK(o.fused->batch().points.front().x != first);
    o.fused->resample(0);
    CHECK(o.fused->batch().points.front().x == first);
  }
}
