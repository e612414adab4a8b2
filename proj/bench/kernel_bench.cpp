// Fused OpenMP gradient kernel vs the serial tape reference, per batch of
// m = 512 samples. Arguments: {problem index, threads}; the reference
// backend ignores the thread count.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "obstacle/optimizer/neural_oracle.hpp"

using namespace obstacle;

namespace {

const char* const kProblems[] = {"example1", "example5", "example4"};

struct Setup {
  std::unique_ptr<opt::NeuralOracle> oracle;
  std::vector<double> state, control;
};

Setup make(int problem, opt::Backend backend) {
  const auto p = problems::catalog(kProblems[problem]);
  const auto ss = opt::default_state_spec(p, 1), cs = opt::default_control_spec(p, 2);
  Setup s;
  s.oracle = std::make_unique<opt::NeuralOracle>(p, ss, cs, 512, 3, backend);
  s.oracle->resample(0);
  s.state = opt::initial_params(p, ss);
  s.control = opt::initial_params(p, cs);
  return s;
}

void state_gradient(benchmark::State& st, opt::Backend backend) {
  const int problem = static_cast<int>(st.range(0));
  omp_set_num_threads(static_cast<int>(st.range(1)));
  auto s = make(problem, backend);
  std::vector<double> g(s.state.size());
  for (auto _ : st) {
    s.oracle->state_gradient(s.state, s.control, 0.2, 1.0, g);
    benchmark::DoNotOptimize(g.data());
  }
  st.SetLabel(kProblems[problem]);
  st.SetItemsProcessed(st.iterations() * 512);
}

void control_gradient(benchmark::State& st, opt::Backend backend) {
  const int problem = static_cast<int>(st.range(0));
  omp_set_num_threads(static_cast<int>(st.range(1)));
  auto s = make(problem, backend);
  std::vector<double> g(s.control.size());
  const opt::StateTerm terms[2] = {{s.state, 0.2, 1.0}, {s.state, 0.0, -1.0}};
  for (auto _ : st) {
    s.oracle->control_gradient(terms, s.control, g);
    benchmark::DoNotOptimize(g.data());
  }
  st.SetLabel(kProblems[problem]);
  st.SetItemsProcessed(st.iterations() * 512);
}

void threads_args(benchmark::internal::Benchmark* b) {
  const int maxt = std::max(1, omp_get_num_procs());
  for (int p = 0; p < 3; ++p)
    for (int t = 1; t <= maxt; t *= 2) b->Args({p, t});
}

void serial_args(benchmark::internal::Benchmark* b) {
  for (int p = 0; p < 3; ++p) b->Args({p, 1});
}

}  // namespace

BENCHMARK_CAPTURE(state_gradient, fused, opt::Backend::fused)->Apply(threads_args)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(state_gradient, reference, opt::Backend::reference)->Apply(serial_args)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(control_gradient, fused, opt::Backend::fused)->Apply(threads_args)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(control_gradient, reference, opt::Backend::reference)
    ->Apply(serial_args)
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
