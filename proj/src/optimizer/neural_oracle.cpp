#include "obstacle/optimizer/neural_oracle.hpp"

#include <omp.h>

#include <algorithm>
#include <exception>
#include <string>

#include "obstacle/autodiff/tape.hpp"
#include "obstacle/problems/integrands.hpp"

namespace obstacle::opt {

using ad::SpatialJet;
using ad::Tape;
using ad::Var;
using problems::SamplePoint;

namespace {

SpatialJet<Var> leaves_of(const SpatialJet<double>& j) {
  SpatialJet<Var> r;
  r.dim = j.dim;
  r.order = j.order;
  r.value = Var::leaf(j.value);
  for (int i = 0; i < std::min(j.dim, ad::kMaxDim); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (j.order >= 1) r.grad[k] = Var::leaf(j.grad[k]);
    if (j.order >= 2) r.second[k] = Var::leaf(j.second[k]);
  }
  return r;
}

double bar_of(const Var& v, const std::vector<double>& bar) {
  return v.is_constant() ? 0.0 : bar[static_cast<std::size_t>(v.index())];
}

SpatialJet<double> adjoints_of(const SpatialJet<Var>& j, const std::vector<double>& bar) {
  SpatialJet<double> r = SpatialJet<double>::constant(bar_of(j.value, bar), j.dim, j.order);
  for (int i = 0; i < std::min(j.dim, ad::kMaxDim); ++i) {
    const auto k = static_cast<std::size_t>(i);
    r.grad[k] = bar_of(j.grad[k], bar);
    r.second[k] = bar_of(j.second[k], bar);
  }
  return r;
}

struct HeadResult {
  double upper = 0.0;
  double lower = 0.0;
  SpatialJet<double> bar_state;
  SpatialJet<double> bar_control;
};

// Differentiates the integrands with respect to the raw network jets on a
// small per-sample tape.
HeadResult head(const problems::ProblemSpec& p, const SamplePoint& s, const SpatialJet<double>& raw_state,
                const SpatialJet<double>& raw_control, double wu, double wl, bool want_state,
                bool want_control, Tape& tape, std::vector<double>& bar) {
  tape.clear();
  ad::TapeScope scope(tape);
  const SpatialJet<Var> vs = want_state ? leaves_of(raw_state) : ad::lift_jet<Var>(raw_state);
  const SpatialJet<Var> vc = want_control ? leaves_of(raw_control) : ad::lift_jet<Var>(raw_control);
  const auto it = problems::integrands<Var>(p, s, vs, vc);
  const Var loss = wu * it.upper + wl * it.lower;
  HeadResult r;
  r.upper = it.upper.value();
  r.lower = it.lower.value();
  if (loss.is_constant()) {
    bar.assign(tape.size(), 0.0);
  } else {
    tape.adjoints(loss.index(), bar);
  }
  if (want_state) r.bar_state = adjoints_of(vs, bar);
  if (want_control) r.bar_control = adjoints_of(vc, bar);
  return r;
}

// Captures the first exception thrown inside an OpenMP region so it can be
// rethrown on the calling thread.
class ErrorSlot {
 public:
  template <class F>
  void run(F&& f) {
    try {
      f();
    } catch (...) {
#pragma omp critical(obstacle_error_slot)
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::exception_ptr error_;
};

std::vector<Var> constants(std::span<const double> xs) { return {xs.begin(), xs.end()}; }

}  // namespace

struct NeuralOracle::ThreadScratch {
  kernels::ResNetJetKernel::Workspace state;
  kernels::ResNetJetKernel::Workspace state_alt;
  kernels::ResNetJetKernel::Workspace control;
  Tape tape;
  std::vector<double> bar;
};

Backend backend_from_name(std::string_view name) {
  if (name == "fused") return Backend::fused;
  if (name == "reference") return Backend::reference;
  throw ad::InputError("unknown backend '" + std::string(name) + "'");
}

std::string_view backend_name(Backend b) { return b == Backend::fused ? "fused" : "reference"; }

net::NetworkSpec default_state_spec(const problems::ProblemSpec& p, std::uint64_t seed) {
  net::NetworkSpec s;
  s.input_dim = p.domain.dim;
  s.embedding = p.state_embedding;
  s.seed = seed;
  return s;
}

net::NetworkSpec default_control_spec(const problems::ProblemSpec& p, std::uint64_t seed) {
  net::NetworkSpec s;
  s.input_dim = p.domain.dim;
  s.embedding = p.control_embedding;
  s.seed = seed;
  return s;
}

net::ParamVector initial_params(const problems::ProblemSpec& p, const net::NetworkSpec& spec) {
  net::ParamVector theta = net::init_xavier(spec);
  if (spec.embedding != net::Embedding::state_relu) return theta;
  // Probe psi / m on a grid over the sampling box, interior points only.
  const auto lo = p.domain.box_lower(), hi = p.domain.box_upper();
  double ratio = 0.0;
  constexpr int kProbe = 64;
  for (int i = 1; i < kProbe; ++i)
    for (int j = 1; j < kProbe; ++j) {
      const double x[2] = {lo[0] + (hi[0] - lo[0]) * i / kProbe, lo[1] + (hi[1] - lo[1]) * j / kProbe};
      const problems::Point pt(x, 2);
      if (!p.domain.contains(pt)) continue;
      const double m = p.mask(pt, 0).value;
      if (m > 1e-3) ratio = std::max(ratio, p.obstacle(pt, 0).value / m);
    }
  const net::NetworkLayout layout = net::layout_of(spec);
  theta[layout.output.bias] = 1.0 + ratio;
  return theta;
}

NeuralOracle::NeuralOracle(problems::ProblemSpec problem, net::NetworkSpec state_spec,
                           net::NetworkSpec control_spec, std::size_t batch_size, std::uint64_t seed,
                           Backend backend)
    : problem_(std::move(problem)),
      state_spec_(state_spec),
      control_spec_(control_spec),
      state_kernel_(state_spec, problem_.state_order()),
      control_kernel_(control_spec, problem_.control_order()),
      batch_size_(batch_size),
      seed_(seed),
      backend_(backend) {
  problem_.validate();
  if (batch_size_ < 1) throw ad::InputError("batch size must be >= 1");
  if (state_spec_.input_dim != problem_.domain.dim || control_spec_.input_dim != problem_.domain.dim)
    throw ad::InputError("network input dimension does not match the problem domain");
  const int threads = std::max(1, omp_get_max_threads());
  for (int t = 0; t < threads; ++t) {
    auto s = std::make_unique<ThreadScratch>();
    s->state = state_kernel_.make_workspace();
    s->state_alt = state_kernel_.make_workspace();
    s->control = control_kernel_.make_workspace();
    scratch_.push_back(std::move(s));
  }
}

NeuralOracle::~NeuralOracle() = default;

int NeuralOracle::jet_order() const { return std::max(problem_.state_order(), problem_.control_order()); }

void NeuralOracle::resample(std::uint64_t stream) {
  auto rng = problems::stream_rng(seed_, stream);
  batch_ = problems::sample_batch(problem_, batch_size_, rng, jet_order());
}

void NeuralOracle::set_batch(problems::SampleBatch batch) { batch_ = std::move(batch); }

LossEstimate NeuralOracle::evaluate(std::span<const double> state, std::span<const double> control) {
  const std::size_t n = batch_.size();
  if (n == 0) return {};
  const std::size_t nch = chunk_count();
  chunk_loss_.assign(2 * nch, 0.0);
  ErrorSlot err;
#pragma omp parallel for schedule(static)
  for (std::size_t ch = 0; ch < nch; ++ch) {
    err.run([&] {
      ThreadScratch& sc = *scratch_[static_cast<std::size_t>(omp_get_thread_num()) % scratch_.size()];
      double lu = 0.0, ll = 0.0;
      for (std::size_t i = ch * kChunk; i < std::min(n, (ch + 1) * kChunk); ++i) {
        const SamplePoint& s = batch_.points[i];
        const auto x = s.point(batch_.dim);
        const auto rs = state_kernel_.forward(state, x, sc.state);
        const auto rc = control_kernel_.forward(control, x, sc.control);
        const auto it = problems::integrands<double>(problem_, s, rs, rc);
        lu += it.upper;
        ll += it.lower;
      }
      chunk_loss_[2 * ch] = lu;
      chunk_loss_[2 * ch + 1] = ll;
    });
  }
  err.rethrow();
  LossEstimate out;
  for (std::size_t ch = 0; ch < nch; ++ch) {
    out.upper += chunk_loss_[2 * ch];
    out.lower += chunk_loss_[2 * ch + 1];
  }
  out.upper /= static_cast<double>(n);
  out.lower /= static_cast<double>(n);
  return out;
}

LossEstimate NeuralOracle::state_gradient(std::span<const double> state, std::span<const double> control,
                                          double upper_weight, double lower_weight, std::span<double> grad) {
  net::check_params(state_spec_, state.size());
  net::check_params(control_spec_, control.size());
  net::check_params(state_spec_, grad.size());
  if (backend_ == Backend::reference)
    return state_gradient_reference(state, control, upper_weight, lower_weight, grad);
  return state_gradient_fused(state, control, upper_weight, lower_weight, grad);
}

void NeuralOracle::control_gradient(std::span<const StateTerm> terms, std::span<const double> control,
                                    std::span<double> grad) {
  net::check_params(control_spec_, control.size());
  net::check_params(control_spec_, grad.size());
  for (const auto& t : terms) net::check_params(state_spec_, t.state.size());
  if (backend_ == Backend::reference) return control_gradient_reference(terms, control, grad);
  control_gradient_fused(terms, control, grad);
}

LossEstimate NeuralOracle::state_gradient_fused(std::span<const double> state, std::span<const double> control,
                                                double wu, double wl, std::span<double> grad) {
  const std::size_t n = batch_.size();
  const std::size_t p = grad.size();
  std::fill(grad.begin(), grad.end(), 0.0);
  if (n == 0) return {};
  const std::size_t nch = chunk_count();
  chunk_grad_.assign(nch * p, 0.0);
  chunk_loss_.assign(2 * nch, 0.0);
  ErrorSlot err;
#pragma omp parallel for schedule(static)
  for (std::size_t ch = 0; ch < nch; ++ch) {
    err.run([&] {
      ThreadScratch& sc = *scratch_[static_cast<std::size_t>(omp_get_thread_num()) % scratch_.size()];
      std::span<double> g(chunk_grad_.data() + ch * p, p);
      double lu = 0.0, ll = 0.0;
      for (std::size_t i = ch * kChunk; i < std::min(n, (ch + 1) * kChunk); ++i) {
        const SamplePoint& s = batch_.points[i];
        const auto x = s.point(batch_.dim);
        const auto rs = state_kernel_.forward(state, x, sc.state);
        const auto rc = control_kernel_.forward(control, x, sc.control);
        const HeadResult h = head(problem_, s, rs, rc, wu, wl, true, false, sc.tape, sc.bar);
        state_kernel_.backward(state, sc.state, h.bar_state, g);
        lu += h.upper;
        ll += h.lower;
      }
      chunk_loss_[2 * ch] = lu;
      chunk_loss_[2 * ch + 1] = ll;
    });
  }
  err.rethrow();
  LossEstimate out;
  for (std::size_t ch = 0; ch < nch; ++ch) {
    const double* g = chunk_grad_.data() + ch * p;
    for (std::size_t k = 0; k < p; ++k) grad[k] += g[k];
    out.upper += chunk_loss_[2 * ch];
    out.lower += chunk_loss_[2 * ch + 1];
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (double& g : grad) g *= inv;
  out.upper *= inv;
  out.lower *= inv;
  return out;
}

void NeuralOracle::control_gradient_fused(std::span<const StateTerm> terms, std::span<const double> control,
                                          std::span<double> grad) {
  const std::size_t n = batch_.size();
  const std::size_t p = grad.size();
  std::fill(grad.begin(), grad.end(), 0.0);
  if (n == 0 || terms.empty()) return;
  const std::size_t nch = chunk_count();
  chunk_grad_.assign(nch * p, 0.0);
  ErrorSlot err;
#pragma omp parallel for schedule(static)
  for (std::size_t ch = 0; ch < nch; ++ch) {
    err.run([&] {
      ThreadScratch& sc = *scratch_[static_cast<std::size_t>(omp_get_thread_num()) % scratch_.size()];
      std::span<double> g(chunk_grad_.data() + ch * p, p);
      for (std::size_t i = ch * kChunk; i < std::min(n, (ch + 1) * kChunk); ++i) {
        const SamplePoint& s = batch_.points[i];
        const auto x = s.point(batch_.dim);
        const auto rc = control_kernel_.forward(control, x, sc.control);
        SpatialJet<double> bar_total = SpatialJet<double>::constant(0.0, rc.dim, rc.order);
        for (const StateTerm& t : terms) {
          const auto rs = state_kernel_.forward(t.state, x, sc.state_alt);
          const HeadResult h =
              head(problem_, s, rs, rc, t.upper_weight, t.lower_weight, false, true, sc.tape, sc.bar);
          bar_total = bar_total + h.bar_control;
        }
        control_kernel_.backward(control, sc.control, bar_total, g);
      }
    });
  }
  err.rethrow();
  for (std::size_t ch = 0; ch < nch; ++ch) {
    const double* g = chunk_grad_.data() + ch * p;
    for (std::size_t k = 0; k < p; ++k) grad[k] += g[k];
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (double& g : grad) g *= inv;
}

LossEstimate NeuralOracle::state_gradient_reference(std::span<const double> state,
                                                    std::span<const double> control, double wu, double wl,
                                                    std::span<double> grad) {
  const std::size_t n = batch_.size();
  std::fill(grad.begin(), grad.end(), 0.0);
  if (n == 0) return {};
  Tape tape;
  ad::TapeScope scope(tape);
  std::vector<Var> ps;
  ps.reserve(state.size());
  for (double t : state) ps.push_back(Var::leaf(t));
  const std::vector<Var> cs = constants(control);
  std::vector<Var> terms;
  terms.reserve(n);
  LossEstimate out;
  for (const SamplePoint& s : batch_.points) {
    const auto x = s.point(batch_.dim);
    const auto rs = net::forward_jet<Var>(state_spec_, ps, x, problem_.state_order());
    const auto rc = net::forward_jet<Var>(control_spec_, cs, x, problem_.control_order());
    const auto it = problems::integrands<Var>(problem_, s, rs, rc);
    terms.push_back(wu * it.upper + wl * it.lower);
    out.upper += it.upper.value();
    out.lower += it.lower.value();
  }
  const Var loss = ad::mean(terms);
  if (!loss.is_constant()) {
    const auto bar = tape.adjoints(loss.index());
    for (std::size_t k = 0; k < ps.size(); ++k) grad[k] = bar[static_cast<std::size_t>(ps[k].index())];
  }
  out.upper /= static_cast<double>(n);
  out.lower /= static_cast<double>(n);
  return out;
}

void NeuralOracle::control_gradient_reference(std::span<const StateTerm> terms, std::span<const double> control,
                                              std::span<double> grad) {
  const std::size_t n = batch_.size();
  std::fill(grad.begin(), grad.end(), 0.0);
  if (n == 0 || terms.empty()) return;
  Tape tape;
  ad::TapeScope scope(tape);
  std::vector<Var> cs;
  cs.reserve(control.size());
  for (double t : control) cs.push_back(Var::leaf(t));
  std::vector<std::vector<Var>> states;
  for (const auto& t : terms) states.push_back(constants(t.state));
  std::vector<Var> per_sample;
  per_sample.reserve(n);
  for (const SamplePoint& s : batch_.points) {
    const auto x = s.point(batch_.dim);
    const auto rc = net::forward_jet<Var>(control_spec_, cs, x, problem_.control_order());
    Var acc(0.0);
    for (std::size_t t = 0; t < terms.size(); ++t) {
      const auto rs = net::forward_jet<Var>(state_spec_, states[t], x, problem_.state_order());
      const auto it = problems::integrands<Var>(problem_, s, rs, rc);
      acc = acc + (terms[t].upper_weight * it.upper + terms[t].lower_weight * it.lower);
    }
    per_sample.push_back(acc);
  }
  const Var loss = ad::mean(per_sample);
  if (!loss.is_constant()) {
    const auto bar = tape.adjoints(loss.index());
    for (std::size_t k = 0; k < cs.size(); ++k) grad[k] = bar[static_cast<std::size_t>(cs[k].index())];
  }
}

}  // namespace obstacle::opt
