#include "obstacle/autodiff/tape.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <utility>

namespace obstacle::ad {

namespace {

thread_local Tape* g_active = nullptr;

constexpr std::array<std::pair<std::string_view, Primitive>, 12> kPrimitiveNames{{
    {"add", Primitive::add},
    {"sub", Primitive::sub},
    {"mul", Primitive::mul},
    {"neg", Primitive::neg},
    {"square", Primitive::square},
    {"sigmoid", Primitive::sigmoid},
    {"tanh", Primitive::tanh},
    {"softplus", Primitive::softplus},
    {"relu", Primitive::relu},
    {"step", Primitive::step},
    {"max", Primitive::max_const},
    {"min", Primitive::min_const},
}};

double sigmoid_value(double a) {
  if (a >= 0.0) {
    const double e = std::exp(-a);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(a);
  return e / (1.0 + e);
}

double softplus_value(double a) {
  // log(1 + e^a) without overflow for large |a|
  return std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a)));
}

}  // namespace

Primitive primitive_from_name(std::string_view name) {
  for (const auto& [n, p] : kPrimitiveNames)
    if (n == name) return p;
  throw UnsupportedPrimitive(std::string(name));
}

std::string_view primitive_name(Primitive p) {
  for (const auto& [n, q] : kPrimitiveNames)
    if (q == p) return n;
  return "?";
}

std::int32_t Tape::push_leaf() {
  nodes_.push_back(Node{});
  return static_cast<std::int32_t>(nodes_.size() - 1);
}

std::int32_t Tape::push(std::int32_t a, double da, std::int32_t b, double db) {
  nodes_.push_back(Node{a, b, da, db});
  return static_cast<std::int32_t>(nodes_.size() - 1);
}

std::vector<double> Tape::adjoints(std::int32_t output) const {
  std::vector<double> bar;
  adjoints(output, bar);
  return bar;
}

void Tape::adjoints(std::int32_t output, std::vector<double>& bar) const {
  bar.assign(nodes_.size(), 0.0);
  if (output < 0) return;
  bar[static_cast<std::size_t>(output)] = 1.0;
  for (std::int32_t i = output; i >= 0; --i) {
    const double g = bar[static_cast<std::size_t>(i)];
    if (g == 0.0) continue;
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.a >= 0) bar[static_cast<std::size_t>(n.a)] += n.da * g;
    if (n.b >= 0) bar[static_cast<std::size_t>(n.b)] += n.db * g;
  }
}

Tape& active_tape() {
  if (g_active == nullptr) throw std::logic_error("no active tape on this thread");
  return *g_active;
}

bool has_active_tape() { return g_active != nullptr; }

TapeScope::TapeScope(Tape& tape) : previous_(g_active) { g_active = &tape; }
TapeScope::~TapeScope() { g_active = previous_; }

Var Var::leaf(double value) { return Var::node(value, active_tape().push_leaf()); }

namespace detail {

Var unary(double value, const Var& a, double da) {
  if (a.is_constant()) return Var(value);
  return Var::node(value, active_tape().push(a.index(), da));
}

Var binary(double value, const Var& a, double da, const Var& b, double db) {
  if (a.is_constant() && b.is_constant()) return Var(value);
  if (a.is_constant()) return Var::node(value, active_tape().push(b.index(), db));
  if (b.is_constant()) return Var::node(value, active_tape().push(a.index(), da));
  return Var::node(value, active_tape().push(a.index(), da, b.index(), db));
}

}  // namespace detail

double square(double a) { return a * a; }
double sigmoid(double a) { return sigmoid_value(a); }
double tanh(double a) { return std::tanh(a); }
double softplus(double a) { return softplus_value(a); }
double relu(double a) { return a > 0.0 ? a : 0.0; }
double step(double a) { return a > 0.0 ? 1.0 : 0.0; }
double max(double a, double c) { return a > c ? a : c; }
double min(double a, double c) { return a < c ? a : c; }

Var square(const Var& a) { return detail::unary(a.value() * a.value(), a, 2.0 * a.value()); }

Var sigmoid(const Var& a) {
  const double s = sigmoid_value(a.value());
  return detail::unary(s, a, s * (1.0 - s));
}

Var tanh(const Var& a) {
  const double t = std::tanh(a.value());
  return detail::unary(t, a, 1.0 - t * t);
}

Var softplus(const Var& a) {
  return detail::unary(softplus_value(a.value()), a, sigmoid_value(a.value()));
}

// Subderivative at 0 is 0.
Var relu(const Var& a) {
  const bool on = a.value() > 0.0;
  return detail::unary(on ? a.value() : 0.0, a, on ? 1.0 : 0.0);
}

Var step(const Var& a) { return Var(a.value() > 0.0 ? 1.0 : 0.0); }

Var max(const Var& a, double c) {
  const bool on = a.value() > c;
  return detail::unary(on ? a.value() : c, a, on ? 1.0 : 0.0);
}

Var min(const Var& a, double c) {
  const bool on = a.value() < c;
  return detail::unary(on ? a.value() : c, a, on ? 1.0 : 0.0);
}

Var apply(Primitive p, const Var& a) {
  switch (p) {
    case Primitive::neg: return -a;
    case Primitive::square: return square(a);
    case Primitive::sigmoid: return sigmoid(a);
    case Primitive::tanh: return tanh(a);
    case Primitive::softplus: return softplus(a);
    case Primitive::relu: return relu(a);
    case Primitive::step: return step(a);
    default: throw UnsupportedPrimitive(std::string(primitive_name(p)) + " (not unary)");
  }
}

Var apply(Primitive p, const Var& a, double constant) {
  switch (p) {
    case Primitive::max_const: return max(a, constant);
    case Primitive::min_const: return min(a, constant);
    default:
      throw UnsupportedPrimitive(std::string(primitive_name(p)) + " (no constant form)");
  }
}

Var sum(std::span<const Var> xs) {
  // Pairwise summation keeps the tape shallow and the rounding order fixed.
  if (xs.empty()) return Var(0.0);
  if (xs.size() == 1) return xs[0];
  const std::size_t half = xs.size() / 2;
  return sum(xs.first(half)) + sum(xs.subspan(half));
}

Var mean(std::span<const Var> xs) {
  if (xs.empty()) return Var(0.0);
  return sum(xs) * (1.0 / static_cast<double>(xs.size()));
}

}  // namespace obstacle::ad
