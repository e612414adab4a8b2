#pragma once

// Scalar reverse-mode tape.
//
// Every operation records its local partial derivatives at construction time,
// so the reverse sweep is a single pass of multiply-adds over the node list.
// Operations whose operands are all constants fold to constants and never
// touch the tape. A thread-local "active tape" receives new nodes; use
// TapeScope to install one.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace obstacle::ad {

/// The closed set of primitives the tape can differentiate.
enum class Primitive : std::uint8_t {
  add,
  sub,
  mul,
  neg,
  square,
  sigmoid,
  tanh,
  softplus,
  relu,
  step,  // Heaviside, derivative 0 everywhere
  max_const,
  min_const,
};

class UnsupportedPrimitive : public std::invalid_argument {
 public:
  explicit UnsupportedPrimitive(const std::string& name)
      : std::invalid_argument("unsupported primitive: " + name) {}
};

class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Looks up a primitive by name; throws UnsupportedPrimitive for anything
/// outside the supported set.
Primitive primitive_from_name(std::string_view name);
std::string_view primitive_name(Primitive p);

class Tape {
 public:
  struct Node {
    std::int32_t a = -1;
    std::int32_t b = -1;
    double da = 0.0;
    double db = 0.0;
  };

  std::int32_t push_leaf();
  std::int32_t push(std::int32_t a, double da, std::int32_t b = -1, double db = 0.0);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

  /// Reverse sweep seeded with d(output)/d(output) = 1. Returns adjoints for
  /// every node on the tape.
  std::vector<double> adjoints(std::int32_t output) const;
  /// Same as above, writing into a caller-owned buffer (resized as needed).
  void adjoints(std::int32_t output, std::vector<double>& bar) const;

 private:
  std::vector<Node> nodes_;
};

/// The tape that receives nodes on this thread; throws if none is installed.
Tape& active_tape();
bool has_active_tape();

/// Installs `tape` as the active tape for the lifetime of the scope.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

class Var {
 public:
  Var() = default;
  Var(double constant) : value_(constant) {}  // NOLINT: implicit by design of mixed arithmetic

  /// A new independent variable on the active tape.
  static Var leaf(double value);
  static Var node(double value, std::int32_t index) {
    Var v(value);
    v.index_ = index;
    return v;
  }

  double value() const { return value_; }
  std::int32_t index() const { return index_; }
  bool is_constant() const { return index_ < 0; }

 private:
  double value_ = 0.0;
  std::int32_t index_ = -1;
};

namespace detail {
Var unary(double value, const Var& a, double da);
Var binary(double value, const Var& a, double da, const Var& b, double db);
}  // namespace detail

inline Var operator+(const Var& a, const Var& b) {
  return detail::binary(a.value() + b.value(), a, 1.0, b, 1.0);
}
inline Var operator-(const Var& a, const Var& b) {
  return detail::binary(a.value() - b.value(), a, 1.0, b, -1.0);
}
inline Var operator*(const Var& a, const Var& b) {
  return detail::binary(a.value() * b.value(), a, b.value(), b, a.value());
}
inline Var operator-(const Var& a) { return detail::unary(-a.value(), a, -1.0); }
inline Var operator+(const Var& a, double c) { return detail::unary(a.value() + c, a, 1.0); }
inline Var operator+(double c, const Var& a) { return a + c; }
inline Var operator-(const Var& a, double c) { return detail::unary(a.value() - c, a, 1.0); }
inline Var operator-(double c, const Var& a) { return detail::unary(c - a.value(), a, -1.0); }
inline Var operator*(const Var& a, double c) { return detail::unary(a.value() * c, a, c); }
inline Var operator*(double c, const Var& a) { return a * c; }

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }

// Elementary functions. The double overloads let templated code call the
// same unqualified names for both scalar types.
Var square(const Var& a);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var softplus(const Var& a);
Var relu(const Var& a);
Var step(const Var& a);
Var max(const Var& a, double c);
Var min(const Var& a, double c);

double square(double a);
double sigmoid(double a);
double tanh(double a);
double softplus(double a);
double relu(double a);
double step(double a);
double max(double a, double c);
double min(double a, double c);

inline double value_of(double a) { return a; }
inline double value_of(const Var& a) { return a.value(); }

/// Dispatches a unary primitive by tag; binary tags and tags that need a
/// constant argument throw UnsupportedPrimitive.
Var apply(Primitive p, const Var& a);
Var apply(Primitive p, const Var& a, double constant);

Var sum(std::span<const Var> xs);
/// Mean of an empty span is the constant 0 (no node, no NaN).
Var mean(std::span<const Var> xs);

struct Gradient {
  double value = 0.0;
  std::vector<double> grad;
};

/// d(loss)/d(theta) by reverse accumulation on a private tape. `loss` is
/// called as loss(std::span<const Var> theta, const Batch& batch) and must
/// return a Var.
template <class Loss, class Batch>
Gradient grad_params(Loss&& loss, std::span<const double> theta, const Batch& batch) {
  Tape tape;
  tape.reserve(theta.size() * 8);
  TapeScope scope(tape);
  std::vector<Var> params;
  params.reserve(theta.size());
  for (double t : theta) params.push_back(Var::leaf(t));
  const Var out = loss(std::span<const Var>(params), batch);

  Gradient result;
  result.value = out.value();
  result.grad.assign(theta.size(), 0.0);
  if (out.is_constant()) return result;
  const std::vector<double> bar = tape.adjoints(out.index());
  for (std::size_t i = 0; i < params.size(); ++i) result.grad[i] = bar[params[i].index()];
  return result;
}

}  // namespace obstacle::ad
