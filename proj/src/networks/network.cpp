#include "obstacle/networks/network.hpp"

#include <cmath>
#include <random>
#include <string>

namespace obstacle::net {

namespace {

DenseLayout place(std::size_t& cursor, int rows, int cols) {
  DenseLayout d;
  d.rows = rows;
  d.cols = cols;
  d.weights = cursor;
  cursor += static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  d.bias = cursor;
  cursor += static_cast<std::size_t>(rows);
  return d;
}

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void fill_xavier(ParamVector& theta, const DenseLayout& d, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(d.rows + d.cols));
  const std::size_t n = static_cast<std::size_t>(d.rows) * static_cast<std::size_t>(d.cols);
  for (std::size_t i = 0; i < n; ++i) theta[d.weights + i] = bound * (2.0 * unit_uniform(rng) - 1.0);
}

template <class T>
std::vector<SpatialJet<T>> dense(const DenseLayout& d, std::span<const T> theta,
                                 const std::vector<SpatialJet<T>>& in, int order) {
  std::vector<SpatialJet<T>> out;
  out.reserve(static_cast<std::size_t>(d.rows));
  const int dim = in.front().dim;
  for (int r = 0; r < d.rows; ++r) {
    SpatialJet<T> acc = SpatialJet<T>::constant(theta[d.bias + static_cast<std::size_t>(r)], dim, order);
    for (int c = 0; c < d.cols; ++c) {
      const T& w = theta[d.weights + static_cast<std::size_t>(r * d.cols + c)];
      acc = acc + scale(in[static_cast<std::size_t>(c)], w);
    }
    out.push_back(acc);
  }
  return out;
}

}  // namespace

Embedding embedding_from_name(std::string_view name) {
  if (name == "state_square") return Embedding::state_square;
  if (name == "state_relu") return Embedding::state_relu;
  if (name == "control_raw") return Embedding::control_raw;
  if (name == "control_clamp") return Embedding::control_clamp;
  if (name == "obstacle_raw") return Embedding::obstacle_raw;
  if (name == "state_below_obstacle") return Embedding::state_below_obstacle;
  throw InputError("unknown embedding '" + std::string(name) + "'");
}

std::string_view embedding_name(Embedding e) {
  switch (e) {
    case Embedding::state_square: return "state_square";
    case Embedding::state_relu: return "state_relu";
    case Embedding::control_raw: return "control_raw";
    case Embedding::control_clamp: return "control_clamp";
    case Embedding::obstacle_raw: return "obstacle_raw";
    case Embedding::state_below_obstacle: return "state_below_obstacle";
  }
  return "?";
}

std::size_t NetworkSpec::param_count() const { return layout_of(*this).total; }

void NetworkSpec::validate() const {
  if (input_dim < 1 || input_dim > ad::kMaxDim)
    throw InputError("input_dim must be in [1, " + std::to_string(ad::kMaxDim) + "]");
  if (blocks < 0) throw InputError("blocks must be >= 0");
  if (width < 1) throw InputError("width must be >= 1");
}

bool NetworkSpec::same_architecture(const NetworkSpec& o) const {
  return input_dim == o.input_dim && blocks == o.blocks && width == o.width &&
         activation == o.activation && embedding == o.embedding;
}

NetworkLayout layout_of(const NetworkSpec& spec) {
  spec.validate();
  NetworkLayout l;
  std::size_t cursor = 0;
  l.lift = place(cursor, spec.width, spec.input_dim);
  for (int b = 0; b < spec.blocks; ++b) {
    l.hidden.push_back(place(cursor, spec.width, spec.width));
    l.hidden.push_back(place(cursor, spec.width, spec.width));
  }
  l.output = place(cursor, 1, spec.width);
  l.total = cursor;
  return l;
}

ParamVector init_xavier(const NetworkSpec& spec) {
  const NetworkLayout l = layout_of(spec);
  ParamVector theta(l.total, 0.0);
  std::mt19937_64 rng(spec.seed);
  fill_xavier(theta, l.lift, rng);
  for (const auto& d : l.hidden) fill_xavier(theta, d, rng);
  fill_xavier(theta, l.output, rng);
  return theta;
}

void check_input(const NetworkSpec& spec, std::span<const double> x) {
  if (static_cast<int>(x.size()) != spec.input_dim)
    throw InputError("input has dimension " + std::to_string(x.size()) + ", network expects " +
                     std::to_string(spec.input_dim));
}

void check_params(const NetworkSpec& spec, std::size_t size) {
  const std::size_t want = spec.param_count();
  if (size != want)
    throw InputError("parameter vector has length " + std::to_string(size) + ", network expects " +
                     std::to_string(want));
}

template <class T>
SpatialJet<T> forward_jet(const NetworkSpec& spec, std::span<const T> theta,
                          std::span<const double> x, int order) {
  check_input(spec, x);
  check_params(spec, theta.size());
  const NetworkLayout l = layout_of(spec);
  const int dim = spec.input_dim;

  std::vector<SpatialJet<T>> coords;
  for (int i = 0; i < dim; ++i)
    coords.push_back(SpatialJet<T>::coordinate(x[static_cast<std::size_t>(i)], i, dim, order));

  std::vector<SpatialJet<T>> h = dense(l.lift, theta, coords, order);
  for (int b = 0; b < spec.blocks; ++b) {
    auto a = dense(l.hidden[static_cast<std::size_t>(2 * b)], theta, h, order);
    for (auto& v : a) v = ad::activate(spec.activation, v);
    auto a2 = dense(l.hidden[static_cast<std::size_t>(2 * b + 1)], theta, a, order);
    for (std::size_t j = 0; j < h.size(); ++j) h[j] = h[j] + ad::activate(spec.activation, a2[j]);
  }
  return dense(l.output, theta, h, order).front();
}

template SpatialJet<double> forward_jet<double>(const NetworkSpec&, std::span<const double>,
                                                std::span<const double>, int);
template SpatialJet<ad::Var> forward_jet<ad::Var>(const NetworkSpec&, std::span<const ad::Var>,
                                                  std::span<const double>, int);

double raw_forward(const NetworkSpec& spec, std::span<const double> theta,
                   std::span<const double> x) {
  return forward_jet<double>(spec, theta, x, 0).value;
}

SpatialJet<double> eval_with_spatial_jet(const NetworkSpec& spec, std::span<const double> theta,
                                         std::span<const double> x, int order) {
  if (order < 0 || order > 2) throw InputError("jet order must be 0, 1 or 2");
  return forward_jet<double>(spec, theta, x, order);
}

}  // namespace obstacle::net
