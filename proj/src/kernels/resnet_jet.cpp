#include "obstacle/kernels/resnet_jet.hpp"

#include <algorithm>
#include <string>

#include "obstacle/autodiff/activation.hpp"

namespace obstacle::kernels {

namespace {

// out[c][j] = sum_k W[j][k] in[c][k]  (+ b[j] for c == 0)
void dense_forward(const double* __restrict w, const double* __restrict b, const double* __restrict in,
                   double* __restrict out, int rows, int cols, int comps) {
  for (int c = 0; c < comps; ++c) {
    const double* ic = in + c * cols;
    double* oc = out + c * rows;
    for (int j = 0; j < rows; ++j) {
      const double* wj = w + j * cols;
      double acc = c == 0 ? b[j] : 0.0;
      for (int k = 0; k < cols; ++k) acc += wj[k] * ic[k];
      oc[j] = acc;
    }
  }
}

// gin[c][k] = sum_j W[j][k] gout[c][j];  gW[j][k] += sum_c gout[c][j] in[c][k];  gb[j] += gout[0][j]
void dense_backward(const double* __restrict w, const double* __restrict in,
                    const double* __restrict gout, double* __restrict gin, double* __restrict gw,
                    double* __restrict gb, int rows, int cols, int comps) {
  for (int j = 0; j < rows; ++j) gb[j] += gout[j];
  for (int j = 0; j < rows; ++j) {
    double* gwj = gw + j * cols;
    for (int c = 0; c < comps; ++c) {
      const double g = gout[c * rows + j];
      const double* ic = in + c * cols;
      for (int k = 0; k < cols; ++k) gwj[k] += g * ic[k];
    }
  }
  if (gin == nullptr) return;
  std::fill(gin, gin + comps * cols, 0.0);
  for (int c = 0; c < comps; ++c) {
    double* gc = gin + c * cols;
    const double* goc = gout + c * rows;
    for (int j = 0; j < rows; ++j) {
      const double g = goc[j];
      const double* wj = w + j * cols;
      for (int k = 0; k < cols; ++k) gc[k] += g * wj[k];
    }
  }
}

void activation_forward(ad::Activation act, const double* __restrict z, double* __restrict y,
                        double* __restrict derivs, int width, int dim, int order) {
  double* d1 = derivs;
  double* d2 = derivs + width;
  double* d3 = derivs + 2 * width;
  for (int j = 0; j < width; ++j) {
    const auto d = ad::activation_derivs(act, z[j]);
    y[j] = d.f0;
    d1[j] = d.f1;
    d2[j] = d.f2;
    d3[j] = d.f3;
  }
  if (order >= 1) {
    for (int i = 0; i < dim; ++i) {
      const double* zg = z + (1 + i) * width;
      double* yg = y + (1 + i) * width;
      for (int j = 0; j < width; ++j) yg[j] = d1[j] * zg[j];
    }
  }
  if (order >= 2) {
    for (int i = 0; i < dim; ++i) {
      const double* zg = z + (1 + i) * width;
      const double* zh = z + (1 + dim + i) * width;
      double* yh = y + (1 + dim + i) * width;
      for (int j = 0; j < width; ++j) yh[j] = d2[j] * zg[j] * zg[j] + d1[j] * zh[j];
    }
  }
}

void activation_backward(const double* __restrict z, const double* __restrict derivs,
                         const double* __restrict ybar, double* __restrict zbar, int width, int dim,
                         int order) {
  const double* d1 = derivs;
  const double* d2 = derivs + width;
  const double* d3 = derivs + 2 * width;
  for (int j = 0; j < width; ++j) zbar[j] = ybar[j] * d1[j];
  if (order >= 1) {
    for (int i = 0; i < dim; ++i) {
      const double* zg = z + (1 + i) * width;
      const double* yg = ybar + (1 + i) * width;
      double* zgb = zbar + (1 + i) * width;
      for (int j = 0; j < width; ++j) {
        zgb[j] = yg[j] * d1[j];
        zbar[j] += yg[j] * d2[j] * zg[j];
      }
    }
  }
  if (order >= 2) {
    for (int i = 0; i < dim; ++i) {
      const double* zg = z + (1 + i) * width;
      const double* zh = z + (1 + dim + i) * width;
      const double* yh = ybar + (1 + dim + i) * width;
      double* zgb = zbar + (1 + i) * width;
      double* zhb = zbar + (1 + dim + i) * width;
      for (int j = 0; j < width; ++j) {
        zhb[j] = yh[j] * d1[j];
        zgb[j] += 2.0 * yh[j] * d2[j] * zg[j];
        zbar[j] += yh[j] * (d3[j] * zg[j] * zg[j] + d2[j] * zh[j]);
      }
    }
  }
}

}  // namespace

ResNetJetKernel::ResNetJetKernel(const net::NetworkSpec& spec, int order)
    : spec_(spec),
      layout_(net::layout_of(spec)),
      order_(order),
      dim_(spec.input_dim),
      width_(spec.width),
      components_(1 + (order >= 1 ? spec.input_dim : 0) + (order >= 2 ? spec.input_dim : 0)) {
  if (order < 0 || order > 2) throw ad::InputError("jet order must be 0, 1 or 2");
}

ResNetJetKernel::Workspace ResNetJetKernel::make_workspace() const {
  Workspace ws;
  const std::size_t blk = block_size();
  const auto nb = static_cast<std::size_t>(spec_.blocks);
  const auto w = static_cast<std::size_t>(width_);
  ws.x.assign(static_cast<std::size_t>(dim_), 0.0);
  ws.stream.assign((nb + 1) * blk, 0.0);
  ws.pre1.assign(nb * blk, 0.0);
  ws.post1.assign(nb * blk, 0.0);
  ws.pre2.assign(nb * blk, 0.0);
  ws.derivs1.assign(nb * 3 * w, 0.0);
  ws.derivs2.assign(nb * 3 * w, 0.0);
  ws.bar_stream.assign(blk, 0.0);
  ws.bar_a.assign(blk, 0.0);
  ws.bar_z.assign(blk, 0.0);
  return ws;
}

SpatialJet<double> ResNetJetKernel::forward(std::span<const double> theta, std::span<const double> x,
                                            Workspace& ws) const {
  net::check_input(spec_, x);
  net::check_params(spec_, theta.size());
  const int W = width_, C = components_, d = dim_;
  const std::size_t blk = block_size();
  const double* th = theta.data();
  std::copy(x.begin(), x.end(), ws.x.begin());

  // Lift: the input jet is x itself, so gradients are the weight columns.
  {
    const double* lw = th + layout_.lift.weights;
    const double* lb = th + layout_.lift.bias;
    double* h0 = ws.stream.data();
    std::fill(h0, h0 + blk, 0.0);
    for (int j = 0; j < W; ++j) {
      double acc = lb[j];
      for (int k = 0; k < d; ++k) acc += lw[j * d + k] * x[static_cast<std::size_t>(k)];
      h0[j] = acc;
    }
    if (order_ >= 1)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < W; ++j) h0[(1 + i) * W + j] = lw[j * d + i];
  }

  const auto w3 = static_cast<std::size_t>(3 * W);
  for (int b = 0; b < spec_.blocks; ++b) {
    const auto ub = static_cast<std::size_t>(b);
    const auto& l1 = layout_.hidden[2 * ub];
    const auto& l2 = layout_.hidden[2 * ub + 1];
    const double* h = ws.stream.data() + ub * blk;
    double* hn = ws.stream.data() + (ub + 1) * blk;
    double* z1 = ws.pre1.data() + ub * blk;
    double* a1 = ws.post1.data() + ub * blk;
    double* z2 = ws.pre2.data() + ub * blk;
    dense_forward(th + l1.weights, th + l1.bias, h, z1, W, W, C);
    activation_forward(spec_.activation, z1, a1, ws.derivs1.data() + ub * w3, W, d, order_);
    dense_forward(th + l2.weights, th + l2.bias, a1, z2, W, W, C);
    activation_forward(spec_.activation, z2, hn, ws.derivs2.data() + ub * w3, W, d, order_);
    for (std::size_t i = 0; i < blk; ++i) hn[i] += h[i];
  }

  const auto nb = static_cast<std::size_t>(spec_.blocks);
  const double* hl = ws.stream.data() + nb * blk;
  const double* ow = th + layout_.output.weights;
  SpatialJet<double> out = SpatialJet<double>::constant(th[layout_.output.bias], d, order_);
  for (int c = 0; c < C; ++c) {
    double acc = 0.0;
    for (int k = 0; k < W; ++k) acc += ow[k] * hl[c * W + k];
    if (c == 0) out.value += acc;
    else if (c <= d) out.grad[static_cast<std::size_t>(c - 1)] = acc;
    else out.second[static_cast<std::size_t>(c - 1 - d)] = acc;
  }
  return out;
}

void ResNetJetKernel::backward(std::span<const double> theta, Workspace& ws,
                               const SpatialJet<double>& adjoint, std::span<double> grad) const {
  net::check_params(spec_, grad.size());
  const int W = width_, C = components_, d = dim_;
  const std::size_t blk = block_size();
  const double* th = theta.data();
  double* g = grad.data();

  double obar[1 + 2 * ad::kMaxDim] = {};
  obar[0] = adjoint.value;
  for (int i = 0; i < d; ++i) {
    if (order_ >= 1) obar[1 + i] = adjoint.grad[static_cast<std::size_t>(i)];
    if (order_ >= 2) obar[1 + d + i] = adjoint.second[static_cast<std::size_t>(i)];
  }

  // Output layer.
  const auto nb = static_cast<std::size_t>(spec_.blocks);
  {
    const double* hl = ws.stream.data() + nb * blk;
    const double* ow = th + layout_.output.weights;
    double* gw = g + layout_.output.weights;
    g[layout_.output.bias] += obar[0];
    double* hb = ws.bar_stream.data();
    for (int c = 0; c < C; ++c) {
      const double oc = obar[c];
      for (int k = 0; k < W; ++k) {
        gw[k] += oc * hl[c * W + k];
        hb[c * W + k] = oc * ow[k];
      }
    }
  }

  const auto w3 = static_cast<std::size_t>(3 * W);
  for (int b = spec_.blocks - 1; b >= 0; --b) {
    const auto ub = static_cast<std::size_t>(b);
    const auto& l1 = layout_.hidden[2 * ub];
    const auto& l2 = layout_.hidden[2 * ub + 1];
    const double* h = ws.stream.data() + ub * blk;
    const double* z1 = ws.pre1.data() + ub * blk;
    const double* a1 = ws.post1.data() + ub * blk;
    const double* z2 = ws.pre2.data() + ub * blk;
    // The residual branch sees the same adjoint as the stream.
    activation_backward(z2, ws.derivs2.data() + ub * w3, ws.bar_stream.data(), ws.bar_z.data(), W, d,
                        order_);
    dense_backward(th + l2.weights, a1, ws.bar_z.data(), ws.bar_a.data(), g + l2.weights, g + l2.bias, W,
                   W, C);
    activation_backward(z1, ws.derivs1.data() + ub * w3, ws.bar_a.data(), ws.bar_z.data(), W, d, order_);
    dense_backward(th + l1.weights, h, ws.bar_z.data(), ws.bar_a.data(), g + l1.weights, g + l1.bias, W,
                   W, C);
    for (std::size_t i = 0; i < blk; ++i) ws.bar_stream[i] += ws.bar_a[i];
  }

  // Lift.
  {
    const double* hb = ws.bar_stream.data();
    double* gw = g + layout_.lift.weights;
    double* gb = g + layout_.lift.bias;
    for (int j = 0; j < W; ++j) {
      gb[j] += hb[j];
      for (int k = 0; k < d; ++k) {
        double acc = hb[j] * ws.x[static_cast<std::size_t>(k)];
        if (order_ >= 1) acc += hb[(1 + k) * W + j];
        gw[j * d + k] += acc;
      }
    }
  }
}

}  // namespace obstacle::kernels
