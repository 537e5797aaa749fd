#include "spikematch/network.hpp"

#include "spikematch/error.hpp"
#include "spikematch/objectives.hpp"
#include "spikematch/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace spikematch {

LayerSpec LayerSpec::dense(std::uint32_t in, std::uint32_t out) {
  LayerSpec s;
  s.kind = LayerKind::dense;
  s.in_dim = in;
  s.out_dim = out;
  return s;
}

LayerSpec LayerSpec::conv2d(std::uint32_t c_in, std::uint32_t c_out, std::uint32_t kernel,
                            std::uint32_t padding, bool pool) {
  LayerSpec s;
  s.kind = LayerKind::conv2d;
  s.c_in = c_in;
  s.c_out = c_out;
  s.kernel = kernel;
  s.padding = padding;
  s.pool = pool;
  return s;
}

LayerSpec LayerSpec::readout(std::uint32_t in, std::uint32_t classes) {
  LayerSpec s;
  s.kind = LayerKind::readout;
  s.in_dim = in;
  s.out_dim = classes;
  return s;
}

std::size_t LayerSpec::fan_in() const noexcept {
  if (kind == LayerKind::conv2d)
    return std::size_t{c_in} * kernel * kernel;
  return in_dim;
}

std::size_t LayerSpec::weight_count() const noexcept {
  if (kind == LayerKind::conv2d)
    return std::size_t{c_out} * c_in * kernel * kernel;
  return std::size_t{in_dim} * out_dim;
}

std::string LayerSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
  case LayerKind::dense:
    os << "dense(" << in_dim << "->" << out_dim << ")";
    break;
  case LayerKind::conv2d:
    os << "conv2d(" << c_in << "->" << c_out << ",k=" << kernel << ",pad=" << padding
       << (pool ? ",pool" : "") << ")";
    break;
  case LayerKind::readout:
    os << "readout(" << in_dim << "->" << out_dim << ")";
    break;
  }
  return os.str();
}

Network::Network(Shape3 input, std::vector<LayerSpec> layers) : input_(input), layers_(std::move(layers)) {
  if (layers_.empty())
    throw ContractError("network needs at least a readout layer");
  if (input_.size() == 0)
    throw ContractError("network input shape is empty");
  Shape3 cur = input_;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    LayerSpec &s = layers_[l];
    const bool last = l + 1 == layers_.size();
    if ((s.kind == LayerKind::readout) != last)
      throw ContractError("the readout must be the final layer and the only non-spiking layer");
    s.in_shape = cur;
    switch (s.kind) {
    case LayerKind::dense:
    case LayerKind::readout:
      if (s.in_dim == 0)
        s.in_dim = static_cast<std::uint32_t>(cur.size());
      if (s.in_dim != cur.size())
        throw DimensionError("layer " + std::to_string(l) + " expects " + std::to_string(s.in_dim) +
                             " inputs, previous layer provides " + std::to_string(cur.size()));
      if (s.out_dim == 0)
        throw ContractError("layer " + std::to_string(l) + " has no outputs");
      s.out_shape = {s.out_dim, 1, 1};
      s.feed_shape = s.out_shape;
      break;
    case LayerKind::conv2d: {
      if (s.stride != 1)
        throw ContractError("only stride-1 convolution is supported");
      if (s.c_in != cur.c)
        throw DimensionError("conv layer " + std::to_string(l) + " expects " + std::to_string(s.c_in) +
                             " channels, got " + std::to_string(cur.c));
      if (s.kernel == 0 || s.c_out == 0)
        throw ContractError("conv layer needs kernel >= 1 and c_out >= 1");
      const long oh = long{cur.h} + 2L * s.padding - s.kernel + 1;
      const long ow = long{cur.w} + 2L * s.padding - s.kernel + 1;
      if (oh <= 0 || ow <= 0)
        throw DimensionError("conv kernel larger than padded input");
      s.out_shape = {s.c_out, static_cast<std::uint32_t>(oh), static_cast<std::uint32_t>(ow)};
      s.feed_shape = s.out_shape;
      if (s.pool) {
        if (oh % 2 != 0 || ow % 2 != 0)
          throw DimensionError("2x2 pooling needs an even conv output size");
        s.feed_shape = {s.c_out, static_cast<std::uint32_t>(oh / 2), static_cast<std::uint32_t>(ow / 2)};
      }
      break;
    }
    }
    cur = s.feed_shape;
  }
  weights.resize(layers_.size());
  for (std::size_t l = 0; l < layers_.size(); ++l)
    weights[l].assign(layers_[l].weight_count(), 0.0);
}

std::size_t Network::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto &s : layers_)
    n += s.weight_count();
  return n;
}

std::size_t Network::last_spiking_layer() const noexcept {
  for (std::size_t l = layers_.size(); l-- > 0;)
    if (layers_[l].has_neuron())
      return l;
  return npos;
}

Network build_network(Shape3 input, std::size_t classes, const std::string &arch) {
  std::vector<LayerSpec> layers;
  Shape3 cur = input;
  std::size_t pos = 0;
  auto fail = [&](const std::string &why) -> void {
    throw ConfigError("arch", "bad architecture string '" + arch + "': " + why);
  };
  while (pos < arch.size()) {
    while (pos < arch.size() && (arch[pos] == ',' || arch[pos] == ' '))
      ++pos;
    if (pos >= arch.size())
      break;
    const auto open = arch.find('(', pos);
    const auto close = arch.find(')', pos);
    if (open == std::string::npos || close == std::string::npos || close < open)
      fail("expected name(args)");
    const std::string name = arch.substr(pos, open - pos);
    std::vector<std::string> args;
    std::stringstream ss(arch.substr(open + 1, close - open - 1));
    for (std::string a; std::getline(ss, a, ',');)
      args.push_back(a);
    auto num = [&](std::size_t i) -> std::uint32_t {
      if (i >= args.size())
        fail("missing argument to " + name);
      try {
        return static_cast<std::uint32_t>(std::stoul(args[i]));
      } catch (const std::exception &) {
        fail("non-numeric argument '" + args[i] + "'");
      }
      return 0;
    };
    if (name == "conv") {
      const bool pool = args.size() > 3 && args[3] == "pool";
      auto spec = LayerSpec::conv2d(cur.c, num(0), num(1), num(2), pool);
      const long oh = long{cur.h} + 2L * spec.padding - spec.kernel + 1;
      const long ow = long{cur.w} + 2L * spec.padding - spec.kernel + 1;
      if (oh <= 0 || ow <= 0)
        fail("conv kernel larger than its input");
      cur = {spec.c_out, static_cast<std::uint32_t>(pool ? oh / 2 : oh),
             static_cast<std::uint32_t>(pool ? ow / 2 : ow)};
      layers.push_back(spec);
    } else if (name == "dense") {
      const auto out = num(0);
      layers.push_back(LayerSpec::dense(static_cast<std::uint32_t>(cur.size()), out));
      cur = {out, 1, 1};
    } else {
      fail("unknown layer '" + name + "'");
    }
    pos = close + 1;
  }
  layers.push_back(LayerSpec::readout(static_cast<std::uint32_t>(cur.size()),
                                      static_cast<std::uint32_t>(classes)));
  return Network(input, std::move(layers));
}

std::span<const double> TemporalTape::layer_input(std::size_t l, std::size_t t) const {
  if (l == 0)
    return input;
  const LayerTape &prev = layers[l - 1];
  return prev.feed.rows ? prev.feed.row(t) : prev.spikes.row(t);
}

namespace {

const simd::KernelSet &K() { return simd::active_kernels(); }

// Convolutions run on a zero-padded copy of the input plane. With output rows
// laid out at the padded width, every kernel tap becomes one contiguous
// axpy/dot over the whole plane; the extra columns are dropped afterwards.
struct ConvGeom {
  std::size_t H, W, PH, PW, OH, OW, K, P, plane;

  explicit ConvGeom(const LayerSpec &s)
      : H(s.in_shape.h), W(s.in_shape.w), PH(H + 2 * s.padding), PW(W + 2 * s.padding), OH(s.out_shape.h),
        OW(s.out_shape.w), K(s.kernel), P(s.padding), plane(PH * PW) {}

  // Slack after the last channel keeps the shifted reads in bounds.
  std::size_t padded_size(std::size_t channels) const { return channels * plane + K; }
  std::size_t span() const { return OH * PW; }
};

void pad_planes(const ConvGeom &g, std::size_t channels, std::span<const double> in, std::vector<double> &out) {
  out.assign(g.padded_size(channels), 0.0);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t y = 0; y < g.H; ++y)
      std::copy_n(in.data() + (c * g.H + y) * g.W, g.W, out.data() + c * g.plane + (y + g.P) * g.PW + g.P);
}

// Output-grid values at the padded width, zero in the dropped columns.
void widen_rows(const ConvGeom &g, std::size_t channels, std::span<const double> in, std::vector<double> &out) {
  out.assign(channels * g.span(), 0.0);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t y = 0; y < g.OH; ++y)
      std::copy_n(in.data() + (c * g.OH + y) * g.OW, g.OW, out.data() + c * g.span() + y * g.PW);
}

// out (neuron grid) = W * in, no accumulation into previous contents.
void synaptic_forward(const LayerSpec &s, const std::vector<double> &W, std::span<const double> in,
                      std::span<double> out) {
  const auto &k = K();
  if (s.kind != LayerKind::conv2d) {
    const std::size_t n_in = s.in_dim;
    for (std::size_t o = 0; o < s.out_dim; ++o)
      out[o] = k.dot(n_in, W.data() + o * n_in, in.data());
    return;
  }
  const ConvGeom g(s);
  thread_local std::vector<double> padded, acc;
  pad_planes(g, s.c_in, in, padded);
  acc.resize(g.span());
  for (std::uint32_t co = 0; co < s.c_out; ++co) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::uint32_t ci = 0; ci < s.c_in; ++ci) {
      const double *in_c = padded.data() + ci * g.plane;
      const double *w = W.data() + (std::size_t(co) * s.c_in + ci) * g.K * g.K;
      for (std::size_t ky = 0; ky < g.K; ++ky)
        for (std::size_t kx = 0; kx < g.K; ++kx)
          if (const double wv = w[ky * g.K + kx]; wv != 0.0)
            k.axpy(g.span(), wv, in_c + ky * g.PW + kx, acc.data());
    }
    double *out_c = out.data() + std::size_t(co) * g.OH * g.OW;
    for (std::size_t y = 0; y < g.OH; ++y)
      std::copy_n(acc.data() + y * g.PW, g.OW, out_c + y * g.OW);
  }
}

// dW += d_out (x) in
void synaptic_weight_grad(const LayerSpec &s, std::span<const double> d_out, std::span<const double> in,
                          std::vector<double> &dW) {
  const auto &k = K();
  if (s.kind != LayerKind::conv2d) {
    const std::size_t n_in = s.in_dim;
    for (std::size_t o = 0; o < s.out_dim; ++o)
      if (d_out[o] != 0.0)
        k.axpy(n_in, d_out[o], in.data(), dW.data() + o * n_in);
    return;
  }
  const ConvGeom g(s);
  thread_local std::vector<double> padded, d_wide;
  pad_planes(g, s.c_in, in, padded);
  widen_rows(g, s.c_out, d_out, d_wide);
  for (std::uint32_t co = 0; co < s.c_out; ++co) {
    const double *d_c = d_wide.data() + co * g.span();
    for (std::uint32_t ci = 0; ci < s.c_in; ++ci) {
      const double *in_c = padded.data() + ci * g.plane;
      double *w = dW.data() + (std::size_t(co) * s.c_in + ci) * g.K * g.K;
      for (std::size_t ky = 0; ky < g.K; ++ky)
        for (std::size_t kx = 0; kx < g.K; ++kx)
          w[ky * g.K + kx] += k.dot(g.span(), d_c, in_c + ky * g.PW + kx);
    }
  }
}

// d_in += W^T d_out
void synaptic_input_grad(const LayerSpec &s, const std::vector<double> &W, std::span<const double> d_out,
                         std::span<double> d_in) {
  const auto &k = K();
  if (s.kind != LayerKind::conv2d) {
    const std::size_t n_in = s.in_dim;
    for (std::size_t o = 0; o < s.out_dim; ++o)
      if (d_out[o] != 0.0)
        k.axpy(n_in, d_out[o], W.data() + o * n_in, d_in.data());
    return;
  }
  const ConvGeom g(s);
  thread_local std::vector<double> d_wide, d_padded;
  widen_rows(g, s.c_out, d_out, d_wide);
  d_padded.assign(g.padded_size(s.c_in), 0.0);
  for (std::uint32_t co = 0; co < s.c_out; ++co) {
    const double *d_c = d_wide.data() + co * g.span();
    for (std::uint32_t ci = 0; ci < s.c_in; ++ci) {
      double *din_c = d_padded.data() + ci * g.plane;
      const double *w = W.data() + (std::size_t(co) * s.c_in + ci) * g.K * g.K;
      for (std::size_t ky = 0; ky < g.K; ++ky)
        for (std::size_t kx = 0; kx < g.K; ++kx)
          if (const double wv = w[ky * g.K + kx]; wv != 0.0)
            k.axpy(g.span(), wv, d_c, din_c + ky * g.PW + kx);
    }
  }
  for (std::size_t c = 0; c < s.c_in; ++c)
    for (std::size_t y = 0; y < g.H; ++y)
      for (std::size_t x = 0; x < g.W; ++x)
        d_in[(c * g.H + y) * g.W + x] += d_padded[c * g.plane + (y + g.P) * g.PW + x + g.P];
}

void avg_pool2(const Shape3 &grid, std::span<const double> in, std::span<double> out) {
  const std::size_t OH = grid.h / 2, OW = grid.w / 2;
  for (std::size_t c = 0; c < grid.c; ++c)
    for (std::size_t y = 0; y < OH; ++y)
      for (std::size_t x = 0; x < OW; ++x) {
        const double *p = in.data() + (c * grid.h + 2 * y) * grid.w + 2 * x;
        out[(c * OH + y) * OW + x] = 0.25 * (p[0] + p[1] + p[grid.w] + p[grid.w + 1]);
      }
}

void avg_unpool2(const Shape3 &grid, std::span<const double> d_pooled, std::span<double> d_grid) {
  const std::size_t OH = grid.h / 2, OW = grid.w / 2;
  for (std::size_t c = 0; c < grid.c; ++c)
    for (std::size_t y = 0; y < OH; ++y)
      for (std::size_t x = 0; x < OW; ++x) {
        const double g = 0.25 * d_pooled[(c * OH + y) * OW + x];
        double *p = d_grid.data() + (c * grid.h + 2 * y) * grid.w + 2 * x;
        p[0] = g;
        p[1] = g;
        p[grid.w] = g;
        p[grid.w + 1] = g;
      }
}

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

// Smooth-relaxation counterpart of the fused LIF kernel.
void lif_forward_smooth(const NeuronConfig &cfg, std::span<const double> in, std::span<double> u,
                        std::span<double> u_pre, std::span<double> s) {
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double v = cfg.tau * u[i] + in[i];
    const double spike = sigmoid(cfg.smooth_k * (v - cfg.v_th));
    u_pre[i] = v;
    s[i] = spike;
    u[i] = cfg.reset == ResetKind::hard ? v * (1.0 - spike) : v - spike * cfg.v_th;
  }
}

struct Recorder {
  TemporalTape *tape = nullptr;
  Matrix *probe = nullptr;
  std::size_t probe_layer = Network::npos;
};

OutputTrace run_forward(std::span<const double> x, const Network &net, std::size_t T,
                        const NeuronConfig &cfg, Recorder rec) {
  if (T == 0)
    throw ContractError("forward_sequence: T must be >= 1");
  if (x.size() != net.input_shape().size())
    throw DimensionError("forward_sequence: input has " + std::to_string(x.size()) + " values, network expects " +
                         std::to_string(net.input_shape().size()));
  require_finite(x, "network input");
  cfg.validate();

  const auto &layers = net.layers();
  const std::size_t L = layers.size();
  const auto &k = K();

  if (rec.tape) {
    rec.tape->steps = T;
    rec.tape->input.assign(x.begin(), x.end());
    rec.tape->layers.assign(L, {});
    for (std::size_t l = 0; l + 1 < L; ++l) {
      auto &lt = rec.tape->layers[l];
      lt.u_pre = Matrix(T, layers[l].neurons());
      lt.spikes = Matrix(T, layers[l].neurons());
      if (layers[l].pool)
        lt.feed = Matrix(T, layers[l].feed_shape.size());
    }
  }
  if (rec.probe)
    *rec.probe = Matrix(T, layers[rec.probe_layer].neurons());

  std::vector<std::vector<double>> membrane(L), current(L), spikes(L), feed(L), u_pre(L);
  for (std::size_t l = 0; l + 1 < L; ++l) {
    const std::size_t n = layers[l].neurons();
    membrane[l].assign(n, 0.0);
    current[l].assign(n, 0.0);
    if (rec.tape)
      continue;
    spikes[l].assign(n, 0.0);
    u_pre[l].assign(n, 0.0);
    if (layers[l].pool)
      feed[l].assign(layers[l].feed_shape.size(), 0.0);
  }

  OutputTrace trace{Matrix(T, net.classes())};
  std::vector<double> readout_in(net.classes());

  for (std::size_t t = 0; t < T; ++t) {
    std::span<const double> in = x;
    for (std::size_t l = 0; l < L; ++l) {
      const LayerSpec &s = layers[l];
      if (!s.has_neuron()) {
        synaptic_forward(s, net.weights[l], in, readout_in);
        auto row = trace.O.row(t);
        if (net.readout_mode == ReadoutMode::accumulate && t > 0)
          for (std::size_t c = 0; c < row.size(); ++c)
            row[c] = trace.O(t - 1, c) + readout_in[c];
        else
          std::copy(readout_in.begin(), readout_in.end(), row.begin());
        break;
      }
      // The first layer sees the same static input at every step.
      if (l > 0 || t == 0)
        synaptic_forward(s, net.weights[l], in, current[l]);
      // With a tape, results go straight into its rows.
      std::span<double> u_out = u_pre[l], s_out = spikes[l], f_out = feed[l];
      if (rec.tape) {
        auto &lt = rec.tape->layers[l];
        u_out = lt.u_pre.row(t);
        s_out = lt.spikes.row(t);
        if (s.pool)
          f_out = lt.feed.row(t);
      }
      if (cfg.smooth())
        lif_forward_smooth(cfg, current[l], membrane[l], u_out, s_out);
      else
        k.lif_forward(current[l].size(), cfg.lif_params(), current[l].data(), membrane[l].data(), u_out.data(),
                      s_out.data());
      if (rec.probe && rec.probe_layer == l)
        std::copy(s_out.begin(), s_out.end(), rec.probe->row(t).begin());
      if (s.pool) {
        avg_pool2(s.out_shape, s_out, f_out);
        in = f_out;
      } else {
        in = s_out;
      }
    }
  }
  return trace;
}

} // namespace

ForwardResult forward_sequence(std::span<const double> x, const Network &net, std::size_t T,
                               const NeuronConfig &cfg) {
  ForwardResult r;
  r.trace = run_forward(x, net, T, cfg, Recorder{&r.tape});
  return r;
}

OutputTrace infer(std::span<const double> x, const Network &net, std::size_t T, const NeuronConfig &cfg) {
  return run_forward(x, net, T, cfg, Recorder{});
}

ProbeResult probe(std::span<const double> x, const Network &net, std::size_t T, const NeuronConfig &cfg,
                  std::size_t layer) {
  if (layer >= net.layers().size() || !net.layers()[layer].has_neuron())
    throw ContractError("probe: layer " + std::to_string(layer) + " has no neurons");
  ProbeResult r;
  r.trace = run_forward(x, net, T, cfg, Recorder{nullptr, &r.spikes, layer});
  return r;
}

Gradients zero_gradients(const Network &net) {
  Gradients g(net.layers().size());
  for (std::size_t l = 0; l < g.size(); ++l)
    g[l].assign(net.layers()[l].weight_count(), 0.0);
  return g;
}

void backward_stbp(const TemporalTape &tape, const Matrix &dL_dO, const Network &net, const NeuronConfig &cfg,
                   Gradients &grads) {
  const auto &layers = net.layers();
  const std::size_t L = layers.size();
  const std::size_t T = tape.steps;
  if (tape.layers.size() != L || tape.input.size() != net.input_shape().size())
    throw DimensionError("backward_stbp: tape was not produced by this network");
  for (std::size_t l = 0; l + 1 < L; ++l)
    if (tape.layers[l].u_pre.rows != T || tape.layers[l].u_pre.cols != layers[l].neurons())
      throw DimensionError("backward_stbp: tape layer " + std::to_string(l) + " does not match the network");
  if (dL_dO.rows != T || dL_dO.cols != net.classes())
    throw DimensionError("backward_stbp: dL/dO must be T x C");
  require_finite(dL_dO.data, "dL/dO");
  if (grads.size() != L)
    grads = zero_gradients(net);

  const auto &k = K();

  // Gradient w.r.t. the readout's synaptic input at each step.
  Matrix d_cur(T, net.classes());
  if (net.readout_mode == ReadoutMode::accumulate) {
    for (std::size_t t = T; t-- > 0;)
      for (std::size_t c = 0; c < d_cur.cols; ++c)
        d_cur(t, c) = dL_dO(t, c) + (t + 1 < T ? d_cur(t + 1, c) : 0.0);
  } else {
    d_cur = dL_dO;
  }

  // d_feed: gradient w.r.t. the values fed into the current layer from below.
  Matrix d_feed;
  for (std::size_t l = L; l-- > 0;) {
    const LayerSpec &s = layers[l];
    Matrix d_upre;  // gradient w.r.t. this layer's synaptic current per step
    if (!s.has_neuron()) {
      d_upre = std::move(d_cur);
    } else {
      const LayerTape &lt = tape.layers[l];
      const std::size_t n = s.neurons();
      d_upre = Matrix(T, n);
      std::vector<double> ds(n), du(n, 0.0), sg(n);
      const simd::LifBackwardParams bp{cfg.v_th, cfg.reset, cfg.detach_reset};
      for (std::size_t t = T; t-- > 0;) {
        if (s.pool)
          avg_unpool2(s.out_shape, d_feed.row(t), ds);
        else
          std::copy(d_feed.row(t).begin(), d_feed.row(t).end(), ds.begin());
        const auto upre_t = lt.u_pre.row(t);
        if (cfg.smooth()) {
          for (std::size_t i = 0; i < n; ++i) {
            const double sv = lt.spikes(t, i);
            sg[i] = cfg.smooth_k * sv * (1.0 - sv);
          }
        } else {
          k.surrogate(n, cfg.surrogate_params(), upre_t.data(), sg.data());
        }
        auto out = d_upre.row(t);
        k.lif_backward(n, bp, ds.data(), du.data(), sg.data(), lt.spikes.row(t).data(), upre_t.data(), out.data());
        for (std::size_t i = 0; i < n; ++i)
          du[i] = cfg.tau * out[i];
      }
    }

    // Weight gradient; the first layer's input is constant over time, so its
    // per-step currents are summed before a single outer product.
    if (l == 0) {
      std::vector<double> summed(d_upre.cols, 0.0);
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < summed.size(); ++i)
          summed[i] += d_upre(t, i);
      synaptic_weight_grad(s, summed, tape.input, grads[l]);
      break;
    }
    for (std::size_t t = 0; t < T; ++t)
      synaptic_weight_grad(s, d_upre.row(t), tape.layer_input(l, t), grads[l]);

    d_feed = Matrix(T, s.in_shape.size());
    for (std::size_t t = 0; t < T; ++t)
      synaptic_input_grad(s, net.weights[l], d_upre.row(t), d_feed.row(t));
  }
}

Gradients backward_stbp(const TemporalTape &tape, const Matrix &dL_dO, const Network &net, const NeuronConfig &cfg) {
  Gradients g = zero_gradients(net);
  backward_stbp(tape, dL_dO, net, cfg, g);
  return g;
}

void init_weights(Network &net, std::uint64_t seed) {
  const CounterRng base = purpose_stream(seed, RngPurpose::init);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    CounterRng rng = base.substream(l);
    const double bound = std::sqrt(6.0 / static_cast<double>(net.layers()[l].fan_in()));
    for (double &w : net.weights[l])
      w = rng.uniform(-bound, bound);
  }
}

std::vector<double> spike_rate(const TemporalTape &tape) {
  std::vector<double> rate(tape.layers.size(), 0.0);
  for (std::size_t l = 0; l < tape.layers.size(); ++l) {
    const auto &sp = tape.layers[l].spikes.data;
    if (!sp.empty())
      rate[l] = std::accumulate(sp.begin(), sp.end(), 0.0) / static_cast<double>(sp.size());
  }
  return rate;
}

std::vector<double> softmax_prediction(const OutputTrace &trace, std::size_t t) {
  if (t >= trace.steps())
    throw ContractError("softmax_prediction: step " + std::to_string(t) + " out of range");
  return softmax(trace.O.row(t));
}

} // namespace spikematch
