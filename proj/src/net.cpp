#include "qvpo/net.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "qvpo/errors.hpp"

namespace qvpo {

namespace {

double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Vectorized softplus via max(x, 0) + log(1 + exp(-|x|)), and tanh through
// the exp identity (Eigen has no SIMD tanh for doubles); softplus >= 0 keeps
// exp(-2 sp) in (0, 1].
Eigen::ArrayXXd softplus_array(const Eigen::ArrayXXd& x) {
  return x.max(0.0) + (1.0 + (-x.abs()).exp()).log();
}

Eigen::ArrayXXd tanh_of_nonnegative(const Eigen::ArrayXXd& y) {
  const Eigen::ArrayXXd u = (-2.0 * y).exp();
  return (1.0 - u) / (1.0 + u);
}

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation act) {
  if (act == Activation::identity) return z;
  const Eigen::ArrayXXd x = z.array();
  return (x * tanh_of_nonnegative(softplus_array(x))).matrix();
}

Eigen::MatrixXd activate_derivative(const Eigen::MatrixXd& z, Activation act) {
  if (act == Activation::identity) return Eigen::MatrixXd::Ones(z.rows(), z.cols());
  const Eigen::ArrayXXd x = z.array();
  const Eigen::ArrayXXd t = tanh_of_nonnegative(softplus_array(x));
  const Eigen::ArrayXXd sig = 1.0 / (1.0 + (-x).exp());
  return (t + x * (1.0 - t * t) * sig).matrix();
}

void check_input_dim(const Mlp& net, Eigen::Index got, const char* who) {
  if (got != net.input_dim())
    throw std::invalid_argument(std::string(who) + ": input size " +
                                std::to_string(got) + " != network input_dim " +
                                std::to_string(net.input_dim()));
}

}  // namespace

double mish(double x) {
  return x * std::tanh(softplus(x));
}

double mish_derivative(double x) {
  const double sp = softplus(x);
  const double t = std::tanh(sp);
  return t + x * (1.0 - t * t) * sigmoid(x);
}

Mlp make_mlp(Eigen::Index input_dim, const std::vector<Eigen::Index>& hidden,
             Eigen::Index output_dim, Rng& rng, Activation hidden_activation) {
  if (input_dim < 1 || output_dim < 1)
    throw std::invalid_argument("make_mlp: dimensions must be positive");
  Mlp net;
  net.hidden_activation = hidden_activation;
  std::vector<Eigen::Index> dims;
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output_dim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const Eigen::Index in = dims[l], out = dims[l + 1];
    if (in < 1 || out < 1)
      throw std::invalid_argument("make_mlp: dimensions must be positive");
    Layer layer;
    layer.w.resize(out, in);
    layer.b.resize(out);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) layer.w(r, c) = rng.uniform(-bound, bound);
    for (Eigen::Index r = 0; r < out; ++r) layer.b[r] = rng.uniform(-bound, bound);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

LayerGrads zero_grads(const Mlp& net) {
  LayerGrads grads;
  grads.reserve(net.layers.size());
  for (const Layer& layer : net.layers)
    grads.push_back({Eigen::MatrixXd::Zero(layer.w.rows(), layer.w.cols()),
                     Eigen::VectorXd::Zero(layer.b.size())});
  return grads;
}

Eigen::Index param_count(const Mlp& net) {
  Eigen::Index n = 0;
  for (const Layer& layer : net.layers) n += layer.w.size() + layer.b.size();
  return n;
}

namespace {

// Resolves a flat coordinate to (layer, in-weights?, offset).
struct ParamRef {
  std::size_t layer;
  bool in_weights;
  Eigen::Index offset;
};

ParamRef locate(const std::vector<Layer>& layers, Eigen::Index flat) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (flat < layers[l].w.size()) return {l, true, flat};
    flat -= layers[l].w.size();
    if (flat < layers[l].b.size()) return {l, false, flat};
    flat -= layers[l].b.size();
  }
  throw std::invalid_argument("parameter index out of range");
}

}  // namespace

double get_param(const Mlp& net, Eigen::Index flat) {
  const ParamRef ref = locate(net.layers, flat);
  const Layer& layer = net.layers[ref.layer];
  return ref.in_weights ? layer.w.data()[ref.offset] : layer.b[ref.offset];
}

void add_to_param(Mlp& net, Eigen::Index flat, double delta) {
  const ParamRef ref = locate(net.layers, flat);
  Layer& layer = net.layers[ref.layer];
  if (ref.in_weights)
    layer.w.data()[ref.offset] += delta;
  else
    layer.b[ref.offset] += delta;
}

double get_grad(const LayerGrads& grads, Eigen::Index flat) {
  const ParamRef ref = locate(grads, flat);
  const Layer& layer = grads[ref.layer];
  return ref.in_weights ? layer.w.data()[ref.offset] : layer.b[ref.offset];
}

Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& inputs,
                              ForwardTrace& trace) {
  check_input_dim(net, inputs.cols(), "forward");
  const std::size_t depth = net.layers.size();
  trace.pre.resize(depth);
  trace.post.resize(depth + 1);
  trace.post[0] = inputs;
  for (std::size_t l = 0; l < depth; ++l) {
    trace.pre[l] = trace.post[l] * net.layers[l].w.transpose();
    trace.pre[l].rowwise() += net.layers[l].b.transpose();
    const bool last = (l + 1 == depth);
    trace.post[l + 1] =
        last ? trace.pre[l] : activate(trace.pre[l], net.hidden_activation);
  }
  return trace.post.back();
}

// Trace-free path: ping-pong buffers and an in-place activation keep the
// memory traffic per layer to a minimum (the sampler calls this in a loop).
Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& inputs) {
  check_input_dim(net, inputs.cols(), "forward");
  const std::size_t depth = net.layers.size();
  Eigen::MatrixXd h = inputs * net.layers[0].w.transpose();
  h.rowwise() += net.layers[0].b.transpose();
  for (std::size_t l = 1; l < depth; ++l) {
    if (net.hidden_activation == Activation::mish) {
      const Eigen::ArrayXXd u =
          (-2.0 *
           (h.array().max(0.0) + (1.0 + (-h.array().abs()).exp()).log()))
              .exp();
      h.array() *= (1.0 - u) / (1.0 + u);
    }
    Eigen::MatrixXd next = h * net.layers[l].w.transpose();
    next.rowwise() += net.layers[l].b.transpose();
    h = std::move(next);
  }
  return h;
}

Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& input) {
  check_input_dim(net, input.size(), "forward");
  return forward_batch(net, Eigen::MatrixXd(input.transpose())).row(0).transpose();
}

Eigen::MatrixXd backward_batch(const Mlp& net, const ForwardTrace& trace,
                               const Eigen::MatrixXd& upstream,
                               LayerGrads& grads) {
  const std::size_t depth = net.layers.size();
  if (upstream.cols() != net.output_dim())
    throw std::invalid_argument("backward: upstream size " +
                                std::to_string(upstream.cols()) +
                                " != network output_dim " +
                                std::to_string(net.output_dim()));
  if (grads.size() != depth)
    throw std::invalid_argument("backward: gradient accumulator shape mismatch");
  Eigen::MatrixXd g = upstream;
  for (std::size_t l = depth; l-- > 0;) {
    const bool last = (l + 1 == depth);
    Eigen::MatrixXd gz =
        last ? std::move(g)
             : (g.array() *
                activate_derivative(trace.pre[l], net.hidden_activation).array())
                   .matrix();
    grads[l].w.noalias() += gz.transpose() * trace.post[l];
    grads[l].b.noalias() += gz.colwise().sum().transpose();
    g = gz * net.layers[l].w;
  }
  return g;
}

BackwardResult backward(const Mlp& net, const Eigen::VectorXd& input,
                        const Eigen::VectorXd& upstream) {
  check_input_dim(net, input.size(), "backward");
  ForwardTrace trace;
  forward_batch(net, Eigen::MatrixXd(input.transpose()), trace);
  BackwardResult result;
  result.param_grads = zero_grads(net);
  const Eigen::MatrixXd input_grad = backward_batch(
      net, trace, Eigen::MatrixXd(upstream.transpose()), result.param_grads);
  result.input_grad = input_grad.row(0).transpose();
  return result;
}

AdamState make_adam(const Mlp& net, double lr) {
  AdamState state;
  state.lr = lr;
  state.m = zero_grads(net);
  state.v = zero_grads(net);
  return state;
}

void adam_step(AdamState& state, Mlp& net, const LayerGrads& grads) {
  if (grads.size() != net.layers.size() || state.m.size() != net.layers.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  for (std::size_t l = 0; l < grads.size(); ++l) {
    if (!grads[l].w.allFinite())
      throw NumericError("adam_step: non-finite gradient in layer " +
                         std::to_string(l) + " weights");
    if (!grads[l].b.allFinite())
      throw NumericError("adam_step: non-finite gradient in layer " +
                         std::to_string(l) + " biases");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  auto update = [&](auto& m, auto& v, const auto& g, auto& p) {
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    p.array() -=
        state.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + state.eps);
  };
  for (std::size_t l = 0; l < grads.size(); ++l) {
    update(state.m[l].w, state.v[l].w, grads[l].w, net.layers[l].w);
    update(state.m[l].b, state.v[l].b, grads[l].b, net.layers[l].b);
  }
}

double gradient_check(const std::function<double(const Mlp&)>& loss,
                      const Mlp& params, const LayerGrads& analytic,
                      Eigen::Index probes, Rng& rng, double step) {
  const Eigen::Index count = param_count(params);
  std::vector<Eigen::Index> coords;
  if (probes <= 0 || probes >= count) {
    coords.resize(count);
    for (Eigen::Index i = 0; i < count; ++i) coords[i] = i;
  } else {
    coords.resize(probes);
    for (Eigen::Index i = 0; i < probes; ++i)
      coords[i] = rng.uniform_int(0, count - 1);
  }
  Mlp probe = params;
  double max_err = 0.0;
  for (Eigen::Index c : coords) {
    add_to_param(probe, c, step);
    const double up = loss(probe);
    add_to_param(probe, c, -2.0 * step);
    const double down = loss(probe);
    add_to_param(probe, c, step);  // restore
    const double numeric = (up - down) / (2.0 * step);
    const double a = get_grad(analytic, c);
    const double err =
        std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
    max_err = std::max(max_err, err);
  }
  return max_err;
}

}  // namespace qvpo
