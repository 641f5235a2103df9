#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "qvpo/rng.hpp"

namespace qvpo {

enum class Activation { mish, identity };

/// One dense layer, weights stored out_dim x in_dim.
struct Layer {
  Eigen::MatrixXd w;
  Eigen::VectorXd b;
};

/// Fully-connected network. The hidden activation applies to every layer
/// except the last, which is always linear.
struct Mlp {
  std::vector<Layer> layers;
  Activation hidden_activation = Activation::mish;

  Eigen::Index input_dim() const { return layers.front().w.cols(); }
  Eigen::Index output_dim() const { return layers.back().w.rows(); }
};

/// Gradients (or any other accumulator) shaped like an Mlp's parameters.
using LayerGrads = std::vector<Layer>;

/// Weights and biases drawn uniform in +-1/sqrt(fan_in), layer by layer.
Mlp make_mlp(Eigen::Index input_dim, const std::vector<Eigen::Index>& hidden,
             Eigen::Index output_dim, Rng& rng,
             Activation hidden_activation = Activation::mish);

LayerGrads zero_grads(const Mlp& net);
Eigen::Index param_count(const Mlp& net);

/// Flat coordinate access used by the finite-difference checker. Order:
/// layer 0 weights (column-major), layer 0 bias, layer 1 weights, ...
double get_param(const Mlp& net, Eigen::Index flat);
void add_to_param(Mlp& net, Eigen::Index flat, double delta);
double get_grad(const LayerGrads& grads, Eigen::Index flat);

double mish(double x);
double mish_derivative(double x);

/// Batched forward pass; rows are samples.
Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& inputs);

/// Single-sample forward.
Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& input);

/// Intermediate activations kept for the backward pass.
/// post[0] is the input batch; post[l+1] = act(pre[l]); output = post.back().
struct ForwardTrace {
  std::vector<Eigen::MatrixXd> pre;
  std::vector<Eigen::MatrixXd> post;
};

Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& inputs,
                              ForwardTrace& trace);

/// Backpropagates upstream (d loss / d output, rows matching the traced
/// batch) through the network. Parameter gradients are accumulated into
/// `grads`; the return value is d loss / d input.
Eigen::MatrixXd backward_batch(const Mlp& net, const ForwardTrace& trace,
                               const Eigen::MatrixXd& upstream,
                               LayerGrads& grads);

struct BackwardResult {
  LayerGrads param_grads;
  Eigen::VectorXd input_grad;
};

/// Single-sample gradients of (upstream . forward(net, input)).
BackwardResult backward(const Mlp& net, const Eigen::VectorXd& input,
                        const Eigen::VectorXd& upstream);

struct AdamState {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  LayerGrads m;
  LayerGrads v;
};

AdamState make_adam(const Mlp& net, double lr = 3e-4);

/// Bias-corrected Adam update in place. Throws NumericError naming the
/// offending layer if a gradient is non-finite.
void adam_step(AdamState& state, Mlp& net, const LayerGrads& grads);

/// Max relative error between `analytic` and central finite differences of
/// `loss` over `probes` randomly chosen parameter coordinates (all of them
/// when probes <= 0 or probes >= param_count). The loss closure must be
/// deterministic.
double gradient_check(const std::function<double(const Mlp&)>& loss,
                      const Mlp& params, const LayerGrads& analytic,
                      Eigen::Index probes, Rng& rng, double step = 1e-5);

}  // namespace qvpo
