#include <doctest.h>

#include <cmath>
#include <vector>

#include "qvpo/errors.hpp"
#include "qvpo/net.hpp"

using namespace qvpo;

namespace {

// Plain-loop re-implementation of the layer math, kept independent of the
// Eigen path it checks.
std::vector<double> reference_forward(const Mlp& net,
                                      const std::vector<double>& input) {
  std::vector<double> current = input;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& layer = net.layers[l];
    std::vector<double> next(layer.w.rows());
    for (Eigen::Index r = 0; r < layer.w.rows(); ++r) {
      double acc = layer.b[r];
      for (Eigen::Index c = 0; c < layer.w.cols(); ++c)
        acc += layer.w(r, c) * current[c];
      if (l + 1 < net.layers.size() && net.hidden_activation == Activation::mish)
        acc = acc * std::tanh(std::log1p(std::exp(acc)));
      next[r] = acc;
    }
    current = std::move(next);
  }
  return current;
}

Mlp scalar_net(double w, double b) {
  Mlp net;
  net.hidden_activation = Activation::identity;
  net.layers.push_back({Eigen::MatrixXd::Constant(1, 1, w),
                        Eigen::VectorXd::Constant(1, b)});
  return net;
}

}  // namespace

TEST_SUITE("net") {

TEST_CASE("all-zero network maps anything to zero") {
  Rng rng(1);
  Mlp net = make_mlp(3, {4, 4}, 2, rng);
  for (Layer& layer : net.layers) {
    layer.w.setZero();
    layer.b.setZero();
  }
  const Eigen::VectorXd out = forward(net, Eigen::Vector3d(0.3, -1.0, 2.0));
  CHECK(out.isZero(0.0));
}

TEST_CASE("single identity layer is the identity map") {
  Mlp net;
  net.hidden_activation = Activation::identity;
  net.layers.push_back({Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)});
  const Eigen::VectorXd out = forward(net, Eigen::Vector2d(1.0, 2.0));
  CHECK(out[0] == doctest::Approx(1.0));
  CHECK(out[1] == doctest::Approx(2.0));
}

TEST_CASE("forward matches an independent scalar re-implementation") {
  Rng rng(42);
  const Mlp net = make_mlp(4, {6, 5}, 3, rng);
  const std::vector<double> input = {0.2, -0.7, 1.3, 0.05};
  const Eigen::VectorXd got =
      forward(net, Eigen::Map<const Eigen::VectorXd>(input.data(), 4));
  const std::vector<double> expected = reference_forward(net, input);
  REQUIRE(got.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("forward is pure: repeated calls are bit-identical") {
  Rng rng(7);
  const Mlp net = make_mlp(5, {8}, 2, rng);
  const Eigen::VectorXd x = rng.normal_vector(5);
  const Eigen::VectorXd a = forward(net, x);
  const Eigen::VectorXd b = forward(net, x);
  CHECK(a[0] == b[0]);
  CHECK(a[1] == b[1]);
}

TEST_CASE("forward rejects dimension mismatch") {
  Rng rng(3);
  const Mlp net = make_mlp(3, {4}, 2, rng);
  CHECK_THROWS_AS(forward(net, Eigen::Vector2d(1.0, 2.0)), std::invalid_argument);
}

TEST_CASE("zero upstream gradient gives zero gradients") {
  Rng rng(9);
  const Mlp net = make_mlp(3, {4}, 2, rng);
  const BackwardResult result =
      backward(net, Eigen::Vector3d(0.1, 0.2, 0.3), Eigen::Vector2d(0.0, 0.0));
  for (const Layer& g : result.param_grads) {
    CHECK(g.w.isZero(0.0));
    CHECK(g.b.isZero(0.0));
  }
  CHECK(result.input_grad.isZero(0.0));
}

TEST_CASE("linear 1x1 gradients: param grad = x, input grad = w") {
  const Mlp net = scalar_net(1.7, 0.0);
  const BackwardResult result =
      backward(net, Eigen::VectorXd::Constant(1, 0.6),
               Eigen::VectorXd::Constant(1, 1.0));
  CHECK(result.param_grads[0].w(0, 0) == doctest::Approx(0.6));
  CHECK(result.param_grads[0].b[0] == doctest::Approx(1.0));
  CHECK(result.input_grad[0] == doctest::Approx(1.7));
}

TEST_CASE("backward matches central finite differences") {
  Rng rng(1234);
  const Mlp net = make_mlp(3, {5, 4}, 2, rng);
  const Eigen::VectorXd x = rng.normal_vector(3);
  const Eigen::VectorXd g = rng.normal_vector(2);
  const BackwardResult result = backward(net, x, g);

  auto loss = [&](const Mlp& p) { return g.dot(forward(p, x)); };
  Rng probe_rng(5);
  const double err =
      gradient_check(loss, net, result.param_grads, 0, probe_rng);
  CHECK(err < 1e-4);

  // input gradient against finite differences as well
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += 1e-5;
    xm[i] -= 1e-5;
    const double numeric = (g.dot(forward(net, xp)) - g.dot(forward(net, xm))) / 2e-5;
    CHECK(result.input_grad[i] == doctest::Approx(numeric).epsilon(1e-4));
  }
}

TEST_CASE("adam with zero gradients leaves fresh parameters bit-identical") {
  Rng rng(21);
  Mlp net = make_mlp(2, {3}, 1, rng);
  const Mlp before = net;
  AdamState adam = make_adam(net);
  adam_step(adam, net, zero_grads(net));
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    CHECK((net.layers[l].w.array() == before.layers[l].w.array()).all());
    CHECK((net.layers[l].b.array() == before.layers[l].b.array()).all());
    CHECK(adam.m[l].w.isZero(0.0));
    CHECK(adam.v[l].w.isZero(0.0));
  }
  CHECK(adam.step == 1);
}

TEST_CASE("adam first step with unit gradient moves by about -lr") {
  Mlp net = scalar_net(0.0, 0.0);
  net.layers[0].b.resize(0);  // isolate the single weight
  AdamState adam = make_adam(net, 3e-4);
  LayerGrads grads = zero_grads(net);
  grads[0].w(0, 0) = 1.0;
  adam_step(adam, net, grads);
  CHECK(net.layers[0].w(0, 0) == doctest::Approx(-3e-4).epsilon(1e-6));
}

TEST_CASE("adam descends a quadratic monotonically") {
  Mlp net = scalar_net(1.0, 0.0);
  net.layers[0].b.resize(0);
  AdamState adam = make_adam(net, 1e-2);
  double prev = 1.0;
  for (int i = 0; i < 100; ++i) {
    LayerGrads grads = zero_grads(net);
    grads[0].w(0, 0) = 2.0 * net.layers[0].w(0, 0);  // d/dw of w^2
    adam_step(adam, net, grads);
    const double w = net.layers[0].w(0, 0);
    if (i >= 1) CHECK(std::abs(w) < std::abs(prev));
    prev = w;
  }
  CHECK(std::abs(prev) < 1.0);
}

TEST_CASE("adam rejects non-finite gradients naming the layer") {
  Rng rng(2);
  Mlp net = make_mlp(2, {3}, 1, rng);
  AdamState adam = make_adam(net);
  LayerGrads grads = zero_grads(net);
  grads[1].w(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS(adam_step(adam, net, grads),
                       doctest::Contains("layer 1"), NumericError);
}

TEST_CASE("gradient check on a quadratic loss is near-exact") {
  Rng rng(77);
  const Mlp net = make_mlp(2, {}, 1, rng);  // single linear layer
  const Eigen::VectorXd x = rng.normal_vector(2);
  auto loss = [&](const Mlp& p) {
    const double y = forward(p, x)[0];
    return (y - 0.5) * (y - 0.5);
  };
  const double y0 = forward(net, x)[0];
  const BackwardResult result =
      backward(net, x, Eigen::VectorXd::Constant(1, 2.0 * (y0 - 0.5)));
  Rng probe_rng(8);
  const double err = gradient_check(loss, net, result.param_grads, 0, probe_rng);
  CHECK(err < 1e-8);
}

TEST_CASE("gradient check stays below 1e-4 at 10 seeded parameter points") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const Mlp net = make_mlp(4, {16, 16}, 3, rng);
    const Eigen::VectorXd x = rng.normal_vector(4);
    const Eigen::VectorXd g = rng.normal_vector(3);
    const BackwardResult result = backward(net, x, g);
    auto loss = [&](const Mlp& p) { return g.dot(forward(p, x)); };
    Rng probe_rng(seed + 100);
    const double err =
        gradient_check(loss, net, result.param_grads, 40, probe_rng);
    CHECK(err < 1e-4);
  }
}

}  // TEST_SUITE
