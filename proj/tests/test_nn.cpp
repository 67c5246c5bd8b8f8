// Copyright 2026 The ccngan Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ccngan/nn.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

namespace {

using namespace ccngan;
using nn::Activation;

nn::MlpNetwork tiny_linear() {
  auto net = nn::init_network({{2, 1, Activation::linear}}, 1);
  net.weights[0] << 1.0, 2.0;
  net.biases[0] << 0.5;
  return net;
}

TEST(Network, ForwardOfHandBuiltLinearLayer) {
  Matrix x(1, 2);
  x << 3.0, 4.0;
  EXPECT_DOUBLE_EQ(nn::predict(tiny_linear(), x)(0, 0), 11.5);
}

TEST(Network, ReluZeroesNegativePreActivations) {
  auto net = nn::init_network({{1, 2, Activation::relu}}, 1);
  net.weights[0] << 1.0, -1.0;
  net.biases[0].setZero();
  Matrix x(1, 1);
  x << 2.0;
  const Matrix y = nn::predict(net, x);
  EXPECT_DOUBLE_EQ(y(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(y(0, 1), 0.0);
}

TEST(Network, SoftmaxRowsSumToOneAndSurviveLargeLogits) {
  auto net = nn::init_network({{1, 3, Activation::softmax}}, 1);
  net.weights[0] << 1000.0, 0.0, -1000.0;
  Matrix x(2, 1);
  x << 1.0, -1.0;
  const Matrix y = nn::predict(net, x);
  ASSERT_TRUE(y.allFinite());
  for (Eigen::Index r = 0; r < y.rows(); ++r) EXPECT_NEAR(y.row(r).sum(), 1.0, 1e-15);
  EXPECT_NEAR(y(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(y(1, 2), 1.0, 1e-15);
}

TEST(Network, GlorotInitBoundsAndZeroBiases) {
  const auto net = nn::init_network(nn::chain({30, 20, 10}, Activation::relu,
                                              Activation::linear), 9);
  EXPECT_LE(net.weights[0].cwiseAbs().maxCoeff(), std::sqrt(6.0 / 50.0));
  EXPECT_LE(net.weights[1].cwiseAbs().maxCoeff(), std::sqrt(6.0 / 30.0));
  EXPECT_EQ(net.biases[0].squaredNorm(), 0.0);
  EXPECT_EQ(net.parameter_count(), 30u * 20 + 20 + 20 * 10 + 10);
}

TEST(Network, InitIsDeterministicPerSeed) {
  const auto specs = nn::chain({5, 7, 3}, Activation::relu, Activation::linear);
  EXPECT_EQ(nn::init_network(specs, 4), nn::init_network(specs, 4));
  EXPECT_FALSE(nn::init_network(specs, 4) == nn::init_network(specs, 5));
}

TEST(Network, SpecValidation) {
  EXPECT_THROW(nn::init_network({{0, 3, Activation::relu}}, 1), ConfigError);
  EXPECT_THROW(nn::init_network({{2, 3, Activation::softmax}, {3, 1, Activation::linear}}, 1),
               ConfigError);
  EXPECT_THROW(nn::init_network({{2, 3, Activation::relu}, {4, 1, Activation::linear}}, 1),
               ConfigError);
  EXPECT_THROW(nn::chain({3}, Activation::relu, Activation::linear), ConfigError);
}

TEST(Network, WidthMismatchAndNonFiniteInput) {
  const auto net = tiny_linear();
  EXPECT_THROW(nn::forward(net, Matrix::Zero(1, 3)), ContractError);
  Matrix bad(1, 2);
  bad << 1.0, std::nan("");
  EXPECT_THROW(nn::forward(net, bad), NumericError);
}

TEST(Backprop, LinearLayerGradientIsOuterProduct) {
  const auto net = tiny_linear();
  Matrix x(1, 2);
  x << 3.0, 4.0;
  const auto cache = nn::forward(net, x);
  Matrix g(1, 1);
  g << 2.0;
  const auto grads = nn::backward(net, cache, g);
  EXPECT_DOUBLE_EQ(grads.weights[0](0, 0), 6.0);
  EXPECT_DOUBLE_EQ(grads.weights[0](0, 1), 8.0);
  EXPECT_DOUBLE_EQ(grads.biases[0](0), 2.0);
  EXPECT_DOUBLE_EQ(grads.input(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(grads.input(0, 1), 4.0);
}

TEST(Backprop, MatchesFiniteDifferencesOnRandomNetworks) {
  Rng rng(12345);
  for (int trial = 0; trial < 25; ++trial) {
    const auto net = support::random_network(rng);
    const Matrix x = support::random_matrix(rng, 3, net.input_width());
    const Matrix probe = support::random_matrix(rng, 3, net.output_width());
    EXPECT_LT(support::max_gradient_error(net, x, probe), 1e-4) << "trial " << trial;
  }
}

TEST(Backprop, LogitSeedEqualsSoftmaxCrossEntropyGradient) {
  Rng rng(3);
  const auto net = nn::init_network(nn::chain({4, 6, 3}, Activation::sigmoid,
                                              Activation::softmax), 8);
  const Matrix x = support::random_matrix(rng, 5, 4);
  Matrix t = Matrix::Zero(5, 3);
  for (int i = 0; i < 5; ++i) t(i, i % 3) = 1.0;
  const auto cache = nn::forward(net, x);
  const Matrix& p = cache.output();
  const auto via_logits = nn::backward_from_logits(net, cache, (p - t) / 5.0);
  // d(mean CE)/dp = -t / (5 p), pushed through the softmax Jacobian.
  const Matrix dp = -t.cwiseQuotient(p) / 5.0;
  const auto via_softmax = nn::backward(net, cache, dp);
  for (std::size_t l = 0; l < net.depth(); ++l) {
    EXPECT_LT((via_logits.weights[l] - via_softmax.weights[l]).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((via_logits.biases[l] - via_softmax.biases[l]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Backprop, ShapeChecks) {
  const auto net = tiny_linear();
  const auto cache = nn::forward(net, Matrix::Ones(2, 2));
  EXPECT_THROW(nn::backward(net, cache, Matrix::Ones(1, 1)), ContractError);
}

TEST(RmsProp, FirstTwoStepsMatchHandComputation) {
  auto net = nn::init_network({{1, 1, Activation::linear}}, 1);
  net.weights[0](0, 0) = 0.0;
  net.biases[0](0) = 0.0;
  auto opt = nn::OptimizerState::for_network(net, 1e-3, 0.9, 1e-8);
  auto g = nn::Gradients::zeros_like(net);
  g.weights[0](0, 0) = 2.0;
  nn::rmsprop_step(net, g, opt, nn::Direction::ascend);
  EXPECT_NEAR(net.weights[0](0, 0), 0.0031622776206399095, 1e-17);
  EXPECT_EQ(net.biases[0](0), 0.0);
  g.weights[0](0, 0) = -1.0;
  nn::rmsprop_step(net, g, opt, nn::Direction::descend);
  EXPECT_NEAR(net.weights[0](0, 0), 0.0031622776206399095 + 0.001474419545522672, 1e-17);
}

TEST(RmsProp, NonFiniteGradientLeavesNetworkUntouched) {
  auto net = nn::init_network(nn::chain({3, 4, 2}, Activation::relu, Activation::linear), 2);
  const auto before = net;
  auto opt = nn::OptimizerState::for_network(net);
  auto g = nn::Gradients::zeros_like(net);
  g.weights[1](0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(nn::rmsprop_step(net, g, opt, nn::Direction::descend), NumericError);
  EXPECT_EQ(net, before);
}

TEST(RmsProp, RejectsBadHyperparameters) {
  const auto net = tiny_linear();
  EXPECT_THROW(nn::OptimizerState::for_network(net, 0.0), ConfigError);
  EXPECT_THROW(nn::OptimizerState::for_network(net, 1e-3, 1.0), ConfigError);
  EXPECT_THROW(nn::OptimizerState::for_network(net, 1e-3, 0.9, 0.0), ConfigError);
}

TEST(Clip, BoundsEveryParameter) {
  auto net = nn::init_network(nn::chain({10, 10, 1}, Activation::relu, Activation::linear), 5);
  net.biases[0].setConstant(3.0);
  nn::clip_weights(net, 0.01);
  EXPECT_LE(net.max_abs_parameter(), 0.01);
  EXPECT_THROW(nn::clip_weights(net, 0.0), ConfigError);
}

TEST(Serialization, RoundTripIsExact) {
  Rng rng(77);
  for (int i = 0; i < 10; ++i) {
    const auto net = support::random_network(rng);
    EXPECT_EQ(nn::from_json(nlohmann::json::parse(nn::to_json(net).dump())), net);
  }
  const auto dir = support::temp_dir("nn");
  const auto net = support::random_network(rng);
  nn::save_network(net, (dir / "net.json").string());
  EXPECT_EQ(nn::load_network((dir / "net.json").string()), net);
  std::filesystem::remove_all(dir);
}

TEST(Serialization, RejectsMalformedDocuments) {
  auto doc = nn::to_json(tiny_linear());
  auto wrong_format = doc;
  wrong_format["format"] = "other";
  EXPECT_THROW(nn::from_json(wrong_format), FormatError);
  auto wrong_version = doc;
  wrong_version["version"] = 99;
  EXPECT_THROW(nn::from_json(wrong_version), FormatError);
  auto short_weights = doc;
  short_weights["layers"][0]["weights"] = {1.0};
  EXPECT_THROW(nn::from_json(short_weights), FormatError);
}

}  // namespace
