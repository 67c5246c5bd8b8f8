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

// Shared helpers for the unit tests and the acceptance binary.

#ifndef CCNGAN_TESTS_SUPPORT_HPP
#define CCNGAN_TESTS_SUPPORT_HPP

#include "ccngan/nn.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>

#include <unistd.h>

namespace ccngan::support {

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                            double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, lo, hi);
  return m;
}

/// Random MLP with 1..max_depth layers of width 1..max_width; hidden layers
/// draw from relu/linear/sigmoid, the last layer may also be softmax.
inline nn::MlpNetwork random_network(Rng& rng, std::size_t max_depth = 4,
                                     std::size_t max_width = 32) {
  const std::size_t depth = 1 + uniform_index(rng, max_depth);
  std::vector<std::size_t> widths(depth + 1);
  for (auto& w : widths) w = 1 + uniform_index(rng, max_width);
  std::vector<nn::LayerSpec> specs;
  const nn::Activation hidden[] = {nn::Activation::relu, nn::Activation::linear,
                                   nn::Activation::sigmoid};
  const nn::Activation last[] = {nn::Activation::relu, nn::Activation::linear,
                                 nn::Activation::sigmoid, nn::Activation::softmax};
  for (std::size_t i = 0; i < depth; ++i) {
    const bool is_last = i + 1 == depth;
    specs.push_back({widths[i], widths[i + 1],
                     is_last ? last[uniform_index(rng, 4)] : hidden[uniform_index(rng, 3)]});
  }
  auto net = nn::init_network(specs, rng());
  for (auto& b : net.biases) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = uniform(rng, -0.5, 0.5);
  }
  return net;
}

/// |a - b| / max(|a|, |b|), with the denominator floored at `floor`.
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Largest relative error between backprop and central differences of the
/// probe loss L = sum(output .* probe) over every weight, bias and input.
inline double max_gradient_error(nn::MlpNetwork net, const Matrix& batch, const Matrix& probe,
                                 double h = 1e-5) {
  const auto cache = nn::forward(net, batch);
  const auto grads = nn::backward(net, cache, probe);
  auto loss = [&](const nn::MlpNetwork& n, const Matrix& x) {
    return nn::predict(n, x).cwiseProduct(probe).sum();
  };
  double worst = 0.0;
  auto check = [&](double& slot, double analytic, const Matrix& x) {
    const double keep = slot;
    slot = keep + h;
    const double up = loss(net, x);
    slot = keep - h;
    const double down = loss(net, x);
    slot = keep;
    worst = std::max(worst, relative_error(analytic, (up - down) / (2.0 * h)));
  };
  Matrix x = batch;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    for (Eigen::Index i = 0; i < net.weights[l].size(); ++i) {
      check(net.weights[l].data()[i], grads.weights[l].data()[i], x);
    }
    for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) {
      check(net.biases[l].data()[i], grads.biases[l].data()[i], x);
    }
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x.data()[i];
    x.data()[i] = keep + h;
    const double up = loss(net, x);
    x.data()[i] = keep - h;
    const double down = loss(net, x);
    x.data()[i] = keep;
    worst = std::max(worst, relative_error(grads.input.data()[i], (up - down) / (2.0 * h)));
  }
  return worst;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() /
           ("ccngan_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace ccngan::support

#endif  // CCNGAN_TESTS_SUPPORT_HPP
