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

#ifndef CCNGAN_NN_HPP
#define CCNGAN_NN_HPP

#include "ccngan/common.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

/// Dense multilayer perceptrons: forward pass, exact backpropagation,
/// RMSProp updates and weight clipping. Batches are row-major in the
/// logical sense: one example per row, one feature per column.
namespace ccngan::nn {

enum class Activation { relu, linear, sigmoid, softmax };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::linear: return "linear";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softmax: return "softmax";
  }
  return "linear";
}

inline Activation activation_from_string(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "linear") return Activation::linear;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "softmax") return Activation::softmax;
  throw FormatError("unknown activation '" + std::string(s) + "'");
}

struct LayerSpec {
  std::size_t input_width = 0;
  std::size_t output_width = 0;
  Activation activation = Activation::linear;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Builds a chained spec list from widths {w0, w1, ..., wL}: hidden layers
/// use `hidden`, the final layer uses `output`.
inline std::vector<LayerSpec> chain(const std::vector<std::size_t>& widths,
                                    Activation hidden, Activation output) {
  if (widths.size() < 2) throw ConfigError("need at least two widths");
  std::vector<LayerSpec> specs;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool last = i + 2 == widths.size();
    specs.push_back({widths[i], widths[i + 1], last ? output : hidden});
  }
  return specs;
}

inline void validate_specs(const std::vector<LayerSpec>& specs) {
  if (specs.empty()) throw ConfigError("network needs at least one layer");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    if (s.input_width == 0 || s.output_width == 0) {
      throw ConfigError("layer " + std::to_string(i) + " has a zero width");
    }
    if (s.activation == Activation::softmax && i + 1 != specs.size()) {
      throw ConfigError("softmax is only allowed on the final layer");
    }
    if (i > 0 && specs[i - 1].output_width != s.input_width) {
      throw ConfigError("layer " + std::to_string(i) + " input width " +
                        std::to_string(s.input_width) +
                        " does not match previous output width " +
                        std::to_string(specs[i - 1].output_width));
    }
  }
}

struct MlpNetwork {
  std::vector<LayerSpec> layers;
  std::vector<Matrix> weights;  // output_width x input_width
  std::vector<Vector> biases;   // output_width

  std::size_t input_width() const { return layers.front().input_width; }
  std::size_t output_width() const { return layers.back().output_width; }
  std::size_t depth() const { return layers.size(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      n += weights[i].size() + biases[i].size();
    }
    return n;
  }

  double max_abs_parameter() const {
    double m = 0.0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (weights[i].size()) m = std::max(m, weights[i].cwiseAbs().maxCoeff());
      if (biases[i].size()) m = std::max(m, biases[i].cwiseAbs().maxCoeff());
    }
    return m;
  }

  bool parameters_finite() const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (!weights[i].allFinite() || !biases[i].allFinite()) return false;
    }
    return true;
  }

  friend bool operator==(const MlpNetwork& a, const MlpNetwork& b) {
    if (a.layers != b.layers) return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
      if (a.weights[i] != b.weights[i] || a.biases[i] != b.biases[i]) {
        return false;
      }
    }
    return true;
  }
};

/// Glorot-uniform weights over +-sqrt(6 / (fan_in + fan_out)), zero biases.
inline MlpNetwork init_network(const std::vector<LayerSpec>& specs,
                               std::uint64_t seed) {
  validate_specs(specs);
  Rng rng(seed);
  MlpNetwork net;
  net.layers = specs;
  for (const auto& s : specs) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(s.input_width + s.output_width));
    Matrix w(s.output_width, s.input_width);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        w(r, c) = uniform(rng, -limit, limit);
      }
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(Vector::Zero(s.output_width));
  }
  return net;
}

/// Per-layer record of a forward pass. inputs[0] is the batch,
/// inputs[i + 1] is the output of layer i; pre[i] is layer i's
/// pre-activation.
struct ForwardCache {
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre;

  const Matrix& output() const { return inputs.back(); }
};

namespace detail {

inline void softmax_rows(Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double mx = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - mx).exp().matrix();
    m.row(r) /= m.row(r).sum();
  }
}

inline Matrix activate(const Matrix& z, Activation a) {
  switch (a) {
    case Activation::relu: return z.cwiseMax(0.0);
    case Activation::linear: return z;
    case Activation::sigmoid: return z.unaryExpr([](double v) { return sigmoid(v); });
    case Activation::softmax: {
      Matrix out = z;
      softmax_rows(out);
      return out;
    }
  }
  return z;
}

// Vector-Jacobian product of the activation: dL/dz given dL/da.
inline Matrix activation_vjp(const Matrix& z, const Matrix& a,
                             const Matrix& grad_a, Activation act) {
  switch (act) {
    case Activation::relu:
      return grad_a.cwiseProduct(
          z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
    case Activation::linear: return grad_a;
    case Activation::sigmoid:
      return grad_a.cwiseProduct(
          a.cwiseProduct((1.0 - a.array()).matrix()));
    case Activation::softmax: {
      const Vector dot = grad_a.cwiseProduct(a).rowwise().sum();
      return a.cwiseProduct(grad_a - dot.replicate(1, grad_a.cols()));
    }
  }
  return grad_a;
}

}  // namespace detail

inline ForwardCache forward(const MlpNetwork& net, const Matrix& batch) {
  if (static_cast<std::size_t>(batch.cols()) != net.input_width()) {
    throw ContractError("forward: batch has " + std::to_string(batch.cols()) +
                        " columns, network expects " +
                        std::to_string(net.input_width()));
  }
  if (!batch.allFinite()) throw NumericError("forward: non-finite input");
  ForwardCache cache;
  cache.inputs.reserve(net.depth() + 1);
  cache.pre.reserve(net.depth());
  cache.inputs.push_back(batch);
  for (std::size_t i = 0; i < net.depth(); ++i) {
    Matrix z(batch.rows(), net.layers[i].output_width);
    z.noalias() = cache.inputs.back() * net.weights[i].transpose();
    z.rowwise() += net.biases[i].transpose();
    cache.inputs.push_back(detail::activate(z, net.layers[i].activation));
    cache.pre.push_back(std::move(z));
  }
  return cache;
}

/// Convenience: final-layer output only.
inline Matrix predict(const MlpNetwork& net, const Matrix& batch) {
  return forward(net, batch).output();
}

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Matrix input;  // dL/d(batch), needed to chain networks

  static Gradients zeros_like(const MlpNetwork& net) {
    Gradients g;
    for (std::size_t i = 0; i < net.depth(); ++i) {
      g.weights.push_back(Matrix::Zero(net.weights[i].rows(), net.weights[i].cols()));
      g.biases.push_back(Vector::Zero(net.biases[i].size()));
    }
    return g;
  }

  Gradients& operator+=(const Gradients& o) {
    for (std::size_t i = 0; i < weights.size(); ++i) {
      weights[i] += o.weights[i];
      biases[i] += o.biases[i];
    }
    return *this;
  }

  Gradients& operator*=(double s) {
    for (std::size_t i = 0; i < weights.size(); ++i) {
      weights[i] *= s;
      biases[i] *= s;
    }
    input *= s;
    return *this;
  }

  bool finite() const {
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (!weights[i].allFinite() || !biases[i].allFinite()) return false;
    }
    return true;
  }
};

namespace detail {

inline Gradients backward_impl(const MlpNetwork& net, const ForwardCache& cache,
                               const Matrix& seed, bool seed_is_pre_activation) {
  if (cache.pre.size() != net.depth() || cache.inputs.size() != net.depth() + 1) {
    throw ContractError("backward: cache does not match network depth");
  }
  const Matrix& out = cache.output();
  if (seed.rows() != out.rows() || seed.cols() != out.cols()) {
    throw ContractError("backward: output gradient shape mismatch");
  }
  Gradients g;
  g.weights.resize(net.depth());
  g.biases.resize(net.depth());
  Matrix grad = seed;
  for (std::size_t i = net.depth(); i-- > 0;) {
    const bool skip = seed_is_pre_activation && i + 1 == net.depth();
    const Matrix dz = skip ? grad
                           : activation_vjp(cache.pre[i], cache.inputs[i + 1], grad,
                                            net.layers[i].activation);
    g.weights[i].noalias() = dz.transpose() * cache.inputs[i];
    g.biases[i] = dz.colwise().sum().transpose();
    Matrix prev(dz.rows(), net.weights[i].cols());
    prev.noalias() = dz * net.weights[i];
    grad = std::move(prev);
  }
  g.input = std::move(grad);
  return g;
}

}  // namespace detail

/// Exact gradients of a scalar loss L given dL/d(output) for the batch that
/// produced `cache`.
inline Gradients backward(const MlpNetwork& net, const ForwardCache& cache,
                          const Matrix& output_grad) {
  return detail::backward_impl(net, cache, output_grad, false);
}

/// Same, seeded with dL/d(final pre-activation). For softmax + cross-entropy
/// the seed is (probabilities - one_hot) / m.
inline Gradients backward_from_logits(const MlpNetwork& net, const ForwardCache& cache,
                                      const Matrix& logit_grad) {
  return detail::backward_impl(net, cache, logit_grad, true);
}

enum class Direction { ascend, descend };

struct OptimizerState {
  double learning_rate = 1e-3;
  double decay = 0.9;
  double epsilon = 1e-8;
  std::vector<Matrix> weight_accumulators;
  std::vector<Vector> bias_accumulators;

  static OptimizerState for_network(const MlpNetwork& net,
                                    double learning_rate = 1e-3,
                                    double decay = 0.9, double epsilon = 1e-8) {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
    if (!(decay > 0.0 && decay < 1.0)) throw ConfigError("decay must be in (0,1)");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
    OptimizerState s;
    s.learning_rate = learning_rate;
    s.decay = decay;
    s.epsilon = epsilon;
    for (std::size_t i = 0; i < net.depth(); ++i) {
      s.weight_accumulators.push_back(
          Matrix::Zero(net.weights[i].rows(), net.weights[i].cols()));
      s.bias_accumulators.push_back(Vector::Zero(net.biases[i].size()));
    }
    return s;
  }
};

/// acc <- decay*acc + (1-decay)*g^2 ; p <- p +- lr * g / sqrt(acc + eps).
/// Ascend adds, descend subtracts. A non-finite gradient aborts the step
/// before anything is modified.
inline void rmsprop_step(MlpNetwork& net, const Gradients& grads,
                         OptimizerState& state, Direction direction) {
  if (grads.weights.size() != net.depth() ||
      state.weight_accumulators.size() != net.depth()) {
    throw ContractError("rmsprop_step: state/gradient depth mismatch");
  }
  for (std::size_t i = 0; i < net.depth(); ++i) {
    if (grads.weights[i].rows() != net.weights[i].rows() ||
        grads.weights[i].cols() != net.weights[i].cols() ||
        grads.biases[i].size() != net.biases[i].size() ||
        state.weight_accumulators[i].rows() != net.weights[i].rows() ||
        state.weight_accumulators[i].cols() != net.weights[i].cols()) {
      throw ContractError("rmsprop_step: shape mismatch at layer " +
                          std::to_string(i));
    }
  }
  if (!grads.finite()) throw NumericError("rmsprop_step: non-finite gradient");

  const double sign = direction == Direction::ascend ? 1.0 : -1.0;
  const double lr = state.learning_rate;
  const double d = state.decay;
  const double eps = state.epsilon;
  auto update = [&](auto& param, auto& acc, const auto& g) {
    acc.array() = d * acc.array() + (1.0 - d) * g.array().square();
    param.array() += sign * lr * g.array() / (acc.array() + eps).sqrt();
  };
  for (std::size_t i = 0; i < net.depth(); ++i) {
    update(net.weights[i], state.weight_accumulators[i], grads.weights[i]);
    update(net.biases[i], state.bias_accumulators[i], grads.biases[i]);
  }
}

/// Clamps every weight and bias into [-c, c].
inline void clip_weights(MlpNetwork& net, double c) {
  if (!(c > 0.0)) throw ConfigError("clip bound must be > 0");
  for (std::size_t i = 0; i < net.depth(); ++i) {
    net.weights[i] = net.weights[i].cwiseMax(-c).cwiseMin(c);
    net.biases[i] = net.biases[i].cwiseMax(-c).cwiseMin(c);
  }
}

// Serialization. Document layout (version 1):
//   { "format": "ccngan.mlp", "version": 1,
//     "layers": [ { "input_width": I, "output_width": O,
//                   "activation": "relu|linear|sigmoid|softmax",
//                   "weights": [O*I doubles, row-major], "bias": [O doubles] } ] }
// Doubles are written with round-trip precision, so load(save(net)) == net.

inline constexpr int kNetworkFormatVersion = 1;

inline nlohmann::json to_json(const MlpNetwork& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t i = 0; i < net.depth(); ++i) {
    const auto& s = net.layers[i];
    std::vector<double> w;
    w.reserve(net.weights[i].size());
    for (Eigen::Index r = 0; r < net.weights[i].rows(); ++r) {
      for (Eigen::Index c = 0; c < net.weights[i].cols(); ++c) {
        w.push_back(net.weights[i](r, c));
      }
    }
    std::vector<double> b(net.biases[i].data(),
                          net.biases[i].data() + net.biases[i].size());
    layers.push_back({{"input_width", s.input_width},
                      {"output_width", s.output_width},
                      {"activation", std::string(to_string(s.activation))},
                      {"weights", w},
                      {"bias", b}});
  }
  return {{"format", "ccngan.mlp"},
          {"version", kNetworkFormatVersion},
          {"layers", layers}};
}

inline MlpNetwork from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "ccngan.mlp") {
      throw FormatError("not a ccngan.mlp document");
    }
    if (doc.at("version").get<int>() != kNetworkFormatVersion) {
      throw FormatError("unsupported network format version " +
                        std::to_string(doc.at("version").get<int>()));
    }
    MlpNetwork net;
    for (const auto& l : doc.at("layers")) {
      LayerSpec s{l.at("input_width").get<std::size_t>(),
                  l.at("output_width").get<std::size_t>(),
                  activation_from_string(l.at("activation").get<std::string>())};
      const auto w = l.at("weights").get<std::vector<double>>();
      const auto b = l.at("bias").get<std::vector<double>>();
      if (w.size() != s.input_width * s.output_width || b.size() != s.output_width) {
        throw FormatError("layer parameter count does not match widths");
      }
      Matrix wm(s.output_width, s.input_width);
      for (std::size_t r = 0; r < s.output_width; ++r) {
        for (std::size_t c = 0; c < s.input_width; ++c) {
          wm(r, c) = w[r * s.input_width + c];
        }
      }
      net.layers.push_back(s);
      net.weights.push_back(std::move(wm));
      net.biases.push_back(Eigen::Map<const Vector>(b.data(), b.size()));
    }
    validate_specs(net.layers);
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed network document: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid network in document: ") + e.what());
  }
}

inline void save_network(const MlpNetwork& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write network to " + path);
  out << to_json(net).dump() << '\n';
}

inline MlpNetwork load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read network from " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed network file " + path + ": " + e.what());
  }
  return from_json(doc);
}

}  // namespace ccngan::nn

#endif  // CCNGAN_NN_HPP
