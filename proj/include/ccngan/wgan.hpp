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

#ifndef CCNGAN_WGAN_HPP
#define CCNGAN_WGAN_HPP

#include "ccngan/dataset.hpp"
#include "ccngan/nn.hpp"
#include "ccngan/noise.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

/// Wasserstein GAN whose generator maps noisy labelled points (features plus
/// an appended label block) to clean labelled points, and whose critic
/// compares them against a small gold set with true labels.
namespace ccngan::wgan {

enum class Scheme { wgan_y, wgan_xtra_y, wgan_xtra_y_entr };

inline std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::wgan_y: return "wgan_y";
    case Scheme::wgan_xtra_y: return "wgan_xtra_y";
    case Scheme::wgan_xtra_y_entr: return "wgan_xtra_y_entr";
  }
  return "wgan_xtra_y";
}

inline Scheme scheme_from_string(std::string_view s) {
  if (s == "wgan_y") return Scheme::wgan_y;
  if (s == "wgan_xtra_y") return Scheme::wgan_xtra_y;
  if (s == "wgan_xtra_y_entr") return Scheme::wgan_xtra_y_entr;
  throw ConfigError("unknown scheme '" + std::string(s) + "'");
}

/// Default outer iteration counts: 500 for the plain scheme, 1000 when the
/// entropy terms are on.
inline int default_iterations(Scheme s) {
  return s == Scheme::wgan_xtra_y_entr ? 1000 : 500;
}

struct WganConfig {
  double alpha = 1e-3;
  double c = 0.01;
  int n_c = 5;
  int m_b = 64;
  int n_it = 500;
  Scheme scheme = Scheme::wgan_xtra_y;
  noise::AppendConfig append{};
  std::uint64_t seed = 0;
  // Multiplies both entropy-gradient additions (Entr scheme only).
  double entropy_weight = 1.0;
  double rms_decay = 0.9;
  double rms_epsilon = 1e-8;
  std::vector<std::size_t> generator_hidden{64, 128, 128};
  std::vector<std::size_t> critic_hidden{128, 128};
  int checkpoint_every = 0;  // 0 = off
  std::string checkpoint_dir;

  int label_dims() const { return scheme == Scheme::wgan_y ? 1 : append.k; }

  void validate() const {
    if (!(alpha > 0.0)) throw ConfigError("wgan: alpha must be > 0");
    if (!(c > 0.0)) throw ConfigError("wgan: c must be > 0");
    if (n_c <= 0 || m_b <= 0) throw ConfigError("wgan: n_c and m_b must be positive");
    if (n_it < 0) throw ConfigError("wgan: n_it must be >= 0");
    if (scheme != Scheme::wgan_y) append.validate();
    if (!(entropy_weight >= 0.0)) throw ConfigError("wgan: entropy_weight must be >= 0");
    if (generator_hidden.empty() || critic_hidden.empty()) {
      throw ConfigError("wgan: hidden layer lists must be non-empty");
    }
    if (checkpoint_every < 0) throw ConfigError("wgan: checkpoint_every must be >= 0");
  }

  friend bool operator==(const WganConfig&, const WganConfig&) = default;
};

struct GanPair {
  nn::MlpNetwork generator;  // (n + k) -> ... -> (n + k), linear output
  nn::MlpNetwork critic;     // (n + k) -> ... -> 1, linear output
  int label_dims = 5;
  double l = 5.0;

  std::size_t feature_width() const { return generator.input_width() - label_dims; }
};

/// Generator: n+k -> 64 -> 128 -> 128 -> n+k (ReLU, linear out).
/// Critic: n+k -> 128 -> 128 -> 1 (ReLU, linear out).
inline GanPair make_gan_pair(std::size_t n, const WganConfig& cfg) {
  cfg.validate();
  const std::size_t d = n + cfg.label_dims();
  std::vector<std::size_t> gw{d};
  gw.insert(gw.end(), cfg.generator_hidden.begin(), cfg.generator_hidden.end());
  gw.push_back(d);
  std::vector<std::size_t> cw{d};
  cw.insert(cw.end(), cfg.critic_hidden.begin(), cfg.critic_hidden.end());
  cw.push_back(1);
  GanPair pair;
  pair.generator = nn::init_network(
      nn::chain(gw, nn::Activation::relu, nn::Activation::linear),
      derive_seed(cfg.seed, 101));
  pair.critic = nn::init_network(
      nn::chain(cw, nn::Activation::relu, nn::Activation::linear),
      derive_seed(cfg.seed, 102));
  pair.label_dims = cfg.label_dims();
  pair.l = cfg.append.l;
  return pair;
}

// ---------------------------------------------------------------------------
// Objectives

struct CriticObjective {
  double value = 0.0;        // mean D(clean) - mean D(fake)
  nn::ForwardCache clean;    // critic pass on the clean batch
  nn::ForwardCache fake;     // critic pass on the fake batch
  Matrix clean_output_grad;  // +1/m_clean per example
  Matrix fake_output_grad;   // -1/m_fake per example
};

inline CriticObjective critic_objective(const nn::MlpNetwork& critic,
                                        const Matrix& clean_batch,
                                        const Matrix& fake_batch) {
  const auto w = static_cast<Eigen::Index>(critic.input_width());
  if (clean_batch.cols() != w || fake_batch.cols() != w) {
    throw ContractError("critic_objective: batch width does not match critic input");
  }
  if (clean_batch.rows() == 0 || fake_batch.rows() == 0) {
    throw ContractError("critic_objective: empty batch");
  }
  CriticObjective obj;
  obj.clean = nn::forward(critic, clean_batch);
  obj.fake = nn::forward(critic, fake_batch);
  const double mc = static_cast<double>(clean_batch.rows());
  const double mf = static_cast<double>(fake_batch.rows());
  obj.value = obj.clean.output().mean() - obj.fake.output().mean();
  obj.clean_output_grad = Matrix::Constant(clean_batch.rows(), 1, 1.0 / mc);
  obj.fake_output_grad = Matrix::Constant(fake_batch.rows(), 1, -1.0 / mf);
  return obj;
}

struct EntropyTerm {
  double value = 0.0;
  Matrix grad;  // d value / d(input of the term)
};

/// Mean binary entropy of sigmoid(last column): gradient w.r.t. the
/// generated batch (non-zero only in the last column).
inline EntropyTerm generator_entropy_term(const Matrix& generated_batch) {
  const Eigen::Index m = generated_batch.rows();
  const Eigen::Index last = generated_batch.cols() - 1;
  if (m == 0 || last < 0) throw ContractError("generator_entropy_term: empty batch");
  EntropyTerm t;
  t.grad = Matrix::Zero(m, generated_batch.cols());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double z = generated_batch(i, last);
    sum += binary_entropy_logit(z);
    t.grad(i, last) = binary_entropy_logit_grad(z) / static_cast<double>(m);
  }
  t.value = sum / static_cast<double>(m);
  return t;
}

struct CriticEntropyTerm {
  double value = 0.0;        // mean_clean H - mean_generated H
  Matrix clean_output_grad;  // d value / d D(clean)
  Matrix fake_output_grad;   // d value / d D(generated)
};

/// Entropy of p(clean | z) = sigmoid(D(z)), from critic outputs already
/// computed for the two batches.
inline CriticEntropyTerm critic_entropy_from_outputs(const Matrix& clean_out,
                                                     const Matrix& fake_out) {
  CriticEntropyTerm t;
  const double mc = static_cast<double>(clean_out.rows());
  const double mf = static_cast<double>(fake_out.rows());
  t.clean_output_grad.resize(clean_out.rows(), 1);
  t.fake_output_grad.resize(fake_out.rows(), 1);
  double hc = 0.0, hf = 0.0;
  for (Eigen::Index i = 0; i < clean_out.rows(); ++i) {
    hc += binary_entropy_logit(clean_out(i, 0));
    t.clean_output_grad(i, 0) = binary_entropy_logit_grad(clean_out(i, 0)) / mc;
  }
  for (Eigen::Index i = 0; i < fake_out.rows(); ++i) {
    hf += binary_entropy_logit(fake_out(i, 0));
    t.fake_output_grad(i, 0) = -binary_entropy_logit_grad(fake_out(i, 0)) / mf;
  }
  t.value = hc / mc - hf / mf;
  return t;
}

struct CriticEntropyResult {
  double value = 0.0;
  nn::Gradients grads;  // d value / d critic parameters
};

inline CriticEntropyResult critic_entropy_term(const nn::MlpNetwork& critic,
                                               const Matrix& clean_batch,
                                               const Matrix& generated_batch) {
  const auto obj = critic_objective(critic, clean_batch, generated_batch);
  const auto t = critic_entropy_from_outputs(obj.clean.output(), obj.fake.output());
  CriticEntropyResult r;
  r.value = t.value;
  r.grads = nn::backward(critic, obj.clean, t.clean_output_grad);
  r.grads += nn::backward(critic, obj.fake, t.fake_output_grad);
  return r;
}

struct GeneratorObjective {
  double value = 0.0;              // -mean D(G(noisy))
  double entropy = 0.0;            // generator entropy term (if requested)
  nn::ForwardCache generator_pass;
  nn::Gradients generator_grads;   // d(value + w * entropy) / d theta
};

/// -mean D(G(noisy)); gradients flow through the critic into the generator
/// (the critic is read-only). With entropy_weight > 0 the generator entropy
/// term is added to the objective.
inline GeneratorObjective generator_objective(const nn::MlpNetwork& critic,
                                              const nn::MlpNetwork& generator,
                                              const Matrix& noisy_batch,
                                              double entropy_weight = 0.0) {
  if (static_cast<std::size_t>(noisy_batch.cols()) != generator.input_width() ||
      generator.output_width() != critic.input_width()) {
    throw ContractError("generator_objective: width mismatch");
  }
  GeneratorObjective obj;
  obj.generator_pass = nn::forward(generator, noisy_batch);
  const Matrix& fake = obj.generator_pass.output();
  const auto critic_pass = nn::forward(critic, fake);
  const double m = static_cast<double>(noisy_batch.rows());
  obj.value = -critic_pass.output().mean();
  const Matrix out_grad = Matrix::Constant(noisy_batch.rows(), 1, -1.0 / m);
  Matrix fake_grad = nn::backward(critic, critic_pass, out_grad).input;
  if (entropy_weight != 0.0) {
    const auto ent = generator_entropy_term(fake);
    obj.entropy = ent.value;
    fake_grad += entropy_weight * ent.grad;
  }
  obj.generator_grads = nn::backward(generator, obj.generator_pass, fake_grad);
  return obj;
}

// ---------------------------------------------------------------------------
// Training

struct TrainRecord {
  int iteration = 0;
  double critic_obj = 0.0;  // last critic step of the iteration
  double gen_obj = 0.0;
  double entr_g = 0.0;
  double entr_d = 0.0;
  double wall_seconds = 0.0;
};

struct TrainLog {
  std::vector<TrainRecord> records;

  /// CSV: iteration,critic_obj,gen_obj,entr_g,entr_d,wall_seconds
  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << "iteration,critic_obj,gen_obj,entr_g,entr_d,wall_seconds\n";
    char buf[256];
    for (const auto& r : records) {
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.6f\n", r.iteration,
                    r.critic_obj, r.gen_obj, r.entr_g, r.entr_d, r.wall_seconds);
      out << buf;
    }
  }
};

namespace detail {

inline Matrix sample_appended(const LabeledDataset& ds, int m, int label_dims, double l,
                              Rng& rng) {
  const auto n = static_cast<Eigen::Index>(ds.width());
  Matrix out(m, n + label_dims);
  for (int i = 0; i < m; ++i) {
    const std::size_t r = uniform_index(rng, ds.size());
    out.row(i).head(n) = ds.features().row(r);
    for (int j = 0; j < label_dims; ++j) {
      out(i, n + j) = noise::append_coefficient(j, l) * ds.labels()[r];
    }
  }
  return out;
}

}  // namespace detail

/// One training run. Each outer iteration does n_c critic ascent steps (each
/// followed by clipping to [-c, c]) and one generator descent step. Batches
/// are drawn with replacement.
inline std::pair<GanPair, TrainLog> train(const WganConfig& cfg,
                                          const LabeledDataset& gold,
                                          const LabeledDataset& gan_noisy) {
  cfg.validate();
  if (gold.empty() || gan_noisy.empty()) {
    throw ContractError("wgan::train: gold and noisy sets must be non-empty");
  }
  if (gold.width() != gan_noisy.width()) {
    throw ContractError("wgan::train: gold/noisy feature widths differ");
  }
  GanPair pair = make_gan_pair(gold.width(), cfg);
  auto critic_opt = nn::OptimizerState::for_network(pair.critic, cfg.alpha,
                                                    cfg.rms_decay, cfg.rms_epsilon);
  auto gen_opt = nn::OptimizerState::for_network(pair.generator, cfg.alpha,
                                                 cfg.rms_decay, cfg.rms_epsilon);
  const bool entr = cfg.scheme == Scheme::wgan_xtra_y_entr;
  const double ew = entr ? cfg.entropy_weight : 0.0;
  const int kd = cfg.label_dims();
  const double l = cfg.append.l;
  Rng rng(derive_seed(cfg.seed, 103));
  TrainLog log;
  log.records.reserve(cfg.n_it);
  const auto t0 = std::chrono::steady_clock::now();

  if (cfg.checkpoint_every > 0 && !cfg.checkpoint_dir.empty()) {
    std::filesystem::create_directories(cfg.checkpoint_dir);
  }

  for (int it = 0; it < cfg.n_it; ++it) {
    TrainRecord rec;
    rec.iteration = it;
    for (int step = 0; step < cfg.n_c; ++step) {
      const Matrix clean = detail::sample_appended(gold, cfg.m_b, kd, l, rng);
      const Matrix noisy = detail::sample_appended(gan_noisy, cfg.m_b, kd, l, rng);
      const Matrix fake = nn::predict(pair.generator, noisy);
      auto obj = critic_objective(pair.critic, clean, fake);
      if (entr) {
        // Ascent direction: WGAN objective minus the critic entropy term.
        const auto ent = critic_entropy_from_outputs(obj.clean.output(), obj.fake.output());
        obj.clean_output_grad -= ew * ent.clean_output_grad;
        obj.fake_output_grad -= ew * ent.fake_output_grad;
        rec.entr_d = ent.value;
      }
      auto grads = nn::backward(pair.critic, obj.clean, obj.clean_output_grad);
      grads += nn::backward(pair.critic, obj.fake, obj.fake_output_grad);
      if (!std::isfinite(obj.value) || !grads.finite()) {
        throw NumericError("wgan::train: non-finite critic objective at iteration " +
                           std::to_string(it) + ", critic step " + std::to_string(step));
      }
      nn::rmsprop_step(pair.critic, grads, critic_opt, nn::Direction::ascend);
      nn::clip_weights(pair.critic, cfg.c);
      rec.critic_obj = obj.value;
    }
    const Matrix noisy = detail::sample_appended(gan_noisy, cfg.m_b, kd, l, rng);
    auto gobj = generator_objective(pair.critic, pair.generator, noisy, ew);
    if (!std::isfinite(gobj.value) || !gobj.generator_grads.finite()) {
      throw NumericError("wgan::train: non-finite generator objective at iteration " +
                         std::to_string(it));
    }
    nn::rmsprop_step(pair.generator, gobj.generator_grads, gen_opt, nn::Direction::descend);
    rec.gen_obj = gobj.value;
    rec.entr_g = gobj.entropy;
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.records.push_back(rec);

    if (cfg.checkpoint_every > 0 && !cfg.checkpoint_dir.empty() &&
        (it + 1) % cfg.checkpoint_every == 0) {
      const auto base = std::filesystem::path(cfg.checkpoint_dir);
      const auto tag = std::to_string(it + 1);
      nn::save_network(pair.generator, (base / ("generator_" + tag + ".json")).string());
      nn::save_network(pair.critic, (base / ("critic_" + tag + ".json")).string());
    }
  }
  return {std::move(pair), std::move(log)};
}

/// Passes every noisy example through the generator: the first n outputs are
/// the new features, the label comes from the tail (majority vote over k
/// coordinates, or the single coordinate for the one-label representation).
inline LabeledDataset generate_clean(const GanPair& pair, const LabeledDataset& noisy) {
  const std::size_t n = pair.feature_width();
  if (noisy.width() != n) throw ContractError("generate_clean: feature width mismatch");
  const int kd = pair.label_dims;
  const std::size_t m = noisy.size();
  Matrix x(m, n);
  std::vector<int> y(m);
  constexpr std::size_t kChunk = 1024;
  for (std::size_t start = 0; start < m; start += kChunk) {
    const std::size_t len = std::min(kChunk, m - start);
    std::vector<int> labels(noisy.labels().begin() + start,
                            noisy.labels().begin() + start + len);
    const Matrix in = noise::append_rows(noisy.features().middleRows(start, len), labels,
                                         kd, pair.l);
    const Matrix out = nn::predict(pair.generator, in);
    x.middleRows(start, len) = out.leftCols(n);
    for (std::size_t i = 0; i < len; ++i) {
      if (kd == 1) {
        y[start + i] = noise::decode_label_single(out(i, n));
      } else {
        const Eigen::RowVectorXd tail = out.row(i).tail(kd);
        y[start + i] = noise::decode_label_majority(
                           {tail.data(), static_cast<std::size_t>(kd)},
                           noise::AppendConfig{kd, pair.l})
                           .label;
      }
    }
  }
  return LabeledDataset::make(std::move(x), std::move(y), noisy.name() + "/generated");
}

inline LabeledDataset generate_clean(const GanPair& pair, const LabeledDataset& noisy,
                                     const noise::AppendConfig& cfg) {
  if (pair.label_dims != cfg.k || pair.l != cfg.l) {
    throw ContractError("generate_clean: append config does not match the trained pair");
  }
  return generate_clean(pair, noisy);
}

}  // namespace ccngan::wgan

#endif  // CCNGAN_WGAN_HPP
