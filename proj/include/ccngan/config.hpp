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

#ifndef CCNGAN_CONFIG_HPP
#define CCNGAN_CONFIG_HPP

#include "ccngan/analysis.hpp"
#include "ccngan/data.hpp"
#include "ccngan/eval.hpp"
#include "ccngan/wgan.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

/// Experiment configuration documents (JSON). One file describes one
/// experiment; unknown keys are rejected so typos fail early.
namespace ccngan::config {

using nlohmann::json;

struct IdxSource {
  std::string train_images = "train-images-idx3-ubyte";
  std::string train_labels = "train-labels-idx1-ubyte";
  std::string test_images = "t10k-images-idx3-ubyte";
  std::string test_labels = "t10k-labels-idx1-ubyte";
  int positive = 0;  // digit pair (positive, negative); digit 0 is always negative
  int negative = 1;
  std::size_t skip_leading = 5000;
  std::optional<data::ImbalanceSpec> imbalance;

  friend bool operator==(const IdxSource&, const IdxSource&) = default;
};

struct DatasetSelector {
  enum class Kind { synthetic, idx };
  Kind kind = Kind::synthetic;
  data::SyntheticSpec synthetic{};
  IdxSource idx{};

  friend bool operator==(const DatasetSelector&, const DatasetSelector&) = default;
};

/// Eta model for the KL commands: either explicit atoms or the class
/// posterior of a synthetic spec sampled n_samples times.
struct KlSection {
  std::string eta_model = "synthetic_posterior";  // or "atoms"
  std::vector<double> atoms;
  std::vector<double> weights;
  std::size_t n_samples = 100000;
  std::vector<double> rho_grid{0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45};
  std::vector<noise::NoiseRates> ccn_grid;  // empty: rho_grid squared
  analysis::CounterexampleSearch search{};

  friend bool operator==(const KlSection& a, const KlSection& b) {
    return a.eta_model == b.eta_model && a.atoms == b.atoms && a.weights == b.weights &&
           a.n_samples == b.n_samples && a.rho_grid == b.rho_grid &&
           a.ccn_grid == b.ccn_grid && a.search.eta_lo == b.search.eta_lo &&
           a.search.eta_hi == b.search.eta_hi && a.search.rho_lo == b.search.rho_lo &&
           a.search.rho_hi == b.search.rho_hi &&
           a.search.grid_points == b.search.grid_points &&
           a.search.random_budget == b.search.random_budget &&
           a.search.directions == b.search.directions;
  }
};

struct ExperimentConfig {
  std::string name = "experiment";
  DatasetSelector dataset{};
  data::SplitSpec split{};
  std::vector<noise::NoiseRates> rates{{0.45, 0.46}};
  std::vector<std::string> schemes{"wgan_xtra_y"};
  wgan::WganConfig wgan{};
  int n_it = 0;  // 0: per-scheme default
  eval::ModelMConfig model_m{};
  int trials = 5;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out_dir = "out";
  KlSection kl{};

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// ---------------------------------------------------------------------------
// JSON mapping

namespace detail {

/// Reads `key` into `out` if present and records it as consumed.
template <typename T>
void read(const json& j, const char* key, T& out, std::set<std::string>& seen) {
  seen.insert(key);
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

inline void reject_unknown(const json& j, const std::set<std::string>& seen,
                           const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!seen.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

inline json rates_to_json(const std::vector<noise::NoiseRates>& rates) {
  json a = json::array();
  for (const auto& r : rates) a.push_back({r.rho_plus, r.rho_minus});
  return a;
}

inline std::vector<noise::NoiseRates> rates_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected a list of [rho_plus, rho_minus]");
  std::vector<noise::NoiseRates> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
      throw ConfigError(where + ": each entry must be [rho_plus, rho_minus]");
    }
    out.push_back({e[0].get<double>(), e[1].get<double>()});
  }
  return out;
}

}  // namespace detail

inline json to_json(const data::SyntheticSpec& s) {
  return {{"n", s.n},
          {"m_train", s.m_train},
          {"m_test", s.m_test},
          {"bern_p_label", s.bern_p_label},
          {"bern_p_sign", s.bern_p_sign},
          {"mu_range", s.mu_range},
          {"variance", s.variance},
          {"seed", s.seed}};
}

inline data::SyntheticSpec synthetic_from_json(const json& j) {
  data::SyntheticSpec s;
  std::set<std::string> seen;
  detail::read(j, "n", s.n, seen);
  detail::read(j, "m_train", s.m_train, seen);
  detail::read(j, "m_test", s.m_test, seen);
  detail::read(j, "bern_p_label", s.bern_p_label, seen);
  detail::read(j, "bern_p_sign", s.bern_p_sign, seen);
  detail::read(j, "mu_range", s.mu_range, seen);
  detail::read(j, "variance", s.variance, seen);
  detail::read(j, "seed", s.seed, seen);
  detail::reject_unknown(j, seen, "dataset.synthetic");
  return s;
}

inline json to_json(const DatasetSelector& d) {
  if (d.kind == DatasetSelector::Kind::synthetic) {
    return {{"kind", "synthetic"}, {"synthetic", to_json(d.synthetic)}};
  }
  const auto& x = d.idx;
  json idx = {{"train_images", x.train_images}, {"train_labels", x.train_labels},
              {"test_images", x.test_images},   {"test_labels", x.test_labels},
              {"digits", {x.positive, x.negative}}, {"skip_leading", x.skip_leading}};
  if (x.imbalance) {
    idx["imbalance"] = {{"imb_r", x.imbalance->imb_r}, {"seed", x.imbalance->seed}};
  }
  return {{"kind", "idx"}, {"idx", idx}};
}

inline DatasetSelector dataset_from_json(const json& j) {
  DatasetSelector d;
  std::set<std::string> seen;
  std::string kind = "synthetic";
  detail::read(j, "kind", kind, seen);
  seen.insert("synthetic");
  seen.insert("idx");
  detail::reject_unknown(j, seen, "dataset");
  if (kind == "synthetic") {
    d.kind = DatasetSelector::Kind::synthetic;
    if (j.contains("synthetic")) d.synthetic = synthetic_from_json(j.at("synthetic"));
  } else if (kind == "idx") {
    d.kind = DatasetSelector::Kind::idx;
    if (!j.contains("idx")) throw ConfigError("dataset: kind idx needs an 'idx' section");
    const json& x = j.at("idx");
    std::set<std::string> s2;
    detail::read(x, "train_images", d.idx.train_images, s2);
    detail::read(x, "train_labels", d.idx.train_labels, s2);
    detail::read(x, "test_images", d.idx.test_images, s2);
    detail::read(x, "test_labels", d.idx.test_labels, s2);
    detail::read(x, "skip_leading", d.idx.skip_leading, s2);
    s2.insert("digits");
    s2.insert("imbalance");
    detail::reject_unknown(x, s2, "dataset.idx");
    if (x.contains("digits")) {
      const json& dg = x.at("digits");
      if (!dg.is_array() || dg.size() != 2 || !dg[0].is_number_integer() ||
          !dg[1].is_number_integer()) {
        throw ConfigError("dataset.idx.digits: expected [a, b]");
      }
      d.idx.positive = dg[0].get<int>();
      d.idx.negative = dg[1].get<int>();
    }
    if (x.contains("imbalance") && !x.at("imbalance").is_null()) {
      const json& im = x.at("imbalance");
      data::ImbalanceSpec spec;
      std::set<std::string> s3;
      detail::read(im, "imb_r", spec.imb_r, s3);
      detail::read(im, "seed", spec.seed, s3);
      detail::reject_unknown(im, s3, "dataset.idx.imbalance");
      d.idx.imbalance = spec;
    }
  } else {
    throw ConfigError("dataset.kind must be 'synthetic' or 'idx', got '" + kind + "'");
  }
  return d;
}

inline json to_json(const wgan::WganConfig& w) {
  return {{"alpha", w.alpha},
          {"c", w.c},
          {"n_c", w.n_c},
          {"m_b", w.m_b},
          {"k", w.append.k},
          {"l", w.append.l},
          {"entropy_weight", w.entropy_weight},
          {"rms_decay", w.rms_decay},
          {"rms_epsilon", w.rms_epsilon},
          {"generator_hidden", w.generator_hidden},
          {"critic_hidden", w.critic_hidden},
          {"checkpoint_every", w.checkpoint_every}};
}

inline wgan::WganConfig wgan_from_json(const json& j) {
  wgan::WganConfig w;
  std::set<std::string> seen;
  detail::read(j, "alpha", w.alpha, seen);
  detail::read(j, "c", w.c, seen);
  detail::read(j, "n_c", w.n_c, seen);
  detail::read(j, "m_b", w.m_b, seen);
  detail::read(j, "k", w.append.k, seen);
  detail::read(j, "l", w.append.l, seen);
  detail::read(j, "entropy_weight", w.entropy_weight, seen);
  detail::read(j, "rms_decay", w.rms_decay, seen);
  detail::read(j, "rms_epsilon", w.rms_epsilon, seen);
  detail::read(j, "generator_hidden", w.generator_hidden, seen);
  detail::read(j, "critic_hidden", w.critic_hidden, seen);
  detail::read(j, "checkpoint_every", w.checkpoint_every, seen);
  detail::reject_unknown(j, seen, "wgan");
  return w;
}

inline json to_json(const eval::ModelMConfig& m) {
  return {{"epochs", m.epochs},       {"batch", m.batch},
          {"alpha", m.alpha},         {"rms_decay", m.rms_decay},
          {"rms_epsilon", m.rms_epsilon}, {"hidden", m.hidden}};
}

inline eval::ModelMConfig model_m_from_json(const json& j) {
  eval::ModelMConfig m;
  std::set<std::string> seen;
  detail::read(j, "epochs", m.epochs, seen);
  detail::read(j, "batch", m.batch, seen);
  detail::read(j, "alpha", m.alpha, seen);
  detail::read(j, "rms_decay", m.rms_decay, seen);
  detail::read(j, "rms_epsilon", m.rms_epsilon, seen);
  detail::read(j, "hidden", m.hidden, seen);
  detail::reject_unknown(j, seen, "model_m");
  return m;
}

inline json to_json(const KlSection& k) {
  json dirs = json::array();
  for (auto d : k.search.directions) dirs.push_back(std::string(analysis::to_string(d)));
  return {{"eta_model", k.eta_model},
          {"atoms", k.atoms},
          {"weights", k.weights},
          {"n_samples", k.n_samples},
          {"rho_grid", k.rho_grid},
          {"ccn_grid", detail::rates_to_json(k.ccn_grid)},
          {"search",
           {{"eta_range", {k.search.eta_lo, k.search.eta_hi}},
            {"rho_range", {k.search.rho_lo, k.search.rho_hi}},
            {"grid_points", k.search.grid_points},
            {"random_budget", k.search.random_budget},
            {"directions", dirs}}}};
}

inline KlSection kl_from_json(const json& j) {
  KlSection k;
  std::set<std::string> seen;
  detail::read(j, "eta_model", k.eta_model, seen);
  detail::read(j, "atoms", k.atoms, seen);
  detail::read(j, "weights", k.weights, seen);
  detail::read(j, "n_samples", k.n_samples, seen);
  detail::read(j, "rho_grid", k.rho_grid, seen);
  seen.insert("ccn_grid");
  seen.insert("search");
  detail::reject_unknown(j, seen, "kl");
  if (j.contains("ccn_grid")) k.ccn_grid = detail::rates_from_json(j.at("ccn_grid"), "kl.ccn_grid");
  if (j.contains("search")) {
    const json& s = j.at("search");
    std::set<std::string> s2{"eta_range", "rho_range", "directions"};
    detail::read(s, "grid_points", k.search.grid_points, s2);
    detail::read(s, "random_budget", k.search.random_budget, s2);
    detail::reject_unknown(s, s2, "kl.search");
    auto range = [&](const char* key, double& lo, double& hi) {
      if (!s.contains(key)) return;
      const json& r = s.at(key);
      if (!r.is_array() || r.size() != 2) {
        throw ConfigError(std::string("kl.search.") + key + ": expected [lo, hi]");
      }
      lo = r[0].get<double>();
      hi = r[1].get<double>();
    };
    range("eta_range", k.search.eta_lo, k.search.eta_hi);
    range("rho_range", k.search.rho_lo, k.search.rho_hi);
    if (s.contains("directions")) {
      k.search.directions.clear();
      for (const auto& d : s.at("directions")) {
        const auto name = d.get<std::string>();
        if (name == "rho_plus") {
          k.search.directions.push_back(analysis::SearchDirection::rho_plus);
        } else if (name == "rho_minus") {
          k.search.directions.push_back(analysis::SearchDirection::rho_minus);
        } else if (name == "diagonal") {
          k.search.directions.push_back(analysis::SearchDirection::diagonal);
        } else {
          throw ConfigError("kl.search.directions: unknown direction '" + name + "'");
        }
      }
    }
  }
  return k;
}

inline json to_json(const ExperimentConfig& c) {
  return {{"name", c.name},
          {"dataset", to_json(c.dataset)},
          {"split",
           {{"gold_fraction", c.split.gold_fraction},
            {"gan_fraction", c.split.gan_fraction},
            {"model_m_fraction", c.split.model_m_fraction}}},
          {"rates", detail::rates_to_json(c.rates)},
          {"schemes", c.schemes},
          {"wgan", to_json(c.wgan)},
          {"n_it", c.n_it},
          {"model_m", to_json(c.model_m)},
          {"trials", c.trials},
          {"seed", c.seed},
          {"jobs", c.jobs},
          {"out_dir", c.out_dir},
          {"kl", to_json(c.kl)}};
}

inline ExperimentConfig from_json(const json& j) {
  ExperimentConfig c;
  std::set<std::string> seen{"dataset", "split", "rates", "wgan", "model_m", "kl"};
  detail::read(j, "name", c.name, seen);
  detail::read(j, "schemes", c.schemes, seen);
  detail::read(j, "n_it", c.n_it, seen);
  detail::read(j, "trials", c.trials, seen);
  detail::read(j, "seed", c.seed, seen);
  detail::read(j, "jobs", c.jobs, seen);
  detail::read(j, "out_dir", c.out_dir, seen);
  detail::reject_unknown(j, seen, "config");
  if (j.contains("dataset")) c.dataset = dataset_from_json(j.at("dataset"));
  if (j.contains("split")) {
    const json& s = j.at("split");
    std::set<std::string> s2;
    detail::read(s, "gold_fraction", c.split.gold_fraction, s2);
    detail::read(s, "gan_fraction", c.split.gan_fraction, s2);
    detail::read(s, "model_m_fraction", c.split.model_m_fraction, s2);
    detail::reject_unknown(s, s2, "split");
  }
  if (j.contains("rates")) c.rates = detail::rates_from_json(j.at("rates"), "rates");
  if (j.contains("wgan")) c.wgan = wgan_from_json(j.at("wgan"));
  if (j.contains("model_m")) c.model_m = model_m_from_json(j.at("model_m"));
  if (j.contains("kl")) c.kl = kl_from_json(j.at("kl"));
  return c;
}

inline ExperimentConfig parse(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

inline std::string serialize(const ExperimentConfig& c) { return to_json(c).dump(2) + "\n"; }

inline ExperimentConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

// ---------------------------------------------------------------------------
// Path resolution and validation

/// Relative IDX paths resolve against CCNGAN_IDX_DIR when it is set.
inline std::string resolve_idx_path(const std::string& p) {
  const char* dir = std::getenv("CCNGAN_IDX_DIR");
  if (!dir || !*dir || std::filesystem::path(p).is_absolute()) return p;
  return (std::filesystem::path(dir) / p).string();
}

/// CCNGAN_OUT_DIR replaces out_dir when set.
inline void apply_env_overrides(ExperimentConfig& c) {
  if (const char* out = std::getenv("CCNGAN_OUT_DIR"); out && *out) c.out_dir = out;
}

/// Every problem found, in a stable order; empty when the config is usable
/// for `run`.
inline std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> errors;
  auto check = [&](auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      errors.emplace_back(e.what());
    }
  };
  if (c.dataset.kind == DatasetSelector::Kind::synthetic) {
    check([&] { c.dataset.synthetic.validate(); });
  } else {
    const auto& x = c.dataset.idx;
    for (const auto* p : {&x.train_images, &x.train_labels, &x.test_images, &x.test_labels}) {
      const auto path = resolve_idx_path(*p);
      if (!std::filesystem::is_regular_file(path)) errors.push_back("missing IDX file " + path);
    }
    if (x.positive < 0 || x.positive > 9 || x.negative < 0 || x.negative > 9 ||
        x.positive == x.negative) {
      errors.push_back("dataset.idx.digits must be two distinct digits in 0..9");
    }
    if (x.imbalance) check([&] { x.imbalance->validate(); });
  }
  check([&] { c.split.validate(); });
  if (c.rates.empty()) errors.emplace_back("rates: list is empty");
  for (const auto& r : c.rates) check([&] { r.validate(); });
  if (c.schemes.empty()) errors.emplace_back("schemes: list is empty");
  for (const auto& s : c.schemes) {
    if (!eval::is_known_scheme(s)) errors.push_back("unknown scheme '" + s + "'");
  }
  check([&] { c.wgan.validate(); });
  check([&] { c.wgan.append.validate(); });
  if (c.n_it < 0) errors.emplace_back("n_it must be >= 0");
  check([&] { c.model_m.validate(); });
  if (c.trials <= 0) errors.emplace_back("trials must be > 0");
  if (c.jobs <= 0) errors.emplace_back("jobs must be > 0");
  if (c.out_dir.empty()) errors.emplace_back("out_dir is empty");
  return errors;
}

/// Loads the train/test pair named by the selector.
inline std::pair<LabeledDataset, LabeledDataset> load_dataset(const DatasetSelector& d) {
  if (d.kind == DatasetSelector::Kind::synthetic) return data::generate_synthetic(d.synthetic);
  const auto& x = d.idx;
  const auto train_raw = data::load_idx(resolve_idx_path(x.train_images),
                                        resolve_idx_path(x.train_labels))
                             .drop_leading(x.skip_leading);
  const auto test_raw =
      data::load_idx(resolve_idx_path(x.test_images), resolve_idx_path(x.test_labels));
  auto train = data::make_binary_pair(train_raw, x.positive, x.negative);
  auto test = data::make_binary_pair(test_raw, x.positive, x.negative);
  if (x.imbalance) train = data::sample_imbalanced(train, *x.imbalance);
  return {std::move(train), std::move(test)};
}

inline std::string dataset_name(const DatasetSelector& d) {
  if (d.kind == DatasetSelector::Kind::synthetic) {
    return "SD" + std::to_string(d.synthetic.n);
  }
  std::string name = std::to_string(d.idx.positive) + "-" + std::to_string(d.idx.negative);
  if (d.idx.imbalance) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "-imb%g", d.idx.imbalance->imb_r);
    name += buf;
  }
  return name;
}

}  // namespace ccngan::config

#endif  // CCNGAN_CONFIG_HPP
