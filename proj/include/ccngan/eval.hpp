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

#ifndef CCNGAN_EVAL_HPP
#define CCNGAN_EVAL_HPP

#include "ccngan/data.hpp"
#include "ccngan/dataset.hpp"
#include "ccngan/nn.hpp"
#include "ccngan/noise.hpp"
#include "ccngan/wgan.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace ccngan::eval {

using noise::NoiseRates;

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Model M

struct ModelMConfig {
  int epochs = 100;
  int batch = 64;
  double alpha = 1e-3;
  double rms_decay = 0.9;
  double rms_epsilon = 1e-8;
  std::vector<std::size_t> hidden{185, 200, 185};
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 0) throw ConfigError("model_m: epochs must be >= 0");
    if (batch <= 0) throw ConfigError("model_m: batch must be > 0");
    if (!(alpha > 0.0)) throw ConfigError("model_m: alpha must be > 0");
    if (hidden.empty()) throw ConfigError("model_m: need at least one hidden layer");
  }

  friend bool operator==(const ModelMConfig&, const ModelMConfig&) = default;
};

/// n -> hidden... -> 2 softmax. Output column 0 is class -1, column 1 is +1.
inline nn::MlpNetwork make_model_m(std::size_t n, const ModelMConfig& cfg) {
  std::vector<std::size_t> w{n};
  w.insert(w.end(), cfg.hidden.begin(), cfg.hidden.end());
  w.push_back(2);
  return nn::init_network(nn::chain(w, nn::Activation::relu, nn::Activation::softmax),
                          derive_seed(cfg.seed, 201));
}

/// Softmax cross-entropy with RMSProp, reshuffled every epoch. `epoch_loss`,
/// if given, receives the mean training loss of each epoch.
inline nn::MlpNetwork train_model_m(const LabeledDataset& train, const ModelMConfig& cfg,
                                    std::vector<double>* epoch_loss = nullptr) {
  cfg.validate();
  if (train.empty()) throw ContractError("train_model_m: empty training set");
  if (train.positives() == 0 || train.negatives() == 0) {
    noise::warning_sink()("train_model_m: training data for '" + train.name() +
                          "' holds a single class");
  }
  nn::MlpNetwork net = make_model_m(train.width(), cfg);
  auto opt = nn::OptimizerState::for_network(net, cfg.alpha, cfg.rms_decay, cfg.rms_epsilon);
  Rng rng(derive_seed(cfg.seed, 202));
  const std::size_t m = train.size();
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  const auto n = static_cast<Eigen::Index>(train.width());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < m; start += cfg.batch) {
      const std::size_t len = std::min<std::size_t>(cfg.batch, m - start);
      Matrix x(len, n);
      Matrix target = Matrix::Zero(len, 2);
      for (std::size_t i = 0; i < len; ++i) {
        const std::size_t r = order[start + i];
        x.row(i) = train.features().row(r);
        target(i, train.labels()[r] == 1 ? 1 : 0) = 1.0;
      }
      const auto cache = nn::forward(net, x);
      const Matrix& p = cache.output();
      for (std::size_t i = 0; i < len; ++i) {
        loss_sum -= std::log(std::max(p(i, target(i, 1) > 0.5 ? 1 : 0), 1e-300));
      }
      const Matrix seed = (p - target) / static_cast<double>(len);
      const auto grads = nn::backward_from_logits(net, cache, seed);
      nn::rmsprop_step(net, grads, opt, nn::Direction::descend);
    }
    if (epoch_loss) epoch_loss->push_back(loss_sum / static_cast<double>(m));
  }
  return net;
}

struct Metrics {
  double accuracy = 0.0;
  double tpr = kUndefined;
  double tnr = kUndefined;
  double am = kUndefined;
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
};

/// Rates from a confusion table; a rate whose class is absent is NaN and so
/// is AM.
inline Metrics metrics_from_counts(std::size_t tp, std::size_t fn, std::size_t tn,
                                   std::size_t fp) {
  Metrics r;
  r.tp = tp;
  r.fn = fn;
  r.tn = tn;
  r.fp = fp;
  const std::size_t total = tp + fn + tn + fp;
  r.accuracy = total ? static_cast<double>(tp + tn) / total : kUndefined;
  if (tp + fn) r.tpr = static_cast<double>(tp) / (tp + fn);
  if (tn + fp) r.tnr = static_cast<double>(tn) / (tn + fp);
  r.am = (r.tpr + r.tnr) / 2.0;
  return r;
}

inline Metrics metrics_from_predictions(const std::vector<int>& truth,
                                        const std::vector<int>& predicted) {
  if (truth.size() != predicted.size()) throw ContractError("metrics: length mismatch");
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 1) {
      (predicted[i] == 1 ? tp : fn)++;
    } else {
      (predicted[i] == 1 ? fp : tn)++;
    }
  }
  return metrics_from_counts(tp, fn, tn, fp);
}

/// +1 where the second softmax output wins (ties go to -1).
inline std::vector<int> predict_labels(const nn::MlpNetwork& model, const Matrix& x) {
  const Matrix p = nn::predict(model, x);
  if (p.cols() != 2) throw ContractError("predict_labels: model must have 2 outputs");
  std::vector<int> y(p.rows());
  for (Eigen::Index i = 0; i < p.rows(); ++i) y[i] = p(i, 1) > p(i, 0) ? 1 : -1;
  return y;
}

inline Metrics evaluate(const nn::MlpNetwork& model, const LabeledDataset& test) {
  if (test.width() != model.input_width()) throw ContractError("evaluate: width mismatch");
  return metrics_from_predictions(test.labels(), predict_labels(model, test.features()));
}

// ---------------------------------------------------------------------------
// Trials

/// Scheme names accepted by run_trials: "simple_nn" plus the WGAN schemes.
inline bool is_known_scheme(const std::string& s) {
  return s == "simple_nn" || s == "wgan_y" || s == "wgan_xtra_y" || s == "wgan_xtra_y_entr";
}

struct TrialResult {
  std::string scheme;
  std::string dataset;
  NoiseRates rates;
  int trial_index = 0;
  double accuracy = kUndefined;
  double am = kUndefined;
  double tpr = kUndefined;
  double tnr = kUndefined;
  double runtime_seconds = 0.0;
  std::string status = "ok";  // ok | failed
  std::string error;
  double noisy_positive_fraction = kUndefined;      // noisy S_model_m
  double generated_positive_fraction = kUndefined;  // generate_clean output
  double clean_positive_fraction = kUndefined;      // true labels of S_model_m

  bool ok() const { return status == "ok"; }
};

struct ExperimentSpec {
  LabeledDataset train;
  LabeledDataset test;
  std::string dataset_name;
  data::SplitSpec split{};
  std::vector<NoiseRates> rates;
  std::vector<std::string> schemes{"wgan_xtra_y"};
  wgan::WganConfig wgan{};  // scheme, seed and n_it are set per run
  // n_it per WGAN scheme; 0 means the scheme's default.
  int n_it_override = 0;
  ModelMConfig model_m{};
  int trials = 5;
  std::uint64_t master_seed = 0;
  int jobs = 1;
  std::string log_dir;         // per-trial training logs when non-empty
  std::string checkpoint_dir;  // per-trial checkpoints when non-empty

  void validate() const {
    if (train.empty() || test.empty()) throw ConfigError("experiment: empty train or test set");
    if (train.width() != test.width()) throw ConfigError("experiment: train/test widths differ");
    split.validate();
    if (rates.empty()) throw ConfigError("experiment: no noise rates");
    for (const auto& r : rates) r.validate();
    if (schemes.empty()) throw ConfigError("experiment: no schemes");
    for (const auto& s : schemes) {
      if (!is_known_scheme(s)) throw ConfigError("experiment: unknown scheme '" + s + "'");
    }
    wgan.validate();
    model_m.validate();
    if (trials <= 0) throw ConfigError("experiment: trials must be > 0");
    if (jobs <= 0) throw ConfigError("experiment: jobs must be > 0");
    if (n_it_override < 0) throw ConfigError("experiment: n_it must be >= 0");
  }
};

/// Seed of one (rate setting, trial) cell. All schemes of a cell share the
/// split and the noise draws, so scheme comparisons are paired.
inline std::uint64_t trial_seed(std::uint64_t master, std::size_t rate_index, int trial) {
  return derive_seed(master, rate_index, static_cast<std::uint64_t>(trial));
}

inline std::string rates_tag(const NoiseRates& r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g_%g", r.rho_plus, r.rho_minus);
  return buf;
}

/// Corrupted partitions of one cell, shared by every scheme.
struct TrialData {
  data::PipelineSplit split;
  LabeledDataset gan_noisy;
  LabeledDataset model_m_noisy;
};

inline TrialData prepare_trial(const ExperimentSpec& spec, const NoiseRates& rates,
                               std::uint64_t seed) {
  data::SplitSpec ss = spec.split;
  ss.seed = derive_seed(seed, 1);
  TrialData td;
  td.split = data::split_pipeline(spec.train, ss);
  td.gan_noisy = noise::inject_ccn(td.split.gan, rates, derive_seed(seed, 2));
  td.model_m_noisy = noise::inject_ccn(td.split.model_m, rates, derive_seed(seed, 3));
  return td;
}

/// One scheme on one prepared cell.
inline TrialResult run_scheme(const ExperimentSpec& spec, const TrialData& td,
                              const std::string& scheme, std::size_t scheme_index,
                              const NoiseRates& rates, int trial, std::uint64_t seed) {
  TrialResult res;
  res.scheme = scheme;
  res.dataset = spec.dataset_name;
  res.rates = rates;
  res.trial_index = trial;
  res.noisy_positive_fraction = td.model_m_noisy.positive_fraction();
  res.clean_positive_fraction = td.split.model_m.positive_fraction();
  const auto t0 = std::chrono::steady_clock::now();
  const std::string stem = spec.dataset_name + "_" + scheme + "_" + rates_tag(rates) + "_t" +
                           std::to_string(trial);
  try {
    LabeledDataset m_train;
    if (scheme == "simple_nn") {
      m_train = td.model_m_noisy;
    } else {
      wgan::WganConfig wc = spec.wgan;
      wc.scheme = wgan::scheme_from_string(scheme);
      wc.n_it = spec.n_it_override > 0 ? spec.n_it_override : wgan::default_iterations(wc.scheme);
      wc.seed = derive_seed(seed, 10 + scheme_index);
      if (!spec.checkpoint_dir.empty() && wc.checkpoint_every > 0) {
        wc.checkpoint_dir = (std::filesystem::path(spec.checkpoint_dir) / stem).string();
      } else {
        wc.checkpoint_every = 0;
      }
      auto [pair, log] = wgan::train(wc, td.split.gold, td.gan_noisy);
      if (!spec.log_dir.empty()) {
        log.write_csv((std::filesystem::path(spec.log_dir) / (stem + "_wgan.csv")).string());
      }
      m_train = wgan::generate_clean(pair, td.model_m_noisy);
      res.generated_positive_fraction = m_train.positive_fraction();
    }
    ModelMConfig mc = spec.model_m;
    mc.seed = derive_seed(seed, 20 + scheme_index);
    std::vector<double> losses;
    const auto model = train_model_m(m_train, mc, &losses);
    if (!spec.log_dir.empty()) {
      std::ofstream out(std::filesystem::path(spec.log_dir) / (stem + "_model_m.csv"));
      out << "epoch,loss\n";
      char buf[64];
      for (std::size_t e = 0; e < losses.size(); ++e) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e, losses[e]);
        out << buf;
      }
    }
    const Metrics mt = evaluate(model, spec.test);
    res.accuracy = mt.accuracy;
    res.tpr = mt.tpr;
    res.tnr = mt.tnr;
    res.am = mt.am;
  } catch (const std::exception& e) {
    res.status = "failed";
    res.error = e.what();
  }
  res.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

/// Every (rates, trial, scheme) combination. Results come back in
/// rates-major, then trial, then scheme order regardless of `jobs`.
inline std::vector<TrialResult> run_trials(const ExperimentSpec& spec) {
  spec.validate();
  if (!spec.log_dir.empty()) std::filesystem::create_directories(spec.log_dir);
  struct Cell {
    std::size_t rate_index;
    int trial;
  };
  std::vector<Cell> cells;
  for (std::size_t r = 0; r < spec.rates.size(); ++r) {
    for (int t = 0; t < spec.trials; ++t) cells.push_back({r, t});
  }
  const std::size_t ns = spec.schemes.size();
  std::vector<TrialResult> results(cells.size() * ns);

  auto run_cell = [&](std::size_t ci) {
    const Cell& c = cells[ci];
    const NoiseRates& rates = spec.rates[c.rate_index];
    const std::uint64_t seed = trial_seed(spec.master_seed, c.rate_index, c.trial);
    TrialData td;
    try {
      td = prepare_trial(spec, rates, seed);
    } catch (const std::exception& e) {
      for (std::size_t s = 0; s < ns; ++s) {
        TrialResult& r = results[ci * ns + s];
        r.scheme = spec.schemes[s];
        r.dataset = spec.dataset_name;
        r.rates = rates;
        r.trial_index = c.trial;
        r.status = "failed";
        r.error = e.what();
      }
      return;
    }
    for (std::size_t s = 0; s < ns; ++s) {
      results[ci * ns + s] = run_scheme(spec, td, spec.schemes[s], s, rates, c.trial, seed);
    }
  };

  const auto workers = static_cast<std::size_t>(std::max(1, spec.jobs));
  if (workers == 1 || cells.size() == 1) {
    for (std::size_t ci = 0; ci < cells.size(); ++ci) run_cell(ci);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, cells.size()); ++w) {
      pool.emplace_back([&] {
        for (std::size_t ci = next++; ci < cells.size(); ci = next++) run_cell(ci);
      });
    }
    for (auto& th : pool) th.join();
  }
  return results;
}

// ---------------------------------------------------------------------------
// Summaries and ledgers

struct MetricSummary {
  std::string dataset;
  std::string scheme;
  NoiseRates rates;
  std::size_t trials = 0;  // successful trials only
  std::size_t failed = 0;
  double accuracy_mean = kUndefined, accuracy_std = kUndefined;
  double am_mean = kUndefined, am_std = kUndefined;
};

/// Mean and population standard deviation.
inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {kUndefined, kUndefined};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size()))};
}

inline std::vector<MetricSummary> summarize(const std::vector<TrialResult>& results) {
  using Key = std::tuple<std::string, std::string, double, double>;
  std::map<Key, std::vector<const TrialResult*>> groups;
  std::vector<Key> order;
  for (const auto& r : results) {
    Key k{r.dataset, r.scheme, r.rates.rho_plus, r.rates.rho_minus};
    if (!groups.count(k)) order.push_back(k);
    groups[k].push_back(&r);
  }
  std::vector<MetricSummary> out;
  for (const auto& k : order) {
    MetricSummary s;
    s.dataset = std::get<0>(k);
    s.scheme = std::get<1>(k);
    s.rates = {std::get<2>(k), std::get<3>(k)};
    std::vector<double> acc, am;
    for (const auto* r : groups[k]) {
      if (!r->ok()) {
        ++s.failed;
        continue;
      }
      acc.push_back(r->accuracy);
      am.push_back(r->am);
    }
    s.trials = acc.size();
    std::tie(s.accuracy_mean, s.accuracy_std) = mean_std(acc);
    std::tie(s.am_mean, s.am_std) = mean_std(am);
    out.push_back(s);
  }
  return out;
}

inline nlohmann::json to_json(const MetricSummary& s) {
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  return {{"dataset", s.dataset},
          {"scheme", s.scheme},
          {"rho_plus", s.rates.rho_plus},
          {"rho_minus", s.rates.rho_minus},
          {"trials", s.trials},
          {"failed", s.failed},
          {"accuracy_mean", num(s.accuracy_mean)},
          {"accuracy_std", num(s.accuracy_std)},
          {"am_mean", num(s.am_mean)},
          {"am_std", num(s.am_std)}};
}

inline constexpr const char* kLedgerHeader =
    "dataset,scheme,rho_plus,rho_minus,trial,accuracy,am,tpr,tnr,runtime_seconds,status,"
    "noisy_pos_fraction,generated_pos_fraction,clean_pos_fraction,error";

namespace detail {

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

inline double parse_double(const std::string& s, const std::string& where) {
  if (s == "nan" || s.empty()) return kUndefined;
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(where + ": bad number '" + s + "'");
  }
}

/// Rows of a CSV keyed by header names; `required` columns must be present.
inline std::vector<std::map<std::string, std::string>> read_keyed_csv(
    const std::string& path, const std::vector<std::string>& required) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  for (const auto& col : required) {
    if (std::find(header.begin(), header.end(), col) == header.end()) {
      throw FormatError(path + ": missing column '" + col + "'");
    }
  }
  std::vector<std::map<std::string, std::string>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(header.size()) + " fields, got " +
                        std::to_string(cells.size()));
    }
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = cells[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

inline void write_ledger(const std::vector<TrialResult>& results, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << kLedgerHeader << '\n';
  using detail::fmt;
  for (const auto& r : results) {
    out << detail::csv_escape(r.dataset) << ',' << r.scheme << ',' << fmt(r.rates.rho_plus)
        << ',' << fmt(r.rates.rho_minus) << ',' << r.trial_index << ',' << fmt(r.accuracy)
        << ',' << fmt(r.am) << ',' << fmt(r.tpr) << ',' << fmt(r.tnr) << ','
        << fmt(r.runtime_seconds) << ',' << r.status << ',' << fmt(r.noisy_positive_fraction)
        << ',' << fmt(r.generated_positive_fraction) << ','
        << fmt(r.clean_positive_fraction) << ',' << detail::csv_escape(r.error) << '\n';
  }
  if (!out) throw ConfigError("write failed for " + path);
}

/// Reads a ledger written by write_ledger, or any CSV with at least the
/// columns dataset,scheme,rho_plus,rho_minus,trial,accuracy,am (the baseline
/// import schema). Missing optional columns stay undefined.
inline std::vector<TrialResult> read_ledger(const std::string& path) {
  const auto rows = detail::read_keyed_csv(
      path, {"dataset", "scheme", "rho_plus", "rho_minus", "trial", "accuracy", "am"});
  std::vector<TrialResult> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = path + " row " + std::to_string(i + 1);
    auto opt = [&](const char* key) {
      auto it = row.find(key);
      return it == row.end() ? kUndefined : detail::parse_double(it->second, where);
    };
    TrialResult r;
    r.dataset = row.at("dataset");
    r.scheme = row.at("scheme");
    r.rates = {detail::parse_double(row.at("rho_plus"), where),
               detail::parse_double(row.at("rho_minus"), where)};
    try {
      r.trial_index = std::stoi(row.at("trial"));
    } catch (const std::exception&) {
      throw FormatError(where + ": bad trial index '" + row.at("trial") + "'");
    }
    r.accuracy = detail::parse_double(row.at("accuracy"), where);
    r.am = detail::parse_double(row.at("am"), where);
    r.tpr = opt("tpr");
    r.tnr = opt("tnr");
    const double rt = opt("runtime_seconds");
    r.runtime_seconds = std::isnan(rt) ? 0.0 : rt;
    if (auto it = row.find("status"); it != row.end()) r.status = it->second;
    if (auto it = row.find("error"); it != row.end()) r.error = it->second;
    r.noisy_positive_fraction = opt("noisy_pos_fraction");
    r.generated_positive_fraction = opt("generated_pos_fraction");
    r.clean_positive_fraction = opt("clean_pos_fraction");
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace ccngan::eval

#endif  // CCNGAN_EVAL_HPP
