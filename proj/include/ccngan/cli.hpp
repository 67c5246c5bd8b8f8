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

#ifndef CCNGAN_CLI_HPP
#define CCNGAN_CLI_HPP

#include "ccngan/analysis.hpp"
#include "ccngan/config.hpp"
#include "ccngan/eval.hpp"
#include "ccngan/stats.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

/// Command implementations behind the `ccngan` executable. Each returns a
/// process exit code: 0 success, 1 trial/check failures, 2 config error.
namespace ccngan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailures = 1;
inline constexpr int kExitConfig = 2;

namespace fs = std::filesystem;

/// Output layout under out_dir.
struct OutLayout {
  fs::path root;
  fs::path configs() const { return root / "configs"; }
  fs::path ledgers() const { return root / "ledgers"; }
  fs::path logs() const { return root / "logs"; }
  fs::path reports() const { return root / "reports"; }
  fs::path checkpoints() const { return root / "checkpoints"; }
  fs::path data() const { return root / "data"; }

  void create() const {
    for (const auto& p : {configs(), ledgers(), logs(), reports(), checkpoints()}) {
      fs::create_directories(p);
    }
  }
};

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << text;
}

inline void report_errors(const std::vector<std::string>& errors, std::ostream& err) {
  err << "config error" << (errors.size() > 1 ? "s" : "") << ":\n";
  for (const auto& e : errors) err << "  - " << e << '\n';
}

/// Writes <out>/data/SD{n}-train.csv and SD{n}-test.csv.
inline int cmd_synth(const config::ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.dataset.kind != config::DatasetSelector::Kind::synthetic) {
    report_errors({"synth needs dataset.kind = synthetic"}, err);
    return kExitConfig;
  }
  try {
    cfg.dataset.synthetic.validate();
  } catch (const std::exception& e) {
    report_errors({e.what()}, err);
    return kExitConfig;
  }
  const OutLayout layout{cfg.out_dir};
  try {
    fs::create_directories(layout.data());
    const auto [train, test] = data::generate_synthetic(cfg.dataset.synthetic);
    const auto stem = config::dataset_name(cfg.dataset);
    const auto train_path = layout.data() / (stem + "-train.csv");
    const auto test_path = layout.data() / (stem + "-test.csv");
    write_csv(train, train_path.string());
    write_csv(test, test_path.string());
    out << train_path.string() << " (" << train.size() << " rows)\n"
        << test_path.string() << " (" << test.size() << " rows)\n";
  } catch (const std::exception& e) {
    err << "synth: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

/// Full trial grid: ledger, per-setting summary, training logs.
inline int cmd_run(const config::ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto errors = config::validate(cfg);
  if (!errors.empty()) {
    report_errors(errors, err);
    return kExitConfig;
  }
  eval::ExperimentSpec spec;
  try {
    std::tie(spec.train, spec.test) = config::load_dataset(cfg.dataset);
  } catch (const std::exception& e) {
    report_errors({e.what()}, err);
    return kExitConfig;
  }
  const OutLayout layout{cfg.out_dir};
  spec.dataset_name = config::dataset_name(cfg.dataset);
  spec.split = cfg.split;
  spec.rates = cfg.rates;
  spec.schemes = cfg.schemes;
  spec.wgan = cfg.wgan;
  spec.n_it_override = cfg.n_it;
  spec.model_m = cfg.model_m;
  spec.trials = cfg.trials;
  spec.master_seed = cfg.seed;
  spec.jobs = cfg.jobs;
  spec.log_dir = layout.logs().string();
  spec.checkpoint_dir = layout.checkpoints().string();
  try {
    spec.validate();
  } catch (const std::exception& e) {
    report_errors({e.what()}, err);
    return kExitConfig;
  }

  layout.create();
  write_text(layout.configs() / (cfg.name + ".json"), config::serialize(cfg));
  const auto results = eval::run_trials(spec);
  eval::write_ledger(results, (layout.ledgers() / (cfg.name + ".csv")).string());

  nlohmann::json summary = nlohmann::json::array();
  for (const auto& s : eval::summarize(results)) summary.push_back(eval::to_json(s));
  write_text(layout.reports() / (cfg.name + "_summary.json"), summary.dump(2) + "\n");

  std::size_t failed = 0;
  for (const auto& r : results) {
    if (!r.ok()) {
      ++failed;
      err << "trial failed: " << r.scheme << " rates (" << r.rates.rho_plus << ","
          << r.rates.rho_minus << ") trial " << r.trial_index << ": " << r.error << '\n';
    }
  }
  char buf[256];
  for (const auto& s : eval::summarize(results)) {
    std::snprintf(buf, sizeof buf, "%-18s %-8s (%.2f,%.2f)  acc %.4f +- %.4f  am %.4f +- %.4f\n",
                  s.scheme.c_str(), s.dataset.c_str(), s.rates.rho_plus, s.rates.rho_minus,
                  s.accuracy_mean, s.accuracy_std, s.am_mean, s.am_std);
    out << buf;
  }
  out << results.size() << " trials, " << failed << " failed\n";
  return failed ? kExitFailures : kExitOk;
}

/// Eta model for the KL command.
inline analysis::EtaModel make_eta_model(const config::ExperimentConfig& cfg) {
  const auto& k = cfg.kl;
  if (k.eta_model == "atoms") {
    return analysis::EtaModel::empirical(k.atoms, k.weights, "atoms");
  }
  if (k.eta_model != "synthetic_posterior") {
    throw ConfigError("kl.eta_model must be 'synthetic_posterior' or 'atoms'");
  }
  const data::SyntheticSpec spec = cfg.dataset.synthetic;
  spec.validate();
  const auto means = data::synthetic_means(spec);
  const double sd = std::sqrt(spec.variance);
  auto sampler = [means, spec, sd](Rng& rng) {
    const bool pos = bernoulli(rng, spec.bern_p_label);
    const Vector& mu = pos ? means.plus : means.minus;
    Vector x(mu.size());
    for (Eigen::Index j = 0; j < mu.size(); ++j) x(j) = mu(j) + sd * standard_normal(rng);
    return x;
  };
  auto eta = [means, spec](const Vector& x) {
    return data::synthetic_posterior(means, spec.variance, spec.bern_p_label, x);
  };
  return analysis::EtaModel::sampler(sampler, eta, k.n_samples, derive_seed(cfg.seed, 301),
                                     "SD" + std::to_string(spec.n) + "-posterior");
}

/// SLN monotonicity check, CCN counterexample search and the sweep CSV.
inline int cmd_kl(const config::ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  analysis::EtaModel model;
  try {
    cfg.kl.search.validate();
    model = make_eta_model(cfg);
    // Materialize once; the checks below reuse the exact atoms.
    const auto [eta, w] = model.materialize();
    model = analysis::EtaModel::empirical(eta, w, model.id);
  } catch (const std::exception& e) {
    report_errors({e.what()}, err);
    return kExitConfig;
  }
  const OutLayout layout{cfg.out_dir};
  int code = kExitOk;
  try {
    fs::create_directories(layout.reports());
    const auto mono = analysis::check_sln_monotonicity(model, cfg.kl.rho_grid);
    const bool mono_ok = mono.verdict != analysis::Monotonicity::not_increasing;

    std::vector<noise::NoiseRates> grid = cfg.kl.ccn_grid;
    if (grid.empty()) {
      for (double rp : cfg.kl.rho_grid) {
        for (double rm : cfg.kl.rho_grid) grid.push_back({rp, rm});
      }
    }
    analysis::write_sweep_csv(analysis::sweep(model, grid),
                              (layout.reports() / "kl_sweep.csv").string());

    std::ostringstream block;
    block << "eta model: " << model.id << " (" << model.atoms.size() << " atoms)\n";
    block << "SLN monotonicity: " << analysis::to_string(mono.verdict) << " - "
          << (mono_ok ? "PASS" : "FAIL") << '\n';
    for (std::size_t i = 0; i < mono.kl.size(); ++i) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "  rho=%.4f  kl=%.10g\n", mono.rho_grid[i], mono.kl[i]);
      block << buf;
    }
    if (mono.rho_grid.size() >= 2) block << "  min gap " << mono.min_gap << '\n';
    try {
      const auto w = analysis::find_ccn_counterexample(cfg.kl.search);
      const double fd = analysis::kl_ccn_finite_difference(w.eta, w.rates, w.direction);
      const bool confirmed = (fd < 0.0) == (w.derivative < 0.0);
      char buf[256];
      std::snprintf(buf, sizeof buf,
                    "CCN non-monotonicity: witness eta=%.6g rho+=%.6g rho-=%.6g "
                    "d/d%s=%.6g (finite difference %.6g) - %s\n",
                    w.eta, w.rates.rho_plus, w.rates.rho_minus,
                    std::string(analysis::to_string(w.direction)).c_str(), w.derivative, fd,
                    confirmed ? "PASS" : "FAIL");
      block << buf;
      if (!confirmed) code = kExitFailures;
    } catch (const analysis::SearchFailure& e) {
      block << "CCN non-monotonicity: " << e.what() << " - FAIL\n";
      code = kExitFailures;
    }
    if (!mono_ok) code = kExitFailures;
    write_text(layout.reports() / "kl_verdicts.txt", block.str());
    out << block.str();
  } catch (const ConfigError& e) {
    report_errors({e.what()}, err);
    return kExitConfig;
  }
  return code;
}

/// Friedman + Nemenyi per dataset over one or more ledgers and optional
/// baseline CSVs (same required columns).
inline int cmd_stats(const std::vector<std::string>& ledgers,
                     const std::vector<std::string>& baselines, const std::string& metric,
                     const std::string& out_dir, std::ostream& out, std::ostream& err) {
  std::vector<eval::TrialResult> rows;
  try {
    if (ledgers.empty() && baselines.empty()) throw ConfigError("stats: no input ledgers");
    for (const auto& p : ledgers) {
      auto r = eval::read_ledger(p);
      rows.insert(rows.end(), r.begin(), r.end());
    }
    for (const auto& p : baselines) {
      auto r = eval::read_ledger(p);
      rows.insert(rows.end(), r.begin(), r.end());
    }
  } catch (const std::exception& e) {
    report_errors({e.what()}, err);
    return kExitConfig;
  }
  std::vector<std::string> datasets;
  for (const auto& r : rows) {
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) {
      datasets.push_back(r.dataset);
    }
  }
  std::vector<stats::StatTestReport> reports;
  try {
    for (const auto& d : datasets) reports.push_back(stats::build_report(rows, d, metric));
  } catch (const std::exception& e) {
    report_errors({e.what()}, err);
    return kExitConfig;
  }
  const OutLayout layout{out_dir};
  fs::create_directories(layout.reports());
  for (const auto& rep : reports) {
    write_text(layout.reports() / ("stats_" + rep.dataset + "_" + metric + ".json"),
               stats::to_json(rep).dump(2) + "\n");
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s (%s): Friedman chi2 %.6g p %.6g%s, %zu blocks x %zu treatments\n",
                  rep.dataset.c_str(), metric.c_str(), rep.friedman.statistic,
                  rep.friedman.p_value, rep.friedman.p_value < rep.alpha ? " *" : "",
                  rep.friedman.n_blocks, rep.friedman.k_treatments);
    out << buf;
    for (std::size_t i = 0; i < rep.treatments.size(); ++i) {
      for (std::size_t j = i + 1; j < rep.treatments.size(); ++j) {
        std::snprintf(buf, sizeof buf, "  %-18s vs %-18s p %.6f%s\n", rep.treatments[i].c_str(),
                      rep.treatments[j].c_str(), rep.pairwise[i][j],
                      rep.pairwise[i][j] < rep.alpha ? " *" : "");
        out << buf;
      }
    }
  }
  return kExitOk;
}

}  // namespace ccngan::cli

#endif  // CCNGAN_CLI_HPP
