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

// ccngan: synth | run | kl | stats

#include "ccngan/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config_path, "experiment config (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--seed", c.seed, "master seed override");
  cmd->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "output directory override");
}

// Precedence: flags, then environment, then the config file.
ccngan::config::ExperimentConfig load_config(const Common& c) {
  ccngan::config::ExperimentConfig cfg;
  if (!c.config_path.empty()) cfg = ccngan::config::load(c.config_path);
  ccngan::config::apply_env_overrides(cfg);
  if (c.seed) cfg.seed = *c.seed;
  if (c.jobs) cfg.jobs = *c.jobs;
  if (!c.out.empty()) cfg.out_dir = c.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-noise cleaning with Wasserstein GANs"};
  app.require_subcommand(1);

  Common synth_opts, run_opts, kl_opts;
  auto* synth = app.add_subcommand("synth", "write a synthetic train/test pair as CSV");
  add_common(synth, synth_opts, false);
  auto* run = app.add_subcommand("run", "run the trial grid of an experiment config");
  add_common(run, run_opts, true);
  auto* kl = app.add_subcommand("kl", "KL-divergence checks and sweep");
  add_common(kl, kl_opts, false);

  std::vector<std::string> ledgers, baselines;
  std::string metric = "accuracy";
  std::string stats_out = "out";
  auto* st = app.add_subcommand("stats", "Friedman and Nemenyi tests over trial ledgers");
  st->add_option("--ledger", ledgers, "trial ledger CSV (repeatable)");
  st->add_option("--baseline", baselines, "imported baseline scores CSV (repeatable)");
  st->add_option("--metric", metric, "accuracy or am")
      ->check(CLI::IsMember({"accuracy", "am"}));
  st->add_option("--out", stats_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return ccngan::cli::cmd_synth(load_config(synth_opts), std::cout, std::cerr);
    if (*run) return ccngan::cli::cmd_run(load_config(run_opts), std::cout, std::cerr);
    if (*kl) return ccngan::cli::cmd_kl(load_config(kl_opts), std::cout, std::cerr);
    if (*st) {
      if (const char* o = std::getenv("CCNGAN_OUT_DIR"); o && *o && stats_out == "out") {
        stats_out = o;
      }
      return ccngan::cli::cmd_stats(ledgers, baselines, metric, stats_out, std::cout,
                                    std::cerr);
    }
  } catch (const ccngan::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return ccngan::cli::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ccngan::cli::kExitFailures;
  }
  return ccngan::cli::kExitOk;
}
