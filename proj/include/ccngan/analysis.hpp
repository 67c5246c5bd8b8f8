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

#ifndef CCNGAN_ANALYSIS_HPP
#define CCNGAN_ANALYSIS_HPP

#include "ccngan/common.hpp"
#include "ccngan/noise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

/// KL divergence between a clean label distribution and its label-noise
/// corrupted counterpart, both as a function of the in-class probability
/// eta(x) = P(Y=1|x). The joint KL is E_X[KL(Bern(eta) || Bern(eta~))] since
/// the feature marginal is shared. All values are in nats.
namespace ccngan::analysis {

using noise::NoiseRates;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// KL(Bern(p) || Bern(q)) with 0 log 0 = 0; +inf on support mismatch.
inline double bernoulli_kl(double p, double q) {
  auto term = [](double a, double b) {
    if (a == 0.0) return 0.0;
    if (b == 0.0) return kInf;
    return a * std::log(a / b);
  };
  return term(p, q) + term(1.0 - p, 1.0 - q);
}

inline void check_eta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("eta must lie in [0,1]");
}

/// SLN: eta~ = (1 - 2 rho) eta + rho.
inline double kl_sln_pointwise(double eta, double rho) {
  check_eta(eta);
  if (!(rho >= 0.0 && rho < 0.5)) throw DomainError("SLN rho must lie in [0, 0.5)");
  return bernoulli_kl(eta, (1.0 - 2.0 * rho) * eta + rho);
}

/// d/d rho of kl_sln_pointwise:
///   rho (1-2eta)^2 / ((eta + rho(1-2eta)) (1 - eta - rho(1-2eta))).
inline double kl_sln_derivative(double eta, double rho) {
  check_eta(eta);
  const double s = 1.0 - 2.0 * eta;
  const double d1 = eta + rho * s;
  const double d2 = 1.0 - eta - rho * s;
  if (!(d1 > 0.0) || !(d2 > 0.0)) {
    throw DomainError("kl_sln_derivative: non-positive denominator");
  }
  return rho * s * s / (d1 * d2);
}

/// CCN: eta~ = (1 - rho+ - rho-) eta + rho-. Evaluated through the direct
/// Bernoulli form; both log arguments of the expanded form must be positive.
inline double kl_ccn_pointwise(double eta, const NoiseRates& rates) {
  check_eta(eta);
  const double et = noise::corrupted_eta(eta, rates);
  if ((eta > 0.0 && !(et > 0.0)) || (eta < 1.0 && !(et < 1.0))) {
    throw DomainError("kl_ccn_pointwise: log argument is not positive");
  }
  return bernoulli_kl(eta, et);
}

struct CcnPartials {
  double d_rho_plus = 0.0;
  double d_rho_minus = 0.0;
  double total_diag = 0.0;  // directional derivative along (1, 1)
};

/// With A = 1 - rho+ - rho- (1 - 1/eta) = eta~/eta and
///      B = 1 - rho- + rho+ eta/(1 - eta) = (1 - eta~)/(1 - eta):
///   dKL/drho+ = eta (1/A - 1/B),  dKL/drho- = (1 - eta) (1/B - 1/A),
///   along (1,1): (2eta - 1)(eta rho+ - (1-eta) rho-) / (eta (1-eta) A B).
/// Requires eta in (0, 1).
inline CcnPartials kl_ccn_partials(double eta, const NoiseRates& rates) {
  if (!(eta > 0.0 && eta < 1.0)) throw DomainError("kl_ccn_partials: eta must lie in (0,1)");
  const double rp = rates.rho_plus;
  const double rm = rates.rho_minus;
  const double a = 1.0 - rp - rm * (1.0 - 1.0 / eta);
  const double b = 1.0 - rm + rp * (eta / (1.0 - eta));
  if (!(a > 0.0) || !(b > 0.0)) {
    throw DomainError("kl_ccn_partials: log argument is not positive");
  }
  CcnPartials p;
  p.d_rho_plus = eta * (1.0 / a - 1.0 / b);
  p.d_rho_minus = (1.0 - eta) * (1.0 / b - 1.0 / a);
  p.total_diag = (2.0 * eta - 1.0) * (eta * rp - (1.0 - eta) * rm) /
                 (eta * (1.0 - eta) * a * b);
  return p;
}

// ---------------------------------------------------------------------------
// Expectations over eta models

/// Either a finite weighted set of eta atoms (exact mode) or a feature
/// sampler plus eta(x) (Monte-Carlo mode).
struct EtaModel {
  enum class Mode { empirical, sampler };
  Mode mode = Mode::empirical;
  std::string id = "eta";

  std::vector<double> atoms;
  std::vector<double> weights;

  std::function<Vector(Rng&)> sample_features;
  std::function<double(const Vector&)> eta;
  std::size_t n_samples = 100000;
  std::uint64_t seed = 0;

  static EtaModel empirical(std::vector<double> atoms, std::vector<double> weights = {},
                            std::string id = "empirical") {
    EtaModel m;
    m.mode = Mode::empirical;
    m.id = std::move(id);
    if (weights.empty()) weights.assign(atoms.size(), 1.0 / static_cast<double>(atoms.size()));
    m.atoms = std::move(atoms);
    m.weights = std::move(weights);
    m.validate();
    return m;
  }

  static EtaModel sampler(std::function<Vector(Rng&)> features,
                          std::function<double(const Vector&)> eta_fn,
                          std::size_t n_samples = 100000, std::uint64_t seed = 0,
                          std::string id = "sampler") {
    EtaModel m;
    m.mode = Mode::sampler;
    m.id = std::move(id);
    m.sample_features = std::move(features);
    m.eta = std::move(eta_fn);
    m.n_samples = n_samples;
    m.seed = seed;
    m.validate();
    return m;
  }

  void validate() const {
    if (mode == Mode::empirical) {
      if (atoms.empty() || atoms.size() != weights.size()) {
        throw ConfigError("eta model: need equally many atoms and weights");
      }
      double s = 0.0;
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        check_eta(atoms[i]);
        if (!(weights[i] >= 0.0)) throw ConfigError("eta model: negative weight");
        s += weights[i];
      }
      if (std::abs(s - 1.0) > 1e-9) throw ConfigError("eta model: weights must sum to 1");
    } else {
      if (!sample_features || !eta) throw ConfigError("eta model: sampler mode needs callables");
      if (n_samples < 2) throw ConfigError("eta model: need at least 2 samples");
    }
  }

  /// Draws (or returns) the eta values with their weights.
  std::pair<std::vector<double>, std::vector<double>> materialize() const {
    if (mode == Mode::empirical) return {atoms, weights};
    Rng rng(seed);
    std::vector<double> e(n_samples);
    for (auto& v : e) {
      v = eta(sample_features(rng));
      check_eta(v);
    }
    return {e, std::vector<double>(n_samples, 1.0 / static_cast<double>(n_samples))};
  }
};

struct KlEstimate {
  double value = 0.0;      // nats
  double std_error = 0.0;  // 0 in exact mode
  std::size_t n_samples = 0;
  std::size_t infinite_atoms = 0;
};

namespace detail {

inline KlEstimate weighted_mean(const EtaModel& model,
                                const std::function<double(double)>& f) {
  const auto [eta, w] = model.materialize();
  KlEstimate est;
  est.n_samples = eta.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    const double v = f(eta[i]);
    if (std::isinf(v)) {
      ++est.infinite_atoms;
      continue;
    }
    mean += w[i] * v;
  }
  if (est.infinite_atoms > 0) {
    est.value = kInf;
    return est;
  }
  est.value = mean;
  if (model.mode == EtaModel::Mode::sampler) {
    double ss = 0.0;
    for (double e : eta) ss += (f(e) - mean) * (f(e) - mean);
    const double n = static_cast<double>(eta.size());
    est.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return est;
}

}  // namespace detail

inline KlEstimate kl_sln_expectation(const EtaModel& model, double rho) {
  model.validate();
  return detail::weighted_mean(model, [rho](double e) { return kl_sln_pointwise(e, rho); });
}

inline KlEstimate kl_ccn_expectation(const EtaModel& model, const NoiseRates& rates) {
  model.validate();
  return detail::weighted_mean(model,
                               [&rates](double e) { return kl_ccn_pointwise(e, rates); });
}

// ---------------------------------------------------------------------------
// Monotonicity checks

enum class Monotonicity { strictly_increasing, constant_degenerate, vacuous, not_increasing };

inline std::string_view to_string(Monotonicity m) {
  switch (m) {
    case Monotonicity::strictly_increasing: return "strictly increasing";
    case Monotonicity::constant_degenerate: return "constant (degenerate)";
    case Monotonicity::vacuous: return "vacuous";
    case Monotonicity::not_increasing: return "not increasing";
  }
  return "not increasing";
}

struct MonotonicityReport {
  Monotonicity verdict = Monotonicity::vacuous;
  std::vector<double> rho_grid;
  std::vector<double> kl;
  double min_gap = kInf;  // smallest successive difference
};

inline MonotonicityReport check_sln_monotonicity(const EtaModel& model,
                                                 const std::vector<double>& rho_grid) {
  for (std::size_t i = 0; i < rho_grid.size(); ++i) {
    if (!(rho_grid[i] > 0.0 && rho_grid[i] < 0.5)) {
      throw ConfigError("rho grid values must lie in (0, 0.5)");
    }
    if (i > 0 && !(rho_grid[i] > rho_grid[i - 1])) {
      throw ConfigError("rho grid must be strictly increasing");
    }
  }
  MonotonicityReport rep;
  rep.rho_grid = rho_grid;
  if (rho_grid.size() < 2) {
    for (double r : rho_grid) rep.kl.push_back(kl_sln_expectation(model, r).value);
    rep.verdict = Monotonicity::vacuous;
    return rep;
  }
  bool all_zero = true;
  for (double r : rho_grid) {
    rep.kl.push_back(kl_sln_expectation(model, r).value);
    all_zero = all_zero && rep.kl.back() == 0.0;
  }
  for (std::size_t i = 1; i < rep.kl.size(); ++i) {
    rep.min_gap = std::min(rep.min_gap, rep.kl[i] - rep.kl[i - 1]);
  }
  if (all_zero) {
    rep.verdict = Monotonicity::constant_degenerate;
  } else {
    rep.verdict = rep.min_gap > 0.0 ? Monotonicity::strictly_increasing
                                    : Monotonicity::not_increasing;
  }
  return rep;
}

enum class SearchDirection { rho_plus, rho_minus, diagonal };

inline std::string_view to_string(SearchDirection d) {
  switch (d) {
    case SearchDirection::rho_plus: return "rho_plus";
    case SearchDirection::rho_minus: return "rho_minus";
    case SearchDirection::diagonal: return "diagonal";
  }
  return "rho_plus";
}

struct CounterexampleSearch {
  double eta_lo = 0.01, eta_hi = 0.99;
  double rho_lo = 0.0, rho_hi = 0.49;
  std::size_t grid_points = 25;   // per axis
  std::size_t random_budget = 0;  // extra random probes after the grid
  std::uint64_t seed = 0;
  // Directions tried, in order; the first negative derivative wins.
  std::vector<SearchDirection> directions{SearchDirection::rho_plus,
                                          SearchDirection::rho_minus,
                                          SearchDirection::diagonal};

  void validate() const {
    if (!(eta_lo > 0.0 && eta_hi < 1.0 && eta_lo <= eta_hi)) {
      throw ConfigError("search: eta bounds must satisfy 0 < lo <= hi < 1");
    }
    if (!(rho_lo >= 0.0 && rho_hi < 1.0 && rho_lo <= rho_hi)) {
      throw ConfigError("search: rho bounds must satisfy 0 <= lo <= hi < 1");
    }
    if (grid_points < 1) throw ConfigError("search: grid_points must be >= 1");
    if (directions.empty()) throw ConfigError("search: no directions");
  }
};

struct Counterexample {
  double eta = 0.0;
  NoiseRates rates;
  SearchDirection direction = SearchDirection::rho_plus;
  double derivative = 0.0;
  std::size_t probes = 0;
};

struct SearchFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Grid (then optional random) search for a point where a partial derivative
/// or the (1,1) directional derivative of the pointwise CCN KL is negative.
inline Counterexample find_ccn_counterexample(const CounterexampleSearch& spec) {
  spec.validate();
  std::size_t probes = 0;
  auto lerp = [](double lo, double hi, std::size_t i, std::size_t n) {
    return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  auto probe = [&](double eta, double rp, double rm) -> std::optional<Counterexample> {
    ++probes;
    const NoiseRates r{rp, rm};
    CcnPartials p;
    try {
      p = kl_ccn_partials(eta, r);
    } catch (const DomainError&) {
      return std::nullopt;
    }
    for (auto d : spec.directions) {
      const double v = d == SearchDirection::rho_plus    ? p.d_rho_plus
                       : d == SearchDirection::rho_minus ? p.d_rho_minus
                                                         : p.total_diag;
      if (v < 0.0) return Counterexample{eta, r, d, v, probes};
    }
    return std::nullopt;
  };
  const std::size_t g = spec.grid_points;
  for (std::size_t i = 0; i < g; ++i) {
    const double eta = lerp(spec.eta_lo, spec.eta_hi, i, g);
    for (std::size_t j = 0; j < g; ++j) {
      const double rp = lerp(spec.rho_lo, spec.rho_hi, j, g);
      for (std::size_t k = 0; k < g; ++k) {
        const double rm = lerp(spec.rho_lo, spec.rho_hi, k, g);
        if (auto w = probe(eta, rp, rm)) return *w;
      }
    }
  }
  Rng rng(spec.seed);
  for (std::size_t t = 0; t < spec.random_budget; ++t) {
    const double eta = uniform(rng, spec.eta_lo, spec.eta_hi);
    const double rp = uniform(rng, spec.rho_lo, spec.rho_hi);
    const double rm = uniform(rng, spec.rho_lo, spec.rho_hi);
    if (auto w = probe(eta, rp, rm)) return *w;
  }
  throw SearchFailure("no negative derivative found in " + std::to_string(probes) +
                      " probes");
}

/// Central finite difference of kl_ccn_pointwise along a direction.
inline double kl_ccn_finite_difference(double eta, const NoiseRates& rates,
                                       SearchDirection dir, double h = 1e-6) {
  const double dp = dir == SearchDirection::rho_minus ? 0.0 : h;
  const double dm = dir == SearchDirection::rho_plus ? 0.0 : h;
  const NoiseRates hi{rates.rho_plus + dp, rates.rho_minus + dm};
  const NoiseRates lo{rates.rho_plus - dp, rates.rho_minus - dm};
  return (kl_ccn_pointwise(eta, hi) - kl_ccn_pointwise(eta, lo)) / (2.0 * h);
}

// ---------------------------------------------------------------------------
// Sweep export

struct SweepRow {
  std::string eta_model_id;
  NoiseRates rates;
  double kl = 0.0;
  double d_plus = 0.0;
  double d_minus = 0.0;
  double total_diag = 0.0;
};

/// Expected KL and expected partials of a model over a list of rate pairs.
/// Atoms at eta in {0,1} contribute to the KL but not to the partials (their
/// partials are not defined through the closed forms).
inline std::vector<SweepRow> sweep(const EtaModel& model, const std::vector<NoiseRates>& grid) {
  model.validate();
  const auto [eta, w] = model.materialize();
  std::vector<SweepRow> rows;
  for (const auto& r : grid) {
    SweepRow row;
    row.eta_model_id = model.id;
    row.rates = r;
    for (std::size_t i = 0; i < eta.size(); ++i) {
      row.kl += w[i] * kl_ccn_pointwise(eta[i], r);
      if (eta[i] > 0.0 && eta[i] < 1.0) {
        const auto p = kl_ccn_partials(eta[i], r);
        row.d_plus += w[i] * p.d_rho_plus;
        row.d_minus += w[i] * p.d_rho_minus;
        row.total_diag += w[i] * p.total_diag;
      }
    }
    rows.push_back(row);
  }
  return rows;
}

/// CSV: eta_model_id,rho_plus,rho_minus,kl,d_plus,d_minus,total_diag
inline void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "eta_model_id,rho_plus,rho_minus,kl,d_plus,d_minus,total_diag\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.eta_model_id.c_str(), r.rates.rho_plus, r.rates.rho_minus, r.kl,
                  r.d_plus, r.d_minus, r.total_diag);
    out << buf;
  }
}

}  // namespace ccngan::analysis

#endif  // CCNGAN_ANALYSIS_HPP
