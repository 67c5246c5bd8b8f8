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

#ifndef CCNGAN_STATS_HPP
#define CCNGAN_STATS_HPP

#include "ccngan/common.hpp"
#include "ccngan/eval.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

/// Friedman rank test over blocks x treatments and the Nemenyi posthoc.
namespace ccngan::stats {

/// Average ranks within one block, rank 1 for the highest score.
inline std::vector<double> rank_descending(const std::vector<double>& scores) {
  const std::size_t k = scores.size();
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<double> ranks(k);
  for (std::size_t i = 0; i < k;) {
    std::size_t j = i;
    while (j + 1 < k && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double avg = (static_cast<double>(i + j) / 2.0) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

struct FriedmanResult {
  double statistic = 0.0;  // tie-corrected chi-square, df = k - 1
  double p_value = 1.0;
  double iman_davenport_f = 0.0;  // df = (k - 1, (k - 1)(N - 1))
  double iman_davenport_p = 1.0;
  std::vector<double> mean_ranks;
  std::size_t n_blocks = 0;
  std::size_t k_treatments = 0;
};

/// scores[b][t]: block b (e.g. a noise setting), treatment t (a scheme).
inline FriedmanResult friedman_test(const std::vector<std::vector<double>>& scores) {
  const std::size_t n = scores.size();
  if (n < 2) throw ConfigError("friedman_test: need >= 2 blocks");
  const std::size_t k = scores.front().size();
  if (k < 2) throw ConfigError("friedman_test: need >= 2 treatments");
  for (const auto& row : scores) {
    if (row.size() != k) throw ConfigError("friedman_test: ragged score matrix");
    for (double v : row) {
      if (!std::isfinite(v)) throw ConfigError("friedman_test: non-finite score");
    }
  }
  FriedmanResult r;
  r.n_blocks = n;
  r.k_treatments = k;
  r.mean_ranks.assign(k, 0.0);
  double tie_sum = 0.0;
  for (const auto& row : scores) {
    const auto ranks = rank_descending(row);
    for (std::size_t t = 0; t < k; ++t) r.mean_ranks[t] += ranks[t];
    std::map<double, std::size_t> groups;
    for (double v : row) ++groups[v];
    for (const auto& [v, c] : groups) {
      const double t = static_cast<double>(c);
      tie_sum += t * t * t - t;
    }
  }
  const double N = static_cast<double>(n);
  const double K = static_cast<double>(k);
  double sum_sq = 0.0;
  for (double& s : r.mean_ranks) {
    sum_sq += s * s;
    s /= N;
  }
  const double correction = 1.0 - tie_sum / (N * K * (K * K - 1.0));
  if (correction <= 0.0) return r;  // every block fully tied
  r.statistic = (12.0 / (N * K * (K + 1.0)) * sum_sq - 3.0 * N * (K + 1.0)) / correction;
  r.statistic = std::max(r.statistic, 0.0);
  boost::math::chi_squared chi(K - 1.0);
  r.p_value = boost::math::cdf(boost::math::complement(chi, r.statistic));

  const double denom = N * (K - 1.0) - r.statistic;
  if (denom <= 0.0) {
    r.iman_davenport_f = std::numeric_limits<double>::infinity();
    r.iman_davenport_p = 0.0;
  } else {
    r.iman_davenport_f = (N - 1.0) * r.statistic / denom;
    boost::math::fisher_f f(K - 1.0, (K - 1.0) * (N - 1.0));
    r.iman_davenport_p = boost::math::cdf(boost::math::complement(f, r.iman_davenport_f));
  }
  return r;
}

/// P(Q > q) for the studentized range of k standard normals with infinite
/// degrees of freedom:
///   P(Q <= q) = k * integral phi(z) [Phi(z) - Phi(z - q)]^(k-1) dz.
/// The survival function is integrated directly to keep small p accurate.
inline double studentized_range_sf(double q, int k) {
  if (k < 2) throw ConfigError("studentized_range_sf: k must be >= 2");
  if (!(q > 0.0)) return 1.0;
  const boost::math::normal norm;
  const double kk = static_cast<double>(k);
  // 1 - k * int phi(z) D(z)^(k-1) dz, with k * int phi(z) Phi(z)^(k-1) dz = 1,
  // is k * int phi(z) [Phi(z)^(k-1) - D(z)^(k-1)] dz.
  auto integrand = [&](double z) {
    const double a = boost::math::cdf(norm, z);
    const double d = boost::math::cdf(boost::math::complement(norm, z - q)) -
                     boost::math::cdf(boost::math::complement(norm, z));
    return boost::math::pdf(norm, z) * (std::pow(a, kk - 1.0) - std::pow(d, kk - 1.0));
  };
  using boost::math::quadrature::gauss_kronrod;
  double sf = 0.0;
  // Split at the bulk of the mass; the integrand vanishes outside [-9, q + 9].
  std::vector<double> pts{-9.0, -3.0, 0.0, 3.0, q, q + 3.0, q + 9.0};
  std::sort(pts.begin(), pts.end());
  // Fixed 61-point rule on pieces of width <= 1; the integrand is smooth on
  // that scale, so no adaptive refinement is needed.
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (pts[i + 1] <= pts[i]) continue;
    const auto pieces = static_cast<int>(std::ceil(pts[i + 1] - pts[i]));
    const double h = (pts[i + 1] - pts[i]) / pieces;
    for (int j = 0; j < pieces; ++j) {
      const double lo = pts[i] + j * h;
      sf += gauss_kronrod<double, 61>::integrate(integrand, lo, lo + h, 0);
    }
  }
  return std::clamp(kk * sf, 0.0, 1.0);
}

/// Pairwise p-values: q = |R_i - R_j| / sqrt(k (k + 1) / (6 N)) and
/// p = P(Q_k > q * sqrt(2)). Symmetric with unit diagonal.
inline std::vector<std::vector<double>> nemenyi_posthoc(const std::vector<double>& mean_ranks,
                                                        std::size_t n_blocks) {
  const std::size_t k = mean_ranks.size();
  if (k < 2) throw ConfigError("nemenyi_posthoc: need >= 2 treatments");
  if (n_blocks < 1) throw ConfigError("nemenyi_posthoc: need >= 1 block");
  const double se = std::sqrt(static_cast<double>(k * (k + 1)) / (6.0 * n_blocks));
  std::vector<std::vector<double>> p(k, std::vector<double>(k, 1.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double q = std::abs(mean_ranks[i] - mean_ranks[j]) / se;
      p[i][j] = p[j][i] =
          studentized_range_sf(q * boost::math::constants::root_two<double>(),
                               static_cast<int>(k));
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Reports from trial ledgers

inline constexpr double kSignificance = 0.1;

struct StatTestReport {
  std::string dataset;
  std::string metric;  // "accuracy" or "am"
  std::vector<std::string> treatments;
  std::vector<std::string> blocks;  // "rho_plus,rho_minus"
  std::vector<std::vector<double>> scores;
  FriedmanResult friedman;
  std::vector<std::vector<double>> pairwise;
  double alpha = kSignificance;
};

/// Blocks are the rate settings present for every treatment; a block's score
/// is the mean over successful trials.
inline StatTestReport build_report(const std::vector<eval::TrialResult>& rows,
                                   const std::string& dataset,
                                   const std::string& metric = "accuracy") {
  if (metric != "accuracy" && metric != "am") {
    throw ConfigError("stats: metric must be accuracy or am");
  }
  std::map<std::pair<double, double>, std::map<std::string, std::vector<double>>> cells;
  std::set<std::string> treatments;
  for (const auto& r : rows) {
    if (r.dataset != dataset || !r.ok()) continue;
    const double v = metric == "accuracy" ? r.accuracy : r.am;
    if (std::isnan(v)) continue;
    cells[{r.rates.rho_plus, r.rates.rho_minus}][r.scheme].push_back(v);
    treatments.insert(r.scheme);
  }
  if (treatments.size() < 2) {
    throw ConfigError("stats: dataset '" + dataset + "': need >=2 treatments");
  }
  StatTestReport rep;
  rep.dataset = dataset;
  rep.metric = metric;
  rep.treatments.assign(treatments.begin(), treatments.end());
  for (const auto& [rates, by_scheme] : cells) {
    if (by_scheme.size() != treatments.size()) continue;
    std::vector<double> row;
    for (const auto& t : rep.treatments) row.push_back(eval::mean_std(by_scheme.at(t)).first);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g,%g", rates.first, rates.second);
    rep.blocks.push_back(buf);
    rep.scores.push_back(std::move(row));
  }
  if (rep.scores.size() < 2) {
    throw ConfigError("stats: dataset '" + dataset +
                      "': need >=2 noise settings shared by all treatments");
  }
  rep.friedman = friedman_test(rep.scores);
  rep.pairwise = nemenyi_posthoc(rep.friedman.mean_ranks, rep.friedman.n_blocks);
  return rep;
}

inline nlohmann::json to_json(const StatTestReport& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (std::size_t i = 0; i < r.treatments.size(); ++i) {
    for (std::size_t j = i + 1; j < r.treatments.size(); ++j) {
      pairs.push_back({{"a", r.treatments[i]},
                       {"b", r.treatments[j]},
                       {"p_value", r.pairwise[i][j]},
                       {"significant", r.pairwise[i][j] < r.alpha}});
    }
  }
  return {{"dataset", r.dataset},
          {"metric", r.metric},
          {"alpha", r.alpha},
          {"n_blocks", r.friedman.n_blocks},
          {"k_treatments", r.friedman.k_treatments},
          {"treatments", r.treatments},
          {"blocks", r.blocks},
          {"scores", r.scores},
          {"friedman_statistic", r.friedman.statistic},
          {"friedman_p", r.friedman.p_value},
          {"friedman_significant", r.friedman.p_value < r.alpha},
          {"iman_davenport_f",
           std::isinf(r.friedman.iman_davenport_f) ? nlohmann::json("inf")
                                                   : nlohmann::json(r.friedman.iman_davenport_f)},
          {"iman_davenport_p", r.friedman.iman_davenport_p},
          {"mean_ranks", r.friedman.mean_ranks},
          {"pairwise_p", r.pairwise},
          {"pairs", pairs}};
}

}  // namespace ccngan::stats

#endif  // CCNGAN_STATS_HPP
