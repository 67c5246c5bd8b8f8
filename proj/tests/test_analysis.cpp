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

#include "ccngan/analysis.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>

namespace {

using namespace ccngan;
using namespace ccngan::analysis;

// Independent Python evaluation of the Bernoulli KL.
constexpr double kSlnAt03_02 = 0.014035966483718021;
constexpr double kCcnAt03_04_02 = 0.0009297194700053288;

EtaModel random_model(Rng& rng, std::size_t atoms) {
  std::vector<double> a(atoms), w(atoms);
  double s = 0.0;
  for (std::size_t i = 0; i < atoms; ++i) {
    a[i] = uniform(rng, 0.0, 1.0);
    w[i] = uniform(rng, 0.1, 1.0);
    s += w[i];
  }
  for (double& v : w) v /= s;
  w.back() = 1.0;
  for (std::size_t i = 0; i + 1 < atoms; ++i) w.back() -= w[i];
  return EtaModel::empirical(a, w);
}

TEST(BernoulliKl, EdgeCases) {
  EXPECT_EQ(bernoulli_kl(0.4, 0.4), 0.0);
  EXPECT_EQ(bernoulli_kl(0.0, 0.0), 0.0);
  EXPECT_NEAR(bernoulli_kl(0.0, 0.1), std::log(1 / 0.9), 1e-15);
  EXPECT_EQ(bernoulli_kl(0.5, 0.0), kInf);
  EXPECT_EQ(bernoulli_kl(0.5, 1.0), kInf);
}

TEST(Sln, ReferenceValue) {
  EXPECT_NEAR(kl_sln_pointwise(0.3, 0.2), kSlnAt03_02, 1e-15);
  EXPECT_EQ(kl_sln_pointwise(0.3, 0.0), 0.0);
  EXPECT_THROW(kl_sln_pointwise(0.3, 0.5), DomainError);
  EXPECT_THROW(kl_sln_pointwise(1.3, 0.1), DomainError);
}

TEST(Sln, DerivativeMatchesFiniteDifferencesAndIsBounded) {
  Rng rng(21);
  for (int t = 0; t < 500; ++t) {
    const double eta = uniform(rng, 0.0, 1.0);
    const double rho = uniform(rng, 0.01, 0.49);
    const double d = kl_sln_derivative(eta, rho);
    const double fd =
        (kl_sln_pointwise(eta, rho + 1e-6) - kl_sln_pointwise(eta, rho - 1e-6)) / 2e-6;
    EXPECT_NEAR(d, fd, 1e-6 * (1.0 + std::abs(d))) << eta << " " << rho;
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0 / rho);
  }
  EXPECT_EQ(kl_sln_derivative(0.5, 0.3), 0.0);
}

TEST(Ccn, ReferenceValueAndDomain) {
  EXPECT_NEAR(kl_ccn_pointwise(0.3, {0.4, 0.2}), kCcnAt03_04_02, 1e-15);
  EXPECT_THROW(kl_ccn_pointwise(0.3, {1.0, 0.0}), DomainError);
  EXPECT_THROW(kl_ccn_partials(0.0, {0.1, 0.1}), DomainError);
}

TEST(Ccn, DiagonalReducesToSymmetricNoise) {
  Rng rng(22);
  for (int t = 0; t < 500; ++t) {
    const double eta = uniform(rng, 0.0, 1.0);
    const double rho = uniform(rng, 0.0, 0.49);
    EXPECT_NEAR(kl_ccn_pointwise(eta, {rho, rho}), kl_sln_pointwise(eta, rho), 1e-13);
  }
}

TEST(Ccn, SwappingClassesAndRatesLeavesKlUnchanged) {
  Rng rng(23);
  for (int t = 0; t < 500; ++t) {
    const double eta = uniform(rng, 0.0, 1.0);
    const NoiseRates r{uniform(rng, 0.0, 0.49), uniform(rng, 0.0, 0.49)};
    EXPECT_NEAR(kl_ccn_pointwise(eta, r), kl_ccn_pointwise(1 - eta, {r.rho_minus, r.rho_plus}),
                1e-12);
  }
}

TEST(Ccn, PartialsMatchFiniteDifferences) {
  Rng rng(24);
  for (int t = 0; t < 500; ++t) {
    const double eta = uniform(rng, 0.02, 0.98);
    const NoiseRates r{uniform(rng, 0.01, 0.48), uniform(rng, 0.01, 0.48)};
    const auto p = kl_ccn_partials(eta, r);
    EXPECT_LT(support::relative_error(
                  p.d_rho_plus, kl_ccn_finite_difference(eta, r, SearchDirection::rho_plus)),
              1e-5);
    EXPECT_LT(support::relative_error(
                  p.d_rho_minus, kl_ccn_finite_difference(eta, r, SearchDirection::rho_minus)),
              1e-5);
    EXPECT_LT(support::relative_error(
                  p.total_diag, kl_ccn_finite_difference(eta, r, SearchDirection::diagonal)),
              1e-5);
    EXPECT_NEAR(p.total_diag, p.d_rho_plus + p.d_rho_minus,
                1e-10 * (1 + std::abs(p.total_diag)));
  }
}

TEST(Ccn, RaisingOneRateCanLowerTheDivergence) {
  const auto p = kl_ccn_partials(0.3, {0.1, 0.3});
  EXPECT_LT(p.d_rho_plus, 0.0);
  EXPECT_GT(p.d_rho_minus, 0.0);
}

TEST(Ccn, DiagonalDerivativeTakesBothSigns) {
  EXPECT_GT(kl_ccn_partials(0.8, {0.3, 0.1}).total_diag, 0.0);
  EXPECT_LT(kl_ccn_partials(0.8, {0.05, 0.4}).total_diag, 0.0);
}

TEST(Expectation, ExactModeIsTheWeightedAverage) {
  const auto m = EtaModel::empirical({0.3, 0.7}, {0.5, 0.5});
  const auto e = kl_sln_expectation(m, 0.2);
  EXPECT_NEAR(e.value, kSlnAt03_02, 1e-15);
  EXPECT_EQ(e.std_error, 0.0);
  const auto u = EtaModel::empirical({0.2, 0.4, 0.9});
  EXPECT_NEAR(kl_ccn_expectation(u, {0.1, 0.2}).value,
              (kl_ccn_pointwise(0.2, {0.1, 0.2}) + kl_ccn_pointwise(0.4, {0.1, 0.2}) +
               kl_ccn_pointwise(0.9, {0.1, 0.2})) / 3.0,
              1e-15);
}

TEST(Expectation, SamplerModeIsSeededAndCarriesAnError) {
  auto feats = [](Rng& r) {
    Vector v(1);
    v(0) = standard_normal(r);
    return v;
  };
  auto eta = [](const Vector& x) { return 1.0 / (1.0 + std::exp(-2.0 * x(0))); };
  const auto m = EtaModel::sampler(feats, eta, 20000, 5);
  const auto a = kl_sln_expectation(m, 0.3);
  const auto b = kl_sln_expectation(m, 0.3);
  EXPECT_EQ(a.value, b.value);
  EXPECT_GT(a.std_error, 0.0);
  const auto big = kl_sln_expectation(EtaModel::sampler(feats, eta, 400000, 6), 0.3);
  EXPECT_NEAR(a.value, big.value, 4.0 * std::hypot(a.std_error, big.std_error));
}

TEST(Expectation, ModelValidation) {
  EXPECT_THROW(EtaModel::empirical({0.2, 0.3}, {0.5}), ConfigError);
  EXPECT_THROW(EtaModel::empirical({0.2, 0.3}, {0.5, 0.6}), ConfigError);
  EXPECT_THROW(EtaModel::empirical({1.2}), DomainError);
}

TEST(Monotonicity, RandomModelsAreStrictlyIncreasing) {
  Rng rng(25);
  std::vector<double> grid;
  for (int i = 1; i <= 9; ++i) grid.push_back(0.05 * i);
  for (int t = 0; t < 100; ++t) {
    const auto m = random_model(rng, 1 + uniform_index(rng, 10));
    const auto rep = check_sln_monotonicity(m, grid);
    if (rep.verdict == Monotonicity::constant_degenerate) continue;
    EXPECT_EQ(rep.verdict, Monotonicity::strictly_increasing);
    EXPECT_GT(rep.min_gap, 0.0);
  }
}

TEST(Monotonicity, DegenerateVacuousAndInvalidGrids) {
  const auto half = EtaModel::empirical({0.5});
  EXPECT_EQ(check_sln_monotonicity(half, {0.1, 0.2, 0.3}).verdict,
            Monotonicity::constant_degenerate);
  const auto m = EtaModel::empirical({0.2});
  EXPECT_EQ(check_sln_monotonicity(m, {}).verdict, Monotonicity::vacuous);
  EXPECT_EQ(check_sln_monotonicity(m, {0.2}).verdict, Monotonicity::vacuous);
  EXPECT_THROW(check_sln_monotonicity(m, {0.2, 0.1}), ConfigError);
  EXPECT_THROW(check_sln_monotonicity(m, {0.0, 0.1}), ConfigError);
  EXPECT_THROW(check_sln_monotonicity(m, {0.1, 0.5}), ConfigError);
}

TEST(Counterexample, DefaultSearchFindsAVerifiedWitness) {
  const auto w = find_ccn_counterexample({});
  EXPECT_LT(w.derivative, 0.0);
  const double fd = kl_ccn_finite_difference(w.eta, w.rates, w.direction);
  EXPECT_LT(fd, 0.0);
  EXPECT_LT(support::relative_error(w.derivative, fd), 1e-5);
  EXPECT_GT(w.probes, 0u);
}

TEST(Counterexample, RandomProbesAfterTheGrid) {
  CounterexampleSearch s;
  s.grid_points = 1;  // single probe at (0.01, 0, 0), derivative 0
  s.random_budget = 1000;
  s.seed = 3;
  const auto w = find_ccn_counterexample(s);
  EXPECT_GT(w.probes, 1u);
  EXPECT_LT(kl_ccn_finite_difference(w.eta, w.rates, w.direction), 0.0);
}

TEST(Counterexample, FailsWhereNoWitnessExists) {
  CounterexampleSearch s;
  s.eta_lo = s.eta_hi = 0.5;
  s.directions = {SearchDirection::diagonal};
  EXPECT_THROW(find_ccn_counterexample(s), SearchFailure);
  s.eta_lo = 0.0;
  EXPECT_THROW(find_ccn_counterexample(s), ConfigError);
}

TEST(Sweep, RowsAndCsv) {
  const auto m = EtaModel::empirical({0.0, 0.3, 0.8}, {0.2, 0.5, 0.3}, "toy");
  const std::vector<NoiseRates> grid{{0.1, 0.1}, {0.2, 0.4}, {0.45, 0.0}};
  const auto rows = sweep(m, grid);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_NEAR(rows[i].kl, kl_ccn_expectation(m, grid[i]).value, 1e-15);
    const auto p3 = kl_ccn_partials(0.3, grid[i]);
    const auto p8 = kl_ccn_partials(0.8, grid[i]);
    EXPECT_NEAR(rows[i].d_plus, 0.5 * p3.d_rho_plus + 0.3 * p8.d_rho_plus, 1e-14);
  }
  const auto dir = support::temp_dir("sweep");
  const auto path = (dir / "kl.csv").string();
  write_sweep_csv(rows, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "eta_model_id,rho_plus,rho_minus,kl,d_plus,d_minus,total_diag");
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 4), "toy,");
  const double kl = std::stod(line.substr(line.find(',', line.find(',', 4) + 1) + 1));
  EXPECT_EQ(kl, rows[0].kl);
  std::filesystem::remove_all(dir);
}

}  // namespace
