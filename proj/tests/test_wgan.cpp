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

#include "ccngan/data.hpp"
#include "ccngan/wgan.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

namespace {

using namespace ccngan;
using nn::Activation;

constexpr double kLn2 = 0.6931471805599453;
constexpr double kEntropyAt09 = 0.3250829733914482;  // H(0.9) in nats
constexpr double kLogit09 = 2.1972245773362196;      // ln 9

nn::MlpNetwork small_critic(std::size_t d, std::uint64_t seed) {
  return nn::init_network(nn::chain({d, 6, 5, 1}, Activation::relu, Activation::linear), seed);
}

nn::MlpNetwork small_generator(std::size_t d, std::uint64_t seed) {
  return nn::init_network(nn::chain({d, 7, d}, Activation::sigmoid, Activation::linear), seed);
}

void zero(nn::MlpNetwork& net) {
  for (auto& w : net.weights) w.setZero();
  for (auto& b : net.biases) b.setZero();
}

// ---------------------------------------------------------------------------
// Objectives

TEST(CriticObjective, IdenticalBatchesCancel) {
  Rng rng(1);
  const auto critic = small_critic(4, 2);
  const Matrix b = support::random_matrix(rng, 8, 4);
  EXPECT_DOUBLE_EQ(wgan::critic_objective(critic, b, b).value, 0.0);
}

TEST(CriticObjective, ZeroCriticGivesZero) {
  Rng rng(1);
  auto critic = small_critic(4, 2);
  zero(critic);
  EXPECT_EQ(wgan::critic_objective(critic, support::random_matrix(rng, 8, 4),
                                   support::random_matrix(rng, 5, 4))
                .value,
            0.0);
}

TEST(CriticObjective, MatchesTwoPassRecomputation) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto critic = small_critic(5, rng());
    const Matrix clean = support::random_matrix(rng, 1 + uniform_index(rng, 20), 5);
    const Matrix fake = support::random_matrix(rng, 1 + uniform_index(rng, 20), 5);
    double sc = 0.0, sf = 0.0;
    for (Eigen::Index i = 0; i < clean.rows(); ++i) {
      sc += nn::predict(critic, clean.row(i))(0, 0);
    }
    for (Eigen::Index i = 0; i < fake.rows(); ++i) sf += nn::predict(critic, fake.row(i))(0, 0);
    const auto obj = wgan::critic_objective(critic, clean, fake);
    EXPECT_NEAR(obj.value, sc / clean.rows() - sf / fake.rows(), 1e-12);
    EXPECT_DOUBLE_EQ(obj.clean_output_grad(0, 0), 1.0 / clean.rows());
    EXPECT_DOUBLE_EQ(obj.fake_output_grad(0, 0), -1.0 / fake.rows());
  }
}

TEST(CriticObjective, WidthMismatch) {
  const auto critic = small_critic(4, 2);
  EXPECT_THROW(wgan::critic_objective(critic, Matrix::Zero(2, 4), Matrix::Zero(2, 3)),
               ContractError);
}

TEST(GeneratorObjective, ZeroCriticGivesZeroValueAndGradients) {
  Rng rng(5);
  auto critic = small_critic(4, 1);
  zero(critic);
  const auto gen = small_generator(4, 2);
  const auto obj = wgan::generator_objective(critic, gen, support::random_matrix(rng, 6, 4));
  EXPECT_EQ(obj.value, 0.0);
  for (const auto& w : obj.generator_grads.weights) EXPECT_EQ(w.cwiseAbs().maxCoeff(), 0.0);
}

TEST(GeneratorObjective, GradientsMatchFiniteDifferences) {
  Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    const auto critic = small_critic(3, rng());
    auto gen = small_generator(3, rng());
    const Matrix noisy = support::random_matrix(rng, 4, 3);
    const double w = t % 2 ? 0.7 : 0.0;
    const auto obj = wgan::generator_objective(critic, gen, noisy, w);
    auto f = [&] {
      const auto o = wgan::generator_objective(critic, gen, noisy, w);
      return o.value + w * o.entropy;
    };
    const double h = 1e-6;
    for (std::size_t l = 0; l < gen.depth(); ++l) {
      for (Eigen::Index i = 0; i < gen.weights[l].size(); ++i) {
        double& p = gen.weights[l].data()[i];
        const double keep = p;
        p = keep + h;
        const double up = f();
        p = keep - h;
        const double down = f();
        p = keep;
        EXPECT_LT(support::relative_error(obj.generator_grads.weights[l].data()[i],
                                          (up - down) / (2 * h)),
                  1e-4);
      }
    }
  }
}

TEST(GeneratorObjective, LinearInTheCriticFinalLayer) {
  Rng rng(7);
  auto critic = small_critic(4, 3);
  const auto gen = small_generator(4, 4);
  const Matrix noisy = support::random_matrix(rng, 5, 4);
  const double base = wgan::generator_objective(critic, gen, noisy).value;
  critic.weights.back() *= 2.0;
  critic.biases.back() *= 2.0;
  EXPECT_NEAR(wgan::generator_objective(critic, gen, noisy).value, 2.0 * base, 1e-14);
}

TEST(GeneratorObjective, LeavesTheCriticUntouched) {
  Rng rng(8);
  const auto critic = small_critic(4, 3);
  const auto before = critic;
  auto gen = small_generator(4, 4);
  auto opt = nn::OptimizerState::for_network(gen);
  const auto obj = wgan::generator_objective(critic, gen, support::random_matrix(rng, 5, 4));
  nn::rmsprop_step(gen, obj.generator_grads, opt, nn::Direction::descend);
  EXPECT_EQ(critic, before);
}

// ---------------------------------------------------------------------------
// Entropy terms

TEST(GeneratorEntropy, MaximumAtZeroLogit) {
  EXPECT_NEAR(wgan::generator_entropy_term(Matrix::Zero(3, 4)).value, kLn2, 1e-15);
}

TEST(GeneratorEntropy, VanishesForSaturatedLogits) {
  Matrix m = Matrix::Zero(2, 3);
  m(0, 2) = 800.0;
  m(1, 2) = -800.0;
  const auto t = wgan::generator_entropy_term(m);
  EXPECT_LT(t.value, 1e-300);
  EXPECT_TRUE(t.grad.allFinite());
}

TEST(GeneratorEntropy, SingleExampleAtPointNine) {
  Matrix m = Matrix::Zero(1, 2);
  m(0, 1) = kLogit09;
  EXPECT_NEAR(wgan::generator_entropy_term(m).value, kEntropyAt09, 1e-15);
}

TEST(GeneratorEntropy, GradientOnlyInTheLastColumnAndMatchesFiniteDifferences) {
  Rng rng(9);
  Matrix m = support::random_matrix(rng, 6, 3, -4.0, 4.0);
  const auto t = wgan::generator_entropy_term(m);
  EXPECT_EQ(t.grad.leftCols(2).cwiseAbs().maxCoeff(), 0.0);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Matrix up = m, down = m;
    up(i, 2) += 1e-6;
    down(i, 2) -= 1e-6;
    const double fd = (wgan::generator_entropy_term(up).value -
                       wgan::generator_entropy_term(down).value) / 2e-6;
    EXPECT_LT(support::relative_error(t.grad(i, 2), fd), 1e-5);
  }
}

TEST(CriticEntropy, ZeroCriticAndIdenticalBatchesGiveZero) {
  Rng rng(10);
  auto critic = small_critic(3, 1);
  const Matrix a = support::random_matrix(rng, 5, 3);
  const Matrix b = support::random_matrix(rng, 7, 3);
  EXPECT_NEAR(wgan::critic_entropy_term(critic, a, a).value, 0.0, 1e-15);
  zero(critic);
  EXPECT_EQ(wgan::critic_entropy_term(critic, a, b).value, 0.0);
}

TEST(CriticEntropy, CleanAtPointNineAgainstGeneratedAtZero) {
  auto critic = nn::init_network({{1, 1, Activation::linear}}, 1);
  critic.weights[0](0, 0) = kLogit09;
  critic.biases[0](0) = 0.0;
  const auto t = wgan::critic_entropy_term(critic, Matrix::Ones(1, 1), Matrix::Zero(1, 1));
  EXPECT_NEAR(t.value, kEntropyAt09 - kLn2, 1e-15);
  EXPECT_NEAR(t.value, -0.3680642071684971, 1e-15);
}

TEST(CriticEntropy, ParameterGradientsMatchFiniteDifferences) {
  Rng rng(11);
  auto critic = small_critic(3, 4);
  const Matrix a = support::random_matrix(rng, 5, 3, -3, 3);
  const Matrix b = support::random_matrix(rng, 4, 3, -3, 3);
  const auto t = wgan::critic_entropy_term(critic, a, b);
  for (std::size_t l = 0; l < critic.depth(); ++l) {
    for (Eigen::Index i = 0; i < critic.weights[l].size(); ++i) {
      double& p = critic.weights[l].data()[i];
      const double keep = p;
      p = keep + 1e-6;
      const double up = wgan::critic_entropy_term(critic, a, b).value;
      p = keep - 1e-6;
      const double down = wgan::critic_entropy_term(critic, a, b).value;
      p = keep;
      EXPECT_LT(support::relative_error(t.grads.weights[l].data()[i], (up - down) / 2e-6),
                1e-4);
    }
  }
}

// ---------------------------------------------------------------------------
// Training

struct Toy {
  LabeledDataset gold, noisy;
};

Toy toy(std::size_t n = 6, std::uint64_t seed = 1) {
  data::SyntheticSpec s;
  s.n = n;
  s.m_train = 400;
  s.m_test = 10;
  s.seed = seed;
  const auto train = data::generate_synthetic(s).first;
  std::vector<std::size_t> gold_rows{0, 1, 2, 3, 4, 5, 6, 7}, rest;
  for (std::size_t i = 8; i < train.size(); ++i) rest.push_back(i);
  return {train.subset(gold_rows), noise::inject_ccn(train.subset(rest), {0.3, 0.3}, 2)};
}

wgan::WganConfig small_config(wgan::Scheme scheme, int n_it) {
  wgan::WganConfig c;
  c.scheme = scheme;
  c.n_it = n_it;
  c.m_b = 16;
  c.generator_hidden = {8, 8};
  c.critic_hidden = {8};
  c.seed = 42;
  return c;
}

TEST(Train, ZeroIterationsReturnsTheInitialization) {
  const auto t = toy();
  const auto cfg = small_config(wgan::Scheme::wgan_xtra_y, 0);
  const auto [pair, log] = wgan::train(cfg, t.gold, t.noisy);
  const auto init = wgan::make_gan_pair(t.gold.width(), cfg);
  EXPECT_EQ(pair.generator, init.generator);
  EXPECT_EQ(pair.critic, init.critic);
  EXPECT_TRUE(log.records.empty());
}

TEST(Train, CriticStaysInsideTheClipBox) {
  const auto t = toy();
  auto cfg = small_config(wgan::Scheme::wgan_xtra_y_entr, 1);
  for (int it = 1; it <= 10; ++it) {
    cfg.n_it = it;
    const auto pair = wgan::train(cfg, t.gold, t.noisy).first;
    EXPECT_LE(pair.critic.max_abs_parameter(), cfg.c) << "after " << it << " iterations";
  }
}

TEST(Train, OneRecordPerIterationAndBitReproducible) {
  const auto t = toy();
  const auto cfg = small_config(wgan::Scheme::wgan_xtra_y, 25);
  const auto [a, la] = wgan::train(cfg, t.gold, t.noisy);
  const auto [b, lb] = wgan::train(cfg, t.gold, t.noisy);
  EXPECT_EQ(la.records.size(), 25u);
  EXPECT_EQ(a.generator, b.generator);
  EXPECT_EQ(a.critic, b.critic);
  for (std::size_t i = 0; i < la.records.size(); ++i) {
    EXPECT_EQ(la.records[i].critic_obj, lb.records[i].critic_obj);
  }
}

TEST(Train, EntropySchemeWithZeroWeightIsBitIdenticalToThePlainScheme) {
  const auto t = toy();
  const auto plain = small_config(wgan::Scheme::wgan_xtra_y, 30);
  auto entr = small_config(wgan::Scheme::wgan_xtra_y_entr, 30);
  entr.entropy_weight = 0.0;
  const auto a = wgan::train(plain, t.gold, t.noisy).first;
  const auto b = wgan::train(entr, t.gold, t.noisy).first;
  EXPECT_EQ(a.generator, b.generator);
  EXPECT_EQ(a.critic, b.critic);
  entr.entropy_weight = 1.0;
  const auto c = wgan::train(entr, t.gold, t.noisy).first;
  EXPECT_FALSE(c.generator == a.generator);
}

TEST(Train, EntropySchemeLogsBothEntropyTerms) {
  const auto t = toy();
  const auto log = wgan::train(small_config(wgan::Scheme::wgan_xtra_y_entr, 5), t.gold, t.noisy)
                       .second;
  for (const auto& r : log.records) {
    EXPECT_GT(r.entr_g, 0.0);
    EXPECT_LE(r.entr_g, kLn2);
    EXPECT_NE(r.entr_d, 0.0);
  }
}

TEST(Train, SingleLabelSchemeUsesOneAppendedDimension) {
  const auto t = toy();
  const auto pair = wgan::train(small_config(wgan::Scheme::wgan_y, 3), t.gold, t.noisy).first;
  EXPECT_EQ(pair.label_dims, 1);
  EXPECT_EQ(pair.generator.input_width(), t.gold.width() + 1);
  const auto out = wgan::generate_clean(pair, t.noisy);
  EXPECT_EQ(out.size(), t.noisy.size());
}

TEST(Train, ContractViolations) {
  const auto t = toy();
  const auto cfg = small_config(wgan::Scheme::wgan_xtra_y, 1);
  EXPECT_THROW(wgan::train(cfg, LabeledDataset{}, t.noisy), ContractError);
  const auto other = toy(7);
  EXPECT_THROW(wgan::train(cfg, t.gold, other.noisy), ContractError);
  auto bad = cfg;
  bad.c = 0.0;
  EXPECT_THROW(wgan::train(bad, t.gold, t.noisy), ConfigError);
  bad = cfg;
  bad.append.k = 4;
  EXPECT_THROW(wgan::train(bad, t.gold, t.noisy), ConfigError);
}

TEST(Train, NonFiniteLossAborts) {
  const auto t = toy();
  auto cfg = small_config(wgan::Scheme::wgan_xtra_y, 20);
  cfg.alpha = 1e300;
  EXPECT_THROW(wgan::train(cfg, t.gold, t.noisy), NumericError);
}

TEST(Train, WritesCheckpoints) {
  const auto t = toy();
  auto cfg = small_config(wgan::Scheme::wgan_xtra_y, 4);
  const auto dir = support::temp_dir("ckpt");
  cfg.checkpoint_every = 2;
  cfg.checkpoint_dir = dir.string();
  const auto pair = wgan::train(cfg, t.gold, t.noisy).first;
  EXPECT_TRUE(std::filesystem::exists(dir / "generator_2.json"));
  EXPECT_EQ(nn::load_network((dir / "generator_4.json").string()), pair.generator);
  EXPECT_EQ(nn::load_network((dir / "critic_4.json").string()), pair.critic);
  std::filesystem::remove_all(dir);
}

TEST(Train, SyntheticRunPlateausAndKeepsBothClasses) {
  data::SyntheticSpec s;
  s.seed = 3;
  const auto train = data::generate_synthetic(s).first;
  const auto split = data::split_pipeline(train, {0.001, 0.84, 0.15, 4});
  const auto gan_noisy = noise::inject_ccn(split.gan, {0.3, 0.3}, 5);
  const auto mm_noisy = noise::inject_ccn(split.model_m, {0.3, 0.3}, 6);
  wgan::WganConfig cfg;
  cfg.seed = 7;
  const auto [pair, log] = wgan::train(cfg, split.gold, gan_noisy);
  ASSERT_EQ(log.records.size(), 500u);
  auto window = [&](std::size_t from) {
    double s = 0.0;
    for (std::size_t i = from; i < from + 50; ++i) s += std::abs(log.records[i].critic_obj);
    return s / 50.0;
  };
  const double early = window(0), late = window(450);
  EXPECT_LT(late, early);
  // Plateau: the last two windows differ by less than the early level.
  EXPECT_LT(std::abs(window(400) - late), early);
  const auto gen = wgan::generate_clean(pair, mm_noisy);
  EXPECT_EQ(gen.size(), mm_noisy.size());
  EXPECT_EQ(gen.width(), mm_noisy.width());
  EXPECT_GT(gen.positives(), 0u);
  EXPECT_GT(gen.negatives(), 0u);
}

TEST(GenerateClean, UntrainedGeneratorStillYieldsValidLabels) {
  const auto t = toy();
  const auto pair = wgan::make_gan_pair(t.gold.width(), small_config(wgan::Scheme::wgan_xtra_y, 0));
  const auto out = wgan::generate_clean(pair, t.noisy);
  EXPECT_EQ(out.size(), t.noisy.size());
  for (int y : out.labels()) EXPECT_TRUE(y == 1 || y == -1);
  EXPECT_THROW(wgan::generate_clean(pair, toy(9).noisy), ContractError);
}

TEST(GenerateClean, SizeFollowsTheSplitArithmetic) {
  Matrix x = Matrix::Zero(10404, 3);
  std::vector<int> y(10404, -1);
  for (std::size_t i = 0; i < 4987; ++i) y[i] = 1;
  const auto ds = LabeledDataset::make(x, y);
  const auto split = data::split_pipeline(ds, {0.001, 0.84, 0.15, 1});
  const auto pair = wgan::make_gan_pair(3, small_config(wgan::Scheme::wgan_xtra_y, 0));
  EXPECT_EQ(wgan::generate_clean(pair, split.model_m).size(), 1561u);
}

}  // namespace
