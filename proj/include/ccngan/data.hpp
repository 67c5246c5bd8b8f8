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

#ifndef CCNGAN_DATA_HPP
#define CCNGAN_DATA_HPP

#include "ccngan/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace ccngan::data {

// ---------------------------------------------------------------------------
// Synthetic Gaussian pairs

struct SyntheticSpec {
  std::size_t n = 100;
  std::size_t m_train = 6000;
  std::size_t m_test = 750;
  double bern_p_label = 0.5;
  double bern_p_sign = 0.4;
  double mu_range = 2.0;
  double variance = 8.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (n == 0) throw ConfigError("synthetic: n must be > 0");
    if (m_train == 0 || m_test == 0) throw ConfigError("synthetic: counts must be > 0");
    if (!(variance > 0.0)) throw ConfigError("synthetic: variance must be > 0");
    if (!(bern_p_label >= 0.0 && bern_p_label <= 1.0) ||
        !(bern_p_sign >= 0.0 && bern_p_sign <= 1.0)) {
      throw ConfigError("synthetic: probabilities must lie in [0,1]");
    }
    if (!(mu_range > 0.0)) throw ConfigError("synthetic: mu_range must be > 0");
  }

  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

struct ClassMeans {
  Vector plus;
  Vector minus;
};

/// mu+_j ~ Unif(-r, r); mu-_j = mu+_j with probability bern_p_sign, else -mu+_j.
inline ClassMeans synthetic_means(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, 0));
  ClassMeans m{Vector(spec.n), Vector(spec.n)};
  for (std::size_t j = 0; j < spec.n; ++j) {
    m.plus(j) = uniform(rng, -spec.mu_range, spec.mu_range);
    m.minus(j) = bernoulli(rng, spec.bern_p_sign) ? m.plus(j) : -m.plus(j);
  }
  return m;
}

namespace detail {

inline LabeledDataset draw_gaussian_pair(const ClassMeans& means, double variance,
                                         double p_label, std::size_t m, Rng& rng,
                                         std::string name) {
  const auto n = means.plus.size();
  const double sd = std::sqrt(variance);
  Matrix x(m, n);
  std::vector<int> y(m);
  for (std::size_t i = 0; i < m; ++i) {
    y[i] = bernoulli(rng, p_label) ? 1 : -1;
    const Vector& mu = y[i] == 1 ? means.plus : means.minus;
    for (Eigen::Index j = 0; j < n; ++j) x(i, j) = mu(j) + sd * standard_normal(rng);
  }
  return LabeledDataset::make(std::move(x), std::move(y), std::move(name));
}

}  // namespace detail

/// Train and test sets share one draw of class means.
inline std::pair<LabeledDataset, LabeledDataset> generate_synthetic(
    const SyntheticSpec& spec) {
  const ClassMeans means = synthetic_means(spec);
  Rng train_rng(derive_seed(spec.seed, 1));
  Rng test_rng(derive_seed(spec.seed, 2));
  const std::string tag = "SD" + std::to_string(spec.n);
  auto train = detail::draw_gaussian_pair(means, spec.variance, spec.bern_p_label,
                                          spec.m_train, train_rng, tag + "-train");
  auto test = detail::draw_gaussian_pair(means, spec.variance, spec.bern_p_label,
                                         spec.m_test, test_rng, tag + "-test");
  return {std::move(train), std::move(test)};
}

/// P(Y=1|x) for the synthetic model with equal-variance isotropic classes.
inline double synthetic_posterior(const ClassMeans& means, double variance,
                                  double p_label, const Vector& x) {
  const double dp = (x - means.plus).squaredNorm();
  const double dm = (x - means.minus).squaredNorm();
  double logit = (dm - dp) / (2.0 * variance);
  if (p_label > 0.0 && p_label < 1.0) logit += std::log(p_label / (1.0 - p_label));
  return sigmoid(logit);
}

// ---------------------------------------------------------------------------
// IDX (MNIST / Fashion-MNIST)

/// Multi-class image set with raw bytes kept; features are materialized only
/// for selected rows.
struct RawImageSet {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major
  std::vector<std::uint8_t> labels;

  std::size_t width() const { return rows * cols; }

  /// Pixel bytes divided by 255.
  Matrix features(const std::vector<std::size_t>& idx) const {
    Matrix f(idx.size(), width());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const std::uint8_t* p = pixels.data() + idx[i] * width();
      for (std::size_t j = 0; j < width(); ++j) f(i, j) = p[j] / 255.0;
    }
    return f;
  }

  Matrix features() const {
    std::vector<std::size_t> all(count);
    for (std::size_t i = 0; i < count; ++i) all[i] = i;
    return features(all);
  }

  /// Drops the first `n` examples (e.g. a held-out validation block).
  RawImageSet drop_leading(std::size_t n) const {
    if (n > count) throw ConfigError("drop_leading: only " + std::to_string(count) + " examples");
    RawImageSet out;
    out.count = count - n;
    out.rows = rows;
    out.cols = cols;
    out.pixels.assign(pixels.begin() + n * width(), pixels.end());
    out.labels.assign(labels.begin() + n, labels.end());
    return out;
  }
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

namespace detail {

inline std::uint32_t read_be32(std::istream& in, const std::string& path,
                               const char* field) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw FormatError(path + ": truncated while reading " + field);
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
         (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

inline std::vector<std::uint8_t> read_body(std::istream& in, std::size_t n,
                                           const std::string& path,
                                           const char* field) {
  std::vector<std::uint8_t> buf(n);
  if (n && !in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n))) {
    throw FormatError(path + ": truncated " + field + " (expected " +
                      std::to_string(n) + " bytes)");
  }
  return buf;
}

}  // namespace detail

inline RawImageSet load_idx(const std::string& images_path,
                            const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw ConfigError("cannot open " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw ConfigError("cannot open " + labels_path);

  const auto im_magic = detail::read_be32(img, images_path, "magic");
  if (im_magic != kIdxImagesMagic) {
    throw FormatError(images_path + ": bad magic 0x" + [&] {
      char b[16];
      std::snprintf(b, sizeof b, "%08x", im_magic);
      return std::string(b);
    }() + " (expected 0x00000803)");
  }
  RawImageSet set;
  set.count = detail::read_be32(img, images_path, "image count");
  set.rows = detail::read_be32(img, images_path, "row count");
  set.cols = detail::read_be32(img, images_path, "column count");

  const auto lb_magic = detail::read_be32(lab, labels_path, "magic");
  if (lb_magic != kIdxLabelsMagic) {
    throw FormatError(labels_path + ": bad magic (expected 0x00000801)");
  }
  const std::size_t label_count = detail::read_be32(lab, labels_path, "label count");
  if (label_count != set.count) {
    throw FormatError("count mismatch: " + std::to_string(set.count) + " images vs " +
                      std::to_string(label_count) + " labels");
  }
  set.pixels = detail::read_body(img, set.count * set.width(), images_path, "pixel data");
  set.labels = detail::read_body(lab, label_count, labels_path, "label data");
  return set;
}

/// Keeps classes a and b: +1 for a, -1 for b, except that digit 0 is always
/// the negative class.
inline LabeledDataset make_binary_pair(const RawImageSet& raw, int a, int b) {
  if (a == b) throw ConfigError("binary pair needs two distinct classes");
  int pos = a, neg = b;
  if (a == 0) std::swap(pos, neg);
  std::vector<std::size_t> idx;
  std::vector<int> labels;
  std::size_t np = 0, nn = 0;
  for (std::size_t i = 0; i < raw.count; ++i) {
    if (raw.labels[i] == pos) {
      idx.push_back(i);
      labels.push_back(1);
      ++np;
    } else if (raw.labels[i] == neg) {
      idx.push_back(i);
      labels.push_back(-1);
      ++nn;
    }
  }
  if (np == 0 || nn == 0) {
    throw DataError("binary pair " + std::to_string(a) + "-" + std::to_string(b) +
                    ": class " + std::to_string(np == 0 ? pos : neg) + " is empty");
  }
  return LabeledDataset::make(raw.features(idx), std::move(labels),
                              std::to_string(a) + "-" + std::to_string(b));
}

// ---------------------------------------------------------------------------
// Imbalanced sampling

struct ImbalanceSpec {
  double imb_r = 0.5;  // target fraction of positive examples
  std::uint64_t seed = 0;

  void validate() const {
    if (!(imb_r > 0.0 && imb_r < 1.0)) throw ConfigError("imb_r must lie in (0,1)");
  }

  friend bool operator==(const ImbalanceSpec&, const ImbalanceSpec&) = default;
};

/// Keeps floor(r * #positives) positives and floor((1 - r) * #negatives)
/// negatives, chosen uniformly at random; original row order is preserved.
/// Since make_binary_pair already maps digit 0 to the negative class, the
/// r-share always comes from the non-zero digit.
inline LabeledDataset sample_imbalanced(const LabeledDataset& ds,
                                        const ImbalanceSpec& spec) {
  spec.validate();
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (ds.labels()[i] == 1 ? pos : neg).push_back(i);
  }
  if (pos.empty() || neg.empty()) throw DataError("sample_imbalanced: a class is empty");
  const auto keep_pos = static_cast<std::size_t>(std::floor(spec.imb_r * pos.size()));
  const auto keep_neg =
      static_cast<std::size_t>(std::floor((1.0 - spec.imb_r) * neg.size()));
  if (keep_pos == 0 || keep_neg == 0) {
    throw DataError("sample_imbalanced: resulting class would be empty");
  }
  Rng rng(spec.seed);
  shuffle(pos, rng);
  shuffle(neg, rng);
  std::vector<std::size_t> rows(pos.begin(), pos.begin() + keep_pos);
  rows.insert(rows.end(), neg.begin(), neg.begin() + keep_neg);
  std::sort(rows.begin(), rows.end());
  return ds.subset(rows);
}

// ---------------------------------------------------------------------------
// Pipeline split: gold (clean) / GAN training / model-M feed

struct SplitSpec {
  double gold_fraction = 0.001;
  double gan_fraction = 0.84;
  double model_m_fraction = 0.15;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(gold_fraction > 0.0 && gold_fraction < 1.0)) {
      throw ConfigError("gold_fraction must lie in (0,1)");
    }
    if (!(gan_fraction > 0.0) || !(model_m_fraction > 0.0)) {
      throw ConfigError("split fractions must be positive");
    }
    if (gold_fraction + gan_fraction + model_m_fraction > 1.0 + 1e-9) {
      throw ConfigError("split fractions sum to more than 1");
    }
  }

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

struct PipelineSplit {
  LabeledDataset gold;     // S_cl, true labels
  LabeledDataset gan;      // S_gan (clean here; noise is injected downstream)
  LabeledDataset model_m;  // S_model_m (clean here)
  std::vector<std::size_t> gold_rows, gan_rows, model_m_rows, discarded_rows;
  std::size_t redraws = 0;
};

inline constexpr std::size_t kMaxGoldRedraws = 10000;

/// Sizes: round(gold * m), round(gan * m), round(model_m * m) capped by the
/// remainder; what is left is discarded. The permutation is redrawn until the
/// gold part holds both classes.
inline PipelineSplit split_pipeline(const LabeledDataset& train, const SplitSpec& spec) {
  spec.validate();
  const std::size_t m = train.size();
  const auto n_gold = static_cast<std::size_t>(std::llround(spec.gold_fraction * m));
  if (n_gold < 2) {
    throw ConfigError("split: gold part would have " + std::to_string(n_gold) +
                      " rows (need >= 2) for m = " + std::to_string(m));
  }
  if (train.positives() == 0 || train.negatives() == 0) {
    throw ConfigError("split: training data must contain both classes");
  }
  const auto n_gan = std::min<std::size_t>(
      static_cast<std::size_t>(std::llround(spec.gan_fraction * m)), m - n_gold);
  const auto n_mm = std::min<std::size_t>(
      static_cast<std::size_t>(std::llround(spec.model_m_fraction * m)),
      m - n_gold - n_gan);
  if (n_gan == 0 || n_mm == 0) throw ConfigError("split: empty GAN or model-M part");

  PipelineSplit out;
  std::vector<std::size_t> perm(m);
  for (std::size_t attempt = 0;; ++attempt) {
    if (attempt >= kMaxGoldRedraws) {
      throw ConfigError("split: could not draw a gold set with both classes");
    }
    for (std::size_t i = 0; i < m; ++i) perm[i] = i;
    Rng rng(derive_seed(spec.seed, attempt));
    shuffle(perm, rng);
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n_gold; ++i) {
      (train.labels()[perm[i]] == 1 ? has_pos : has_neg) = true;
    }
    if (has_pos && has_neg) {
      out.redraws = attempt;
      break;
    }
  }
  auto it = perm.begin();
  out.gold_rows.assign(it, it + n_gold);
  it += n_gold;
  out.gan_rows.assign(it, it + n_gan);
  it += n_gan;
  out.model_m_rows.assign(it, it + n_mm);
  it += n_mm;
  out.discarded_rows.assign(it, perm.end());
  out.gold = train.subset(out.gold_rows, train.name() + "/gold");
  out.gan = train.subset(out.gan_rows, train.name() + "/gan");
  out.model_m = train.subset(out.model_m_rows, train.name() + "/model_m");
  return out;
}

}  // namespace ccngan::data

#endif  // CCNGAN_DATA_HPP
