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

#ifndef CCNGAN_NOISE_HPP
#define CCNGAN_NOISE_HPP

#include "ccngan/dataset.hpp"

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ccngan::noise {

/// Class-conditional flip rates. rho_plus = P(noisy=-1 | y=+1),
/// rho_minus = P(noisy=+1 | y=-1).
struct NoiseRates {
  double rho_plus = 0.0;
  double rho_minus = 0.0;

  void validate() const {
    if (!(rho_plus >= 0.0 && rho_plus < 1.0) || !(rho_minus >= 0.0 && rho_minus < 1.0)) {
      throw ConfigError("noise rates must lie in [0,1)");
    }
  }
  bool symmetric() const { return rho_plus == rho_minus; }
  /// Above 0.5 a class is more likely flipped than kept.
  bool inverts_semantics() const { return rho_plus > 0.5 || rho_minus > 0.5; }

  friend bool operator==(const NoiseRates&, const NoiseRates&) = default;
};

/// Sink for non-fatal diagnostics (noise above 0.5 and similar). Defaults to
/// stderr; tests may replace it.
inline std::function<void(const std::string&)>& warning_sink() {
  static std::function<void(const std::string&)> sink = [](const std::string& msg) {
    std::fprintf(stderr, "warning: %s\n", msg.c_str());
  };
  return sink;
}

/// Flips each +1 with probability rho_plus and each -1 with probability
/// rho_minus. One uniform draw per example, in row order.
inline LabeledDataset inject_ccn(const LabeledDataset& ds, const NoiseRates& rates,
                                 std::uint64_t seed) {
  rates.validate();
  if (rates.inverts_semantics()) {
    warning_sink()("noise rate above 0.5 inverts class semantics (rho+=" +
                   std::to_string(rates.rho_plus) +
                   ", rho-=" + std::to_string(rates.rho_minus) + ")");
  }
  Rng rng(seed);
  std::vector<int> y = ds.labels();
  for (int& v : y) {
    const double u = uniform01(rng);
    if (v == 1 && u < rates.rho_plus) {
      v = -1;
    } else if (v == -1 && u < rates.rho_minus) {
      v = 1;
    }
  }
  return ds.with_labels(std::move(y));
}

/// Corrupted in-class probability (1 - rho+ - rho-) * eta + rho-.
inline double corrupted_eta(double eta, const NoiseRates& rates) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("eta must lie in [0,1]");
  return (1.0 - rates.rho_plus - rates.rho_minus) * eta + rates.rho_minus;
}

/// k appended label dimensions scaled by l.
struct AppendConfig {
  int k = 5;
  double l = 5.0;

  void validate() const {
    if (k < 3 || k % 2 == 0) throw ConfigError("k must be odd and >= 3");
    if (!(l > 1.0)) throw ConfigError("l must be > 1");
  }

  friend bool operator==(const AppendConfig&, const AppendConfig&) = default;
};

/// Coefficient of the j-th appended coordinate (j = 0..k-1): 1, l, 2l, ...,
/// (k-1)l. With k = 3, l = 5 a negative example gets (-1, -5, -10).
inline double append_coefficient(int j, double l) {
  return j == 0 ? 1.0 : l * j;
}

/// Writes the label block for y into `out` (length k).
inline void write_label_block(int y, int k, double l, std::span<double> out) {
  for (int j = 0; j < k; ++j) out[j] = append_coefficient(j, l) * y;
}

inline Vector append_representation(const Vector& x, int y, const AppendConfig& cfg) {
  cfg.validate();
  if (y != 1 && y != -1) throw ContractError("label must be +-1");
  Vector out(x.size() + cfg.k);
  out.head(x.size()) = x;
  write_label_block(y, cfg.k, cfg.l, {out.data() + x.size(), static_cast<std::size_t>(cfg.k)});
  return out;
}

/// Appends the label block to every row of a dataset. `k` may be 1 here
/// (single-label representation used by the WGANY diagnostic scheme).
inline Matrix append_rows(const Matrix& x, const std::vector<int>& y, int k, double l) {
  Matrix out(x.rows(), x.cols() + k);
  out.leftCols(x.cols()) = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < k; ++j) {
      out(i, x.cols() + j) = append_coefficient(j, l) * y[i];
    }
  }
  return out;
}

struct MajorityDecode {
  int label = -1;
  double p_pos = 0.5;  // sigmoid of the final coordinate
};

/// y' = +1 iff at least (k+1)/2 of the sigmoid-transformed tail coordinates
/// are strictly above 0.5 (i.e. the raw value is > 0).
inline MajorityDecode decode_label_majority(std::span<const double> tail,
                                            const AppendConfig& cfg) {
  if (tail.size() != static_cast<std::size_t>(cfg.k)) {
    throw ContractError("decode: tail length " + std::to_string(tail.size()) +
                        " != k = " + std::to_string(cfg.k));
  }
  int votes = 0;
  for (double v : tail) votes += sigmoid(v) > 0.5;
  return {votes >= (cfg.k + 1) / 2 ? 1 : -1, sigmoid(tail.back())};
}

/// Single-coordinate decoding: +1 iff sigmoid(v) > 0.5.
inline int decode_label_single(double last_coord) {
  return sigmoid(last_coord) > 0.5 ? 1 : -1;
}

}  // namespace ccngan::noise

#endif  // CCNGAN_NOISE_HPP
