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

#ifndef CCNGAN_DATASET_HPP
#define CCNGAN_DATASET_HPP

#include "ccngan/common.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace ccngan {

/// Feature matrix (one example per row) with labels in {-1, +1}.
/// Construct through make(); the invariants hold for every instance.
class LabeledDataset {
 public:
  LabeledDataset() = default;

  static LabeledDataset make(Matrix features, std::vector<int> labels,
                             std::string name = {}) {
    if (static_cast<std::size_t>(features.rows()) != labels.size()) {
      throw DataError("dataset '" + name + "': " + std::to_string(features.rows()) +
                      " rows but " + std::to_string(labels.size()) + " labels");
    }
    for (int y : labels) {
      if (y != 1 && y != -1) {
        throw DataError("dataset '" + name + "': label " + std::to_string(y) +
                        " is not +-1");
      }
    }
    if (!features.allFinite()) {
      throw DataError("dataset '" + name + "': non-finite feature value");
    }
    LabeledDataset ds;
    ds.features_ = std::move(features);
    ds.labels_ = std::move(labels);
    ds.name_ = std::move(name);
    return ds;
  }

  const Matrix& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::string& name() const { return name_; }
  void set_name(std::string n) { name_ = std::move(n); }

  std::size_t size() const { return labels_.size(); }
  std::size_t width() const { return static_cast<std::size_t>(features_.cols()); }
  bool empty() const { return labels_.empty(); }

  std::size_t positives() const {
    std::size_t n = 0;
    for (int y : labels_) n += y == 1;
    return n;
  }
  std::size_t negatives() const { return size() - positives(); }
  double positive_fraction() const {
    return empty() ? 0.0 : static_cast<double>(positives()) / size();
  }

  LabeledDataset subset(const std::vector<std::size_t>& rows,
                        std::string name = {}) const {
    Matrix f(rows.size(), features_.cols());
    std::vector<int> l(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      f.row(i) = features_.row(rows[i]);
      l[i] = labels_[rows[i]];
    }
    LabeledDataset ds;
    ds.features_ = std::move(f);
    ds.labels_ = std::move(l);
    ds.name_ = name.empty() ? name_ : std::move(name);
    return ds;
  }

  /// Same features, new labels (validated).
  LabeledDataset with_labels(std::vector<int> labels) const {
    return make(features_, std::move(labels), name_);
  }

  friend bool operator==(const LabeledDataset& a, const LabeledDataset& b) {
    return a.labels_ == b.labels_ && a.features_.rows() == b.features_.rows() &&
           a.features_.cols() == b.features_.cols() && a.features_ == b.features_;
  }

 private:
  Matrix features_;
  std::vector<int> labels_;
  std::string name_;
};

// CSV layout: header "f0,f1,...,f{n-1},label", one row per example, values
// printed with 17 significant digits so a reload is exact.

inline void write_csv(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  for (std::size_t j = 0; j < ds.width(); ++j) out << 'f' << j << ',';
  out << "label\n";
  char buf[32];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.width(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.features()(i, j));
      out << buf << ',';
    }
    out << ds.labels()[i] << '\n';
  }
  if (!out) throw ConfigError("write failed for " + path);
}

inline LabeledDataset read_csv(const std::string& path, std::string name = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty file");
  std::size_t columns = 1;
  for (char ch : line) columns += ch == ',';
  if (columns < 2 || line.substr(line.rfind(',') + 1) != "label") {
    throw FormatError(path + ": header must be f0..f{n-1},label");
  }
  const std::size_t n = columns - 1;
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        if (c < n) {
          values.push_back(std::stod(cell));
        } else if (c == n) {
          labels.push_back(std::stoi(cell));
        }
      } catch (const std::exception&) {
        throw FormatError(path + ":" + std::to_string(lineno) + ": bad value '" +
                          cell + "'");
      }
      ++c;
    }
    if (c != columns) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(columns) + " fields, got " +
                        std::to_string(c));
    }
  }
  Matrix f(labels.size(), n);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = 0; j < n; ++j) f(i, j) = values[i * n + j];
  }
  return LabeledDataset::make(std::move(f), std::move(labels),
                              name.empty() ? path : std::move(name));
}

}  // namespace ccngan

#endif  // CCNGAN_DATASET_HPP
