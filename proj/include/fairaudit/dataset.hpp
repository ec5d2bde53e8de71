#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "fairaudit/errors.hpp"

namespace fairaudit {

// Binary protected-attribute group.
enum class Group : unsigned char { Unprivileged = 0, Privileged = 1 };

// Binary outcome; Favorable is the "+" outcome.
enum class Outcome : unsigned char { Unfavorable = 0, Favorable = 1 };

inline const char* to_string(Group g) {
  return g == Group::Unprivileged ? "unprivileged" : "privileged";
}

inline const char* to_string(Outcome y) {
  return y == Outcome::Favorable ? "+" : "-";
}

// Dense row-major numeric matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  const double* row(std::size_t r) const { return data_.data() + r * cols_; }
  double* row(std::size_t r) { return data_.data() + r * cols_; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// A fully prepared classification dataset: encoded features, binary protected
// groups, binary labels, and a stratum identifier per instance.
struct Dataset {
  FeatureMatrix features;
  std::vector<Group> protected_attr;       // g, one per instance
  std::vector<Outcome> labels;             // Y, one per instance
  std::vector<std::string> explanatory;    // R, stratum identifier per instance
  std::vector<std::string> feature_names;  // one per feature column
  std::vector<bool> numeric_kind;          // true = raw numeric column (standardized
                                           // at training time), false = indicator
  std::string provenance;                  // recipe identifier

  std::size_t n_instances() const { return labels.size(); }
  std::size_t n_features() const { return features.cols(); }

  bool has_both_labels() const {
    bool pos = false, neg = false;
    for (Outcome y : labels) (y == Outcome::Favorable ? pos : neg) = true;
    return pos && neg;
  }

  bool has_both_groups() const {
    bool u = false, p = false;
    for (Group g : protected_attr) (g == Group::Unprivileged ? u : p) = true;
    return u && p;
  }

  // Builds the sub-dataset given by `idx` (indices into this dataset).
  Dataset subset(const std::vector<std::size_t>& idx) const {
    Dataset out;
    out.features = FeatureMatrix(idx.size(), features.cols());
    out.protected_attr.reserve(idx.size());
    out.labels.reserve(idx.size());
    out.explanatory.reserve(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const std::size_t i = idx[k];
      std::copy(features.row(i), features.row(i) + features.cols(), out.features.row(k));
      out.protected_attr.push_back(protected_attr[i]);
      out.labels.push_back(labels[i]);
      out.explanatory.push_back(explanatory[i]);
    }
    out.feature_names = feature_names;
    out.numeric_kind = numeric_kind;
    out.provenance = provenance;
    return out;
  }
};

// Majority-class rate: max(P(Y=+), P(Y=-)).
inline double baseline_rate(const Dataset& ds) {
  if (ds.n_instances() == 0) throw DegenerateError("baseline_rate: empty dataset");
  std::size_t favorable = 0;
  for (Outcome y : ds.labels)
    if (y == Outcome::Favorable) ++favorable;
  const double p = static_cast<double>(favorable) / static_cast<double>(ds.n_instances());
  return std::max(p, 1.0 - p);
}

}  // namespace fairaudit
