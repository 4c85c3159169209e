#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bpatch {

// Category and class indices are 0-based everywhere inside the library;
// external formats (CSV, JSON, report text) are 1-based and converted exactly
// once at the I/O boundary. The sentinel kMissing marks a not-yet-resolved
// cell during ingestion; validated datasets contain none.
inline constexpr int kMissing = -1;

enum class Variant { ModelI, ModelII };

inline const char* to_string(Variant v) {
  return v == Variant::ModelI ? "model1" : "model2";
}

// N cases x P categorical features with per-feature cardinalities and
// optional labels in 0..n_classes-1.
struct CategoricalDataset {
  int n_cases = 0;
  int n_features = 0;
  int n_classes = 0;
  std::vector<int> cardinalities;        // V_j per feature
  std::vector<int> features;             // row-major N x P
  std::vector<int> labels;               // size N, or empty when unlabeled
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;

  int at(int i, int j) const { return features[static_cast<std::size_t>(i) * n_features + j]; }
  int& at(int i, int j) { return features[static_cast<std::size_t>(i) * n_features + j]; }
  std::span<const int> row(int i) const {
    return {features.data() + static_cast<std::size_t>(i) * n_features,
            static_cast<std::size_t>(n_features)};
  }
  bool has_labels() const { return !labels.empty(); }

  void validate() const {
    if (static_cast<int>(cardinalities.size()) != n_features)
      throw std::invalid_argument("dataset: cardinalities length must equal n_features");
    if (static_cast<std::size_t>(n_cases) * n_features != features.size())
      throw std::invalid_argument("dataset: feature matrix shape mismatch");
    if (!labels.empty() && static_cast<int>(labels.size()) != n_cases)
      throw std::invalid_argument("dataset: labels length must equal n_cases");
    for (int j = 0; j < n_features; ++j)
      if (cardinalities[j] < 1) throw std::invalid_argument("dataset: cardinality must be >= 1");
    for (int i = 0; i < n_cases; ++i)
      for (int j = 0; j < n_features; ++j) {
        const int x = at(i, j);
        if (x < 0 || x >= cardinalities[j])
          throw std::invalid_argument("dataset: feature value out of range at case " +
                                      std::to_string(i) + ", feature " + std::to_string(j));
      }
    if (!labels.empty()) {
      if (n_classes < 1) throw std::invalid_argument("dataset: n_classes must be >= 1");
      for (int i = 0; i < n_cases; ++i)
        if (labels[i] < 0 || labels[i] >= n_classes)
          throw std::invalid_argument("dataset: label out of range at case " + std::to_string(i));
    }
  }

  // Column-subset copy used by feature-subset evaluation.
  CategoricalDataset select_features(std::span<const int> keep) const {
    CategoricalDataset out;
    out.n_cases = n_cases;
    out.n_features = static_cast<int>(keep.size());
    out.n_classes = n_classes;
    out.labels = labels;
    out.class_names = class_names;
    out.features.resize(static_cast<std::size_t>(n_cases) * keep.size());
    for (int j : keep) {
      out.cardinalities.push_back(cardinalities[j]);
      out.feature_names.push_back(j < static_cast<int>(feature_names.size()) ? feature_names[j]
                                                                             : std::string());
    }
    for (int i = 0; i < n_cases; ++i)
      for (std::size_t jj = 0; jj < keep.size(); ++jj)
        out.features[static_cast<std::size_t>(i) * keep.size() + jj] = at(i, keep[jj]);
    return out;
  }

  // Row-subset copy (fold construction, balancing).
  CategoricalDataset select_cases(std::span<const int> keep) const {
    CategoricalDataset out;
    out.n_cases = static_cast<int>(keep.size());
    out.n_features = n_features;
    out.n_classes = n_classes;
    out.cardinalities = cardinalities;
    out.feature_names = feature_names;
    out.class_names = class_names;
    out.features.reserve(keep.size() * n_features);
    for (int i : keep) {
      auto r = row(i);
      out.features.insert(out.features.end(), r.begin(), r.end());
      if (!labels.empty()) out.labels.push_back(labels[i]);
    }
    return out;
  }
};

// The pool of S past cases that vote on features and labels. Labels may be
// absent while training unsupervised; prediction always requires them.
struct ParentSet {
  int size = 0;           // S
  int n_features = 0;     // P, same as companion dataset
  int n_classes = 0;
  std::vector<int> cardinalities;
  std::vector<int> features;      // S x P
  std::vector<int> labels;        // size S, or empty
  std::vector<int> source_ids;    // ids in the originating dataset, for reports

  int at(int b, int j) const { return features[static_cast<std::size_t>(b) * n_features + j]; }
  bool has_labels() const { return !labels.empty(); }

  void validate() const {
    if (size < 1) throw std::invalid_argument("parents: size must be >= 1");
    if (static_cast<int>(cardinalities.size()) != n_features)
      throw std::invalid_argument("parents: cardinalities length mismatch");
    if (static_cast<std::size_t>(size) * n_features != features.size())
      throw std::invalid_argument("parents: feature matrix shape mismatch");
    if (!labels.empty() && static_cast<int>(labels.size()) != size)
      throw std::invalid_argument("parents: labels length mismatch");
    for (int b = 0; b < size; ++b)
      for (int j = 0; j < n_features; ++j)
        if (at(b, j) < 0 || at(b, j) >= cardinalities[j])
          throw std::invalid_argument("parents: feature value out of range");
    for (int y : labels)
      if (y < 0 || y >= n_classes) throw std::invalid_argument("parents: label out of range");
  }
};

inline ParentSet make_parent_set(const CategoricalDataset& data, std::span<const int> ids,
                                 bool with_labels = true) {
  ParentSet p;
  p.size = static_cast<int>(ids.size());
  p.n_features = data.n_features;
  p.n_classes = data.n_classes;
  p.cardinalities = data.cardinalities;
  p.source_ids.assign(ids.begin(), ids.end());
  p.features.reserve(ids.size() * data.n_features);
  for (int i : ids) {
    auto r = data.row(i);
    p.features.insert(p.features.end(), r.begin(), r.end());
    if (with_labels && data.has_labels()) p.labels.push_back(data.labels[i]);
  }
  return p;
}

struct Hyperparameters {
  double alpha = 0.5;    // prior neighbor probability
  double gamma = 0.5;    // Beta shape for q_j
  double sigma1 = 5.0;   // Beta shape for q_j
  double sigma2 = 1.0;   // concentration of q~_bj around q_j
  double lambda0 = 0.001;
  double lambda = 2.0;
  double mu0 = 0.001;
  double mu = 1.0;       // one shared mu for every class
  Variant variant = Variant::ModelII;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0))
      throw std::invalid_argument("hyperparameters: alpha must lie in [0,1]");
    for (double v : {gamma, sigma1, sigma2, lambda0, lambda, mu0, mu})
      if (!(v > 0.0))
        throw std::invalid_argument("hyperparameters: all parameters except alpha must be > 0");
  }
};

}  // namespace bpatch
