#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bpatch/collapsed.hpp"
#include "bpatch/dataset.hpp"
#include "bpatch/model.hpp"
#include "bpatch/rng.hpp"
#include "bpatch/sampler.hpp"

namespace bpatch {

struct NewCaseConfig {
  // conditional sweeps over (z_r, w_r) per retained training sample, with
  // last-state retention across samples
  int sweeps_per_sample = 10;
};

// Per-retained-sample draws of the new case's neighbor structure.
struct CaseDraws {
  int n_parents = 0, n_features = 0, n_classes = 0, n_draws = 0;
  std::vector<std::uint8_t> z;  // K x S
  std::vector<std::uint8_t> w;  // K x S x P
  std::vector<double> theta;    // K x M, normalized label predictive per draw

  std::span<const std::uint8_t> z_draw(int k) const {
    return {z.data() + static_cast<std::size_t>(k) * n_parents,
            static_cast<std::size_t>(n_parents)};
  }
  std::span<const std::uint8_t> w_draw(int k) const {
    return {w.data() + static_cast<std::size_t>(k) * n_parents * n_features,
            static_cast<std::size_t>(n_parents) * n_features};
  }
  std::span<const double> theta_draw(int k) const {
    return {theta.data() + static_cast<std::size_t>(k) * n_classes,
            static_cast<std::size_t>(n_classes)};
  }
};

struct PredictiveResult {
  std::vector<double> theta;                  // length M, sums to 1
  int predicted_label = 0;                    // 0-based class index
  std::vector<double> neighbor_posterior;     // S, mean z_rb over draws
  std::vector<double> influence;              // S x P, mean w_rbj over draws
};

struct RankedParent {
  int parent_index = 0;  // position in the parent set
  int source_id = -1;    // id in the originating dataset, when known
  double kappa_mean = 0.0;
  int parent_label = -1;
  std::vector<std::uint8_t> important_features;  // P bits, mean w > 0.5
  std::vector<std::uint8_t> feature_match;       // P bits, parent value == case value
};

struct NeighborExplanation {
  int case_id = 0;
  int top_k = 0;
  std::vector<RankedParent> parents;  // kappa_mean descending, index ascending
};

struct FeatureSummary {
  double mean = 0, q25 = 0, median = 0, q75 = 0;
};

struct FeatureImportance {
  std::vector<FeatureSummary> per_feature;  // posterior summary of q_j
  std::vector<int> ranking;                 // feature indices, mean descending
};

// The training w-column counts conditioned on at prediction time; derived
// from states when a loaded archive lacks them.
inline std::vector<std::int32_t> state_column_counts(const ModelState& st) {
  std::vector<std::int32_t> c(static_cast<std::size_t>(st.n_parents) * st.n_features, 0);
  for (int i = 0; i < st.n_cases; ++i)
    for (int b = 0; b < st.n_parents; ++b)
      for (int j = 0; j < st.n_features; ++j)
        c[static_cast<std::size_t>(b) * st.n_features + j] += st.w_at(i, b, j);
  return c;
}

inline void ensure_column_counts(PosteriorSamples& fitted) {
  if (fitted.w_colsums.size() == fitted.states.size()) return;
  fitted.w_colsums.clear();
  for (const auto& st : fitted.states) fitted.w_colsums.push_back(state_column_counts(st));
}

// Normalized label predictive for one neighbor configuration:
// the published (h(m)+1)/(sum h + 1) vector rescaled onto the simplex.
inline std::vector<double> normalized_label_predictive(std::span<const double> h) {
  std::vector<double> u(h.size());
  double total = 0.0;
  for (std::size_t m = 0; m < h.size(); ++m) {
    u[m] = predictive_y(h, static_cast<int>(m));
    total += u[m];
  }
  for (double& v : u) v /= total;
  return u;
}

// Conditional MWG over only the new case's (z_r, w_r), given each retained
// training sample (q and w-column counts held fixed). The label factor enters
// exactly when y_r is supplied.
inline CaseDraws infer_new_case(std::span<const int> x_r, std::optional<int> y_r,
                                const PosteriorSamples& fitted, const ParentSet& parents,
                                const Hyperparameters& hp, const NewCaseConfig& cfg, Rng& rng) {
  if (fitted.states.empty()) throw std::invalid_argument("infer_new_case: empty chain");
  if (static_cast<int>(x_r.size()) != parents.n_features)
    throw std::invalid_argument("infer_new_case: case has " + std::to_string(x_r.size()) +
                                " features, parent set has " +
                                std::to_string(parents.n_features));
  for (int j = 0; j < parents.n_features; ++j)
    if (x_r[j] < 0 || x_r[j] >= parents.cardinalities[j])
      throw std::invalid_argument("infer_new_case: feature " + std::to_string(j) +
                                  " value out of range");
  if (cfg.sweeps_per_sample < 1)
    throw std::invalid_argument("infer_new_case: sweeps_per_sample must be >= 1");

  CategoricalDataset one;
  one.n_cases = 1;
  one.n_features = parents.n_features;
  one.n_classes = parents.n_classes;
  one.cardinalities = parents.cardinalities;
  one.features.assign(x_r.begin(), x_r.end());
  if (y_r) {
    if (!parents.has_labels())
      throw std::invalid_argument("infer_new_case: labeled case needs labeled parents");
    if (*y_r < 0 || *y_r >= parents.n_classes)
      throw std::invalid_argument("infer_new_case: label out of range");
    one.labels.assign(1, *y_r);
  }

  GibbsSampler cs(one, parents, hp, /*supervised=*/y_r.has_value());
  const int n_train = fitted.states.front().n_cases;
  std::vector<std::int32_t> colbuf(static_cast<std::size_t>(parents.size) * parents.n_features, 0);
  cs.set_column_prior(&colbuf, n_train);
  cs.init_from_prior(rng);

  const int s = parents.size, p = parents.n_features;
  const int k_total = static_cast<int>(fitted.states.size());
  CaseDraws draws;
  draws.n_parents = s;
  draws.n_features = p;
  draws.n_classes = parents.has_labels() ? parents.n_classes : 0;
  draws.n_draws = k_total;
  draws.z.reserve(static_cast<std::size_t>(k_total) * s);
  draws.w.reserve(static_cast<std::size_t>(k_total) * s * p);
  if (draws.n_classes > 0) draws.theta.reserve(static_cast<std::size_t>(k_total) * draws.n_classes);

  for (int k = 0; k < k_total; ++k) {
    colbuf = fitted.w_colsums.size() == fitted.states.size()
                 ? fitted.w_colsums[k]
                 : state_column_counts(fitted.states[k]);
    cs.set_q(fitted.states[k].q);
    for (int t = 0; t < cfg.sweeps_per_sample; ++t) cs.sweep_zw(rng);
    const ModelState& st = cs.state();
    draws.z.insert(draws.z.end(), st.z.begin(), st.z.end());
    draws.w.insert(draws.w.end(), st.w.begin(), st.w.end());
    if (draws.n_classes > 0) {
      const auto h = compute_h(st.z_row(0), st.w_slab(0), parents, hp);
      const auto theta = normalized_label_predictive(h);
      draws.theta.insert(draws.theta.end(), theta.begin(), theta.end());
    }
  }
  return draws;
}

// Threshold rule for two classes (label 2 iff theta_2 > threshold, ties to
// the lower class); plain argmax otherwise.
inline int classify(std::span<const double> theta, double threshold = 0.5) {
  if (theta.empty()) throw std::invalid_argument("classify: empty theta");
  double sum = 0.0;
  for (double v : theta) {
    if (v < -1e-12 || v > 1.0 + 1e-12) throw std::invalid_argument("classify: theta not a probability vector");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw std::invalid_argument("classify: theta must sum to 1");
  if (theta.size() == 2) return theta[1] > threshold ? 1 : 0;
  int best = 0;
  for (std::size_t m = 1; m < theta.size(); ++m)
    if (theta[m] > theta[best]) best = static_cast<int>(m);
  return best;
}

// Posterior predictive label distribution: the mean over retained samples of
// the normalized label predictive, plus neighbor/influence posterior means.
inline PredictiveResult predict_label_distribution(std::span<const int> x_r,
                                                   const PosteriorSamples& fitted,
                                                   const ParentSet& parents,
                                                   const Hyperparameters& hp,
                                                   const NewCaseConfig& cfg, Rng& rng,
                                                   double threshold = 0.5) {
  if (!parents.has_labels())
    throw std::invalid_argument("predict_label_distribution: parent labels required");
  const CaseDraws draws = infer_new_case(x_r, std::nullopt, fitted, parents, hp, cfg, rng);
  const int s = draws.n_parents, p = draws.n_features, m = draws.n_classes;
  PredictiveResult res;
  res.theta.assign(m, 0.0);
  res.neighbor_posterior.assign(s, 0.0);
  res.influence.assign(static_cast<std::size_t>(s) * p, 0.0);
  for (int k = 0; k < draws.n_draws; ++k) {
    const auto th = draws.theta_draw(k);
    for (int c = 0; c < m; ++c) res.theta[c] += th[c];
    const auto z = draws.z_draw(k);
    const auto w = draws.w_draw(k);
    for (int b = 0; b < s; ++b) res.neighbor_posterior[b] += z[b];
    for (std::size_t x = 0; x < w.size(); ++x) res.influence[x] += w[x];
  }
  const double inv = 1.0 / draws.n_draws;
  for (double& v : res.theta) v *= inv;
  for (double& v : res.neighbor_posterior) v *= inv;
  for (double& v : res.influence) v *= inv;
  res.predicted_label = classify(res.theta, threshold);
  return res;
}

// Ranked neighbor explanation: parents ordered by mean degree of influence,
// with influence masks and exact feature matches. A feature counts as
// influential only on draws where the parent is actually a neighbor (the
// joint z*w indicator), so a parent never selected carries an empty mask.
inline NeighborExplanation explain(int case_id, std::span<const int> x_r, const CaseDraws& draws,
                                   const ParentSet& parents, int top_k) {
  if (top_k < 1) throw std::invalid_argument("explain: top_k must be >= 1");
  const int s = draws.n_parents, p = draws.n_features;
  std::vector<double> kappa_mean(s, 0.0);
  std::vector<double> w_mean(static_cast<std::size_t>(s) * p, 0.0);
  for (int k = 0; k < draws.n_draws; ++k) {
    const auto z = draws.z_draw(k);
    const auto w = draws.w_draw(k);
    for (int b = 0; b < s; ++b) {
      if (!z[b]) continue;
      int rowsum = 0;
      for (int j = 0; j < p; ++j) {
        rowsum += w[static_cast<std::size_t>(b) * p + j];
        w_mean[static_cast<std::size_t>(b) * p + j] += w[static_cast<std::size_t>(b) * p + j];
      }
      kappa_mean[b] += rowsum;
    }
  }
  for (double& v : kappa_mean) v /= draws.n_draws;
  for (double& v : w_mean) v /= draws.n_draws;

  std::vector<int> order(s);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (kappa_mean[a] != kappa_mean[b]) return kappa_mean[a] > kappa_mean[b];
    return a < b;
  });

  NeighborExplanation ex;
  ex.case_id = case_id;
  ex.top_k = top_k;
  for (int r = 0; r < std::min(top_k, s); ++r) {
    const int b = order[r];
    RankedParent rp;
    rp.parent_index = b;
    rp.source_id = b < static_cast<int>(parents.source_ids.size()) ? parents.source_ids[b] : -1;
    rp.kappa_mean = kappa_mean[b];
    rp.parent_label = parents.has_labels() ? parents.labels[b] : -1;
    rp.important_features.resize(p);
    rp.feature_match.resize(p);
    for (int j = 0; j < p; ++j) {
      rp.important_features[j] = w_mean[static_cast<std::size_t>(b) * p + j] > 0.5 ? 1 : 0;
      rp.feature_match[j] = parents.at(b, j) == x_r[j] ? 1 : 0;
    }
    ex.parents.push_back(std::move(rp));
  }
  return ex;
}

inline double interpolated_quantile(std::vector<double> sorted, double prob) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = prob * (n - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const double frac = pos - lo;
  return lo + 1 < n ? sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]) : sorted[lo];
}

// Posterior summary of the feature importances q_j over the retained chain,
// plus the descending-mean rank order.
inline FeatureImportance feature_importance(const PosteriorSamples& fitted) {
  if (fitted.states.empty()) throw std::invalid_argument("feature_importance: empty chain");
  const int p = fitted.states.front().n_features;
  FeatureImportance fi;
  fi.per_feature.resize(p);
  for (int j = 0; j < p; ++j) {
    std::vector<double> draws;
    draws.reserve(fitted.states.size());
    for (const auto& st : fitted.states) draws.push_back(st.q[j]);
    std::sort(draws.begin(), draws.end());
    FeatureSummary& fs = fi.per_feature[j];
    fs.mean = std::accumulate(draws.begin(), draws.end(), 0.0) / draws.size();
    fs.q25 = interpolated_quantile(draws, 0.25);
    fs.median = interpolated_quantile(draws, 0.5);
    fs.q75 = interpolated_quantile(draws, 0.75);
  }
  fi.ranking.resize(p);
  std::iota(fi.ranking.begin(), fi.ranking.end(), 0);
  std::stable_sort(fi.ranking.begin(), fi.ranking.end(), [&](int a, int b) {
    if (fi.per_feature[a].mean != fi.per_feature[b].mean)
      return fi.per_feature[a].mean > fi.per_feature[b].mean;
    return a < b;
  });
  return fi;
}

}  // namespace bpatch
