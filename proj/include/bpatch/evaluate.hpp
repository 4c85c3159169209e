#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "bpatch/data_io.hpp"
#include "bpatch/dataset.hpp"
#include "bpatch/generate.hpp"
#include "bpatch/metrics.hpp"
#include "bpatch/predict.hpp"
#include "bpatch/rng.hpp"
#include "bpatch/sampler.hpp"

namespace bpatch {

// Everything one cross-validated experiment depends on. All randomness (fold
// plan, parent draws, chains, new-case inference) derives from `seed`.
struct CvConfig {
  Hyperparameters hp;
  ChainConfig chain;
  NewCaseConfig newcase;
  int n_parents = 80;  // S
  int k = 5;
  bool stratified = false;
  double threshold = 0.5;
  int positive_class = 1;
  std::uint64_t seed = 1;
  int jobs = 1;
};

struct MetricStat {
  double mean = 0, sd = 0;
};

struct ExperimentReport {
  std::string tag;  // e.g. "alpha=0.4" in sweeps
  std::vector<MetricSet> per_fold;
  std::vector<double> fold_seconds;
  MetricStat accuracy, sensitivity, specificity, precision, recall, f_measure;
  double total_seconds = 0;
  CvConfig config;

  // fold predictions in test-id order, for exact-equality comparisons
  std::vector<std::vector<int>> fold_predictions;

  void finalize() {
    auto stat = [&](auto getter) {
      MetricStat s;
      const double n = static_cast<double>(per_fold.size());
      for (const auto& m : per_fold) s.mean += getter(m);
      s.mean /= n;
      if (per_fold.size() > 1) {
        double ss = 0;
        for (const auto& m : per_fold) ss += (getter(m) - s.mean) * (getter(m) - s.mean);
        s.sd = std::sqrt(ss / (n - 1));
      }
      return s;
    };
    accuracy = stat([](const MetricSet& m) { return m.accuracy; });
    sensitivity = stat([](const MetricSet& m) { return m.sensitivity; });
    specificity = stat([](const MetricSet& m) { return m.specificity; });
    precision = stat([](const MetricSet& m) { return m.precision; });
    recall = stat([](const MetricSet& m) { return m.recall; });
    f_measure = stat([](const MetricSet& m) { return m.f_measure; });
    total_seconds = std::accumulate(fold_seconds.begin(), fold_seconds.end(), 0.0);
  }
};

// Per-fold derived RNG streams: every consumer gets an independent,
// order-insensitive stream keyed on (seed, fold, purpose).
struct FoldStreams {
  Rng parents, prediction;
  std::uint64_t chain_seed;
  static FoldStreams make(std::uint64_t seed, int fold) {
    const Rng root(seed);
    const Rng fold_rng = root.derive(static_cast<std::uint64_t>(fold));
    return {fold_rng.derive(1), fold_rng.derive(3), fold_rng.derive(2).seed()};
  }
};

inline FoldPlan make_fold_plan(const CategoricalDataset& data, const CvConfig& cfg) {
  Rng rng(cfg.seed);
  return kfold_split(data, cfg.k, rng, cfg.stratified);
}

// Train on k-1 folds, predict the held-out fold, aggregate the metrics.
// Parents are drawn from each fold's training ids unless the plan already
// carries them. Folds may run in parallel; each owns its chain and streams.
inline ExperimentReport cross_validate(const CategoricalDataset& data, const CvConfig& cfg,
                                       const FoldPlan& plan) {
  if (!data.has_labels()) throw std::invalid_argument("cross_validate: labels required");
  plan.validate();
  const int k = plan.k;
  ExperimentReport report;
  report.config = cfg;
  report.per_fold.resize(k);
  report.fold_seconds.resize(k);
  report.fold_predictions.resize(k);

  auto run_fold = [&](int f) {
    const auto start = std::chrono::steady_clock::now();
    FoldStreams streams = FoldStreams::make(cfg.seed, f);
    const auto train_ids = plan.train_ids(f);
    const auto test_ids = plan.test_ids(f);
    std::vector<int> parent_ids = f < static_cast<int>(plan.parent_ids_per_fold.size())
                                      ? plan.parent_ids_per_fold[f]
                                      : std::vector<int>();
    if (parent_ids.empty())
      parent_ids = select_parents(train_ids, cfg.n_parents, streams.parents);
    const ParentSet parents = make_parent_set(data, parent_ids);
    const CategoricalDataset train = data.select_cases(train_ids);

    ChainConfig chain = cfg.chain;
    chain.rng_seed = streams.chain_seed;
    PosteriorSamples fitted = run_chain(train, parents, cfg.hp, chain);

    std::vector<int> pred(test_ids.size()), truth(test_ids.size());
    for (std::size_t t = 0; t < test_ids.size(); ++t) {
      Rng case_rng = streams.prediction.derive(static_cast<std::uint64_t>(t));
      const auto res = predict_label_distribution(data.row(test_ids[t]), fitted, parents, cfg.hp,
                                                  cfg.newcase, case_rng, cfg.threshold);
      pred[t] = res.predicted_label;
      truth[t] = data.labels[test_ids[t]];
    }
    report.per_fold[f] = confusion_metrics(pred, truth, data.n_classes, cfg.positive_class);
    report.fold_predictions[f] = std::move(pred);
    report.fold_seconds[f] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  const int jobs = std::max(1, std::min(cfg.jobs, k));
  if (jobs == 1) {
    for (int f = 0; f < k; ++f) run_fold(f);
  } else {
    std::vector<std::exception_ptr> errors(k);
    for (int base = 0; base < k; base += jobs) {
      std::vector<std::thread> pool;
      for (int f = base; f < std::min(base + jobs, k); ++f)
        pool.emplace_back([&, f] {
          try {
            run_fold(f);
          } catch (...) {
            errors[f] = std::current_exception();
          }
        });
      for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  report.finalize();
  return report;
}

inline ExperimentReport cross_validate(const CategoricalDataset& data, const CvConfig& cfg) {
  return cross_validate(data, cfg, make_fold_plan(data, cfg));
}

// ---------------------------------------------------------------------------
// KNN baselines on Hamming distance

enum class KnnMode { Plain, DistanceWeighted, FeatureWeighted };

// Majority vote over the K nearest training cases; ties at the K-th rank are
// all included, vote ties resolve to the lower class. Distance weighting uses
// 1/d with d=0 mapped to 1e9 (the inverse of the 1e-9 floor).
inline std::vector<int> knn_predict(const CategoricalDataset& train,
                                    const CategoricalDataset& test, int k_neighbors, KnnMode mode,
                                    std::span<const double> feature_weights = {}) {
  if (k_neighbors < 1) throw std::invalid_argument("knn_predict: K must be >= 1");
  if (!train.has_labels()) throw std::invalid_argument("knn_predict: train labels required");
  if (train.n_features != test.n_features)
    throw std::invalid_argument("knn_predict: feature count mismatch");
  std::vector<double> weights(feature_weights.begin(), feature_weights.end());
  if (mode == KnnMode::FeatureWeighted) {
    if (static_cast<int>(weights.size()) != train.n_features)
      throw std::invalid_argument("knn_predict: need one weight per feature");
    for (double w : weights)
      if (w < 0) throw std::invalid_argument("knn_predict: weights must be nonnegative");
  } else {
    weights.assign(train.n_features, 1.0);
  }
  const int k = std::min(k_neighbors, train.n_cases);
  std::vector<int> out(test.n_cases);
  std::vector<std::pair<double, int>> dist(train.n_cases);
  for (int t = 0; t < test.n_cases; ++t) {
    for (int i = 0; i < train.n_cases; ++i) {
      double d = 0;
      for (int j = 0; j < train.n_features; ++j)
        if (train.at(i, j) != test.at(t, j)) d += weights[j];
      dist[i] = {d, i};
    }
    std::sort(dist.begin(), dist.end());
    const double cutoff = dist[k - 1].first;
    std::vector<double> votes(train.n_classes, 0.0);
    for (int i = 0; i < train.n_cases && dist[i].first <= cutoff; ++i) {
      const double d = dist[i].first;
      const double v = mode == KnnMode::DistanceWeighted ? 1.0 / std::max(d, 1e-9) : 1.0;
      votes[train.labels[dist[i].second]] += v;
    }
    int best = 0;
    for (int c = 1; c < train.n_classes; ++c)
      if (votes[c] > votes[best]) best = c;
    out[t] = best;
  }
  return out;
}

// KNN under the same fold plan as the model experiments.
inline ExperimentReport knn_cross_validate(const CategoricalDataset& data, const FoldPlan& plan,
                                           int k_neighbors, KnnMode mode,
                                           std::span<const double> feature_weights,
                                           int positive_class) {
  plan.validate();
  ExperimentReport report;
  report.per_fold.resize(plan.k);
  report.fold_seconds.assign(plan.k, 0.0);
  report.fold_predictions.resize(plan.k);
  for (int f = 0; f < plan.k; ++f) {
    const auto start = std::chrono::steady_clock::now();
    const auto train = data.select_cases(plan.train_ids(f));
    const auto test_ids = plan.test_ids(f);
    const auto test = data.select_cases(test_ids);
    const auto pred = knn_predict(train, test, k_neighbors, mode, feature_weights);
    std::vector<int> truth(test_ids.size());
    for (std::size_t t = 0; t < test_ids.size(); ++t) truth[t] = data.labels[test_ids[t]];
    report.per_fold[f] = confusion_metrics(pred, truth, data.n_classes, positive_class);
    report.fold_predictions[f] = pred;
    report.fold_seconds[f] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  report.finalize();
  return report;
}

// ---------------------------------------------------------------------------
// Sweeps and feature subsets

struct SweepPoint {
  std::string parameter;
  double value = 0;
};

inline CvConfig apply_sweep_point(CvConfig cfg, const SweepPoint& pt) {
  if (pt.parameter == "S") cfg.n_parents = static_cast<int>(pt.value);
  else if (pt.parameter == "alpha") cfg.hp.alpha = pt.value;
  else if (pt.parameter == "gamma") cfg.hp.gamma = pt.value;
  else if (pt.parameter == "sigma1") cfg.hp.sigma1 = pt.value;
  else if (pt.parameter == "sigma2") cfg.hp.sigma2 = pt.value;
  else if (pt.parameter == "lambda0") cfg.hp.lambda0 = pt.value;
  else if (pt.parameter == "lambda") cfg.hp.lambda = pt.value;
  else if (pt.parameter == "mu0") cfg.hp.mu0 = pt.value;
  else if (pt.parameter == "mu") cfg.hp.mu = pt.value;
  else throw std::invalid_argument("sweep: unknown parameter '" + pt.parameter + "'");
  return cfg;
}

// One CV run per grid point over a shared fold plan and shared seeds.
inline std::vector<ExperimentReport> sensitivity_sweep(const CategoricalDataset& data,
                                                       const CvConfig& base,
                                                       std::span<const SweepPoint> grid) {
  if (grid.empty()) throw std::invalid_argument("sensitivity_sweep: empty grid");
  const FoldPlan plan = make_fold_plan(data, base);
  std::vector<ExperimentReport> out;
  for (const auto& pt : grid) {
    CvConfig cfg = apply_sweep_point(base, pt);
    ExperimentReport rep = cross_validate(data, cfg, plan);
    rep.tag = pt.parameter + "=" + std::to_string(pt.value);
    out.push_back(std::move(rep));
  }
  return out;
}

// Retrain with only the selected feature columns; group -> report.
// `ranking` is a feature order, strongest first (feature_importance output).
inline std::vector<std::pair<std::string, ExperimentReport>> feature_subset_eval(
    const CategoricalDataset& data, const CvConfig& cfg, std::span<const int> ranking,
    std::span<const std::pair<std::string, std::pair<int, int>>> groups) {
  if (static_cast<int>(ranking.size()) != data.n_features)
    throw std::invalid_argument("feature_subset_eval: ranking must cover all features");
  std::vector<std::pair<std::string, ExperimentReport>> out;
  for (const auto& [name, range] : groups) {
    std::vector<int> keep;
    if (range.second <= range.first) {  // empty range means "all features"
      keep.resize(data.n_features);
      std::iota(keep.begin(), keep.end(), 0);
    } else {
      for (int r = range.first; r < std::min<int>(range.second, ranking.size()); ++r)
        keep.push_back(ranking[r]);
      std::sort(keep.begin(), keep.end());
    }
    const CategoricalDataset sub = data.select_features(keep);
    ExperimentReport rep = cross_validate(sub, cfg);
    rep.tag = name;
    out.emplace_back(name, std::move(rep));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Runtime profile

struct ProfileRow {
  Variant variant = Variant::ModelI;
  int n_cases = 0, n_parents = 0, n_features = 0;
  double seconds_per_sweep = 0;
  double total_seconds = 0;
  int sweeps = 0;
};

inline CategoricalDataset random_dataset(int n, int p, int cardinality, int n_classes, Rng& rng) {
  CategoricalDataset data;
  data.n_cases = n;
  data.n_features = p;
  data.n_classes = n_classes;
  data.cardinalities.assign(p, cardinality);
  data.features.resize(static_cast<std::size_t>(n) * p);
  data.labels.resize(n);
  for (auto& v : data.features) v = static_cast<int>(rng.uniform_int(cardinality));
  for (auto& y : data.labels) y = static_cast<int>(rng.uniform_int(n_classes));
  return data;
}

// Wall-clock per sweep at given sizes; single-threaded by construction.
inline std::vector<ProfileRow> runtime_profile(std::span<const Variant> variants,
                                               std::span<const int> parent_counts, int n_cases,
                                               int n_features, int cardinality, int sweeps,
                                               std::uint64_t seed) {
  std::vector<ProfileRow> rows;
  for (const Variant variant : variants)
    for (const int s : parent_counts) {
      Rng rng(Rng::mix64(seed + s));
      CategoricalDataset data = random_dataset(n_cases, n_features, cardinality, 2, rng);
      std::vector<int> ids(data.n_cases);
      std::iota(ids.begin(), ids.end(), 0);
      const auto parent_ids = select_parents(ids, s, rng);
      const ParentSet parents = make_parent_set(data, parent_ids);
      Hyperparameters hp;
      hp.variant = variant;
      GibbsSampler sampler(data, parents, hp, /*supervised=*/true);
      sampler.init_from_prior(rng);
      for (int t = 0; t < std::max(2, sweeps / 10); ++t) sampler.sweep(0.5, rng);  // warmup
      const auto start = std::chrono::steady_clock::now();
      for (int t = 0; t < sweeps; ++t) sampler.sweep(0.5, rng);
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      rows.push_back({variant, n_cases, s, n_features, elapsed / sweeps, elapsed, sweeps});
    }
  return rows;
}

}  // namespace bpatch
