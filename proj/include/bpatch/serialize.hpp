#pragma once

#include <cstdint>
#include <iomanip>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bpatch/data_io.hpp"
#include "bpatch/dataset.hpp"
#include "bpatch/evaluate.hpp"
#include "bpatch/metrics.hpp"
#include "bpatch/predict.hpp"
#include "bpatch/sampler.hpp"

namespace bpatch {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Run-length encoded bitsets: {"n": length, "first": first bit, "runs": [...]}
// with runs summing to n. Keeps the z/w tensors JSON-friendly.

inline json rle_encode(std::span<const std::uint8_t> bits) {
  json out;
  out["n"] = bits.size();
  out["first"] = bits.empty() ? 0 : static_cast<int>(bits.front());
  json runs = json::array();
  std::size_t i = 0;
  while (i < bits.size()) {
    std::size_t j = i;
    while (j < bits.size() && bits[j] == bits[i]) ++j;
    runs.push_back(j - i);
    i = j;
  }
  out["runs"] = std::move(runs);
  return out;
}

inline std::vector<std::uint8_t> rle_decode(const json& js) {
  const std::size_t n = js.at("n").get<std::size_t>();
  std::uint8_t bit = js.at("first").get<int>() ? 1 : 0;
  std::vector<std::uint8_t> out;
  out.reserve(n);
  for (const auto& run : js.at("runs")) {
    const std::size_t len = run.get<std::size_t>();
    out.insert(out.end(), len, bit);
    bit ^= 1;
  }
  if (out.size() != n) throw std::invalid_argument("rle_decode: runs do not sum to n");
  return out;
}

// ---------------------------------------------------------------------------
// Config and hyperparameters

inline json to_json(const Hyperparameters& hp) {
  return {{"alpha", hp.alpha},   {"gamma", hp.gamma},     {"sigma1", hp.sigma1},
          {"sigma2", hp.sigma2}, {"lambda0", hp.lambda0}, {"lambda", hp.lambda},
          {"mu0", hp.mu0},       {"mu", hp.mu},           {"variant", to_string(hp.variant)}};
}

inline Hyperparameters hyperparameters_from_json(const json& js) {
  Hyperparameters hp;
  hp.alpha = js.at("alpha").get<double>();
  hp.gamma = js.at("gamma").get<double>();
  hp.sigma1 = js.at("sigma1").get<double>();
  hp.sigma2 = js.at("sigma2").get<double>();
  hp.lambda0 = js.at("lambda0").get<double>();
  hp.lambda = js.at("lambda").get<double>();
  hp.mu0 = js.at("mu0").get<double>();
  hp.mu = js.at("mu").get<double>();
  const std::string v = js.at("variant").get<std::string>();
  if (v == "model1") hp.variant = Variant::ModelI;
  else if (v == "model2") hp.variant = Variant::ModelII;
  else throw std::invalid_argument("unknown variant '" + v + "'");
  return hp;
}

inline json to_json(const ChainConfig& c) {
  return {{"n_iterations", c.n_iterations}, {"burn_in", c.burn_in},
          {"thinning", c.thinning},         {"mh_step_size", c.mh_step_size},
          {"rng_seed", c.rng_seed},         {"supervised", c.supervised}};
}

inline ChainConfig chain_config_from_json(const json& js) {
  ChainConfig c;
  c.n_iterations = js.at("n_iterations").get<int>();
  c.burn_in = js.at("burn_in").get<int>();
  c.thinning = js.at("thinning").get<int>();
  c.mh_step_size = js.at("mh_step_size").get<double>();
  c.rng_seed = js.at("rng_seed").get<std::uint64_t>();
  c.supervised = js.at("supervised").get<bool>();
  return c;
}

// ---------------------------------------------------------------------------
// Posterior archives

inline json to_json(const PosteriorSamples& samples) {
  json states = json::array();
  for (const auto& st : samples.states)
    states.push_back({{"q", st.q}, {"z", rle_encode(st.z)}, {"w", rle_encode(st.w)}});
  const auto& first = samples.states.front();
  return {{"format", "bpatch-posterior-v1"},
          {"n_cases", first.n_cases},
          {"n_parents", first.n_parents},
          {"n_features", first.n_features},
          {"config", to_json(samples.config)},
          {"acceptance_rate_q", samples.acceptance_rate_q},
          {"log_posterior_trace", samples.log_posterior_trace},
          {"states", std::move(states)}};
}

inline PosteriorSamples posterior_from_json(const json& js) {
  if (js.value("format", "") != "bpatch-posterior-v1")
    throw std::invalid_argument("posterior archive: unknown format");
  PosteriorSamples out;
  out.config = chain_config_from_json(js.at("config"));
  out.acceptance_rate_q = js.at("acceptance_rate_q").get<std::vector<double>>();
  out.log_posterior_trace = js.at("log_posterior_trace").get<std::vector<double>>();
  const int n = js.at("n_cases").get<int>();
  const int s = js.at("n_parents").get<int>();
  const int p = js.at("n_features").get<int>();
  for (const auto& stj : js.at("states")) {
    ModelState st;
    st.n_cases = n;
    st.n_parents = s;
    st.n_features = p;
    st.q = stj.at("q").get<std::vector<double>>();
    st.z = rle_decode(stj.at("z"));
    st.w = rle_decode(stj.at("w"));
    st.validate();
    out.states.push_back(std::move(st));
  }
  if (out.states.empty()) throw std::invalid_argument("posterior archive: no states");
  ensure_column_counts(out);
  return out;
}

// ---------------------------------------------------------------------------
// Datasets and parent sets (category/class indices 1-based externally)

inline json dataset_to_json(const CategoricalDataset& data, const LoadResult* provenance = nullptr) {
  json columns = json::array();
  for (int j = 0; j < data.n_features; ++j) {
    json col = json::array();
    for (int i = 0; i < data.n_cases; ++i) col.push_back(data.at(i, j) + 1);
    columns.push_back(std::move(col));
  }
  json out{{"format", "bpatch-dataset-v1"},
           {"n_cases", data.n_cases},
           {"n_features", data.n_features},
           {"n_classes", data.n_classes},
           {"feature_names", data.feature_names},
           {"class_names", data.class_names},
           {"cardinalities", data.cardinalities},
           {"columns", std::move(columns)}};
  if (data.has_labels()) {
    json labels = json::array();
    for (int y : data.labels) labels.push_back(y + 1);
    out["labels"] = std::move(labels);
  }
  if (provenance) {
    out["provenance"] = {{"kept_rows", provenance->kept_rows},
                         {"dropped_rows", provenance->dropped_rows},
                         {"positive_class", provenance->positive_class + 1}};
  }
  return out;
}

inline CategoricalDataset dataset_from_json(const json& js) {
  if (js.value("format", "") != "bpatch-dataset-v1")
    throw std::invalid_argument("dataset file: unknown format");
  CategoricalDataset data;
  data.n_cases = js.at("n_cases").get<int>();
  data.n_features = js.at("n_features").get<int>();
  data.n_classes = js.at("n_classes").get<int>();
  data.feature_names = js.at("feature_names").get<std::vector<std::string>>();
  data.class_names = js.at("class_names").get<std::vector<std::string>>();
  data.cardinalities = js.at("cardinalities").get<std::vector<int>>();
  data.features.assign(static_cast<std::size_t>(data.n_cases) * data.n_features, 0);
  const auto& columns = js.at("columns");
  for (int j = 0; j < data.n_features; ++j)
    for (int i = 0; i < data.n_cases; ++i)
      data.at(i, j) = columns.at(j).at(i).get<int>() - 1;
  if (js.contains("labels"))
    for (const auto& y : js.at("labels")) data.labels.push_back(y.get<int>() - 1);
  data.validate();
  return data;
}

inline json parents_to_json(const ParentSet& parents) {
  json rows = json::array();
  for (int b = 0; b < parents.size; ++b) {
    json row = json::array();
    for (int j = 0; j < parents.n_features; ++j) row.push_back(parents.at(b, j) + 1);
    rows.push_back(std::move(row));
  }
  json out{{"format", "bpatch-parents-v1"},
           {"size", parents.size},
           {"n_features", parents.n_features},
           {"n_classes", parents.n_classes},
           {"cardinalities", parents.cardinalities},
           {"source_ids", parents.source_ids},
           {"features", std::move(rows)}};
  if (parents.has_labels()) {
    json labels = json::array();
    for (int y : parents.labels) labels.push_back(y + 1);
    out["labels"] = std::move(labels);
  }
  return out;
}

inline ParentSet parents_from_json(const json& js) {
  if (js.value("format", "") != "bpatch-parents-v1")
    throw std::invalid_argument("parents file: unknown format");
  ParentSet p;
  p.size = js.at("size").get<int>();
  p.n_features = js.at("n_features").get<int>();
  p.n_classes = js.at("n_classes").get<int>();
  p.cardinalities = js.at("cardinalities").get<std::vector<int>>();
  p.source_ids = js.at("source_ids").get<std::vector<int>>();
  for (const auto& row : js.at("features"))
    for (const auto& v : row) p.features.push_back(v.get<int>() - 1);
  if (js.contains("labels"))
    for (const auto& y : js.at("labels")) p.labels.push_back(y.get<int>() - 1);
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// Reports

inline json to_json(const MetricSet& m) {
  json confusion = json::array();
  for (int t = 0; t < m.n_classes; ++t) {
    json row = json::array();
    for (int p = 0; p < m.n_classes; ++p) row.push_back(m.confusion_at(t, p));
    confusion.push_back(std::move(row));
  }
  return {{"accuracy", m.accuracy},
          {"sensitivity", m.sensitivity},
          {"specificity", m.specificity},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f_measure", m.f_measure},
          {"positive_class", m.positive_class + 1},
          {"degenerate_precision", m.degenerate_precision},
          {"confusion", std::move(confusion)}};
}

inline json cv_config_to_json(const CvConfig& cfg) {
  return {{"hyperparameters", to_json(cfg.hp)},
          {"chain", to_json(cfg.chain)},
          {"sweeps_per_sample", cfg.newcase.sweeps_per_sample},
          {"S", cfg.n_parents},
          {"k", cfg.k},
          {"stratified", cfg.stratified},
          {"threshold", cfg.threshold},
          {"positive_class", cfg.positive_class + 1},
          {"seed", cfg.seed},
          {"jobs", cfg.jobs}};
}

inline json report_to_json(const ExperimentReport& rep) {
  json folds = json::array();
  for (const auto& m : rep.per_fold) folds.push_back(to_json(m));
  auto stat = [](const MetricStat& s) { return json{{"mean", s.mean}, {"sd", s.sd}}; };
  return {{"format", "bpatch-report-v1"},
          {"tag", rep.tag},
          {"config", cv_config_to_json(rep.config)},
          {"per_fold", std::move(folds)},
          {"fold_seconds", rep.fold_seconds},
          {"total_seconds", rep.total_seconds},
          {"accuracy", stat(rep.accuracy)},
          {"sensitivity", stat(rep.sensitivity)},
          {"specificity", stat(rep.specificity)},
          {"precision", stat(rep.precision)},
          {"recall", stat(rep.recall)},
          {"f_measure", stat(rep.f_measure)}};
}

// Aligned plain-text table, one row per fold plus mean and SD, percentages.
inline std::string report_to_text(const ExperimentReport& rep) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  if (!rep.tag.empty()) os << rep.tag << "\n";
  os << std::left << std::setw(6) << "Fold" << std::right << std::setw(10) << "Accuracy"
     << std::setw(13) << "Sensitivity" << std::setw(13) << "Specificity" << std::setw(11)
     << "Precision" << std::setw(9) << "Recall" << std::setw(11) << "F-measure" << "\n";
  auto row = [&](const std::string& name, double a, double se, double sp, double pr, double re,
                 double f) {
    os << std::left << std::setw(6) << name << std::right << std::setw(10) << a * 100
       << std::setw(13) << se * 100 << std::setw(13) << sp * 100 << std::setw(11) << pr * 100
       << std::setw(9) << re * 100 << std::setw(11) << f * 100 << "\n";
  };
  for (std::size_t f = 0; f < rep.per_fold.size(); ++f) {
    const auto& m = rep.per_fold[f];
    row(std::to_string(f + 1), m.accuracy, m.sensitivity, m.specificity, m.precision, m.recall,
        m.f_measure);
  }
  row("Mean", rep.accuracy.mean, rep.sensitivity.mean, rep.specificity.mean, rep.precision.mean,
      rep.recall.mean, rep.f_measure.mean);
  row("SD", rep.accuracy.sd, rep.sensitivity.sd, rep.specificity.sd, rep.precision.sd,
      rep.recall.sd, rep.f_measure.sd);
  return os.str();
}

// ---------------------------------------------------------------------------
// Explanations

inline json explanation_to_json(const NeighborExplanation& ex, const ParentSet& parents,
                                std::span<const int> case_values,
                                std::span<const std::string> class_names) {
  auto class_name = [&](int c) {
    return c >= 0 && c < static_cast<int>(class_names.size()) ? json(class_names[c])
                                                              : json(c + 1);
  };
  json case_vals = json::array();
  for (int v : case_values) case_vals.push_back(v + 1);
  json ranked = json::array();
  for (const auto& rp : ex.parents) {
    json values = json::array();
    for (int j = 0; j < parents.n_features; ++j) values.push_back(parents.at(rp.parent_index, j) + 1);
    ranked.push_back({{"parent_index", rp.parent_index},
                      {"source_id", rp.source_id},
                      {"kappa_mean", rp.kappa_mean},
                      {"label", rp.parent_label >= 0 ? class_name(rp.parent_label) : json()},
                      {"values", std::move(values)},
                      {"important_features", rp.important_features},
                      {"feature_match", rp.feature_match}});
  }
  return {{"format", "bpatch-explanation-v1"},
          {"case_id", ex.case_id},
          {"top_k", ex.top_k},
          {"case_values", std::move(case_vals)},
          {"parents", std::move(ranked)}};
}

// Plain-text neighbor table; influential feature values are starred.
inline std::string explanation_to_text(const NeighborExplanation& ex, const ParentSet& parents,
                                       std::span<const int> case_values,
                                       std::span<const std::string> feature_names,
                                       std::span<const std::string> class_names) {
  std::ostringstream os;
  auto class_name = [&](int c) {
    if (c < 0) return std::string("-");
    if (c < static_cast<int>(class_names.size())) return class_names[c];
    return std::to_string(c + 1);
  };
  os << "case " << ex.case_id << "\n";
  if (!feature_names.empty()) {
    os << "  features:";
    for (const auto& n : feature_names) os << " " << n;
    os << "\n";
  }
  os << "  values:  ";
  for (int v : case_values) os << " " << (v + 1);
  os << "\n";
  for (std::size_t r = 0; r < ex.parents.size(); ++r) {
    const auto& rp = ex.parents[r];
    os << "  parent " << r + 1 << " (index " << rp.parent_index;
    if (rp.source_id >= 0) os << ", id " << rp.source_id;
    os << ", label " << class_name(rp.parent_label) << ", kappa " << std::fixed
       << std::setprecision(3) << rp.kappa_mean << "):";
    for (int j = 0; j < parents.n_features; ++j) {
      os << " " << (parents.at(rp.parent_index, j) + 1);
      if (rp.important_features[j]) os << "*";
    }
    os << "\n";
  }
  return os.str();
}

inline json importance_to_json(const FeatureImportance& fi,
                               std::span<const std::string> feature_names) {
  json per = json::array();
  for (std::size_t j = 0; j < fi.per_feature.size(); ++j) {
    const auto& s = fi.per_feature[j];
    per.push_back({{"feature", j},
                   {"name", j < feature_names.size() ? feature_names[j] : ""},
                   {"mean", s.mean},
                   {"q25", s.q25},
                   {"median", s.median},
                   {"q75", s.q75}});
  }
  return {{"format", "bpatch-importance-v1"}, {"per_feature", std::move(per)},
          {"ranking", fi.ranking}};
}

}  // namespace bpatch
