#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bpatch/dataset.hpp"
#include "bpatch/rng.hpp"

namespace bpatch {

struct IngestionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// CSV (RFC-4180-style: quoted fields, "" escapes, CRLF tolerated)

inline std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  int c;
  while ((c = in.get()) != EOF) {
    const char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"': quoted = true; any = true; break;
      case ',': row.push_back(field); field.clear(); any = true; break;
      case '\r': break;
      case '\n':
        if (any || !field.empty() || !row.empty()) {
          row.push_back(field);
          rows.push_back(std::move(row));
        }
        row.clear();
        field.clear();
        any = false;
        break;
      default: field.push_back(ch); any = true; break;
    }
  }
  if (any || !field.empty() || !row.empty()) {
    row.push_back(field);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<std::vector<std::string>> read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open CSV file: " + path);
  return parse_csv(in);
}

// ---------------------------------------------------------------------------
// Discretization specs

enum class FeatureKind { NumericBins, CategoryMap };
enum class MissingPolicy { DropRow, ArtificialCategory };

struct NumericRange {
  double lo = 0, hi = 0;  // [lo, hi)
  int category = 0;       // 0-based
};

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::CategoryMap;
  MissingPolicy missing_policy = MissingPolicy::DropRow;
  int categories = 0;  // V_j before any missing-value augmentation

  // numeric-bins: K+1 ascending edges define K bins, left-closed/right-open,
  // last bin right-closed. clamp_out_of_range sends outliers to the end bins.
  std::vector<double> edges;
  bool clamp_out_of_range = false;

  // category-map: exact raw values, optional numeric ranges, optional default.
  std::map<std::string, int> value_map;  // raw -> 0-based category
  std::vector<NumericRange> ranges;
  int default_category = -1;  // -1 = none

  // 0-based category, or kMissing; throws IngestionError when unmapped.
  int discretize(const std::string& raw, std::span<const std::string> missing_markers,
                 int row_for_errors) const {
    for (const auto& m : missing_markers)
      if (raw == m) return kMissing;
    if (kind == FeatureKind::NumericBins) {
      const auto v = parse_number(raw);
      if (!v) throw unmapped(raw, row_for_errors, "not numeric");
      if (*v < edges.front() || *v > edges.back()) {
        if (!clamp_out_of_range) throw unmapped(raw, row_for_errors, "outside bin range");
        return *v < edges.front() ? 0 : categories - 1;
      }
      if (*v == edges.back()) return categories - 1;
      int bin = 0;
      while (bin + 1 < categories && *v >= edges[bin + 1]) ++bin;
      return bin;
    }
    if (const auto it = value_map.find(raw); it != value_map.end()) return it->second;
    if (!ranges.empty()) {
      if (const auto v = parse_number(raw)) {
        for (const auto& r : ranges)
          if (*v >= r.lo && *v < r.hi) return r.category;
      }
    }
    if (default_category >= 0) return default_category;
    throw unmapped(raw, row_for_errors, "no mapping");
  }

  static std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return std::nullopt;
    return v;
  }

private:
  IngestionError unmapped(const std::string& raw, int row, const char* why) const {
    return IngestionError("unmapped value '" + raw + "' in column '" + name + "', data row " +
                          std::to_string(row + 1) + " (" + why + ")");
  }
};

struct LabelSpec {
  std::string column;
  std::vector<std::string> classes;      // class names in index order
  std::map<std::string, int> value_map;  // raw -> 0-based class
  int positive_class = 1;                // 0-based, for binary metrics
};

struct DiscretizationSpec {
  std::string name;
  std::vector<std::string> missing_markers{"?", ""};
  std::vector<FeatureSpec> features;
  std::optional<LabelSpec> label;

  static DiscretizationSpec from_json(const nlohmann::json& js) {
    DiscretizationSpec spec;
    spec.name = js.value("name", "");
    if (js.contains("missing_markers"))
      spec.missing_markers = js.at("missing_markers").get<std::vector<std::string>>();
    for (const auto& f : js.at("features")) {
      FeatureSpec fs;
      fs.name = f.at("name").get<std::string>();
      const std::string kind = f.at("kind").get<std::string>();
      if (kind == "numeric-bins") {
        fs.kind = FeatureKind::NumericBins;
        fs.edges = f.at("edges").get<std::vector<double>>();
        if (fs.edges.size() < 2 || !std::is_sorted(fs.edges.begin(), fs.edges.end()))
          throw IngestionError("spec feature '" + fs.name + "': edges must be ascending");
        fs.categories = static_cast<int>(fs.edges.size()) - 1;
        fs.clamp_out_of_range = f.value("clamp_out_of_range", false);
      } else if (kind == "category-map") {
        fs.kind = FeatureKind::CategoryMap;
        fs.categories = f.at("categories").get<int>();
        if (f.contains("map"))
          for (const auto& [raw, cat] : f.at("map").items())
            fs.value_map[raw] = cat.get<int>() - 1;  // external categories are 1-based
        if (f.contains("ranges"))
          for (const auto& r : f.at("ranges"))
            fs.ranges.push_back({r.at("lo").get<double>(), r.at("hi").get<double>(),
                                 r.at("category").get<int>() - 1});
        if (f.contains("default_category"))
          fs.default_category = f.at("default_category").get<int>() - 1;
        for (const auto& [raw, cat] : fs.value_map)
          if (cat < 0 || cat >= fs.categories)
            throw IngestionError("spec feature '" + fs.name + "': category out of range");
      } else {
        throw IngestionError("spec feature '" + fs.name + "': unknown kind '" + kind + "'");
      }
      const std::string policy = f.value("missing_policy", "drop-row");
      if (policy == "drop-row") fs.missing_policy = MissingPolicy::DropRow;
      else if (policy == "artificial-category") fs.missing_policy = MissingPolicy::ArtificialCategory;
      else throw IngestionError("spec feature '" + fs.name + "': unknown missing policy");
      spec.features.push_back(std::move(fs));
    }
    if (js.contains("label")) {
      LabelSpec ls;
      const auto& l = js.at("label");
      ls.column = l.at("column").get<std::string>();
      ls.classes = l.at("classes").get<std::vector<std::string>>();
      for (const auto& [raw, cls] : l.at("map").items()) {
        const std::string name = cls.get<std::string>();
        const auto it = std::find(ls.classes.begin(), ls.classes.end(), name);
        if (it == ls.classes.end())
          throw IngestionError("spec label: class '" + name + "' not in classes list");
        ls.value_map[raw] = static_cast<int>(it - ls.classes.begin());
      }
      if (l.contains("positive_class")) {
        const std::string pos = l.at("positive_class").get<std::string>();
        const auto it = std::find(ls.classes.begin(), ls.classes.end(), pos);
        if (it == ls.classes.end()) throw IngestionError("spec label: unknown positive class");
        ls.positive_class = static_cast<int>(it - ls.classes.begin());
      }
      spec.label = std::move(ls);
    }
    return spec;
  }

  static DiscretizationSpec from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open spec file: " + path);
    nlohmann::json js;
    in >> js;
    return from_json(js);
  }
};

// Replace every missing cell of feature j with a fresh artificial category.
// No missing cells: identity. Returns the number of replaced cells.
inline int augment_missing(CategoricalDataset& data, int j) {
  if (j < 0 || j >= data.n_features) throw std::invalid_argument("augment_missing: bad feature");
  int count = 0;
  for (int i = 0; i < data.n_cases; ++i)
    if (data.at(i, j) == kMissing) ++count;
  if (count == 0) return 0;
  const int fresh = data.cardinalities[j]++;
  for (int i = 0; i < data.n_cases; ++i)
    if (data.at(i, j) == kMissing) data.at(i, j) = fresh;
  return count;
}

struct LoadResult {
  CategoricalDataset dataset;
  std::vector<int> kept_rows;     // source data-row index per case
  std::vector<int> dropped_rows;  // source data-row indices removed
  int positive_class = 1;
};

// CSV -> discretized CategoricalDataset. Header must contain every spec
// column; rows are dropped or augmented per each feature's missing policy.
inline LoadResult load_csv(const std::string& path, const DiscretizationSpec& spec) {
  const auto rows = read_csv_file(path);
  if (rows.empty()) throw IngestionError("empty CSV: " + path);
  const auto& header = rows.front();
  auto column_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw IngestionError("CSV " + path + " is missing column '" + name + "'");
    return static_cast<int>(it - header.begin());
  };
  std::vector<int> feature_cols;
  for (const auto& f : spec.features) feature_cols.push_back(column_of(f.name));
  const int label_col = spec.label ? column_of(spec.label->column) : -1;

  const int p = static_cast<int>(spec.features.size());
  LoadResult out;
  CategoricalDataset& ds = out.dataset;
  ds.n_features = p;
  for (const auto& f : spec.features) {
    ds.feature_names.push_back(f.name);
    ds.cardinalities.push_back(f.categories);
  }
  if (spec.label) {
    ds.n_classes = static_cast<int>(spec.label->classes.size());
    ds.class_names = spec.label->classes;
    out.positive_class = spec.label->positive_class;
  }

  std::vector<int> staged(p);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const int data_row = static_cast<int>(r) - 1;
    if (static_cast<int>(row.size()) != static_cast<int>(header.size()))
      throw IngestionError("CSV " + path + ": data row " + std::to_string(data_row + 1) +
                           " has " + std::to_string(row.size()) + " fields, header has " +
                           std::to_string(header.size()));
    bool drop = false;
    for (int j = 0; j < p && !drop; ++j) {
      staged[j] = spec.features[j].discretize(row[feature_cols[j]], spec.missing_markers,
                                              data_row);
      if (staged[j] == kMissing &&
          spec.features[j].missing_policy == MissingPolicy::DropRow)
        drop = true;
    }
    int label = kMissing;
    if (!drop && spec.label) {
      const std::string& raw = row[label_col];
      bool missing = false;
      for (const auto& m : spec.missing_markers) missing = missing || raw == m;
      if (missing) {
        drop = true;
      } else {
        const auto it = spec.label->value_map.find(raw);
        if (it == spec.label->value_map.end())
          throw IngestionError("unmapped label '" + raw + "' in column '" +
                               spec.label->column + "', data row " +
                               std::to_string(data_row + 1));
        label = it->second;
      }
    }
    if (drop) {
      out.dropped_rows.push_back(data_row);
      continue;
    }
    ds.features.insert(ds.features.end(), staged.begin(), staged.end());
    if (spec.label) ds.labels.push_back(label);
    out.kept_rows.push_back(data_row);
  }
  ds.n_cases = static_cast<int>(out.kept_rows.size());
  for (int j = 0; j < p; ++j)
    if (spec.features[j].missing_policy == MissingPolicy::ArtificialCategory)
      augment_missing(ds, j);
  ds.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Folds, parents, balancing

struct FoldPlan {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<int> assignments;                  // fold index per case
  std::vector<std::vector<int>> parent_ids_per_fold;

  std::vector<int> train_ids(int fold) const {
    std::vector<int> ids;
    for (int i = 0; i < static_cast<int>(assignments.size()); ++i)
      if (assignments[i] != fold) ids.push_back(i);
    return ids;
  }
  std::vector<int> test_ids(int fold) const {
    std::vector<int> ids;
    for (int i = 0; i < static_cast<int>(assignments.size()); ++i)
      if (assignments[i] == fold) ids.push_back(i);
    return ids;
  }

  void validate() const {
    for (int f : assignments)
      if (f < 0 || f >= k) throw std::invalid_argument("fold plan: assignment out of range");
    if (!parent_ids_per_fold.empty()) {
      if (static_cast<int>(parent_ids_per_fold.size()) != k)
        throw std::invalid_argument("fold plan: parent list count != k");
      for (int f = 0; f < k; ++f)
        for (int id : parent_ids_per_fold[f])
          if (assignments[id] == f)
            throw std::invalid_argument("fold plan: parent drawn from its own test fold");
    }
  }
};

// Uniform sample of S training ids without replacement, order as drawn.
inline std::vector<int> select_parents(std::span<const int> train_ids, int s, Rng& rng) {
  const int n = static_cast<int>(train_ids.size());
  if (s < 1 || s > n)
    throw std::invalid_argument("select_parents: need 1 <= S <= #train (S=" + std::to_string(s) +
                                ", #train=" + std::to_string(n) + ")");
  std::vector<int> ids(train_ids.begin(), train_ids.end());
  for (int t = 0; t < s; ++t) {
    const int pick = t + static_cast<int>(rng.uniform_int(n - t));
    std::swap(ids[t], ids[pick]);
  }
  ids.resize(s);
  return ids;
}

// Near-equal fold sizes (+-1); the stratified option deals each class
// round-robin so per-fold class counts also differ by at most one.
inline FoldPlan kfold_split(const CategoricalDataset& data, int k, Rng& rng, bool stratified) {
  if (k < 2 || k > data.n_cases) throw std::invalid_argument("kfold_split: need 2 <= k <= N");
  if (stratified && !data.has_labels())
    throw std::invalid_argument("kfold_split: stratification needs labels");
  FoldPlan plan;
  plan.k = k;
  plan.seed = rng.seed();
  plan.assignments.assign(data.n_cases, 0);
  auto shuffle = [&](std::vector<int>& v) {
    for (int t = static_cast<int>(v.size()) - 1; t > 0; --t)
      std::swap(v[t], v[static_cast<int>(rng.uniform_int(t + 1))]);
  };
  if (!stratified) {
    std::vector<int> ids(data.n_cases);
    std::iota(ids.begin(), ids.end(), 0);
    shuffle(ids);
    for (int t = 0; t < data.n_cases; ++t) plan.assignments[ids[t]] = t % k;
  } else {
    int cursor = 0;
    for (int c = 0; c < data.n_classes; ++c) {
      std::vector<int> ids;
      for (int i = 0; i < data.n_cases; ++i)
        if (data.labels[i] == c) ids.push_back(i);
      shuffle(ids);
      for (int id : ids) plan.assignments[id] = cursor++ % k;
    }
  }
  return plan;
}

// Seeded uniform subsample of every class down to the minority count;
// returns kept case ids in ascending order.
inline std::vector<int> balance_subsample(const CategoricalDataset& data, Rng& rng) {
  if (!data.has_labels()) throw std::invalid_argument("balance_subsample: labels required");
  std::vector<std::vector<int>> by_class(data.n_classes);
  for (int i = 0; i < data.n_cases; ++i) by_class[data.labels[i]].push_back(i);
  std::size_t target = data.n_cases;
  for (const auto& ids : by_class) target = std::min(target, ids.size());
  if (target == 0) throw std::invalid_argument("balance_subsample: a class has no cases");
  std::vector<int> kept;
  for (auto& ids : by_class) {
    const auto take = select_parents(ids, static_cast<int>(target), rng);
    kept.insert(kept.end(), take.begin(), take.end());
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

}  // namespace bpatch
