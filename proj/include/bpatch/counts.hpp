#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "bpatch/collapsed.hpp"
#include "bpatch/dataset.hpp"
#include "bpatch/model.hpp"

namespace bpatch {

// One collapsed predictive factor (lambda0 + lambda*count + 1) /
// (V*lambda0 + lambda*total + 1), shared by every conditional so the
// published "+1" convention lives in exactly one place (collapsed.hpp).
inline double dcm_factor(double base, double scale, int count_at, int total, int n_outcomes) {
  return dcm_predictive(base + scale * count_at, n_outcomes * base + scale * total);
}

// Integer vote counts that feed g and h, plus the w column/row sums, kept
// incrementally in sync with a ModelState. Model I counts plain votes;
// Model II counts kappa-weighted votes.
struct CountCache {
  int n_cases = 0, n_parents = 0, n_features = 0, n_classes = 0;
  int total_cats = 0;
  std::vector<int> offsets;           // P+1 prefix sums of V_j
  std::vector<std::int32_t> x_votes;  // N x total_cats, vote count behind g_ij(v)
  std::vector<std::int32_t> x_tot;    // N x P, sum over v
  std::vector<std::int32_t> y_votes;  // N x M, vote count behind h_i(m); empty if unlabeled
  std::vector<std::int32_t> y_tot;    // N
  std::vector<std::int32_t> w_colsum; // S x P, sum_i w_ibj
  std::vector<std::int32_t> w_rowsum; // N x S, sum_j w_ibj

  std::int32_t votes_at(int i, int j, int v) const {
    return x_votes[static_cast<std::size_t>(i) * total_cats + offsets[j] + v];
  }
  std::int32_t tot_at(int i, int j) const {
    return x_tot[static_cast<std::size_t>(i) * n_features + j];
  }
  std::int32_t yvotes_at(int i, int m) const {
    return y_votes[static_cast<std::size_t>(i) * n_classes + m];
  }
  std::int32_t colsum_at(int b, int j) const {
    return w_colsum[static_cast<std::size_t>(b) * n_features + j];
  }
  std::int32_t rowsum_at(int i, int b) const {
    return w_rowsum[static_cast<std::size_t>(i) * n_parents + b];
  }
  int kappa_at(const ModelState& st, int i, int b) const {
    return st.z_at(i, b) ? rowsum_at(i, b) : 0;
  }

  static CountCache build(const ModelState& st, const CategoricalDataset& data,
                          const ParentSet& parents, Variant variant) {
    CountCache c;
    c.n_cases = data.n_cases;
    c.n_parents = parents.size;
    c.n_features = data.n_features;
    c.n_classes = parents.has_labels() ? parents.n_classes : 0;
    c.offsets.assign(data.n_features + 1, 0);
    for (int j = 0; j < data.n_features; ++j)
      c.offsets[j + 1] = c.offsets[j] + data.cardinalities[j];
    c.total_cats = c.offsets.back();
    c.x_votes.assign(static_cast<std::size_t>(c.n_cases) * c.total_cats, 0);
    c.x_tot.assign(static_cast<std::size_t>(c.n_cases) * c.n_features, 0);
    if (c.n_classes > 0) {
      c.y_votes.assign(static_cast<std::size_t>(c.n_cases) * c.n_classes, 0);
      c.y_tot.assign(c.n_cases, 0);
    }
    c.w_colsum.assign(static_cast<std::size_t>(c.n_parents) * c.n_features, 0);
    c.w_rowsum.assign(static_cast<std::size_t>(c.n_cases) * c.n_parents, 0);

    for (int i = 0; i < c.n_cases; ++i)
      for (int b = 0; b < c.n_parents; ++b) {
        int rowsum = 0;
        for (int j = 0; j < c.n_features; ++j) {
          if (!st.w_at(i, b, j)) continue;
          ++rowsum;
          ++c.w_colsum[static_cast<std::size_t>(b) * c.n_features + j];
        }
        c.w_rowsum[static_cast<std::size_t>(i) * c.n_parents + b] = rowsum;
        const int weight = st.z_at(i, b) ? (variant == Variant::ModelI ? 1 : rowsum) : 0;
        if (weight == 0) continue;
        for (int j = 0; j < c.n_features; ++j) {
          if (!st.w_at(i, b, j)) continue;
          c.x_votes[static_cast<std::size_t>(i) * c.total_cats + c.offsets[j] +
                    parents.at(b, j)] += weight;
          c.x_tot[static_cast<std::size_t>(i) * c.n_features + j] += weight;
        }
        if (c.n_classes > 0) {
          const int lw = variant == Variant::ModelI ? 1 : weight;
          c.y_votes[static_cast<std::size_t>(i) * c.n_classes + parents.labels[b]] += lw;
          c.y_tot[i] += lw;
        }
      }
    return c;
  }

  // Exact recount equality; the sweep asserts this in debug builds.
  bool matches(const ModelState& st, const CategoricalDataset& data, const ParentSet& parents,
               Variant variant) const {
    const CountCache fresh = build(st, data, parents, variant);
    return fresh.x_votes == x_votes && fresh.x_tot == x_tot && fresh.y_votes == y_votes &&
           fresh.y_tot == y_tot && fresh.w_colsum == w_colsum && fresh.w_rowsum == w_rowsum;
  }

  // Flip z_ib to new_z, updating state and counts together.
  void apply_z(ModelState& st, const CategoricalDataset& data, const ParentSet& parents,
               Variant variant, int i, int b, std::uint8_t new_z) {
    const std::uint8_t old_z = st.z_at(i, b);
    if (old_z == new_z) return;
    st.z_at(i, b) = new_z;
    const int rowsum = rowsum_at(i, b);
    const int unit = variant == Variant::ModelI ? 1 : rowsum;
    const int delta = (static_cast<int>(new_z) - static_cast<int>(old_z)) * unit;
    if (delta != 0) {
      for (int j = 0; j < n_features; ++j) {
        if (!st.w_at(i, b, j)) continue;
        x_votes[static_cast<std::size_t>(i) * total_cats + offsets[j] + parents.at(b, j)] += delta;
        x_tot[static_cast<std::size_t>(i) * n_features + j] += delta;
      }
    }
    if (n_classes > 0) {
      const int label_delta = static_cast<int>(new_z) - static_cast<int>(old_z);
      const int ld = variant == Variant::ModelI ? label_delta : delta;
      if (ld != 0) {
        y_votes[static_cast<std::size_t>(i) * n_classes + parents.labels[b]] += ld;
        y_tot[i] += ld;
      }
    }
    (void)data;
  }

  // Set w_ibj to new_w, updating state and counts together.
  void apply_w(ModelState& st, const CategoricalDataset& data, const ParentSet& parents,
               Variant variant, int i, int b, int j, std::uint8_t new_w) {
    const std::uint8_t old_w = st.w_at(i, b, j);
    if (old_w == new_w) return;
    st.w_at(i, b, j) = new_w;
    const int delta = static_cast<int>(new_w) - static_cast<int>(old_w);
    w_colsum[static_cast<std::size_t>(b) * n_features + j] += delta;
    const int old_rowsum = rowsum_at(i, b);
    const int new_rowsum = old_rowsum + delta;
    w_rowsum[static_cast<std::size_t>(i) * n_parents + b] = new_rowsum;
    if (!st.z_at(i, b)) return;

    auto vote = [&](int jj, int d) {
      x_votes[static_cast<std::size_t>(i) * total_cats + offsets[jj] + parents.at(b, jj)] += d;
      x_tot[static_cast<std::size_t>(i) * n_features + jj] += d;
    };
    if (variant == Variant::ModelI) {
      vote(j, delta);
      return;
    }
    // Model II: kappa_ib changed from old_rowsum to new_rowsum, rescaling this
    // parent's contribution on every influential feature and on the label.
    const int kappa_delta = new_rowsum - old_rowsum;
    for (int jj = 0; jj < n_features; ++jj) {
      if (jj == j || !st.w_at(i, b, jj)) continue;
      vote(jj, kappa_delta);
    }
    // feature j itself: contribution is kappa * w
    vote(j, new_rowsum * new_w - old_rowsum * old_w);
    if (n_classes > 0) {
      y_votes[static_cast<std::size_t>(i) * n_classes + parents.labels[b]] += kappa_delta;
      y_tot[i] += kappa_delta;
    }
    (void)data;
  }
};

}  // namespace bpatch
