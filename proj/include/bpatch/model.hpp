#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "bpatch/dataset.hpp"

namespace bpatch {

// One MCMC state over the collapsed model: neighbor indicators z (N x S),
// feature-influence indicators w (N x S x P), and feature importances q (P).
// q~, phi and theta are integrated out analytically and never stored.
struct ModelState {
  int n_cases = 0;     // N
  int n_parents = 0;   // S
  int n_features = 0;  // P
  std::vector<std::uint8_t> z;  // N x S
  std::vector<std::uint8_t> w;  // N x S x P
  std::vector<double> q;        // P, entries in (0,1)

  static ModelState zeros(int n, int s, int p) {
    ModelState st;
    st.n_cases = n;
    st.n_parents = s;
    st.n_features = p;
    st.z.assign(static_cast<std::size_t>(n) * s, 0);
    st.w.assign(static_cast<std::size_t>(n) * s * p, 0);
    st.q.assign(p, 0.5);
    return st;
  }

  std::uint8_t z_at(int i, int b) const { return z[static_cast<std::size_t>(i) * n_parents + b]; }
  std::uint8_t& z_at(int i, int b) { return z[static_cast<std::size_t>(i) * n_parents + b]; }
  std::uint8_t w_at(int i, int b, int j) const {
    return w[(static_cast<std::size_t>(i) * n_parents + b) * n_features + j];
  }
  std::uint8_t& w_at(int i, int b, int j) {
    return w[(static_cast<std::size_t>(i) * n_parents + b) * n_features + j];
  }
  std::span<const std::uint8_t> z_row(int i) const {
    return {z.data() + static_cast<std::size_t>(i) * n_parents, static_cast<std::size_t>(n_parents)};
  }
  std::span<const std::uint8_t> w_slab(int i) const {
    return {w.data() + static_cast<std::size_t>(i) * n_parents * n_features,
            static_cast<std::size_t>(n_parents) * n_features};
  }

  void validate() const {
    if (z.size() != static_cast<std::size_t>(n_cases) * n_parents ||
        w.size() != static_cast<std::size_t>(n_cases) * n_parents * n_features ||
        q.size() != static_cast<std::size_t>(n_features))
      throw std::invalid_argument("state: shape mismatch");
    for (auto v : z)
      if (v > 1) throw std::invalid_argument("state: z must be binary");
    for (auto v : w)
      if (v > 1) throw std::invalid_argument("state: w must be binary");
    for (double v : q)
      if (!(v > 0.0 && v < 1.0)) throw std::invalid_argument("state: q must lie in (0,1)");
  }
};

// kappa_ib = z_ib * sum_j w_ibj, the degree of influence of parent b on case
// i. Derived, never stored.
inline std::vector<int> compute_kappa(std::span<const std::uint8_t> z_row,
                                      std::span<const std::uint8_t> w_slab) {
  const std::size_t s = z_row.size();
  if (s == 0 || w_slab.size() % s != 0)
    throw std::invalid_argument("compute_kappa: slab shape must be S x P");
  const std::size_t p = w_slab.size() / s;
  std::vector<int> kappa(s, 0);
  for (std::size_t b = 0; b < s; ++b) {
    if (!z_row[b]) continue;
    int sum = 0;
    for (std::size_t j = 0; j < p; ++j) sum += w_slab[b * p + j];
    kappa[b] = sum;
  }
  return kappa;
}

// Feature-vote scores g_ij(.) over the V_j outcomes of feature j.
// Model I:  g(v) = lambda0 + lambda * #{b : z_ib=1, w_ibj=1, x_bj=v}
// Model II: g(v) = lambda0 + lambda * sum_b kappa_ib [w_ibj=1, x_bj=v]
inline std::vector<double> compute_g(std::span<const std::uint8_t> z_row,
                                     std::span<const std::uint8_t> w_slab,
                                     const ParentSet& parents, const Hyperparameters& hp, int j) {
  if (j < 0 || j >= parents.n_features) throw std::invalid_argument("compute_g: bad feature index");
  if (static_cast<int>(z_row.size()) != parents.size ||
      w_slab.size() != static_cast<std::size_t>(parents.size) * parents.n_features)
    throw std::invalid_argument("compute_g: state does not match parent set");
  std::vector<double> g(parents.cardinalities[j], hp.lambda0);
  const std::size_t p = parents.n_features;
  if (hp.variant == Variant::ModelI) {
    for (int b = 0; b < parents.size; ++b)
      if (z_row[b] && w_slab[b * p + j]) g[parents.at(b, j)] += hp.lambda;
  } else {
    const auto kappa = compute_kappa(z_row, w_slab);
    for (int b = 0; b < parents.size; ++b)
      if (kappa[b] > 0 && w_slab[b * p + j]) g[parents.at(b, j)] += hp.lambda * kappa[b];
  }
  return g;
}

// Label-vote scores h_i(.) over the M classes.
inline std::vector<double> compute_h(std::span<const std::uint8_t> z_row,
                                     std::span<const std::uint8_t> w_slab,
                                     const ParentSet& parents, const Hyperparameters& hp) {
  if (!parents.has_labels())
    throw std::logic_error("compute_h: parent labels required");
  if (static_cast<int>(z_row.size()) != parents.size)
    throw std::invalid_argument("compute_h: state does not match parent set");
  std::vector<double> h(parents.n_classes, hp.mu0);
  if (hp.variant == Variant::ModelI) {
    for (int b = 0; b < parents.size; ++b)
      if (z_row[b]) h[parents.labels[b]] += hp.mu;
  } else {
    const auto kappa = compute_kappa(z_row, w_slab);
    for (int b = 0; b < parents.size; ++b)
      if (kappa[b] > 0) h[parents.labels[b]] += hp.mu * kappa[b];
  }
  return h;
}

// Binary similarity kernel for continuous features: 1 iff |x - v| <= r.
inline bool kernel_indicator(double x_bj, double v, double bandwidth) {
  if (bandwidth < 0.0) throw std::invalid_argument("kernel_indicator: bandwidth must be >= 0");
  return std::abs(x_bj - v) <= bandwidth;
}

// Kernel form of the feature-vote score at a continuous query value v for one
// feature: w_column holds w_ibj over parents b, parent_values holds x_bj.
inline double compute_g_kernel(std::span<const std::uint8_t> z_row,
                               std::span<const std::uint8_t> w_column,
                               std::span<const double> parent_values,
                               const Hyperparameters& hp, double v, double bandwidth) {
  const std::size_t s = z_row.size();
  if (parent_values.size() != s || w_column.size() != s)
    throw std::invalid_argument("compute_g_kernel: shape mismatch");
  double g = hp.lambda0;
  for (std::size_t b = 0; b < s; ++b)
    if (z_row[b] && w_column[b] && kernel_indicator(parent_values[b], v, bandwidth))
      g += hp.lambda;
  return g;
}

}  // namespace bpatch
