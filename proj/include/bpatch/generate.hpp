#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "bpatch/dataset.hpp"
#include "bpatch/model.hpp"
#include "bpatch/rng.hpp"
#include "bpatch/sampler.hpp"

namespace bpatch {

// Output of the forward generative model: the sampled dataset plus every
// latent quantity, for synthetic-data tests and planted-recovery experiments.
struct GenerativeDraw {
  CategoricalDataset dataset;
  ModelState planted_state;
  std::vector<double> planted_qtilde;  // S x P
  std::vector<int> phi_offsets;        // P+1 prefix sums of V_j
  std::vector<double> planted_phi;     // N x sum(V_j)
  std::vector<double> planted_theta;   // N x M

  std::span<const double> phi(int i, int j) const {
    const int total = phi_offsets.back();
    return {planted_phi.data() + static_cast<std::size_t>(i) * total + phi_offsets[j],
            static_cast<std::size_t>(phi_offsets[j + 1] - phi_offsets[j])};
  }
  std::span<const double> theta(int i) const {
    const int m = dataset.n_classes;
    return {planted_theta.data() + static_cast<std::size_t>(i) * m, static_cast<std::size_t>(m)};
  }
};

// Forward sampler for the full hierarchy, in dependency order:
// z, q, q~, w, then phi/x per (i,j), then theta/y per i.
// Deterministic for a fixed seed.
inline GenerativeDraw generate_synthetic(const Hyperparameters& hp, const ParentSet& parents,
                                         int n_cases, std::uint64_t rng_seed) {
  hp.validate();
  parents.validate();
  if (!parents.has_labels())
    throw std::invalid_argument("generate_synthetic: parents must carry labels");
  if (n_cases < 1) throw std::invalid_argument("generate_synthetic: n_cases must be >= 1");

  const int s = parents.size, p = parents.n_features, m = parents.n_classes;
  Rng rng(rng_seed);
  GenerativeDraw out;
  out.planted_state = ModelState::zeros(n_cases, s, p);
  ModelState& st = out.planted_state;

  for (int i = 0; i < n_cases; ++i)
    for (int b = 0; b < s; ++b) st.z_at(i, b) = rng.bernoulli(hp.alpha) ? 1 : 0;

  for (int j = 0; j < p; ++j)
    st.q[j] = GibbsSampler::clamp_unit(rng.beta(hp.gamma, hp.sigma1));

  out.planted_qtilde.resize(static_cast<std::size_t>(s) * p);
  for (int b = 0; b < s; ++b)
    for (int j = 0; j < p; ++j) {
      const double qp = hp.sigma2 * st.q[j] / (1.0 - st.q[j]);
      out.planted_qtilde[static_cast<std::size_t>(b) * p + j] = rng.beta(qp, hp.sigma2);
    }

  for (int i = 0; i < n_cases; ++i)
    for (int b = 0; b < s; ++b)
      for (int j = 0; j < p; ++j)
        st.w_at(i, b, j) =
            rng.bernoulli(out.planted_qtilde[static_cast<std::size_t>(b) * p + j]) ? 1 : 0;

  out.phi_offsets.assign(p + 1, 0);
  for (int j = 0; j < p; ++j) out.phi_offsets[j + 1] = out.phi_offsets[j] + parents.cardinalities[j];
  const int total_cats = out.phi_offsets.back();
  out.planted_phi.resize(static_cast<std::size_t>(n_cases) * total_cats);

  CategoricalDataset& data = out.dataset;
  data.n_cases = n_cases;
  data.n_features = p;
  data.n_classes = m;
  data.cardinalities = parents.cardinalities;
  data.features.assign(static_cast<std::size_t>(n_cases) * p, 0);
  data.labels.assign(n_cases, 0);

  for (int i = 0; i < n_cases; ++i)
    for (int j = 0; j < p; ++j) {
      const auto g = compute_g(st.z_row(i), st.w_slab(i), parents, hp, j);
      const auto phi = rng.dirichlet(g);
      data.at(i, j) = rng.categorical(phi);
      std::copy(phi.begin(), phi.end(),
                out.planted_phi.begin() + static_cast<std::size_t>(i) * total_cats +
                    out.phi_offsets[j]);
    }

  out.planted_theta.resize(static_cast<std::size_t>(n_cases) * m);
  for (int i = 0; i < n_cases; ++i) {
    const auto h = compute_h(st.z_row(i), st.w_slab(i), parents, hp);
    const auto theta = rng.dirichlet(h);
    data.labels[i] = rng.categorical(theta);
    std::copy(theta.begin(), theta.end(),
              out.planted_theta.begin() + static_cast<std::size_t>(i) * m);
  }
  data.validate();
  return out;
}

// Uniformly random labeled parent pool, the usual substrate for synthetic
// experiments.
inline ParentSet random_parent_set(int s, int p, int cardinality, int n_classes, Rng& rng) {
  ParentSet parents;
  parents.size = s;
  parents.n_features = p;
  parents.n_classes = n_classes;
  parents.cardinalities.assign(p, cardinality);
  parents.features.resize(static_cast<std::size_t>(s) * p);
  parents.labels.resize(s);
  for (int b = 0; b < s; ++b) {
    for (int j = 0; j < p; ++j)
      parents.features[static_cast<std::size_t>(b) * p + j] =
          static_cast<int>(rng.uniform_int(cardinality));
    parents.labels[b] = static_cast<int>(rng.uniform_int(n_classes));
  }
  return parents;
}

}  // namespace bpatch
