#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bpatch/collapsed.hpp"
#include "bpatch/counts.hpp"
#include "bpatch/dataset.hpp"
#include "bpatch/model.hpp"
#include "bpatch/rng.hpp"

namespace bpatch {

struct ChainConfig {
  int n_iterations = 5000;
  int burn_in = 2000;
  int thinning = 5;
  double mh_step_size = 0.5;  // random-walk scale on logit(q)
  std::uint64_t rng_seed = 1;
  bool supervised = true;

  int retained_count() const { return (n_iterations - burn_in) / thinning; }

  void validate() const {
    if (n_iterations < 1 || burn_in < 0 || burn_in >= n_iterations)
      throw std::invalid_argument("chain config: need 0 <= burn_in < n_iterations");
    if (thinning < 1) throw std::invalid_argument("chain config: thinning must be >= 1");
    if (!(mh_step_size > 0.0))
      throw std::invalid_argument("chain config: mh_step_size must be > 0");
    if (retained_count() < 1)
      throw std::invalid_argument("chain config: no retained states (shorten burn-in or thinning)");
  }
};

struct PosteriorSamples {
  std::vector<ModelState> states;                      // post burn-in, thinned
  std::vector<std::vector<std::int32_t>> w_colsums;    // per state, S x P (derived)
  std::vector<double> acceptance_rate_q;               // per feature
  std::vector<double> log_posterior_trace;             // per iteration
  ChainConfig config;
};

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// One Metropolis-within-Gibbs chain over (z, q, w) for a fixed dataset and
// parent set. The count cache is updated incrementally with every flip; the
// conditionals below are the single implementation used both for the public
// probability queries and for the sweep itself.
//
// The same machinery drives new-case inference: a one-case dataset plus a
// column prior (the retained training w-column counts and their length) makes
// the w-column odds condition on the frozen training chain.
class GibbsSampler {
public:
  GibbsSampler(const CategoricalDataset& data, const ParentSet& parents,
               const Hyperparameters& hp, bool supervised)
      : data_(data), parents_(parents), hp_(hp), supervised_(supervised) {
    hp_.validate();
    data_.validate();
    parents_.validate();
    if (data_.n_features != parents_.n_features)
      throw std::invalid_argument("sampler: dataset and parent set disagree on P");
    if (supervised_) {
      if (!parents_.has_labels())
        throw std::invalid_argument("sampler: supervised training requires parent labels");
      if (!data_.has_labels())
        throw std::invalid_argument("sampler: supervised training requires case labels");
    }
    state_ = ModelState::zeros(data_.n_cases, parents_.size, data_.n_features);
    cache_ = CountCache::build(state_, data_, parents_, hp_.variant);
  }

  // Conditioning for new-case inference: `counts` are the training w-column
  // sums (S x P) and `length` the training N; both add to the local column.
  void set_column_prior(const std::vector<std::int32_t>* counts, int length) {
    if (counts && static_cast<int>(counts->size()) !=
                      parents_.size * data_.n_features)
      throw std::invalid_argument("sampler: column prior shape mismatch");
    col_prior_ = counts;
    col_prior_len_ = counts ? length : 0;
  }

  const ModelState& state() const { return state_; }
  const CountCache& counts() const { return cache_; }
  const Hyperparameters& hyperparameters() const { return hp_; }
  bool supervised() const { return supervised_; }

  void set_state(ModelState st) {
    st.validate();
    if (st.n_cases != data_.n_cases || st.n_parents != parents_.size ||
        st.n_features != data_.n_features)
      throw std::invalid_argument("sampler: state shape mismatch");
    state_ = std::move(st);
    cache_ = CountCache::build(state_, data_, parents_, hp_.variant);
  }

  void set_q(std::span<const double> q) {
    if (static_cast<int>(q.size()) != data_.n_features)
      throw std::invalid_argument("sampler: q length mismatch");
    for (double v : q)
      if (!(v > 0.0 && v < 1.0)) throw std::invalid_argument("sampler: q must lie in (0,1)");
    state_.q.assign(q.begin(), q.end());
  }

  // Prior-draw initialization: z ~ Bernoulli(alpha), q ~ Beta(gamma, sigma1)
  // clamped to [1e-9, 1-1e-9], w ~ Bernoulli(1/2).
  void init_from_prior(Rng& rng) {
    for (int i = 0; i < data_.n_cases; ++i)
      for (int b = 0; b < parents_.size; ++b)
        state_.z_at(i, b) = rng.bernoulli(hp_.alpha) ? 1 : 0;
    for (int j = 0; j < data_.n_features; ++j)
      state_.q[j] = clamp_unit(rng.beta(hp_.gamma, hp_.sigma1));
    for (int i = 0; i < data_.n_cases; ++i)
      for (int b = 0; b < parents_.size; ++b)
        for (int j = 0; j < data_.n_features; ++j)
          state_.w_at(i, b, j) = rng.bernoulli(0.5) ? 1 : 0;
    cache_ = CountCache::build(state_, data_, parents_, hp_.variant);
  }

  // Pr(z_ib = 1 | everything else): prior odds alpha/(1-alpha) times the
  // collapsed predictive factors of every feature this parent influences,
  // times the label factor when training supervised. Log-space sum.
  double cond_z_prob(int i, int b) const {
    if (hp_.alpha <= 0.0) return 0.0;
    if (hp_.alpha >= 1.0) return 1.0;
    double log_odds = logit(hp_.alpha);
    const int z_cur = state_.z_at(i, b);
    const int rowsum = cache_.rowsum_at(i, b);
    const int unit = hp_.variant == Variant::ModelI ? 1 : rowsum;  // vote weight when z=1
    if (unit > 0) {
      for (int j = 0; j < data_.n_features; ++j) {
        if (!state_.w_at(i, b, j)) continue;
        const int x_ij = data_.at(i, j);
        const bool match = parents_.at(b, j) == x_ij;
        const int at = cache_.votes_at(i, j, x_ij) - z_cur * unit * match;
        const int tot = cache_.tot_at(i, j) - z_cur * unit;
        const int v_j = data_.cardinalities[j];
        log_odds += std::log(dcm_factor(hp_.lambda0, hp_.lambda, at + unit * match, tot + unit, v_j)) -
                    std::log(dcm_factor(hp_.lambda0, hp_.lambda, at, tot, v_j));
      }
    }
    if (use_label_factor()) {
      const int lw = hp_.variant == Variant::ModelI ? 1 : rowsum;
      if (lw > 0) {
        const int y_i = data_.labels[i];
        const bool match = parents_.labels[b] == y_i;
        const int at = cache_.yvotes_at(i, y_i) - z_cur * lw * match;
        const int tot = cache_.y_tot[i] - z_cur * lw;
        const int m = parents_.n_classes;
        log_odds += std::log(dcm_factor(hp_.mu0, hp_.mu, at + lw * match, tot + lw, m)) -
                    std::log(dcm_factor(hp_.mu0, hp_.mu, at, tot, m));
      }
    }
    return sigmoid(log_odds);
  }

  // Pr(w_ibj = 1 | everything else): Beta-Binomial column odds times the
  // published predictive factors (feature j for Model I; feature j, the label
  // and the kappa-rescaled influential features for Model II). Ratio
  // arithmetic: every factor is a quotient of bounded positive scores.
  double cond_w_prob(int i, int b, int j) const {
    const int w_cur = state_.w_at(i, b, j);
    const int col_excl = column_count(b, j) - w_cur;
    double odds = (q_prime(state_.q[j], hp_.sigma2) + col_excl) /
                  (hp_.sigma2 + column_length() - 1 - col_excl);
    if (state_.z_at(i, b)) {
      const int x_ij = data_.at(i, j);
      const bool match = parents_.at(b, j) == x_ij;
      const int v_j = data_.cardinalities[j];
      if (hp_.variant == Variant::ModelI) {
        const int at = cache_.votes_at(i, j, x_ij) - w_cur * match;
        const int tot = cache_.tot_at(i, j) - w_cur;
        odds *= dcm_factor(hp_.lambda0, hp_.lambda, at + match, tot + 1, v_j) /
                dcm_factor(hp_.lambda0, hp_.lambda, at, tot, v_j);
      } else {
        // published Model II conditional: the branch enters through kappa in
        // the feature-j and label scores only
        const int row_excl = cache_.rowsum_at(i, b) - w_cur;
        const int kappa_cur = cache_.rowsum_at(i, b);  // z_ib = 1 here
        const int k0 = row_excl, k1 = row_excl + 1;
        {
          const int at = cache_.votes_at(i, j, x_ij) - kappa_cur * w_cur * match;
          const int tot = cache_.tot_at(i, j) - kappa_cur * w_cur;
          odds *= dcm_factor(hp_.lambda0, hp_.lambda, at + k1 * match, tot + k1, v_j) /
                  dcm_factor(hp_.lambda0, hp_.lambda, at, tot, v_j);
        }
        if (use_label_factor()) {
          const int y_i = data_.labels[i];
          const bool m2 = parents_.labels[b] == y_i;
          const int at = cache_.yvotes_at(i, y_i) - kappa_cur * m2;
          const int tot = cache_.y_tot[i] - kappa_cur;
          const int m = parents_.n_classes;
          odds *= dcm_factor(hp_.mu0, hp_.mu, at + k1 * m2, tot + k1, m) /
                  dcm_factor(hp_.mu0, hp_.mu, at + k0 * m2, tot + k0, m);
        }
      }
    }
    return odds / (1.0 + odds);
  }

  // Unnormalized log density of q_j given everything else: Beta prior plus
  // the Beta-Binomial marginal of each parent's w column.
  double cond_q_logdensity(int j, double q_candidate) const {
    if (!(q_candidate > 0.0 && q_candidate < 1.0))
      throw std::invalid_argument("cond_q_logdensity: q must lie in (0,1)");
    double lp = (hp_.gamma - 1.0) * std::log(q_candidate) +
                (hp_.sigma1 - 1.0) * std::log1p(-q_candidate) -
                log_beta(hp_.gamma, hp_.sigma1);
    const int n = column_length();
    for (int b = 0; b < parents_.size; ++b)
      lp += log_marginal_w_column(column_count(b, j), n, q_candidate, hp_.sigma2);
    return lp;
  }

  // Random-walk MH on logit(q_j) with the Jacobian-corrected acceptance.
  std::pair<double, bool> mh_step_q(int j, double step_size, Rng& rng) {
    const double q = state_.q[j];
    double l_prop = logit(q) + step_size * rng.normal();
    // keep the proposal strictly inside (0,1) in double precision
    l_prop = std::clamp(l_prop, -34.5, 34.5);
    const double q_prop = sigmoid(l_prop);
    const double log_accept = cond_q_logdensity(j, q_prop) + std::log(q_prop) +
                              std::log1p(-q_prop) - cond_q_logdensity(j, q) - std::log(q) -
                              std::log1p(-q);
    const bool accepted = std::log(rng.uniform_pos()) < log_accept;
    if (accepted) state_.q[j] = q_prop;
    return {state_.q[j], accepted};
  }

  // One full pass in the published order: all z (row-major), all q (by
  // feature), all w (lexicographic i, b, j). Per-feature q acceptances are
  // added into `q_accepts` when provided.
  void sweep(double mh_step_size, Rng& rng, std::vector<int>* q_accepts = nullptr) {
    sweep_z(rng);
    for (int j = 0; j < data_.n_features; ++j)
      if (mh_step_q(j, mh_step_size, rng).second && q_accepts) ++(*q_accepts)[j];
    sweep_w(rng);
    assert(cache_.matches(state_, data_, parents_, hp_.variant));
  }

  // z and w passes only; used for new-case inference where q is conditioned
  // on a retained training sample.
  void sweep_zw(Rng& rng) {
    sweep_z(rng);
    sweep_w(rng);
  }

  // Collapsed log posterior of the current state, up to an additive constant.
  double log_posterior() const {
    double lp = 0.0;
    for (int j = 0; j < data_.n_features; ++j) lp += cond_q_logdensity(j, state_.q[j]);
    for (int i = 0; i < data_.n_cases; ++i)
      for (int j = 0; j < data_.n_features; ++j)
        lp += std::log(dcm_factor(hp_.lambda0, hp_.lambda, cache_.votes_at(i, j, data_.at(i, j)),
                                  cache_.tot_at(i, j), data_.cardinalities[j]));
    if (use_label_factor())
      for (int i = 0; i < data_.n_cases; ++i)
        lp += std::log(dcm_factor(hp_.mu0, hp_.mu, cache_.yvotes_at(i, data_.labels[i]),
                                  cache_.y_tot[i], parents_.n_classes));
    if (hp_.alpha > 0.0 && hp_.alpha < 1.0) {
      long ones = 0;
      for (auto v : state_.z) ones += v;
      lp += ones * std::log(hp_.alpha) +
            (static_cast<long>(state_.z.size()) - ones) * std::log1p(-hp_.alpha);
    }
    return lp;
  }

  void apply_z(int i, int b, std::uint8_t v) {
    cache_.apply_z(state_, data_, parents_, hp_.variant, i, b, v);
  }
  void apply_w(int i, int b, int j, std::uint8_t v) {
    cache_.apply_w(state_, data_, parents_, hp_.variant, i, b, j, v);
  }

  static double clamp_unit(double q) { return std::clamp(q, 1e-9, 1.0 - 1e-9); }

private:
  bool use_label_factor() const { return supervised_ && parents_.has_labels(); }

  int column_count(int b, int j) const {
    int c = cache_.colsum_at(b, j);
    if (col_prior_) c += (*col_prior_)[static_cast<std::size_t>(b) * data_.n_features + j];
    return c;
  }
  int column_length() const { return data_.n_cases + col_prior_len_; }

  void sweep_z(Rng& rng) {
    for (int i = 0; i < data_.n_cases; ++i)
      for (int b = 0; b < parents_.size; ++b) {
        const double p = cond_z_prob(i, b);
        apply_z(i, b, rng.uniform() < p ? 1 : 0);
      }
  }

  void sweep_w(Rng& rng) {
    for (int i = 0; i < data_.n_cases; ++i)
      for (int b = 0; b < parents_.size; ++b)
        for (int j = 0; j < data_.n_features; ++j) {
          const double p = cond_w_prob(i, b, j);
          apply_w(i, b, j, rng.uniform() < p ? 1 : 0);
        }
  }

  CategoricalDataset data_;
  ParentSet parents_;
  Hyperparameters hp_;
  bool supervised_;
  ModelState state_;
  CountCache cache_;
  const std::vector<std::int32_t>* col_prior_ = nullptr;
  int col_prior_len_ = 0;
};

// Full chain driver: prior initialization, n_iterations sweeps, burn-in
// discard, thinning, per-iteration log-posterior trace and q acceptance rates.
inline PosteriorSamples run_chain(const CategoricalDataset& data, const ParentSet& parents,
                                  const Hyperparameters& hp, const ChainConfig& config) {
  config.validate();
  GibbsSampler sampler(data, parents, hp, config.supervised);
  Rng rng(config.rng_seed);
  sampler.init_from_prior(rng);

  PosteriorSamples out;
  out.config = config;
  out.log_posterior_trace.reserve(config.n_iterations);
  std::vector<int> accepts(data.n_features, 0);

  for (int t = 1; t <= config.n_iterations; ++t) {
    sampler.sweep(config.mh_step_size, rng, &accepts);
    const double lp = sampler.log_posterior();
    if (!std::isfinite(lp))
      throw std::runtime_error("run_chain: non-finite log posterior at iteration " +
                               std::to_string(t));
    out.log_posterior_trace.push_back(lp);
    if (t > config.burn_in && (t - config.burn_in) % config.thinning == 0) {
      out.states.push_back(sampler.state());
      out.w_colsums.push_back(sampler.counts().w_colsum);
    }
  }
  out.acceptance_rate_q.resize(data.n_features);
  for (int j = 0; j < data.n_features; ++j)
    out.acceptance_rate_q[j] = static_cast<double>(accepts[j]) / config.n_iterations;
  return out;
}

}  // namespace bpatch
