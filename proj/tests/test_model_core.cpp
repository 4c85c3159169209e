#include <catch2/catch_amalgamated.hpp>

#include "bpatch/dataset.hpp"
#include "bpatch/generate.hpp"
#include "bpatch/model.hpp"
#include "bpatch/rng.hpp"

using namespace bpatch;

namespace {

ParentSet tiny_parents(std::vector<std::vector<int>> rows, std::vector<int> labels,
                       std::vector<int> cards, int n_classes) {
  ParentSet p;
  p.size = static_cast<int>(rows.size());
  p.n_features = static_cast<int>(cards.size());
  p.n_classes = n_classes;
  p.cardinalities = std::move(cards);
  for (auto& r : rows) p.features.insert(p.features.end(), r.begin(), r.end());
  p.labels = std::move(labels);
  p.validate();
  return p;
}

Hyperparameters vote_hp(Variant v) {
  Hyperparameters hp;
  hp.lambda0 = 0.001;
  hp.lambda = 2.0;
  hp.mu0 = 0.001;
  hp.mu = 1.0;
  hp.variant = v;
  return hp;
}

}  // namespace

TEST_CASE("feature vote scores g", "[model_core]") {
  // two parents, one feature with three outcomes
  auto parents = tiny_parents({{1}, {1}}, {0, 1}, {3}, 2);

  SECTION("no qualifying parent leaves the baseline everywhere") {
    const auto hp = vote_hp(Variant::ModelI);
    std::vector<std::uint8_t> z{0, 0}, w{1, 1};
    const auto g = compute_g(z, w, parents, hp, 0);
    REQUIRE(g == std::vector<double>{0.001, 0.001, 0.001});
  }
  SECTION("two matching neighbors boost the shared outcome") {
    const auto hp = vote_hp(Variant::ModelI);
    std::vector<std::uint8_t> z{1, 1}, w{1, 1};
    const auto g = compute_g(z, w, parents, hp, 0);
    REQUIRE_THAT(g[1], Catch::Matchers::WithinAbs(4.001, 1e-12));
    REQUIRE_THAT(g[0], Catch::Matchers::WithinAbs(0.001, 1e-12));
  }
  SECTION("degree-weighted votes count kappa times") {
    const auto hp = vote_hp(Variant::ModelII);
    // three features so one parent can reach kappa = 3
    auto p3 = tiny_parents({{1, 0, 0}}, {0}, {3, 2, 2}, 2);
    std::vector<std::uint8_t> z{1}, w{1, 1, 1};
    const auto g = compute_g(z, w, p3, hp, 0);
    REQUIRE_THAT(g[1], Catch::Matchers::WithinAbs(6.001, 1e-12));
  }
  SECTION("dimension mismatch is rejected") {
    const auto hp = vote_hp(Variant::ModelI);
    std::vector<std::uint8_t> z{1}, w{1};
    REQUIRE_THROWS_AS(compute_g(z, w, parents, hp, 0), std::invalid_argument);
    std::vector<std::uint8_t> z2{1, 1}, w2{1, 1};
    REQUIRE_THROWS_AS(compute_g(z2, w2, parents, hp, 5), std::invalid_argument);
  }
}

TEST_CASE("label vote scores h", "[model_core]") {
  SECTION("three neighbors voting the second class") {
    auto parents = tiny_parents({{0}, {0}, {0}}, {1, 1, 1}, {2}, 2);
    const auto hp = vote_hp(Variant::ModelI);
    std::vector<std::uint8_t> z{1, 1, 1}, w{0, 0, 0};
    const auto h = compute_h(z, w, parents, hp);
    REQUIRE_THAT(h[0], Catch::Matchers::WithinAbs(0.001, 1e-12));
    REQUIRE_THAT(h[1], Catch::Matchers::WithinAbs(3.001, 1e-12));
  }
  SECTION("no neighbors leaves the baseline") {
    auto parents = tiny_parents({{0}, {0}}, {0, 1}, {2}, 2);
    const auto hp = vote_hp(Variant::ModelI);
    std::vector<std::uint8_t> z{0, 0}, w{1, 1};
    const auto h = compute_h(z, w, parents, hp);
    REQUIRE(h == std::vector<double>{0.001, 0.001});
  }
  SECTION("kappa-weighted label vote") {
    auto parents = tiny_parents({{0, 0, 0, 0}}, {0}, {2, 2, 2, 2}, 2);
    const auto hp = vote_hp(Variant::ModelII);
    std::vector<std::uint8_t> z{1}, w{1, 1, 1, 1};
    const auto h = compute_h(z, w, parents, hp);
    REQUIRE_THAT(h[0], Catch::Matchers::WithinAbs(4.001, 1e-12));
    REQUIRE_THAT(h[1], Catch::Matchers::WithinAbs(0.001, 1e-12));
  }
  SECTION("unlabeled parents are rejected") {
    auto parents = tiny_parents({{0}}, {}, {2}, 2);
    parents.labels.clear();
    const auto hp = vote_hp(Variant::ModelI);
    std::vector<std::uint8_t> z{1}, w{1};
    REQUIRE_THROWS_AS(compute_h(z, w, parents, hp), std::logic_error);
  }
}

TEST_CASE("degree of influence kappa", "[model_core]") {
  std::vector<std::uint8_t> z{1, 0};
  std::vector<std::uint8_t> w{1, 1, 1, 1, 1, 1, 1, 1};  // 2 parents x 4 features
  auto kappa = compute_kappa(z, w);
  REQUIRE(kappa == std::vector<int>{4, 0});

  std::vector<std::uint8_t> w0(8, 0);
  REQUIRE(compute_kappa(z, w0) == std::vector<int>{0, 0});
}

TEST_CASE("binary similarity kernel", "[model_core]") {
  REQUIRE(kernel_indicator(5.0, 5.3, 0.5));
  REQUIRE_FALSE(kernel_indicator(5.0, 6.0, 0.5));
  REQUIRE(kernel_indicator(7.25, 7.25, 0.0));
  REQUIRE_THROWS_AS(kernel_indicator(1.0, 1.0, -0.1), std::invalid_argument);

  // kernel-based vote score at a continuous query point
  Hyperparameters hp = vote_hp(Variant::ModelI);
  std::vector<std::uint8_t> z{1, 1, 0};
  std::vector<std::uint8_t> w{1, 0, 1};
  std::vector<double> values{5.1, 5.2, 5.3};
  REQUIRE_THAT(compute_g_kernel(z, w, values, hp, 5.0, 0.15),
               Catch::Matchers::WithinAbs(2.001, 1e-12));  // only parent 0 qualifies
}

TEST_CASE("score bounds and monotonicity", "[model_core][property]") {
  Rng rng(7);
  auto parents = tiny_parents({{0, 1, 2}, {1, 1, 0}, {2, 0, 1}, {0, 0, 0}}, {0, 1, 0, 1},
                              {3, 2, 3}, 2);
  for (int rep = 0; rep < 50; ++rep) {
    const Variant variant = rep % 2 ? Variant::ModelII : Variant::ModelI;
    const auto hp = vote_hp(variant);
    std::vector<std::uint8_t> z(4), w(12);
    for (auto& v : z) v = rng.bernoulli(0.5);
    for (auto& v : w) v = rng.bernoulli(0.5);
    for (int j = 0; j < 3; ++j) {
      const auto g = compute_g(z, w, parents, hp, j);
      for (double v : g) REQUIRE(v >= hp.lambda0);
    }
    const auto h = compute_h(z, w, parents, hp);
    for (double v : h) REQUIRE(v >= hp.mu0);

    // dropping a neighbor never increases any score
    const int b = static_cast<int>(rng.uniform_int(4));
    if (!z[b]) continue;
    auto z2 = z;
    z2[b] = 0;
    for (int j = 0; j < 3; ++j) {
      const auto g1 = compute_g(z, w, parents, hp, j);
      const auto g2 = compute_g(z2, w, parents, hp, j);
      for (std::size_t v = 0; v < g1.size(); ++v) REQUIRE(g2[v] <= g1[v] + 1e-15);
    }
    const auto h2 = compute_h(z2, w, parents, hp);
    for (std::size_t m = 0; m < h.size(); ++m) REQUIRE(h2[m] <= h[m] + 1e-15);
  }
}

TEST_CASE("models agree when every active neighbor has a single influence", "[model_core][property]") {
  Rng rng(11);
  auto parents = tiny_parents({{0, 1, 2}, {1, 1, 0}, {2, 0, 1}}, {0, 1, 0}, {3, 2, 3}, 2);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<std::uint8_t> z(3), w(9, 0);
    for (int b = 0; b < 3; ++b) {
      z[b] = rng.bernoulli(0.5);
      w[b * 3 + rng.uniform_int(3)] = 1;  // exactly one influential feature
    }
    const auto hp1 = vote_hp(Variant::ModelI);
    const auto hp2 = vote_hp(Variant::ModelII);
    for (int j = 0; j < 3; ++j)
      REQUIRE(compute_g(z, w, parents, hp1, j) == compute_g(z, w, parents, hp2, j));
    REQUIRE(compute_h(z, w, parents, hp1) == compute_h(z, w, parents, hp2));
  }
}

TEST_CASE("forward generative sampler", "[model_core][generate]") {
  Rng prng(3);
  auto parents = random_parent_set(4, 3, 3, 2, prng);
  Hyperparameters hp;
  hp.variant = Variant::ModelI;

  SECTION("fixed seed reproduces bit-identically") {
    const auto a = generate_synthetic(hp, parents, 20, 99);
    const auto b = generate_synthetic(hp, parents, 20, 99);
    REQUIRE(a.dataset.features == b.dataset.features);
    REQUIRE(a.dataset.labels == b.dataset.labels);
    REQUIRE(a.planted_state.z == b.planted_state.z);
    REQUIRE(a.planted_state.w == b.planted_state.w);
    REQUIRE(a.planted_state.q == b.planted_state.q);
    REQUIRE(a.planted_qtilde == b.planted_qtilde);
    REQUIRE(a.planted_phi == b.planted_phi);
    REQUIRE(a.planted_theta == b.planted_theta);
  }
  SECTION("alpha extremes pin z") {
    auto hp0 = hp;
    hp0.alpha = 0.0;
    const auto d0 = generate_synthetic(hp0, parents, 10, 5);
    for (auto v : d0.planted_state.z) REQUIRE(v == 0);
    auto hp1 = hp;
    hp1.alpha = 1.0;
    const auto d1 = generate_synthetic(hp1, parents, 10, 5);
    for (auto v : d1.planted_state.z) REQUIRE(v == 1);
  }
  SECTION("planted simplexes sum to one") {
    const auto d = generate_synthetic(hp, parents, 15, 17);
    for (int i = 0; i < 15; ++i) {
      for (int j = 0; j < 3; ++j) {
        double s = 0;
        for (double v : d.phi(i, j)) {
          REQUIRE(v >= 0.0);
          s += v;
        }
        REQUIRE_THAT(s, Catch::Matchers::WithinAbs(1.0, 1e-12));
      }
      double s = 0;
      for (double v : d.theta(i)) {
        REQUIRE(v >= 0.0);
        s += v;
      }
      REQUIRE_THAT(s, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
  }
  SECTION("labels are uniform when no neighbors exist") {
    auto hp0 = hp;
    hp0.alpha = 0.0;
    const auto d = generate_synthetic(hp0, parents, 5000, 21);
    std::vector<int> counts(2, 0);
    for (int y : d.dataset.labels) ++counts[y];
    const double expected = 5000.0 / 2;
    double chi2 = 0;
    for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
    REQUIRE(chi2 < 6.634896601);  // chi-square df=1, 1% significance
  }
  SECTION("unlabeled parents are rejected") {
    auto p = parents;
    p.labels.clear();
    REQUIRE_THROWS_AS(generate_synthetic(hp, p, 5, 1), std::invalid_argument);
  }
}
