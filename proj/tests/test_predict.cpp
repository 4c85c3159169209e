#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bpatch/predict.hpp"
#include "bpatch/sampler.hpp"
#include "bpatch/serialize.hpp"
#include "oracles.hpp"

using namespace bpatch;

namespace {

oracle::TinyInstance predict_toy(int n_cases, int s, int p) {
  oracle::TinyInstance t;
  t.data.n_cases = n_cases;
  t.data.n_features = p;
  t.data.n_classes = 2;
  t.data.cardinalities.assign(p, 2);
  t.data.features.resize(static_cast<std::size_t>(n_cases) * p);
  t.data.labels.resize(n_cases);
  for (int i = 0; i < n_cases; ++i) {
    for (int j = 0; j < p; ++j) t.data.at(i, j) = (i + j) % 2;
    t.data.labels[i] = i % 2;
  }
  t.parents.size = s;
  t.parents.n_features = p;
  t.parents.n_classes = 2;
  t.parents.cardinalities.assign(p, 2);
  t.parents.features.resize(static_cast<std::size_t>(s) * p);
  t.parents.labels.resize(s);
  for (int b = 0; b < s; ++b) {
    for (int j = 0; j < p; ++j) t.parents.features[b * p + j] = (b + j) % 2;
    t.parents.labels[b] = b % 2;
  }
  t.hp.alpha = 0.5;
  t.hp.gamma = 1.0;
  t.hp.sigma1 = 2.0;
  t.hp.sigma2 = 1.2;
  t.hp.lambda0 = 0.5;
  t.hp.lambda = 1.0;
  t.hp.mu0 = 0.5;
  t.hp.mu = 1.0;
  t.hp.variant = Variant::ModelI;
  t.supervised = true;
  return t;
}

PosteriorSamples fit(const oracle::TinyInstance& t, int iters, int burn, int thin,
                     std::uint64_t seed) {
  ChainConfig c;
  c.n_iterations = iters;
  c.burn_in = burn;
  c.thinning = thin;
  c.rng_seed = seed;
  c.supervised = t.supervised;
  return run_chain(t.data, t.parents, t.hp, c);
}

}  // namespace

TEST_CASE("classification rule", "[predict]") {
  REQUIRE(classify(std::vector<double>{0.3, 0.7}, 0.5) == 1);
  REQUIRE(classify(std::vector<double>{0.5, 0.5}, 0.5) == 0);  // tie goes low
  REQUIRE(classify(std::vector<double>{0.2, 0.3, 0.5}) == 2);
  REQUIRE(classify(std::vector<double>{0.4, 0.3, 0.3}) == 0);
  REQUIRE(classify(std::vector<double>{0.7, 0.3}, 0.75) == 0);  // threshold honored
  REQUIRE_THROWS_AS(classify(std::vector<double>{0.9, 0.3}), std::invalid_argument);
  REQUIRE_THROWS_AS(classify(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("new-case inference basics", "[predict]") {
  auto t = predict_toy(3, 2, 2);
  const auto fitted = fit(t, 300, 100, 10, 3);
  const std::vector<int> x_r{0, 1};

  SECTION("fixed seed reproduces draws") {
    Rng a(7), b(7);
    const auto da = infer_new_case(x_r, std::nullopt, fitted, t.parents, t.hp, {}, a);
    const auto db = infer_new_case(x_r, std::nullopt, fitted, t.parents, t.hp, {}, b);
    REQUIRE(da.z == db.z);
    REQUIRE(da.w == db.w);
    REQUIRE(da.theta == db.theta);
  }
  SECTION("cardinality mismatch is rejected") {
    Rng rng(1);
    REQUIRE_THROWS_AS(
        infer_new_case(std::vector<int>{0}, std::nullopt, fitted, t.parents, t.hp, {}, rng),
        std::invalid_argument);
    REQUIRE_THROWS_AS(
        infer_new_case(std::vector<int>{0, 5}, std::nullopt, fitted, t.parents, t.hp, {}, rng),
        std::invalid_argument);
  }
  SECTION("alpha zero leaves no neighbors and a uniform theta") {
    auto t0 = t;
    t0.hp.alpha = 0.0;
    const auto fitted0 = fit(t0, 200, 100, 10, 5);
    Rng rng(9);
    const auto res = predict_label_distribution(x_r, fitted0, t0.parents, t0.hp, {}, rng);
    for (double z : res.neighbor_posterior) REQUIRE(z == 0.0);
    REQUIRE_THAT(res.theta[0], Catch::Matchers::WithinAbs(0.5, 1e-12));
    REQUIRE_THAT(res.theta[1], Catch::Matchers::WithinAbs(0.5, 1e-12));
    REQUIRE(res.predicted_label == 0);  // 0.5 is not above the threshold
  }
  SECTION("theta is a probability vector") {
    Rng rng(11);
    const auto res = predict_label_distribution(x_r, fitted, t.parents, t.hp, {}, rng);
    REQUIRE_THAT(res.theta[0] + res.theta[1], Catch::Matchers::WithinAbs(1.0, 1e-9));
    REQUIRE(static_cast<int>(res.influence.size()) == t.parents.size * 2);
  }
}

TEST_CASE("identical parents attract the new case", "[predict]") {
  // parent 0 matches x_r everywhere, parent 1 differs everywhere
  auto t = predict_toy(4, 2, 2);
  const std::vector<int> x_r{1, 0};
  t.parents.features = {1, 0, 0, 1};
  t.parents.labels = {1, 0};
  const auto fitted = fit(t, 600, 200, 5, 13);
  Rng rng(21);
  const auto draws = infer_new_case(x_r, std::nullopt, fitted, t.parents, t.hp, {}, rng);
  double z_match = 0, z_other = 0;
  for (int k = 0; k < draws.n_draws; ++k) {
    z_match += draws.z_draw(k)[0];
    z_other += draws.z_draw(k)[1];
  }
  REQUIRE(z_match > z_other);

  SECTION("a known matching label pulls harder than no label") {
    Rng r1(31), r2(31);
    const auto type1 = infer_new_case(x_r, std::nullopt, fitted, t.parents, t.hp, {}, r1);
    const auto type3 = infer_new_case(x_r, 1, fitted, t.parents, t.hp, {}, r2);
    double m1 = 0, m3 = 0;
    for (int k = 0; k < type1.n_draws; ++k) {
      m1 += type1.z_draw(k)[0];
      m3 += type3.z_draw(k)[0];
    }
    m1 /= type1.n_draws;
    m3 /= type3.n_draws;
    REQUIRE(m3 >= m1 - 0.02);
  }
}

TEST_CASE("monte-carlo predictive matches exact enumeration", "[predict][oracle][slow]") {
  const auto outer = oracle::GaussLegendre::make(64);
  const auto inner = oracle::GaussLegendre::make(24);
  for (const auto& [n, s, p] : {std::tuple{2, 1, 2}, {2, 2, 1}}) {
    auto t = predict_toy(n, s, p);
    std::vector<int> x_r(p);
    for (int j = 0; j < p; ++j) x_r[j] = j % 2;
    const auto exact = oracle::enumerate_predictive(t, x_r, outer, inner);
    const auto fitted = fit(t, 22000, 2000, 10, 17);
    Rng rng(23);
    const auto res = predict_label_distribution(x_r, fitted, t.parents, t.hp, {}, rng);
    for (int m = 0; m < 2; ++m)
      REQUIRE_THAT(res.theta[m], Catch::Matchers::WithinAbs(exact[m], 0.02));
  }
}

TEST_CASE("adding an identical parent never hurts its label", "[predict][oracle]") {
  const auto outer = oracle::GaussLegendre::make(48);
  const auto inner = oracle::GaussLegendre::make(16);
  auto t = predict_toy(2, 1, 2);
  const std::vector<int> x_r{1, 1};
  const auto before = oracle::enumerate_predictive(t, x_r, outer, inner);
  auto t2 = t;
  t2.parents.size = 2;
  t2.parents.features.insert(t2.parents.features.end(), x_r.begin(), x_r.end());
  t2.parents.labels.push_back(1);
  const auto after = oracle::enumerate_predictive(t2, x_r, outer, inner);
  REQUIRE(after[1] >= before[1] - 1e-9);
}

TEST_CASE("strong unanimous votes drive theta toward certainty", "[predict]") {
  auto t = predict_toy(3, 4, 2);
  std::fill(t.parents.labels.begin(), t.parents.labels.end(), 1);
  t.hp.alpha = 1.0;  // every parent is a neighbor
  t.hp.mu0 = 1e-9;
  t.hp.mu = 5.0;
  const auto fitted = fit(t, 200, 100, 10, 7);
  Rng rng(3);
  const auto res =
      predict_label_distribution(std::vector<int>{0, 1}, fitted, t.parents, t.hp, {}, rng);
  REQUIRE(res.theta[1] > 0.9);
  REQUIRE(res.predicted_label == 1);
}

TEST_CASE("neighbor explanations", "[predict]") {
  auto t = predict_toy(2, 3, 3);
  t.parents.features = {1, 0, 1, 0, 1, 0, 1, 1, 1};
  t.parents.labels = {0, 1, 0};
  const std::vector<int> x_r{1, 0, 1};

  SECTION("single draw ranks by kappa") {
    CaseDraws draws;
    draws.n_parents = 3;
    draws.n_features = 3;
    draws.n_classes = 2;
    draws.n_draws = 1;
    draws.z = {1, 0, 1};
    draws.w = {1, 1, 1, 1, 0, 0, 0, 1, 0};  // kappa = (3, 0, 1)
    draws.theta = {0.5, 0.5};
    const auto ex = explain(5, x_r, draws, t.parents, 3);
    REQUIRE(ex.parents.size() == 3);
    REQUIRE(ex.parents[0].parent_index == 0);
    REQUIRE(ex.parents[1].parent_index == 2);
    REQUIRE(ex.parents[2].parent_index == 1);
    REQUIRE(ex.parents[0].kappa_mean == 3.0);
    // parent 0 matches x_r exactly
    REQUIRE(ex.parents[0].feature_match == std::vector<std::uint8_t>{1, 1, 1});
    REQUIRE(ex.parents[0].important_features == std::vector<std::uint8_t>{1, 1, 1});
    // ranked second: parent 2, a neighbor with one influential feature
    REQUIRE(ex.parents[1].kappa_mean == 1.0);
    REQUIRE(ex.parents[1].important_features == std::vector<std::uint8_t>{0, 1, 0});
    // ranked last: parent 1 was never a neighbor, so its mask is empty
    REQUIRE(ex.parents[2].kappa_mean == 0.0);
    REQUIRE(ex.parents[2].important_features == std::vector<std::uint8_t>{0, 0, 0});
  }
  SECTION("top_k caps the list") {
    CaseDraws draws;
    draws.n_parents = 3;
    draws.n_features = 3;
    draws.n_classes = 2;
    draws.n_draws = 1;
    draws.z = {1, 1, 1};
    draws.w.assign(9, 1);
    draws.theta = {0.5, 0.5};
    REQUIRE(explain(0, x_r, draws, t.parents, 2).parents.size() == 2);
    REQUIRE(explain(0, x_r, draws, t.parents, 4).parents.size() == 3);
  }
  SECTION("never-selected parent reports zero influence") {
    CaseDraws draws;
    draws.n_parents = 3;
    draws.n_features = 3;
    draws.n_classes = 2;
    draws.n_draws = 2;
    draws.z = {1, 0, 0, 1, 0, 0};
    draws.w.assign(18, 0);
    draws.theta = {0.5, 0.5, 0.5, 0.5};
    const auto ex = explain(0, x_r, draws, t.parents, 3);
    REQUIRE(ex.parents[1].kappa_mean == 0.0);
    REQUIRE(ex.parents[1].important_features == std::vector<std::uint8_t>{0, 0, 0});
  }
  SECTION("explanation output is byte-stable") {
    const auto fitted = fit(t, 200, 100, 10, 3);
    Rng r1(5), r2(5);
    const auto d1 = infer_new_case(x_r, std::nullopt, fitted, t.parents, t.hp, {}, r1);
    const auto d2 = infer_new_case(x_r, std::nullopt, fitted, t.parents, t.hp, {}, r2);
    const auto e1 = explain(0, x_r, d1, t.parents, 3);
    const auto e2 = explain(0, x_r, d2, t.parents, 3);
    std::vector<std::string> names{"f1", "f2", "f3"};
    std::vector<std::string> classes{"neg", "pos"};
    REQUIRE(explanation_to_text(e1, t.parents, x_r, names, classes) ==
            explanation_to_text(e2, t.parents, x_r, names, classes));
    REQUIRE(explanation_to_json(e1, t.parents, x_r, classes) ==
            explanation_to_json(e2, t.parents, x_r, classes));
  }
}

TEST_CASE("feature importance summaries", "[predict]") {
  SECTION("identical states collapse the quartiles") {
    PosteriorSamples s;
    ModelState st = ModelState::zeros(1, 1, 2);
    st.q = {0.3, 0.7};
    s.states.assign(5, st);
    const auto fi = feature_importance(s);
    REQUIRE(fi.per_feature[0].q25 == 0.3);
    REQUIRE(fi.per_feature[0].q75 == 0.3);
    REQUIRE(fi.per_feature[0].mean == 0.3);
    REQUIRE(fi.ranking == std::vector<int>{1, 0});
  }
  SECTION("stochastic dominance orders the ranking") {
    PosteriorSamples s;
    for (int k = 0; k < 40; ++k) {
      ModelState st = ModelState::zeros(1, 1, 2);
      st.q = {0.5 + 0.01 * (k % 5), 0.2 + 0.01 * (k % 5)};
      s.states.push_back(st);
    }
    const auto fi = feature_importance(s);
    REQUIRE(fi.ranking.front() == 0);
    REQUIRE(fi.per_feature[0].q25 <= fi.per_feature[0].median);
    REQUIRE(fi.per_feature[0].median <= fi.per_feature[0].q75);
  }
  SECTION("empty chain is rejected") {
    PosteriorSamples s;
    REQUIRE_THROWS_AS(feature_importance(s), std::invalid_argument);
  }
}
