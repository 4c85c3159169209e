#include <catch2/catch_amalgamated.hpp>

#include "bpatch/generate.hpp"
#include "bpatch/serialize.hpp"

using namespace bpatch;

TEST_CASE("run-length bitset round trip", "[serialize][property]") {
  Rng rng(55);
  SECTION("random vectors") {
    for (int rep = 0; rep < 60; ++rep) {
      std::vector<std::uint8_t> bits(rng.uniform_int(200));
      const double p = rng.uniform();
      for (auto& b : bits) b = rng.bernoulli(p);
      REQUIRE(rle_decode(rle_encode(bits)) == bits);
    }
  }
  SECTION("edge shapes") {
    REQUIRE(rle_decode(rle_encode(std::vector<std::uint8_t>{})).empty());
    std::vector<std::uint8_t> ones(17, 1), zeros(9, 0);
    REQUIRE(rle_decode(rle_encode(ones)) == ones);
    REQUIRE(rle_decode(rle_encode(zeros)) == zeros);
    // all-same vectors compress to a single run
    REQUIRE(rle_encode(ones)["runs"].size() == 1);
  }
  SECTION("inconsistent runs are rejected") {
    json bad = {{"n", 5}, {"first", 0}, {"runs", {2, 2}}};
    REQUIRE_THROWS_AS(rle_decode(bad), std::invalid_argument);
  }
}

TEST_CASE("posterior archive round trip", "[serialize]") {
  Rng prng(77);
  auto parents = random_parent_set(3, 2, 2, 2, prng);
  Hyperparameters hp;
  hp.variant = Variant::ModelII;
  const auto draw = generate_synthetic(hp, parents, 4, 11);
  ChainConfig cfg;
  cfg.n_iterations = 40;
  cfg.burn_in = 10;
  cfg.thinning = 5;
  cfg.rng_seed = 13;
  const auto fitted = run_chain(draw.dataset, parents, hp, cfg);

  const json js = to_json(fitted);
  const auto back = posterior_from_json(js);
  REQUIRE(back.states.size() == fitted.states.size());
  for (std::size_t k = 0; k < back.states.size(); ++k) {
    REQUIRE(back.states[k].z == fitted.states[k].z);
    REQUIRE(back.states[k].w == fitted.states[k].w);
    REQUIRE(back.states[k].q == fitted.states[k].q);
  }
  REQUIRE(back.log_posterior_trace == fitted.log_posterior_trace);
  REQUIRE(back.acceptance_rate_q == fitted.acceptance_rate_q);
  REQUIRE(back.config.rng_seed == cfg.rng_seed);
  // column counts are rebuilt on load
  REQUIRE(back.w_colsums == fitted.w_colsums);
  // identical archives serialize to identical bytes
  REQUIRE(js.dump() == to_json(fitted).dump());
}

TEST_CASE("dataset json uses one-based categories", "[serialize]") {
  CategoricalDataset ds;
  ds.n_cases = 2;
  ds.n_features = 2;
  ds.n_classes = 2;
  ds.cardinalities = {3, 2};
  ds.features = {0, 1, 2, 0};
  ds.labels = {1, 0};
  ds.feature_names = {"f1", "f2"};
  ds.class_names = {"neg", "pos"};
  const json js = dataset_to_json(ds);
  REQUIRE(js["columns"][0][0] == 1);
  REQUIRE(js["columns"][0][1] == 3);
  REQUIRE(js["labels"][0] == 2);
  const auto back = dataset_from_json(js);
  REQUIRE(back.features == ds.features);
  REQUIRE(back.labels == ds.labels);
  REQUIRE(back.cardinalities == ds.cardinalities);
}

TEST_CASE("parent set json round trip", "[serialize]") {
  Rng prng(3);
  auto parents = random_parent_set(4, 3, 3, 2, prng);
  parents.source_ids = {7, 2, 9, 4};
  const auto back = parents_from_json(parents_to_json(parents));
  REQUIRE(back.features == parents.features);
  REQUIRE(back.labels == parents.labels);
  REQUIRE(back.source_ids == parents.source_ids);
}

TEST_CASE("hyperparameters json round trip", "[serialize]") {
  Hyperparameters hp;
  hp.alpha = 0.3;
  hp.sigma2 = 2.5;
  hp.variant = Variant::ModelII;
  const auto back = hyperparameters_from_json(to_json(hp));
  REQUIRE(back.alpha == hp.alpha);
  REQUIRE(back.sigma2 == hp.sigma2);
  REQUIRE(back.variant == hp.variant);
  json bad = to_json(hp);
  bad["variant"] = "model9";
  REQUIRE_THROWS_AS(hyperparameters_from_json(bad), std::invalid_argument);
}

TEST_CASE("report serialization", "[serialize]") {
  ExperimentReport rep;
  rep.tag = "demo";
  const std::vector<int> truth{1, 0, 1, 0}, pred{1, 0, 0, 0};
  rep.per_fold.push_back(confusion_metrics(pred, truth, 2, 1));
  rep.per_fold.push_back(confusion_metrics(truth, truth, 2, 1));
  rep.fold_seconds = {0.5, 0.25};
  rep.fold_predictions = {pred, truth};
  rep.finalize();
  const json js = report_to_json(rep);
  REQUIRE(js["per_fold"].size() == 2);
  REQUIRE_THAT(js["accuracy"]["mean"].get<double>(),
               Catch::Matchers::WithinAbs((0.75 + 1.0) / 2, 1e-12));
  REQUIRE(js["config"]["S"] == 80);

  const std::string text = report_to_text(rep);
  REQUIRE_THAT(text, Catch::Matchers::ContainsSubstring("Fold"));
  REQUIRE_THAT(text, Catch::Matchers::ContainsSubstring("Mean"));
  REQUIRE_THAT(text, Catch::Matchers::ContainsSubstring("SD"));
  REQUIRE_THAT(text, Catch::Matchers::ContainsSubstring("87.50"));
}
