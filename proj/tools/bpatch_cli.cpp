// bpatch: case-based Bayesian classification over categorical data.
// Subcommands wire ingestion, training, prediction, explanation,
// cross-validation, sweeps, baselines, synthetic generation and profiling
// into reproducible, seeded runs. Every run directory receives the exact
// config snapshot that produced it.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bpatch/bpatch.hpp"

namespace fs = std::filesystem;
using bpatch::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path, const char* what) {
  if (!fs::exists(path))
    throw UsageError(std::string(what) + " not found: " + path);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& js) { write_text(path, js.dump(2) + "\n"); }

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  json js;
  in >> js;
  return js;
}

// ---------------------------------------------------------------------------
// shared option bundles

struct HyperOpts {
  bpatch::Hyperparameters hp;
  std::string variant = "model2";

  void attach(CLI::App* cmd) {
    cmd->add_option("--alpha", hp.alpha, "prior neighbor probability")->capture_default_str();
    cmd->add_option("--gamma", hp.gamma, "Beta shape for q")->capture_default_str();
    cmd->add_option("--sigma1", hp.sigma1, "Beta shape for q")->capture_default_str();
    cmd->add_option("--sigma2", hp.sigma2, "concentration of per-parent importances")
        ->capture_default_str();
    cmd->add_option("--lambda0", hp.lambda0, "baseline feature vote")->capture_default_str();
    cmd->add_option("--lambda", hp.lambda, "per-neighbor feature vote")->capture_default_str();
    cmd->add_option("--mu0", hp.mu0, "baseline label vote")->capture_default_str();
    cmd->add_option("--mu", hp.mu, "per-neighbor label vote")->capture_default_str();
    cmd->add_option("--variant", variant, "model1 (flat votes) or model2 (degree-weighted)")
        ->check(CLI::IsMember({"model1", "model2"}))
        ->capture_default_str();
  }
  bpatch::Hyperparameters resolve() {
    hp.variant = variant == "model1" ? bpatch::Variant::ModelI : bpatch::Variant::ModelII;
    hp.validate();
    return hp;
  }
};

struct ChainOpts {
  bpatch::ChainConfig chain;
  void attach(CLI::App* cmd) {
    cmd->add_option("--iterations", chain.n_iterations, "MCMC sweeps")->capture_default_str();
    cmd->add_option("--burn-in", chain.burn_in, "discarded sweeps")->capture_default_str();
    cmd->add_option("--thinning", chain.thinning, "retention stride")->capture_default_str();
    cmd->add_option("--step-size", chain.mh_step_size,
                    "random-walk scale for q on the logit scale")
        ->capture_default_str();
  }
};

std::string hp_banner(const bpatch::Hyperparameters& hp, int s) {
  std::ostringstream os;
  os << "hyperparameters: alpha=" << hp.alpha << " gamma=" << hp.gamma << " sigma1=" << hp.sigma1
     << " sigma2=" << hp.sigma2 << " lambda0=" << hp.lambda0 << " lambda=" << hp.lambda
     << " mu0=" << hp.mu0 << " mu=" << hp.mu << " variant=" << to_string(hp.variant)
     << " S=" << s;
  return os.str();
}

// CSV or columnar-JSON dataset, per extension
bpatch::LoadResult load_dataset(const std::string& data_path, const std::string& spec_path) {
  require_file(data_path, "dataset");
  if (data_path.size() > 5 && data_path.substr(data_path.size() - 5) == ".json") {
    bpatch::LoadResult res;
    res.dataset = bpatch::dataset_from_json(read_json(data_path));
    for (int i = 0; i < res.dataset.n_cases; ++i) res.kept_rows.push_back(i);
    return res;
  }
  require_file(spec_path, "spec");
  const auto spec = bpatch::DiscretizationSpec::from_file(spec_path);
  return bpatch::load_csv(data_path, spec);
}

json snapshot_common(const std::string& command, const bpatch::Hyperparameters& hp,
                     std::uint64_t seed) {
  return {{"command", command}, {"hyperparameters", bpatch::to_json(hp)}, {"seed", seed}};
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  if (out.empty()) throw UsageError("empty value list");
  return out;
}

// ---------------------------------------------------------------------------
// train

int cmd_train(const std::string& data_path, const std::string& spec_path,
              const std::string& out_dir, HyperOpts& hyper, ChainOpts& chain_opts, int s,
              bool unsupervised, bool balance, std::uint64_t seed) {
  const auto hp = hyper.resolve();
  std::cout << hp_banner(hp, s) << "\n";
  auto loaded = load_dataset(data_path, spec_path);
  bpatch::Rng root(seed);
  if (balance) {
    const auto kept = bpatch::balance_subsample(loaded.dataset, root);
    loaded.dataset = loaded.dataset.select_cases(kept);
  }
  const auto& data = loaded.dataset;
  std::cout << "dataset: " << data.n_cases << " cases, " << data.n_features << " features, "
            << loaded.dropped_rows.size() << " rows dropped\n";

  std::vector<int> all_ids(data.n_cases);
  std::iota(all_ids.begin(), all_ids.end(), 0);
  bpatch::Rng parent_rng = root.derive(1);
  const auto parent_ids = bpatch::select_parents(all_ids, s, parent_rng);
  const auto parents = bpatch::make_parent_set(data, parent_ids);

  bpatch::ChainConfig chain = chain_opts.chain;
  chain.supervised = !unsupervised;
  chain.rng_seed = root.derive(2).seed();
  chain.validate();
  const auto fitted = bpatch::run_chain(data, parents, hp, chain);
  const auto importance = bpatch::feature_importance(fitted);

  fs::create_directories(out_dir);
  json snapshot = snapshot_common("train", hp, seed);
  snapshot["dataset_path"] = data_path;
  snapshot["spec_path"] = spec_path;
  snapshot["S"] = s;
  snapshot["balance"] = balance;
  snapshot["chain"] = bpatch::to_json(chain);
  write_json(fs::path(out_dir) / "config.json", snapshot);
  write_json(fs::path(out_dir) / "dataset.json", bpatch::dataset_to_json(data, &loaded));
  write_json(fs::path(out_dir) / "parents.json", bpatch::parents_to_json(parents));
  write_json(fs::path(out_dir) / "model.json", bpatch::to_json(fitted));
  write_json(fs::path(out_dir) / "importance.json",
             bpatch::importance_to_json(importance, data.feature_names));
  std::ostringstream trace;
  trace << "iteration,log_posterior\n";
  for (std::size_t t = 0; t < fitted.log_posterior_trace.size(); ++t)
    trace << t + 1 << "," << fitted.log_posterior_trace[t] << "\n";
  write_text(fs::path(out_dir) / "trace.csv", trace.str());
  std::cout << "archive written to " << out_dir << " (" << fitted.states.size()
            << " retained states)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// predict / explain

struct Archive {
  bpatch::CategoricalDataset train_data;
  bpatch::ParentSet parents;
  bpatch::PosteriorSamples fitted;
  bpatch::Hyperparameters hp;
  std::string spec_path;
};

Archive open_archive(const std::string& dir) {
  require_file(dir + "/config.json", "archive config");
  Archive ar;
  const json cfg = read_json(dir + "/config.json");
  ar.hp = bpatch::hyperparameters_from_json(cfg.at("hyperparameters"));
  ar.spec_path = cfg.value("spec_path", "");
  ar.train_data = bpatch::dataset_from_json(read_json(dir + "/dataset.json"));
  ar.parents = bpatch::parents_from_json(read_json(dir + "/parents.json"));
  ar.fitted = bpatch::posterior_from_json(read_json(dir + "/model.json"));
  return ar;
}

// cases to score: the archive's spec applied to a fresh CSV, or a dataset json
bpatch::CategoricalDataset load_cases(const Archive& ar, const std::string& input,
                                      const std::string& spec_override) {
  const std::string spec = spec_override.empty() ? ar.spec_path : spec_override;
  auto loaded = load_dataset(input, spec);
  if (loaded.dataset.n_features != ar.parents.n_features)
    throw UsageError("input cases have " + std::to_string(loaded.dataset.n_features) +
                     " features, archive expects " + std::to_string(ar.parents.n_features));
  return loaded.dataset;
}

std::vector<int> resolve_ids(const std::string& ids_csv, int n_cases) {
  std::vector<int> ids;
  if (ids_csv.empty()) {
    ids.resize(n_cases);
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
  }
  for (double v : parse_values(ids_csv)) {
    const int id = static_cast<int>(v);
    if (id < 0 || id >= n_cases)
      std::cerr << "warning: case " << id << " absent from input, skipped\n";
    else
      ids.push_back(id);
  }
  return ids;
}

int cmd_predict(const std::string& archive_dir, const std::string& input,
                const std::string& spec_override, const std::string& out_dir,
                const std::string& ids_csv, double threshold, int sweeps, std::uint64_t seed) {
  const Archive ar = open_archive(archive_dir);
  const auto cases = load_cases(ar, input, spec_override);
  const auto ids = resolve_ids(ids_csv, cases.n_cases);
  bpatch::NewCaseConfig ncfg;
  ncfg.sweeps_per_sample = sweeps;
  bpatch::Rng root(seed);

  json records = json::array();
  std::ostringstream table;
  table << "case  predicted  theta\n";
  for (std::size_t t = 0; t < ids.size(); ++t) {
    bpatch::Rng rng = root.derive(static_cast<std::uint64_t>(ids[t]));
    const auto res = bpatch::predict_label_distribution(cases.row(ids[t]), ar.fitted, ar.parents,
                                                        ar.hp, ncfg, rng, threshold);
    const std::string label = ar.train_data.class_names.empty()
                                  ? std::to_string(res.predicted_label + 1)
                                  : ar.train_data.class_names[res.predicted_label];
    records.push_back({{"case_id", ids[t]},
                       {"theta", res.theta},
                       {"predicted_label", res.predicted_label + 1},
                       {"predicted_class", label},
                       {"neighbor_posterior", res.neighbor_posterior}});
    table << ids[t] << "  " << label << "  [";
    for (std::size_t m = 0; m < res.theta.size(); ++m)
      table << (m ? ", " : "") << res.theta[m];
    table << "]\n";
  }
  fs::create_directories(out_dir);
  json snapshot = snapshot_common("predict", ar.hp, seed);
  snapshot["archive"] = archive_dir;
  snapshot["input"] = input;
  snapshot["threshold"] = threshold;
  snapshot["sweeps_per_sample"] = sweeps;
  write_json(fs::path(out_dir) / "config.json", snapshot);
  write_json(fs::path(out_dir) / "predictions.json",
             json{{"format", "bpatch-predictions-v1"}, {"cases", records}});
  write_text(fs::path(out_dir) / "predictions.txt", table.str());
  std::cout << "predicted " << ids.size() << " cases -> " << out_dir << "\n";
  return 0;
}

int cmd_explain(const std::string& archive_dir, const std::string& input,
                const std::string& spec_override, const std::string& out_dir,
                const std::string& ids_csv, int top_k, int sweeps, std::uint64_t seed) {
  const Archive ar = open_archive(archive_dir);
  const auto cases = load_cases(ar, input, spec_override);
  const auto ids = resolve_ids(ids_csv, cases.n_cases);
  bpatch::NewCaseConfig ncfg;
  ncfg.sweeps_per_sample = sweeps;
  bpatch::Rng root(seed);

  json records = json::array();
  std::ostringstream text;
  for (std::size_t t = 0; t < ids.size(); ++t) {
    bpatch::Rng rng = root.derive(static_cast<std::uint64_t>(ids[t]));
    const auto draws = bpatch::infer_new_case(cases.row(ids[t]), std::nullopt, ar.fitted,
                                              ar.parents, ar.hp, ncfg, rng);
    const auto ex = bpatch::explain(ids[t], cases.row(ids[t]), draws, ar.parents, top_k);
    records.push_back(bpatch::explanation_to_json(ex, ar.parents, cases.row(ids[t]),
                                                  ar.train_data.class_names));
    text << bpatch::explanation_to_text(ex, ar.parents, cases.row(ids[t]),
                                        ar.train_data.feature_names, ar.train_data.class_names)
         << "\n";
  }
  fs::create_directories(out_dir);
  json snapshot = snapshot_common("explain", ar.hp, seed);
  snapshot["archive"] = archive_dir;
  snapshot["input"] = input;
  snapshot["top_k"] = top_k;
  write_json(fs::path(out_dir) / "config.json", snapshot);
  write_json(fs::path(out_dir) / "explanations.json",
             json{{"format", "bpatch-explanations-v1"}, {"cases", records}});
  write_text(fs::path(out_dir) / "explanations.txt", text.str());
  std::cout << "explained " << ids.size() << " cases -> " << out_dir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// cv / sweep / baseline / generate / profile

bpatch::CvConfig build_cv_config(const bpatch::Hyperparameters& hp,
                                 const bpatch::ChainConfig& chain, int s, int k, bool stratified,
                                 bool unsupervised, double threshold, int positive_class,
                                 std::uint64_t seed, int jobs) {
  bpatch::CvConfig cfg;
  cfg.hp = hp;
  cfg.chain = chain;
  cfg.chain.supervised = !unsupervised;
  cfg.n_parents = s;
  cfg.k = k;
  cfg.stratified = stratified;
  cfg.threshold = threshold;
  cfg.positive_class = positive_class;
  cfg.seed = seed;
  cfg.jobs = jobs;
  return cfg;
}

int cmd_cv(const std::string& data_path, const std::string& spec_path, const std::string& out_dir,
           HyperOpts& hyper, ChainOpts& chain_opts, int s, int k, bool stratified,
           bool unsupervised, bool balance, double threshold, std::uint64_t seed, int jobs) {
  const auto hp = hyper.resolve();
  std::cout << hp_banner(hp, s) << "\n";
  auto loaded = load_dataset(data_path, spec_path);
  bpatch::Rng root(seed);
  if (balance) {
    const auto kept = bpatch::balance_subsample(loaded.dataset, root);
    loaded.dataset = loaded.dataset.select_cases(kept);
  }
  const auto cfg = build_cv_config(hp, chain_opts.chain, s, k, stratified, unsupervised,
                                   threshold, loaded.positive_class, seed, jobs);
  const auto report = bpatch::cross_validate(loaded.dataset, cfg);

  fs::create_directories(out_dir);
  json snapshot = snapshot_common("cv", hp, seed);
  snapshot["dataset_path"] = data_path;
  snapshot["spec_path"] = spec_path;
  snapshot["cv"] = bpatch::cv_config_to_json(cfg);
  snapshot["balance"] = balance;
  write_json(fs::path(out_dir) / "config.json", snapshot);
  write_json(fs::path(out_dir) / "report.json", bpatch::report_to_json(report));
  write_text(fs::path(out_dir) / "report.txt", bpatch::report_to_text(report));
  std::cout << bpatch::report_to_text(report);
  std::cout << "mean accuracy " << report.accuracy.mean * 100 << "% over " << k << " folds ("
            << report.total_seconds << "s)\n";
  return 0;
}

int cmd_sweep(const std::string& data_path, const std::string& spec_path,
              const std::string& out_dir, HyperOpts& hyper, ChainOpts& chain_opts, int s, int k,
              bool stratified, bool unsupervised, bool balance, double threshold,
              std::uint64_t seed, int jobs, const std::string& parameter,
              const std::string& values_csv, bool emit_plot_data) {
  const auto hp = hyper.resolve();
  auto loaded = load_dataset(data_path, spec_path);
  bpatch::Rng root(seed);
  if (balance) {
    const auto kept = bpatch::balance_subsample(loaded.dataset, root);
    loaded.dataset = loaded.dataset.select_cases(kept);
  }
  const auto base = build_cv_config(hp, chain_opts.chain, s, k, stratified, unsupervised,
                                    threshold, loaded.positive_class, seed, jobs);
  std::vector<bpatch::SweepPoint> grid;
  for (double v : parse_values(values_csv)) grid.push_back({parameter, v});
  const auto reports = bpatch::sensitivity_sweep(loaded.dataset, base, grid);

  fs::create_directories(out_dir);
  json snapshot = snapshot_common("sweep", hp, seed);
  snapshot["parameter"] = parameter;
  snapshot["values"] = parse_values(values_csv);
  snapshot["cv"] = bpatch::cv_config_to_json(base);
  write_json(fs::path(out_dir) / "config.json", snapshot);
  json out = json::array();
  std::ostringstream text;
  std::ostringstream series;
  series << parameter << ",accuracy_mean,accuracy_sd\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    out.push_back(bpatch::report_to_json(reports[i]));
    text << bpatch::report_to_text(reports[i]) << "\n";
    series << grid[i].value << "," << reports[i].accuracy.mean << "," << reports[i].accuracy.sd
           << "\n";
    std::cout << reports[i].tag << ": accuracy " << reports[i].accuracy.mean * 100 << "%\n";
  }
  write_json(fs::path(out_dir) / "sweep.json",
             json{{"format", "bpatch-sweep-v1"}, {"reports", out}});
  write_text(fs::path(out_dir) / "sweep.txt", text.str());
  if (emit_plot_data)
    write_text(fs::path(out_dir) / ("plot_" + parameter + "_accuracy.csv"), series.str());
  return 0;
}

int cmd_baseline_knn(const std::string& data_path, const std::string& spec_path,
                     const std::string& out_dir, int k_neighbors, const std::string& mode_name,
                     const std::string& weights_csv, const std::string& weights_from, int k,
                     bool stratified, bool balance, std::uint64_t seed) {
  auto loaded = load_dataset(data_path, spec_path);
  bpatch::Rng root(seed);
  if (balance) {
    const auto kept = bpatch::balance_subsample(loaded.dataset, root);
    loaded.dataset = loaded.dataset.select_cases(kept);
  }
  bpatch::KnnMode mode = bpatch::KnnMode::Plain;
  if (mode_name == "distance") mode = bpatch::KnnMode::DistanceWeighted;
  else if (mode_name == "feature-weighted") mode = bpatch::KnnMode::FeatureWeighted;

  std::vector<double> weights;
  if (!weights_csv.empty()) weights = parse_values(weights_csv);
  if (!weights_from.empty()) {
    const json imp = read_json(weights_from + "/importance.json");
    for (const auto& f : imp.at("per_feature")) weights.push_back(f.at("mean").get<double>());
  }

  bpatch::CvConfig cfg;
  cfg.k = k;
  cfg.stratified = stratified;
  cfg.seed = seed;
  const auto plan = bpatch::make_fold_plan(loaded.dataset, cfg);
  const auto report = bpatch::knn_cross_validate(loaded.dataset, plan, k_neighbors, mode, weights,
                                                 loaded.positive_class);
  fs::create_directories(out_dir);
  json snapshot{{"command", "baseline-knn"}, {"seed", seed},      {"k_neighbors", k_neighbors},
                {"mode", mode_name},         {"folds", k},        {"dataset_path", data_path},
                {"weights", weights},        {"balance", balance}};
  write_json(fs::path(out_dir) / "config.json", snapshot);
  write_json(fs::path(out_dir) / "report.json", bpatch::report_to_json(report));
  write_text(fs::path(out_dir) / "report.txt", bpatch::report_to_text(report));
  std::cout << bpatch::report_to_text(report);
  return 0;
}

int cmd_generate(const std::string& out_dir, HyperOpts& hyper, int s, int n, int p, int v, int m,
                 bool full_latents, std::uint64_t seed) {
  const auto hp = hyper.resolve();
  std::cout << hp_banner(hp, s) << "\n";
  bpatch::Rng root(seed);
  bpatch::Rng parent_rng = root.derive(1);
  const auto parents = bpatch::random_parent_set(s, p, v, m, parent_rng);
  const auto draw = bpatch::generate_synthetic(hp, parents, n, root.derive(2).seed());

  fs::create_directories(out_dir);
  json snapshot = snapshot_common("generate", hp, seed);
  snapshot["S"] = s;
  snapshot["N"] = n;
  snapshot["P"] = p;
  snapshot["V"] = v;
  snapshot["M"] = m;
  write_json(fs::path(out_dir) / "config.json", snapshot);
  write_json(fs::path(out_dir) / "dataset.json", bpatch::dataset_to_json(draw.dataset));
  write_json(fs::path(out_dir) / "parents.json", bpatch::parents_to_json(parents));
  json planted{{"format", "bpatch-planted-v1"},
               {"z", bpatch::rle_encode(draw.planted_state.z)},
               {"w", bpatch::rle_encode(draw.planted_state.w)},
               {"q", draw.planted_state.q},
               {"qtilde", draw.planted_qtilde}};
  if (full_latents) {
    planted["phi"] = draw.planted_phi;
    planted["phi_offsets"] = draw.phi_offsets;
    planted["theta"] = draw.planted_theta;
  }
  write_json(fs::path(out_dir) / "planted.json", planted);
  std::cout << "synthetic bundle written to " << out_dir << "\n";
  return 0;
}

int cmd_profile(const std::string& out_dir, const std::string& s_grid, int n, int p, int v,
                int sweeps, std::uint64_t seed) {
  std::vector<int> sizes;
  for (double x : parse_values(s_grid)) sizes.push_back(static_cast<int>(x));
  const std::vector<bpatch::Variant> variants{bpatch::Variant::ModelI, bpatch::Variant::ModelII};
  const auto rows = bpatch::runtime_profile(variants, sizes, n, p, v, sweeps, seed);
  json out = json::array();
  std::ostringstream text, series;
  text << "variant  S  seconds_per_sweep\n";
  series << "S,model1_seconds_per_sweep,model2_seconds_per_sweep\n";
  for (const auto& r : rows) {
    out.push_back({{"variant", to_string(r.variant)},
                   {"n_cases", r.n_cases},
                   {"S", r.n_parents},
                   {"P", r.n_features},
                   {"seconds_per_sweep", r.seconds_per_sweep},
                   {"sweeps", r.sweeps}});
    text << to_string(r.variant) << "  " << r.n_parents << "  " << r.seconds_per_sweep << "\n";
    std::cout << to_string(r.variant) << " S=" << r.n_parents << ": " << r.seconds_per_sweep
              << " s/sweep\n";
  }
  for (std::size_t i = 0; i < sizes.size(); ++i)
    series << sizes[i] << "," << rows[i].seconds_per_sweep << ","
           << rows[sizes.size() + i].seconds_per_sweep << "\n";
  fs::create_directories(out_dir);
  json snapshot{{"command", "profile"}, {"seed", seed}, {"S_grid", sizes},
                {"N", n},               {"P", p},       {"V", v},
                {"sweeps", sweeps}};
  write_json(fs::path(out_dir) / "config.json", snapshot);
  write_json(fs::path(out_dir) / "profile.json", out);
  write_text(fs::path(out_dir) / "profile.txt", text.str());
  write_text(fs::path(out_dir) / "plot_runtime.csv", series.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian case-based classification over categorical data"};
  app.require_subcommand(1);

  std::string data_path, spec_path, out_dir, input, archive_dir, ids_csv, spec_override;
  std::uint64_t seed = 1;
  int s = 80, k = 5, jobs = 1, top_k = 4, sweeps = 10;
  int gen_n = 50, gen_p = 5, gen_v = 3, gen_m = 2;
  int knn_k = 30, profile_n = 100, profile_p = 10, profile_v = 3, profile_sweeps = 100;
  double threshold = 0.5;
  bool unsupervised = false, stratified = false, balance = false, emit_plot = false;
  bool full_latents = false;
  std::string parameter, values_csv, knn_mode = "plain", weights_csv, weights_from;
  std::string s_grid = "20,40,80";

  HyperOpts hyper;
  ChainOpts chain;

  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "master RNG seed")
        ->envname("BPATCH_SEED")
        ->capture_default_str();
  };
  auto add_data = [&](CLI::App* cmd) {
    cmd->add_option("--dataset", data_path, "CSV file (or columnar dataset JSON)")->required();
    cmd->add_option("--spec", spec_path, "discretization spec JSON");
    cmd->add_flag("--balance", balance, "subsample every class down to the minority count");
  };
  auto add_train_like = [&](CLI::App* cmd) {
    hyper.attach(cmd);
    chain.attach(cmd);
    cmd->add_option("--S", s, "parent pool size")->capture_default_str();
    cmd->add_flag("--unsupervised", unsupervised, "train without case labels");
    add_seed(cmd);
  };

  auto* train = app.add_subcommand("train", "fit the model and write an archive");
  add_data(train);
  add_train_like(train);
  train->add_option("--out", out_dir, "output directory")->required();

  auto* predict = app.add_subcommand("predict", "posterior predictive labels for new cases");
  predict->add_option("--archive", archive_dir, "train output directory")->required();
  predict->add_option("--input", input, "CSV of cases to score")->required();
  predict->add_option("--spec", spec_override, "override the archive's discretization spec");
  predict->add_option("--out", out_dir, "output directory")->required();
  predict->add_option("--ids", ids_csv, "comma-separated case ids (default: all)");
  predict->add_option("--threshold", threshold, "two-class decision threshold")
      ->capture_default_str();
  predict->add_option("--sweeps", sweeps, "conditional sweeps per retained sample")
      ->capture_default_str();
  add_seed(predict);

  auto* explain = app.add_subcommand("explain", "ranked influential neighbors per case");
  explain->add_option("--archive", archive_dir, "train output directory")->required();
  explain->add_option("--input", input, "CSV of cases to explain")->required();
  explain->add_option("--spec", spec_override, "override the archive's discretization spec");
  explain->add_option("--out", out_dir, "output directory")->required();
  explain->add_option("--ids", ids_csv, "comma-separated case ids (default: all)");
  explain->add_option("--top-k", top_k, "parents per case")->capture_default_str();
  explain->add_option("--sweeps", sweeps, "conditional sweeps per retained sample")
      ->capture_default_str();
  add_seed(explain);

  auto* cv = app.add_subcommand("cv", "k-fold cross-validated evaluation");
  add_data(cv);
  add_train_like(cv);
  cv->add_option("--out", out_dir, "output directory")->required();
  cv->add_option("--k", k, "number of folds")->capture_default_str();
  cv->add_flag("--stratified", stratified, "class-balanced folds");
  cv->add_option("--threshold", threshold, "two-class decision threshold")->capture_default_str();
  cv->add_option("--jobs", jobs, "parallel folds")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "sensitivity sweep over one hyperparameter");
  add_data(sweep);
  add_train_like(sweep);
  sweep->add_option("--out", out_dir, "output directory")->required();
  sweep->add_option("--k", k, "number of folds")->capture_default_str();
  sweep->add_flag("--stratified", stratified, "class-balanced folds");
  sweep->add_option("--threshold", threshold, "two-class decision threshold")
      ->capture_default_str();
  sweep->add_option("--jobs", jobs, "parallel folds")->capture_default_str();
  sweep
      ->add_option("--param", parameter,
                   "S, alpha, gamma, sigma1, sigma2, lambda0, lambda, mu0, mu")
      ->required();
  sweep->add_option("--values", values_csv, "comma-separated grid values")->required();
  sweep->add_flag("--emit-plot-data", emit_plot, "write (x,y) series files");

  auto* baseline = app.add_subcommand("baseline", "reference classifiers");
  baseline->require_subcommand(1);
  auto* knn = baseline->add_subcommand("knn", "K nearest neighbors on Hamming distance");
  add_data(knn);
  knn->add_option("--out", out_dir, "output directory")->required();
  knn->add_option("--k-neighbors,--K", knn_k, "neighborhood size")->capture_default_str();
  knn->add_option("--mode", knn_mode, "plain, distance, or feature-weighted")
      ->check(CLI::IsMember({"plain", "distance", "feature-weighted"}))
      ->capture_default_str();
  knn->add_option("--weights", weights_csv, "feature weights (feature-weighted mode)");
  knn->add_option("--weights-from", weights_from,
                  "train archive whose q means become feature weights");
  knn->add_option("--k", k, "number of folds")->capture_default_str();
  knn->add_flag("--stratified", stratified, "class-balanced folds");
  add_seed(knn);

  auto* generate = app.add_subcommand("generate", "synthetic dataset from the generative model");
  hyper.attach(generate);
  generate->add_option("--out", out_dir, "output directory")->required();
  generate->add_option("--S", s, "parent pool size")->capture_default_str();
  generate->add_option("--N", gen_n, "cases to generate")->capture_default_str();
  generate->add_option("--P", gen_p, "features")->capture_default_str();
  generate->add_option("--V", gen_v, "categories per feature")->capture_default_str();
  generate->add_option("--M", gen_m, "classes")->capture_default_str();
  generate->add_flag("--full-latents", full_latents, "include phi and theta in planted.json");
  add_seed(generate);

  auto* profile = app.add_subcommand("profile", "wall-clock per sweep across sizes");
  profile->add_option("--out", out_dir, "output directory")->required();
  profile->add_option("--S-grid", s_grid, "parent pool sizes")->capture_default_str();
  profile->add_option("--N", profile_n, "cases")->capture_default_str();
  profile->add_option("--P", profile_p, "features")->capture_default_str();
  profile->add_option("--V", profile_v, "categories per feature")->capture_default_str();
  profile->add_option("--sweeps", profile_sweeps, "timed sweeps per configuration")
      ->capture_default_str();
  add_seed(profile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed())
      return cmd_train(data_path, spec_path, out_dir, hyper, chain, s, unsupervised, balance,
                       seed);
    if (predict->parsed())
      return cmd_predict(archive_dir, input, spec_override, out_dir, ids_csv, threshold, sweeps,
                         seed);
    if (explain->parsed())
      return cmd_explain(archive_dir, input, spec_override, out_dir, ids_csv, top_k, sweeps,
                         seed);
    if (cv->parsed())
      return cmd_cv(data_path, spec_path, out_dir, hyper, chain, s, k, stratified, unsupervised,
                    balance, threshold, seed, jobs);
    if (sweep->parsed())
      return cmd_sweep(data_path, spec_path, out_dir, hyper, chain, s, k, stratified,
                       unsupervised, balance, threshold, seed, jobs, parameter, values_csv,
                       emit_plot);
    if (baseline->parsed() && knn->parsed())
      return cmd_baseline_knn(data_path, spec_path, out_dir, knn_k, knn_mode, weights_csv,
                              weights_from, k, stratified, balance, seed);
    if (generate->parsed())
      return cmd_generate(out_dir, hyper, s, gen_n, gen_p, gen_v, gen_m, full_latents, seed);
    if (profile->parsed())
      return cmd_profile(out_dir, s_grid, profile_n, profile_p, profile_v, profile_sweeps, seed);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const bpatch::IngestionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
