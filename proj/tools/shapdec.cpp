// Command-line front end: explain a sample, run the experiment suite, fit
// models and write synthetic data sets.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "shapdec/shapdec.hpp"

namespace {

using namespace shapdec;
namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kUsage = 1, kIngestion = 2, kComputation = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string data;
  std::string target;
  std::string model;
  std::string fit;
  std::string sampler = "gaussian";
  std::string sample;
  std::size_t row = 0;
  std::size_t k1 = 1000;
  std::size_t k2 = 4000;
  std::uint64_t seed = 0;
  std::string out;
  bool plot = false;
  bool synthetic = false;
  ForestParams forest;
  std::string task = "regression";

  // experiment-specific
  std::string experiment;
  double a12 = 2.0;
  std::vector<double> alphas = {-0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75};
  std::size_t repeats = 1;
  std::size_t towns = 200;
  std::string model_kind = "linear";

  // generate
  std::string dataset;
  std::size_t rows = 0;
  bool independent = false;
};

void check_budgets(const RunConfig& c) {
  if (c.k1 < 1 || c.k2 < 1) throw UsageError("--k1 and --k2 must be at least 1");
  if (c.k2 < c.k1) std::cerr << "warning: K2 < K1; a permutation budget larger than the draw budget is advised\n";
}

ForestTask parse_task(const std::string& t) {
  if (t == "regression") return ForestTask::Regression;
  if (t == "binary") return ForestTask::BinaryProbability;
  throw UsageError("--task must be regression or binary");
}

void add_forest_flags(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--trees", c.forest.trees, "Number of trees")->capture_default_str();
  cmd->add_option("--max-depth", c.forest.max_depth, "Maximum tree depth")->capture_default_str();
  cmd->add_option("--min-leaf", c.forest.min_leaf, "Minimum rows per leaf")->capture_default_str();
  cmd->add_option("--features-per-split", c.forest.features_per_split, "Candidate features per split (0: sqrt M)")
      ->capture_default_str();
}

void add_budget_flags(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--k1", c.k1, "Draws per conditional expectation")->capture_default_str();
  cmd->add_option("--k2", c.k2, "Permutations for the interventional parts")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
}

void print_decomposition(const Decomposition& d) {
  std::printf("base %.6f\n", d.base);
  std::printf("%-16s %12s %12s %12s\n", "feature", "phi", "phi_int", "phi_dep");
  for (Eigen::Index i = 0; i < d.phi.size(); ++i)
    std::printf("%-16s %12.6f %12.6f %12.6f\n", d.names[static_cast<std::size_t>(i)].c_str(), d.phi[i], d.phi_int[i],
                d.phi_dep[i]);
  for (const auto& w : d.meta.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

int cmd_explain(const RunConfig& c) {
  check_budgets(c);
  if (c.model.empty() == c.fit.empty()) throw UsageError("explain needs exactly one of --model or --fit");
  const auto data = read_csv(c.data, c.target);
  const auto& features = data.features;

  PredictorPtr model;
  if (!c.model.empty()) {
    model = load_model(c.model, features.features());
  } else {
    if (!data.target) throw UsageError("--fit needs --target");
    model = experiments::fit_model(c.fit, data, c.forest, c.seed, parse_task(c.task));
  }
  const auto sampler = fit_sampler(c.sampler, features);

  Sample x;
  if (!c.sample.empty()) {
    x = parse_vector(c.sample);
    if (static_cast<std::size_t>(x.size()) != features.features())
      throw IngestionError("--sample has " + std::to_string(x.size()) + " values, data has " +
                           std::to_string(features.features()) + " features");
  } else {
    if (c.row >= features.rows()) throw UsageError("--row is out of range");
    x = features.row(c.row);
  }

  const auto d = decompose(*model, *sampler, x, c.k1, c.k2, c.seed);
  print_decomposition(d);

  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  experiments::prepare_dir(dir.string());
  auto j = to_json(d);
  j["sample"] = experiments::to_std(x);
  j["prediction"] = model->predict(x);
  experiments::write_json(dir / "decomposition.json", j);
  if (c.plot) write_text((dir / "force.svg").string(), viz::render_force_plot(viz::force_spec(d, x)));
  return kOk;
}

Dataset experiment_data(const RunConfig& c, const std::string& default_target, bool fire) {
  if (c.synthetic == !c.data.empty()) throw UsageError("experiment needs exactly one of --data or --synthetic");
  if (c.synthetic) return fire ? experiments::generate_fire(244, c.seed) : experiments::generate_housing(506, c.seed);
  return read_csv(c.data, c.target.empty() ? default_target : c.target);
}

int cmd_experiment(const RunConfig& c) {
  check_budgets(c);
  const std::string out = c.out.empty() ? "out/" + c.experiment : c.out;
  if (c.experiment == "toy") {
    const auto r = experiments::run_toy({c.k1, c.k2, c.seed, out});
    std::cout << "exact\n";
    print_decomposition(r.exact);
    std::cout << "sampled\n";
    print_decomposition(r.sampled);
  } else if (c.experiment == "correlation") {
    experiments::CorrelationConfig cfg;
    cfg.a12 = c.a12;
    cfg.alphas = c.alphas;
    cfg.repeats = c.repeats;
    cfg.k1 = c.k1;
    cfg.k2 = c.k2;
    cfg.seed = c.seed;
    cfg.out_dir = out;
    const auto rows = experiments::run_correlation_study(cfg);
    std::printf("%8s %12s %12s %12s %12s\n", "alpha", "phi_dep", "analytic", "res_est", "res_exact");
    for (const auto& r : rows)
      std::printf("%8.3f %12.6f %12.6f %12.6f %12.6f\n", r.alpha, r.phi_dep.mean(), r.phi_dep_analytic,
                  r.residual_estimated, r.residual_exact);
  } else if (c.experiment == "housing") {
    if (c.model_kind != "linear" && c.model_kind != "forest") throw UsageError("--model must be linear or forest");
    const auto data = experiment_data(c, "MEDV", false);
    experiments::ImputationConfig cfg;
    cfg.model = c.model_kind;
    cfg.forest = c.forest;
    cfg.towns = c.towns;
    cfg.k1 = c.k1;
    cfg.k2 = c.k2;
    cfg.seed = c.seed;
    cfg.out_dir = out;
    const auto r = experiments::run_imputation_study(data, cfg);
    for (const auto& curve : r.curves) {
      std::printf("%-20s %-16s", curve.method.c_str(), curve.imputation.c_str());
      for (double v : curve.mean) std::printf(" %8.3f", v);
      std::printf("\n");
    }
  } else if (c.experiment == "fire") {
    const auto data = experiment_data(c, "fire", true);
    experiments::FireConfig cfg;
    cfg.k1 = c.k1;
    cfg.k2 = c.k2;
    cfg.seed = c.seed;
    cfg.sample_index = c.row;
    cfg.forest.trees = c.forest.trees;
    cfg.out_dir = out;
    const auto r = experiments::run_fire_study(data, cfg);
    auto fmt = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("n/a"); };
    std::printf("%-8s %12s %12s %12s\n", "feature", "phi", "phi_int", "phi_dep");
    for (const auto& row : r.table)
      std::printf("%-8s %12s %12s %12s\n", row.feature.c_str(), fmt(row.phi).c_str(), fmt(row.phi_int).c_str(),
                  fmt(row.phi_dep).c_str());
    std::printf("training accuracy %.3f\n", r.accuracy);
  } else {
    throw UsageError("unknown experiment '" + c.experiment + "' (expected toy, correlation, housing or fire)");
  }
  std::cout << "wrote " << out << "\n";
  return kOk;
}

int cmd_fit_model(const RunConfig& c) {
  if (c.target.empty()) throw UsageError("fit-model needs --target");
  const auto data = read_csv(c.data, c.target);
  const auto model = experiments::fit_model(c.model_kind, data, c.forest, c.seed, parse_task(c.task));
  const std::string out = c.out.empty() ? "model.json" : c.out;
  const auto parent = fs::path(out).parent_path();
  if (!parent.empty()) experiments::prepare_dir(parent.string());
  experiments::write_json(out, model->to_json());
  std::cout << "wrote " << out << "\n";
  return kOk;
}

int cmd_generate(const RunConfig& c) {
  const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
  experiments::prepare_dir(dir.string());
  Dataset data;
  if (c.dataset == "housing") {
    data = experiments::generate_housing(c.rows ? c.rows : 506, c.seed);
  } else if (c.dataset == "fire") {
    data = experiments::generate_fire(c.rows ? c.rows : 244, c.seed, c.independent);
  } else if (c.dataset == "toy") {
    data.features = experiments::toy_data();
    experiments::write_json(dir / "toy_model.json", experiments::toy_model().to_json());
  } else {
    throw UsageError("unknown data set '" + c.dataset + "' (expected housing, fire or toy)");
  }
  auto names = data.features.names();
  Matrix values = data.features.values();
  if (data.target) {
    names.push_back(data.target_name);
    values.conservativeResize(Eigen::NoChange, values.cols() + 1);
    values.col(values.cols() - 1) = *data.target;
  }
  const auto path = dir / (c.dataset + ".csv");
  write_csv(path.string(), names, values);
  std::cout << "wrote " << path.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional SHAP values split into interventional and dependent parts"};
  app.require_subcommand(1);
  RunConfig c;

  auto* explain = app.add_subcommand("explain", "Decompose the SHAP values of one sample");
  explain->add_option("--data", c.data, "Background CSV")->required();
  explain->add_option("--target", c.target, "Target column to drop from the features (needed by --fit)");
  explain->add_option("--model", c.model, "Model JSON file");
  explain->add_option("--fit", c.fit, "Fit a model on the data instead: linear or forest");
  explain->add_option("--task", c.task, "Forest task for --fit: regression or binary")->capture_default_str();
  explain->add_option("--sampler", c.sampler, "Conditional sampler")
      ->check(CLI::IsMember({"gaussian", "copula", "discrete", "marginal"}))
      ->capture_default_str();
  auto* sample_opt = explain->add_option("--sample", c.sample, "Sample as comma-separated values");
  explain->add_option("--row", c.row, "Explain this data row instead of --sample")->excludes(sample_opt);
  explain->add_option("--out", c.out, "Output directory");
  explain->add_flag("--plot", c.plot, "Also write force.svg");
  add_budget_flags(explain, c);
  add_forest_flags(explain, c);

  auto* experiment = app.add_subcommand("experiment", "Run one of the bundled experiments");
  experiment->add_option("name", c.experiment, "toy, correlation, housing or fire")->required();
  experiment->add_option("--data", c.data, "Input CSV (housing, fire)");
  experiment->add_option("--target", c.target, "Target column (default MEDV for housing, fire for fire)");
  experiment->add_flag("--synthetic", c.synthetic, "Use the bundled synthetic generator");
  experiment->add_option("--out", c.out, "Output directory (default out/<name>)");
  experiment->add_option("--a12", c.a12, "Interaction coefficient (correlation)")->capture_default_str();
  experiment->add_option("--alphas", c.alphas, "Correlation coefficients (correlation)")->delimiter(',');
  experiment->add_option("--repeats", c.repeats, "Decompositions averaged per alpha (correlation)")
      ->capture_default_str();
  experiment->add_option("--towns", c.towns, "Rows explained (housing)")->capture_default_str();
  experiment->add_option("--model", c.model_kind, "Model kind (housing): linear or forest")->capture_default_str();
  experiment->add_option("--row,--sample", c.row, "Row shown in the force plots (fire)")->capture_default_str();
  add_budget_flags(experiment, c);
  add_forest_flags(experiment, c);

  auto* fit = app.add_subcommand("fit-model", "Fit a model and write it as JSON");
  fit->add_option("kind", c.model_kind, "linear or forest")->required()->check(CLI::IsMember({"linear", "forest"}));
  fit->add_option("--data", c.data, "Training CSV")->required();
  fit->add_option("--target", c.target, "Target column")->required();
  fit->add_option("--task", c.task, "Forest task: regression or binary")->capture_default_str();
  fit->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  fit->add_option("--out", c.out, "Output file (default model.json)");
  add_forest_flags(fit, c);

  auto* gen = app.add_subcommand("generate", "Write a synthetic data set as CSV");
  gen->add_option("name", c.dataset, "housing, fire or toy")->required();
  gen->add_option("--rows", c.rows, "Row count (default 506 housing, 244 fire)");
  gen->add_flag("--independent", c.independent, "Fire: independent factorial design");
  gen->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  gen->add_option("--out", c.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*explain) return cmd_explain(c);
    if (*experiment) return cmd_experiment(c);
    if (*fit) return cmd_fit_model(c);
    if (*gen) return cmd_generate(c);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IngestionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIngestion;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kComputation;
  }
  return kUsage;
}
