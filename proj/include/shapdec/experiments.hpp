#pragma once

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "shapdec/core.hpp"
#include "shapdec/distributions.hpp"
#include "shapdec/engine.hpp"
#include "shapdec/io.hpp"
#include "shapdec/models.hpp"
#include "shapdec/parallel.hpp"
#include "shapdec/stats.hpp"
#include "shapdec/viz.hpp"

namespace shapdec::experiments {

/// 64-bit seed for work item `index` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  RngStream s(seed, index);
  return s.next_u64();
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path.string(), j.dump(2) + "\n");
}

inline void prepare_dir(const std::string& out_dir) {
  if (out_dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IngestionError("cannot create output directory '" + out_dir + "': " + ec.message());
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& housing_names() {
  static const std::vector<std::string> names = {"CRIM", "ZN",  "INDUS",   "CHAS", "NOX", "RM",   "AGE",
                                                  "DIS",  "RAD", "TAX", "PTRATIO", "B",  "LSTAT"};
  return names;
}

/// Correlated Gaussian stand-in for a 13-feature housing table. Features are
/// driven by two latent factors plus idiosyncratic noise; MEDV is linear in
/// the standardized features plus noise.
inline Dataset generate_housing(std::size_t n = 506, std::uint64_t seed = 0) {
  if (n < 20) throw SizeError("housing generator needs at least 20 rows");
  // Loadings on (urbanization, affluence); communalities stay below 0.9.
  const double load[13][2] = {{0.60, -0.30}, {-0.55, 0.25}, {0.80, -0.10}, {0.05, 0.10}, {0.85, 0.00},
                              {-0.25, 0.80}, {0.70, -0.20}, {-0.85, 0.05}, {0.80, -0.05}, {0.85, -0.15},
                              {0.40, -0.45}, {-0.35, 0.30}, {0.55, -0.70}};
  const double mean[13] = {3.6, 11.4, 11.1, 0.07, 0.55, 6.3, 68.6, 3.8, 9.5, 408.0, 18.5, 356.7, 12.7};
  const double scale[13] = {8.6, 23.3, 6.9, 0.25, 0.12, 0.70, 28.1, 2.1, 8.7, 168.5, 2.2, 91.3, 7.1};
  // MEDV response per standard deviation of each feature.
  const double effect[13] = {-1.0, 1.0, 0.0, 0.7, -2.0, 4.0, 0.0, -3.0, 2.5, -2.0, -2.0, 0.8, -5.0};

  RngStream rng(seed, 0);
  Matrix x(static_cast<Eigen::Index>(n), 13);
  Vector y(static_cast<Eigen::Index>(n));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double f0 = rng.normal(), f1 = rng.normal();
    double target = 22.5;
    for (int j = 0; j < 13; ++j) {
      const double common = load[j][0] * f0 + load[j][1] * f1;
      const double unique = std::sqrt(1.0 - load[j][0] * load[j][0] - load[j][1] * load[j][1]);
      const double z = common + unique * rng.normal();
      x(r, j) = mean[j] + scale[j] * z;
      target += effect[j] * z;
    }
    y[r] = target + 2.0 * rng.normal();
  }
  Dataset ds;
  ds.features = FeatureMatrix(housing_names(), std::move(x));
  ds.target = std::move(y);
  ds.target_name = "MEDV";
  return ds;
}

inline const std::vector<std::string>& fire_names() {
  static const std::vector<std::string> names = {"T", "RH", "Ws", "Rain"};
  return names;
}

namespace detail {

inline double fire_logit(double t, double rh, double ws, double rain) {
  return 0.45 * (t - 32.0) - 0.07 * (rh - 62.0) + 0.18 * (ws - 15.5) - 2.2 * rain + 0.6;
}

}  // namespace detail

/// Four weather features (T, RH, Ws, Rain) and a 0/1 fire label drawn from
/// a logistic model increasing in T and Ws and decreasing in RH and Rain.
/// The correlated variant couples the weather through a shared dryness
/// factor. The independent variant is a balanced full factorial grid over
/// `levels` values per feature, so every pair of features has exactly zero
/// rank correlation.
inline Dataset generate_fire(std::size_t n = 244, std::uint64_t seed = 0, bool independent = false,
                             std::size_t levels = 6) {
  RngStream rng(seed, 0);
  std::vector<std::array<double, 4>> rows;
  if (independent) {
    if (levels < 2) throw SizeError("fire grid needs at least two levels");
    auto level = [&](double lo, double hi, std::size_t k) {
      return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(levels - 1);
    };
    for (std::size_t a = 0; a < levels; ++a)
      for (std::size_t b = 0; b < levels; ++b)
        for (std::size_t c = 0; c < levels; ++c)
          for (std::size_t d = 0; d < levels; ++d)
            rows.push_back({level(24.0, 40.0, a), level(30.0, 90.0, b), level(8.0, 24.0, c), level(0.0, 4.0, d)});
  } else {
    if (n < 20) throw SizeError("fire generator needs at least 20 rows");
    for (std::size_t r = 0; r < n; ++r) {
      const double dry = rng.normal();
      const double t = std::round(32.0 + 3.0 * dry + 2.0 * rng.normal());
      const double rh = std::clamp(std::round(62.0 - 11.0 * dry + 8.0 * rng.normal()), 20.0, 95.0);
      const double ws = std::clamp(std::round(15.5 + 0.8 * dry + 2.6 * rng.normal()), 6.0, 29.0);
      const double wet = -1.1 * dry + 0.8 * rng.normal();
      const double rain = wet > 0.9 ? std::round(10.0 * (wet - 0.9) * 2.5) / 10.0 : 0.0;
      rows.push_back({t, rh, ws, rain});
    }
  }
  Matrix x(static_cast<Eigen::Index>(rows.size()), 4);
  Vector y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& v = rows[r];
    for (int j = 0; j < 4; ++j) x(static_cast<Eigen::Index>(r), j) = v[static_cast<std::size_t>(j)];
    const double p = sigmoid(detail::fire_logit(v[0], v[1], v[2], v[3]));
    y[static_cast<Eigen::Index>(r)] = rng.uniform() < p ? 1.0 : 0.0;
  }
  Dataset ds;
  ds.features = FeatureMatrix(fire_names(), std::move(x));
  ds.target = std::move(y);
  ds.target_name = "fire";
  return ds;
}

/// Two Bernoulli(0.5) features with P(X0 = X1) = 0.7.
inline DiscreteJoint toy_joint() {
  return DiscreteJoint({(Vector(2) << 0, 0).finished(), (Vector(2) << 0, 1).finished(),
                        (Vector(2) << 1, 0).finished(), (Vector(2) << 1, 1).finished()},
                       {0.35, 0.15, 0.15, 0.35});
}

/// f(x0, x1) = x0 tabulated on {0,1}^2.
inline TabulatedModel toy_model() {
  return TabulatedModel({(Vector(2) << 0, 0).finished(), (Vector(2) << 0, 1).finished(),
                         (Vector(2) << 1, 0).finished(), (Vector(2) << 1, 1).finished()},
                        {0.0, 0.0, 1.0, 1.0});
}

/// 100 rows realizing the toy joint exactly (35/15/15/35).
inline FeatureMatrix toy_data() {
  Matrix x(100, 2);
  Eigen::Index r = 0;
  auto put = [&](double a, double b, int count) {
    for (int k = 0; k < count; ++k, ++r) x.row(r) << a, b;
  };
  put(0, 0, 35);
  put(0, 1, 15);
  put(1, 0, 15);
  put(1, 1, 35);
  return FeatureMatrix({"x0", "x1"}, std::move(x));
}

// ---------------------------------------------------------------------------
// Toy example
// ---------------------------------------------------------------------------

struct ToyConfig {
  std::size_t k1 = 10000;
  std::size_t k2 = 10000;
  std::uint64_t seed = 0;
  std::string out_dir;
};

struct ToyResult {
  Decomposition exact;
  Decomposition sampled;
  nlohmann::json to_json(const ToyConfig& c) const {
    return {{"exact", shapdec::to_json(exact)},
            {"sampled", shapdec::to_json(sampled)},
            {"meta", {{"experiment", "toy"}, {"k1", c.k1}, {"k2", c.k2}, {"seed", c.seed}}}};
  }
};

inline ToyResult run_toy(const ToyConfig& config) {
  const auto joint = toy_joint();
  const auto model = toy_model();
  const std::vector<std::string> names = {"x0", "x1"};
  const Vector x = (Vector(2) << 1, 1).finished();
  ToyResult res;
  res.exact = exact_decomposition(model, joint, x, names);
  const DiscreteSampler sampler(joint, names);
  res.sampled = decompose(model, sampler, x, config.k1, config.k2, config.seed);
  if (!config.out_dir.empty()) {
    prepare_dir(config.out_dir);
    const std::filesystem::path dir(config.out_dir);
    write_json(dir / "results.json", res.to_json(config));
    auto spec = viz::force_spec(res.exact, x);
    spec.title = "Toy example, exact decomposition";
    write_text((dir / "force_exact.svg").string(), viz::render_force_plot(spec));
    spec = viz::force_spec(res.sampled, x);
    spec.title = "Toy example, sampled decomposition";
    write_text((dir / "force_sampled.svg").string(), viz::render_force_plot(spec));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Correlation study
// ---------------------------------------------------------------------------

struct CorrelationConfig {
  double a12 = 2.0;
  std::vector<double> alphas = {-0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75};
  /// Independent decompositions per α; their estimates are averaged.
  std::size_t repeats = 1;
  std::size_t k1 = 10000;
  std::size_t k2 = 20000;
  std::uint64_t seed = 0;
  std::string out_dir;
};

struct CorrelationStudyRow {
  double alpha = 0.0;
  Vector phi;       // estimated, per feature
  Vector phi_dep;   // estimated, per feature
  double phi_analytic = 0.0;
  double phi_dep_analytic = 0.0;
  double residual_estimated = 0.0;  // sampled conditional value function
  double residual_exact = 0.0;      // closed-form value function
  double residual_analytic = 0.0;
};

/// f = x0 + x1 + a12 x0 x1 as a quadratic model.
inline QuadraticModel interaction_model(double a12) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 1) = a(1, 0) = 0.5 * a12;
  return QuadraticModel(0.0, Vector::Ones(2), a);
}

inline GaussianModel bivariate_gaussian(double alpha) {
  GaussianModel g;
  g.names = {"x0", "x1"};
  g.mean = Vector::Zero(2);
  g.cov = (Matrix(2, 2) << 1.0, alpha, alpha, 1.0).finished();
  return g;
}

inline std::vector<CorrelationStudyRow> run_correlation_study(const CorrelationConfig& config) {
  if (config.alphas.empty()) throw SizeError("correlation study needs at least one alpha");
  if (config.repeats < 1) throw SizeError("correlation study needs at least one repeat per alpha");
  for (double a : config.alphas)
    if (!(a > -0.99 && a < 0.99)) throw SizeError("alpha must lie in (-0.99, 0.99)");
  const auto model = interaction_model(config.a12);
  const Vector x = Vector::Ones(2);
  const std::size_t n_alpha = config.alphas.size();

  std::vector<Decomposition> runs(n_alpha * config.repeats);
  std::vector<double> residual_est(n_alpha * config.repeats);
  std::vector<std::unique_ptr<GaussianSampler>> samplers;
  for (double a : config.alphas) samplers.push_back(std::make_unique<GaussianSampler>(bivariate_gaussian(a)));
  parallel_for(runs.size(), [&](std::size_t item) {
    const std::size_t ai = item / config.repeats;
    const auto s = derive_seed(config.seed, item);
    runs[item] = decompose(model, *samplers[ai], x, config.k1, config.k2, s);
    const ConditionalValue vf(model, *samplers[ai], config.k1);
    const auto table = shapley_residuals(vf, x, RngStream(s, 2));
    residual_est[item] = 0.5 * (table.norm(0) + table.norm(1));
  });

  std::vector<CorrelationStudyRow> rows;
  for (std::size_t ai = 0; ai < n_alpha; ++ai) {
    CorrelationStudyRow row;
    row.alpha = config.alphas[ai];
    row.phi = Vector::Zero(2);
    row.phi_dep = Vector::Zero(2);
    for (std::size_t r = 0; r < config.repeats; ++r) {
      const auto& d = runs[ai * config.repeats + r];
      row.phi += d.phi;
      row.phi_dep += d.phi_dep;
      row.residual_estimated += residual_est[ai * config.repeats + r];
    }
    const double reps = static_cast<double>(config.repeats);
    row.phi /= reps;
    row.phi_dep /= reps;
    row.residual_estimated /= reps;
    const QuadraticGaussianValue exact(model, bivariate_gaussian(row.alpha), ValueKind::Conditional);
    const auto table = shapley_residuals(exact, x);
    row.residual_exact = 0.5 * (table.norm(0) + table.norm(1));
    row.phi_analytic = 1.0 + 0.5 * config.a12 * (1.0 - row.alpha);
    row.phi_dep_analytic = 0.5 * (1.0 + config.a12) * row.alpha;
    row.residual_analytic = std::sqrt(2.0) * std::fabs(0.5 * config.a12 - (1.0 + 0.5 * config.a12) * row.alpha);
    rows.push_back(std::move(row));
  }

  if (!config.out_dir.empty()) {
    prepare_dir(config.out_dir);
    const std::filesystem::path dir(config.out_dir);
    nlohmann::json table = nlohmann::json::array();
    for (const auto& r : rows)
      table.push_back({{"alpha", r.alpha},
                       {"phi", to_std(r.phi)},
                       {"phi_dep", to_std(r.phi_dep)},
                       {"phi_dep_mean", r.phi_dep.mean()},
                       {"phi_analytic", r.phi_analytic},
                       {"phi_dep_analytic", r.phi_dep_analytic},
                       {"residual_norm_estimated", r.residual_estimated},
                       {"residual_norm_exact", r.residual_exact},
                       {"residual_norm_analytic", r.residual_analytic}});
    write_json(dir / "results.json", {{"rows", table},
                                      {"meta",
                                       {{"experiment", "correlation"},
                                        {"a12", config.a12},
                                        {"repeats", config.repeats},
                                        {"k1", config.k1},
                                        {"k2", config.k2},
                                        {"seed", config.seed}}}});
    viz::LineChartSpec chart;
    chart.title = "Dependent part and Shapley residual norm vs correlation";
    chart.x_label = "correlation";
    chart.y_label = "value";
    chart.x = config.alphas;
    viz::LineSeries dep_est{"phi_dep (estimated)", {}, {}, {}}, dep_an{"phi_dep (analytic)", {}, {}, {}};
    viz::LineSeries res_est{"residual norm (estimated)", {}, {}, {}}, res_an{"residual norm (analytic)", {}, {}, {}};
    for (const auto& r : rows) {
      dep_est.y.push_back(r.phi_dep.mean());
      dep_an.y.push_back(r.phi_dep_analytic);
      res_est.y.push_back(r.residual_estimated);
      res_an.y.push_back(r.residual_analytic);
    }
    chart.series = {dep_est, dep_an, res_est, res_an};
    write_text((dir / "correlation.svg").string(), viz::render_line_chart(chart));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Imputation study
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& selection_methods() {
  static const std::vector<std::string> m = {"interventional-shap", "interventional-part", "conditional-shap"};
  return m;
}

inline const std::vector<std::string>& imputation_methods() {
  static const std::vector<std::string> m = {"marginal-mean", "conditional-mean"};
  return m;
}

struct ImputationConfig {
  std::string model = "linear";  // linear | forest
  ForestParams forest;
  std::size_t towns = 200;
  std::size_t k1 = 1000;
  std::size_t k2 = 4000;
  std::uint64_t seed = 0;
  std::size_t traces = 10;
  std::string out_dir;
};

/// Average model-output change when imputing the k most negatively
/// attributed features, k = 0..M.
struct ImputationCurve {
  std::string method;
  std::string imputation;
  std::vector<double> mean;
  std::vector<double> std;
};

/// Per-town difference of an interventional method minus conditional SHAP.
struct DifferenceTrace {
  std::string method;
  std::string imputation;
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<std::vector<double>> towns;  // a few individual traces
};

struct ImputationResult {
  std::vector<std::size_t> towns;
  std::vector<ImputationCurve> curves;
  std::vector<DifferenceTrace> differences;

  const ImputationCurve& curve(const std::string& method, const std::string& imputation) const {
    for (const auto& c : curves)
      if (c.method == method && c.imputation == imputation) return c;
    throw IndexError("no curve for " + method + " / " + imputation);
  }
};

/// Feature indices ordered by attribution ascending; ties by index.
inline std::vector<std::size_t> most_negative_first(const Vector& attribution) {
  std::vector<std::size_t> order(static_cast<std::size_t>(attribution.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return attribution[static_cast<Eigen::Index>(a)] < attribution[static_cast<Eigen::Index>(b)];
  });
  return order;
}

/// Output change f(x') − f(x) for k = 0..M, where x' imputes the first k
/// features of `order` by marginal means or by their conditional mean given
/// the untouched features.
inline std::vector<double> imputation_curve(const Predictor& model, const GaussianSampler& sampler, const Sample& x,
                                            const std::vector<std::size_t>& order, bool conditional) {
  const std::size_t m = order.size();
  const double fx = model.predict(x);
  Matrix rows(static_cast<Eigen::Index>(m + 1), static_cast<Eigen::Index>(m));
  RngStream unused;
  for (std::size_t k = 0; k <= m; ++k) {
    Coalition untouched = Coalition::full(m);
    for (std::size_t j = 0; j < k; ++j) untouched.erase(order[j]);
    Vector xi = x;
    if (k > 0) {
      const Vector fill = conditional ? sampler.conditional_mean(untouched, x, unused)
                                      : linalg::select(sampler.model().mean, untouched.missing());
      compose_row(untouched, x, fill, xi);
    }
    rows.row(static_cast<Eigen::Index>(k)) = xi.transpose();
  }
  const Vector out = model.predict_batch(rows);
  std::vector<double> change(m + 1);
  for (std::size_t k = 0; k <= m; ++k) change[k] = k == 0 ? 0.0 : out[static_cast<Eigen::Index>(k)] - fx;
  return change;
}

namespace detail {

inline void mean_std(const std::vector<std::vector<double>>& runs, std::vector<double>& mean, std::vector<double>& sd) {
  const std::size_t len = runs.front().size();
  mean.assign(len, 0.0);
  sd.assign(len, 0.0);
  for (const auto& r : runs)
    for (std::size_t k = 0; k < len; ++k) mean[k] += r[k];
  for (auto& v : mean) v /= static_cast<double>(runs.size());
  if (runs.size() > 1) {
    for (const auto& r : runs)
      for (std::size_t k = 0; k < len; ++k) sd[k] += (r[k] - mean[k]) * (r[k] - mean[k]);
    for (auto& v : sd) v = std::sqrt(v / static_cast<double>(runs.size() - 1));
  }
}

}  // namespace detail

inline PredictorPtr fit_model(const std::string& kind, const Dataset& data, const ForestParams& forest,
                              std::uint64_t seed, ForestTask task = ForestTask::Regression) {
  if (!data.target) throw IngestionError("model fitting needs a target column");
  if (kind == "linear") return std::make_shared<LinearModel>(fit_ols(data.features, *data.target));
  if (kind == "forest")
    return std::make_shared<ForestModel>(fit_forest(data.features, *data.target, forest, RngStream(seed, 7), task));
  throw UnsupportedError("unknown model kind '" + kind + "'");
}

inline ImputationResult run_imputation_study(const Dataset& data, const ImputationConfig& config) {
  if (!data.target) throw IngestionError("imputation study needs a target column");
  const auto& features = data.features;
  const std::size_t n = features.rows(), m = features.features();
  if (config.towns < 1 || config.towns > n) throw SizeError("town count must lie in 1..n");
  const auto model = fit_model(config.model, data, config.forest, config.seed);
  const GaussianSampler sampler(fit_gaussian(features));

  ImputationResult result;
  {
    RngStream pick(config.seed, 0);
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t t = 0; t < config.towns; ++t) {
      std::swap(pool[t], pool[t + static_cast<std::size_t>(pick.below(n - t))]);
      result.towns.push_back(pool[t]);
    }
  }

  const auto& methods = selection_methods();
  // curves[town][method][imputation] -> length M+1
  std::vector<std::vector<std::vector<std::vector<double>>>> per_town(config.towns);
  parallel_for(config.towns, [&](std::size_t t) {
    const Sample x = features.row(result.towns[t]);
    const auto s = derive_seed(config.seed, 1000 + t);
    std::vector<Vector> attributions(methods.size());
    const InterventionalValue ivf(*model, features, config.k1 >= n ? InterventionalValue::kAllRows : config.k1);
    attributions[0] = kernel_shap(ivf, x, RngStream(s, 3)).phi;
    const auto d = decompose(*model, sampler, x, config.k1, config.k2, s);
    attributions[1] = d.phi_int;
    attributions[2] = d.phi;
    per_town[t].resize(methods.size());
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const auto order = most_negative_first(attributions[mi]);
      per_town[t][mi] = {imputation_curve(*model, sampler, x, order, false),
                         imputation_curve(*model, sampler, x, order, true)};
    }
  });

  const auto& imputations = imputation_methods();
  for (std::size_t mi = 0; mi < methods.size(); ++mi)
    for (std::size_t ii = 0; ii < imputations.size(); ++ii) {
      std::vector<std::vector<double>> runs;
      for (const auto& town : per_town) runs.push_back(town[mi][ii]);
      ImputationCurve c{methods[mi], imputations[ii], {}, {}};
      detail::mean_std(runs, c.mean, c.std);
      result.curves.push_back(std::move(c));
    }
  for (std::size_t mi = 0; mi < 2; ++mi)
    for (std::size_t ii = 0; ii < imputations.size(); ++ii) {
      std::vector<std::vector<double>> runs;
      for (const auto& town : per_town) {
        std::vector<double> diff(m + 1);
        for (std::size_t k = 0; k <= m; ++k) diff[k] = town[mi][ii][k] - town[2][ii][k];
        runs.push_back(std::move(diff));
      }
      DifferenceTrace d{methods[mi], imputations[ii], {}, {}, {}};
      detail::mean_std(runs, d.mean, d.std);
      for (std::size_t t = 0; t < std::min(config.traces, runs.size()); ++t) d.towns.push_back(runs[t]);
      result.differences.push_back(std::move(d));
    }

  if (!config.out_dir.empty()) {
    prepare_dir(config.out_dir);
    const std::filesystem::path dir(config.out_dir);
    nlohmann::json curves = nlohmann::json::array();
    for (const auto& c : result.curves)
      curves.push_back({{"method", c.method}, {"imputation", c.imputation}, {"mean", c.mean}, {"std", c.std}});
    nlohmann::json diffs = nlohmann::json::array();
    for (const auto& d : result.differences)
      diffs.push_back({{"method", d.method},
                       {"baseline", "conditional-shap"},
                       {"imputation", d.imputation},
                       {"mean", d.mean},
                       {"std", d.std},
                       {"towns", d.towns}});
    write_json(dir / "results.json", {{"towns", result.towns},
                                      {"curves", curves},
                                      {"differences", diffs},
                                      {"meta",
                                       {{"experiment", "housing"},
                                        {"model", config.model},
                                        {"target", data.target_name},
                                        {"k1", config.k1},
                                        {"k2", config.k2},
                                        {"seed", config.seed}}}});

    std::vector<double> grid(m + 1);
    std::iota(grid.begin(), grid.end(), 0.0);
    for (const auto& imp : imputations) {
      for (bool band : {false, true}) {
        viz::LineChartSpec chart;
        chart.title = "Change in prediction when imputing selected features (" + imp + ")";
        chart.x_label = "number of imputed features";
        chart.y_label = "change in " + data.target_name;
        chart.x = grid;
        for (const auto& c : result.curves)
          if (c.imputation == imp) chart.series.push_back({c.method, c.mean, band ? c.std : std::vector<double>{}, {}});
        write_text((dir / ("curves_" + imp + (band ? "_std" : "") + ".svg")).string(), viz::render_line_chart(chart));
      }
      viz::LineChartSpec chart;
      chart.title = "Difference to conditional SHAP per town (" + imp + ")";
      chart.x_label = "number of imputed features";
      chart.y_label = "difference in change";
      chart.x = grid;
      for (const auto& d : result.differences)
        if (d.imputation == imp) chart.series.push_back({d.method + " - conditional-shap", d.mean, {}, d.towns});
      write_text((dir / ("differences_" + imp + ".svg")).string(), viz::render_line_chart(chart));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Fire study
// ---------------------------------------------------------------------------

struct FireConfig {
  std::size_t k1 = 500;
  std::size_t k2 = 2000;
  std::uint64_t seed = 0;
  std::size_t sample_index = 0;
  ForestParams forest = {100, 8, 5, 0, true};
  std::string out_dir;
};

struct FireCorrelation {
  std::string feature;
  std::optional<double> phi;
  std::optional<double> phi_int;
  std::optional<double> phi_dep;
};

struct FireResult {
  std::vector<Decomposition> decompositions;
  Vector output;  // log odds per row
  double accuracy = 0.0;
  std::vector<FireCorrelation> table;
  CorrelationMatrix graph;

  const FireCorrelation& row(const std::string& feature) const {
    for (const auto& r : table)
      if (r.feature == feature) return r;
    throw IndexError("unknown feature '" + feature + "'");
  }
};

namespace detail {

inline std::optional<double> try_spearman(const Vector& a, const Vector& b) {
  try {
    return spearman(a, b);
  } catch (const UnsupportedError&) {
    return std::nullopt;
  }
}

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

inline FireResult run_fire_study(const Dataset& data, const FireConfig& config) {
  if (!data.target) throw IngestionError("fire study needs a label column");
  for (auto v : *data.target)
    if (v != 0.0 && v != 1.0) throw IngestionError("fire label must be binary (0/1)");
  const auto& features = data.features;
  const std::size_t n = features.rows(), m = features.features();
  if (config.sample_index >= n) throw IndexError("sample index out of range");

  const auto forest =
      std::make_shared<ForestModel>(fit_forest(features, *data.target, config.forest, RngStream(config.seed, 7),
                                               ForestTask::BinaryProbability));
  const LogOddsModel model(forest);
  const CopulaSampler sampler(fit_copula(features));

  FireResult res;
  res.decompositions.resize(n);
  parallel_for(n, [&](std::size_t r) {
    res.decompositions[r] =
        decompose(model, sampler, features.row(r), config.k1, config.k2, derive_seed(config.seed, 1000 + r));
  });
  res.output = model.predict_batch(features.values());
  const Vector prob = forest->predict_batch(features.values());
  std::size_t correct = 0;
  for (std::size_t r = 0; r < n; ++r)
    correct += ((prob[static_cast<Eigen::Index>(r)] >= 0.5) == ((*data.target)[static_cast<Eigen::Index>(r)] == 1.0));
  res.accuracy = static_cast<double>(correct) / static_cast<double>(n);

  for (std::size_t j = 0; j < m; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    Vector phi(static_cast<Eigen::Index>(n)), phi_int(static_cast<Eigen::Index>(n)), phi_dep(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
      const auto rr = static_cast<Eigen::Index>(r);
      phi[rr] = res.decompositions[r].phi[jj];
      phi_int[rr] = res.decompositions[r].phi_int[jj];
      phi_dep[rr] = res.decompositions[r].phi_dep[jj];
    }
    const Vector col = features.values().col(jj);
    res.table.push_back({features.names()[j], detail::try_spearman(col, phi), detail::try_spearman(col, phi_int),
                         detail::try_spearman(col, phi_dep)});
  }

  Matrix columns(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m + 1));
  columns.leftCols(static_cast<Eigen::Index>(m)) = features.values();
  columns.col(static_cast<Eigen::Index>(m)) = res.output;
  auto names = features.names();
  names.push_back("log-odds");
  res.graph = partial_correlation_graph(columns, names);

  if (!config.out_dir.empty()) {
    prepare_dir(config.out_dir);
    const std::filesystem::path dir(config.out_dir);
    nlohmann::json table = nlohmann::json::array();
    for (const auto& r : res.table)
      table.push_back({{"feature", r.feature},
                       {"phi", detail::optional_json(r.phi)},
                       {"phi_int", detail::optional_json(r.phi_int)},
                       {"phi_dep", detail::optional_json(r.phi_dep)}});
    nlohmann::json decs = nlohmann::json::array();
    for (const auto& d : res.decompositions) decs.push_back(shapdec::to_json(d));
    nlohmann::json partial = nlohmann::json::array();
    for (Eigen::Index i = 0; i < res.graph.values.rows(); ++i) partial.push_back(to_std(res.graph.values.row(i).transpose()));
    write_json(dir / "results.json", {{"spearman", table},
                                      {"partial_correlation", {{"names", res.graph.names}, {"values", partial}}},
                                      {"training_accuracy", res.accuracy},
                                      {"sample_index", config.sample_index},
                                      {"decompositions", decs},
                                      {"meta",
                                       {{"experiment", "fire"},
                                        {"label", data.target_name},
                                        {"trees", config.forest.trees},
                                        {"k1", config.k1},
                                        {"k2", config.k2},
                                        {"seed", config.seed}}}});
    const Sample x = features.row(config.sample_index);
    auto spec = viz::force_spec(res.decompositions[config.sample_index], x);
    spec.title = "Decomposed force plot, sample " + std::to_string(config.sample_index);
    spec.axis_label = "log odds";
    spec.secondary = viz::probability_axis();
    write_text((dir / "force_decomposition.svg").string(), viz::render_force_plot(spec));
    const InterventionalValue ivf(model, features, config.k1 >= n ? InterventionalValue::kAllRows : config.k1);
    Decomposition classic = res.decompositions[config.sample_index];
    const auto shap = kernel_shap(ivf, x, RngStream(derive_seed(config.seed, 999), 0));
    classic.base = shap.base;
    classic.phi = shap.phi;
    classic.phi_int = shap.phi;
    classic.phi_dep = Vector::Zero(static_cast<Eigen::Index>(m));
    spec = viz::force_spec(classic, x, true);
    spec.title = "Interventional SHAP force plot, sample " + std::to_string(config.sample_index);
    spec.axis_label = "log odds";
    spec.secondary = viz::probability_axis();
    write_text((dir / "force_interventional.svg").string(), viz::render_force_plot(spec));
    write_text((dir / "graph.dot").string(), to_dot(res.graph));
  }
  return res;
}

}  // namespace shapdec::experiments
