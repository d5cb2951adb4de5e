#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "shapdec/core.hpp"
#include "shapdec/linalg.hpp"
#include "shapdec/normal.hpp"
#include "shapdec/rng.hpp"

namespace shapdec {

inline std::vector<std::string> default_names(std::size_t n) {
  std::vector<std::string> names(n);
  for (std::size_t i = 0; i < n; ++i) names[i] = "x" + std::to_string(i);
  return names;
}

// ---------------------------------------------------------------------------
// Sampler interface
// ---------------------------------------------------------------------------

/// Fitted distribution answering "draw the missing features given the known
/// ones". Implementations are immutable after construction; any internal
/// caches are synchronized and never change results.
///
/// Every method takes the full-length sample `x`; only the coordinates in
/// `known` are read.
class ConditionalSampler {
 public:
  virtual ~ConditionalSampler() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t features() const = 0;
  virtual const std::vector<std::string>& names() const = 0;

  /// `count` draws of X_{S̄} given X_S = x_S, one row per draw, columns in
  /// ascending feature order.
  virtual Matrix sample(const Coalition& known, const Sample& x, std::size_t count, RngStream& rng) const = 0;

  /// E[X_{S̄} | X_S = x_S]. The default is a Monte Carlo mean.
  virtual Vector conditional_mean(const Coalition& known, const Sample& x, RngStream& rng) const {
    const Matrix draws = sample(known, x, mean_draws_, rng);
    return draws.colwise().mean().transpose();
  }

  virtual nlohmann::json to_json() const = 0;

  std::size_t mean_draws() const noexcept { return mean_draws_; }
  void set_mean_draws(std::size_t n) {
    if (n < 1) throw SizeError("conditional mean draw budget must be positive");
    mean_draws_ = n;
  }

 protected:
  void check_call(const Coalition& known, const Sample& x) const {
    if (known.n_features() != features())
      throw SizeError("coalition is over " + std::to_string(known.n_features()) + " features, sampler has " +
                      std::to_string(features()));
    if (static_cast<std::size_t>(x.size()) != features()) throw SizeError("sample length does not match sampler");
    for (auto j : known.members())
      if (!std::isfinite(x[static_cast<Eigen::Index>(j)])) throw IngestionError("known values must be finite");
  }

 private:
  std::size_t mean_draws_ = 10000;
};

inline Matrix sample_conditional(const ConditionalSampler& sampler, const Coalition& known, const Sample& x,
                                 std::size_t count, RngStream& rng) {
  if (count < 1) throw SizeError("draw count must be positive");
  return sampler.sample(known, x, count, rng);
}

inline Vector conditional_mean(const ConditionalSampler& sampler, const Coalition& known, const Sample& x,
                               RngStream rng = RngStream(0, 0)) {
  return sampler.conditional_mean(known, x, rng);
}

// ---------------------------------------------------------------------------
// Multivariate Gaussian
// ---------------------------------------------------------------------------

struct GaussianModel {
  std::vector<std::string> names;
  Vector mean;
  Matrix cov;
  /// Features with zero sample variance (permitted, reported here).
  std::vector<std::size_t> constant_features;
};

inline GaussianModel fit_gaussian(const FeatureMatrix& data) {
  GaussianModel g;
  g.names = data.names();
  g.mean = data.column_means();
  g.cov = linalg::sample_covariance(data.values());
  for (Eigen::Index j = 0; j < g.cov.rows(); ++j)
    if (g.cov(j, j) == 0.0) g.constant_features.push_back(static_cast<std::size_t>(j));
  return g;
}

struct ConditionalGaussian {
  Vector cond_mean;
  Matrix cond_cov;
  Coalition targets;
};

namespace detail {

// Everything about conditioning on S that does not depend on x_S.
struct GaussianPlan {
  std::vector<std::size_t> known;
  std::vector<std::size_t> missing;
  Matrix regression;  // Σ_{S̄S} Σ_{SS}^{-1}
  Matrix cond_cov;    // Σ_{S̄S̄} - Σ_{S̄S} Σ_{SS}^{-1} Σ_{SS̄}
  Matrix cond_chol;   // lower Cholesky factor of jittered cond_cov
};

inline std::string join_names(const std::vector<std::string>& names, const std::vector<std::size_t>& idx) {
  std::string out;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k) out += ", ";
    out += idx[k] < names.size() ? names[idx[k]] : "x" + std::to_string(idx[k]);
  }
  return out;
}

inline GaussianPlan make_plan(const GaussianModel& g, const Coalition& known) {
  GaussianPlan plan;
  plan.known = known.members();
  plan.missing = known.missing();
  const Matrix cov_mm = linalg::select(g.cov, plan.missing, plan.missing);
  if (plan.known.empty()) {
    plan.regression = Matrix::Zero(static_cast<Eigen::Index>(plan.missing.size()), 0);
    plan.cond_cov = cov_mm;
  } else {
    const Matrix cov_kk = linalg::select(g.cov, plan.known, plan.known);
    const Matrix cov_mk = linalg::select(g.cov, plan.missing, plan.known);
    auto chol = linalg::jittered_cholesky(cov_kk);
    if (!chol)
      throw SingularityError("covariance of conditioning features {" + join_names(g.names, plan.known) +
                             "} is singular after jitter");
    plan.regression = chol->solve(cov_mk.transpose()).transpose();
    plan.cond_cov = linalg::symmetrize(cov_mm - plan.regression * cov_mk.transpose());
  }
  if (!plan.missing.empty()) {
    auto chol = linalg::jittered_cholesky(plan.cond_cov);
    if (!chol)
      throw SingularityError("conditional covariance of {" + join_names(g.names, plan.missing) +
                             "} is not positive semi-definite after jitter");
    plan.cond_chol = chol->matrixL();
  }
  return plan;
}

inline Vector plan_mean(const GaussianModel& g, const GaussianPlan& plan, const Sample& x) {
  Vector m = linalg::select(g.mean, plan.missing);
  if (!plan.known.empty()) {
    const Vector dx = linalg::select(x, plan.known) - linalg::select(g.mean, plan.known);
    m += plan.regression * dx;
  }
  return m;
}

}  // namespace detail

/// Exact conditional distribution of X_{S̄} given X_S = x_S.
inline ConditionalGaussian condition_gaussian(const GaussianModel& g, const Coalition& known, const Sample& x) {
  const auto plan = detail::make_plan(g, known);
  return {detail::plan_mean(g, plan, x), plan.cond_cov, known.complement()};
}

class GaussianSampler : public ConditionalSampler {
 public:
  explicit GaussianSampler(GaussianModel model) : model_(std::move(model)) {
    const auto m = model_.mean.size();
    if (m < 1 || model_.cov.rows() != m || model_.cov.cols() != m)
      throw SizeError("gaussian mean and covariance dimensions disagree");
    if (model_.names.empty()) model_.names = default_names(static_cast<std::size_t>(m));
    if (!model_.mean.allFinite() || !model_.cov.allFinite())
      throw IngestionError("gaussian parameters must be finite");
    model_.cov = linalg::symmetrize(model_.cov);
  }

  std::string kind() const override { return "gaussian"; }
  std::size_t features() const override { return static_cast<std::size_t>(model_.mean.size()); }
  const std::vector<std::string>& names() const override { return model_.names; }
  const GaussianModel& model() const noexcept { return model_; }

  Matrix sample(const Coalition& known, const Sample& x, std::size_t count, RngStream& rng) const override {
    check_call(known, x);
    const auto plan = plan_for(known);
    const auto width = static_cast<Eigen::Index>(plan->missing.size());
    Matrix out(static_cast<Eigen::Index>(count), width);
    if (width == 0) return out;
    const Vector mean = detail::plan_mean(model_, *plan, x);
    Vector z(width);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      for (Eigen::Index c = 0; c < width; ++c) z[c] = rng.normal();
      out.row(r) = (mean + plan->cond_chol * z).transpose();
    }
    return out;
  }

  Vector conditional_mean(const Coalition& known, const Sample& x, RngStream&) const override {
    check_call(known, x);
    return detail::plan_mean(model_, *plan_for(known), x);
  }

  nlohmann::json to_json() const override {
    nlohmann::json j;
    j["kind"] = "gaussian";
    j["names"] = model_.names;
    j["mean"] = std::vector<double>(model_.mean.data(), model_.mean.data() + model_.mean.size());
    j["cov"] = nlohmann::json::array();
    for (Eigen::Index r = 0; r < model_.cov.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(model_.cov.cols()));
      for (Eigen::Index c = 0; c < model_.cov.cols(); ++c) row[static_cast<std::size_t>(c)] = model_.cov(r, c);
      j["cov"].push_back(row);
    }
    return j;
  }

 private:
  std::shared_ptr<const detail::GaussianPlan> plan_for(const Coalition& known) const {
    {
      std::lock_guard lock(cache_mutex_);
      if (auto it = cache_.find(known); it != cache_.end()) return it->second;
    }
    auto plan = std::make_shared<const detail::GaussianPlan>(detail::make_plan(model_, known));
    std::lock_guard lock(cache_mutex_);
    return cache_.emplace(known, std::move(plan)).first->second;
  }

  GaussianModel model_;
  mutable std::mutex cache_mutex_;
  mutable std::map<Coalition, std::shared_ptr<const detail::GaussianPlan>> cache_;
};

// ---------------------------------------------------------------------------
// Gaussian copula with empirical marginals
// ---------------------------------------------------------------------------

/// Empirical marginal: a strictly increasing piecewise-linear map between the
/// distinct observed values and their mid-rank levels rank/(n+1). Values and
/// probabilities outside the observed range are clamped.
class EmpiricalMarginal {
 public:
  EmpiricalMarginal() = default;
  explicit EmpiricalMarginal(std::vector<double> values) : sorted_(std::move(values)) {
    if (sorted_.empty()) throw SizeError("empirical marginal needs data");
    std::sort(sorted_.begin(), sorted_.end());
    const double n = static_cast<double>(sorted_.size());
    for (std::size_t a = 0; a < sorted_.size();) {
      std::size_t b = a;
      while (b + 1 < sorted_.size() && sorted_[b + 1] == sorted_[a]) ++b;
      knots_.push_back(sorted_[a]);
      levels_.push_back((0.5 * static_cast<double>(a + b) + 1.0) / (n + 1.0));
      a = b + 1;
    }
  }

  const std::vector<double>& sorted_values() const noexcept { return sorted_; }
  bool degenerate() const noexcept { return knots_.size() < 2; }
  double min() const { return knots_.front(); }
  double max() const { return knots_.back(); }

  double cdf(double v) const {
    if (v <= knots_.front()) return levels_.front();
    if (v >= knots_.back()) return levels_.back();
    const auto hi = static_cast<std::size_t>(std::upper_bound(knots_.begin(), knots_.end(), v) - knots_.begin());
    const std::size_t lo = hi - 1;
    const double t = (v - knots_[lo]) / (knots_[hi] - knots_[lo]);
    return levels_[lo] + t * (levels_[hi] - levels_[lo]);
  }

  double quantile(double p) const {
    if (p <= levels_.front()) return knots_.front();
    if (p >= levels_.back()) return knots_.back();
    const auto hi = static_cast<std::size_t>(std::upper_bound(levels_.begin(), levels_.end(), p) - levels_.begin());
    const std::size_t lo = hi - 1;
    const double t = (p - levels_[lo]) / (levels_[hi] - levels_[lo]);
    return knots_[lo] + t * (knots_[hi] - knots_[lo]);
  }

  double to_score(double v) const { return normal_quantile(cdf(v)); }
  double from_score(double z) const { return quantile(normal_cdf(z)); }

 private:
  std::vector<double> sorted_;
  std::vector<double> knots_;
  std::vector<double> levels_;
};

struct CopulaModel {
  std::vector<std::string> names;
  std::vector<EmpiricalMarginal> marginals;
  /// Correlation of the Gaussian scores; unit diagonal.
  Matrix correlation;
};

inline CopulaModel fit_copula(const FeatureMatrix& data) {
  CopulaModel c;
  c.names = data.names();
  const auto n = static_cast<Eigen::Index>(data.rows());
  const auto m = static_cast<Eigen::Index>(data.features());
  Matrix scores(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Vector col = data.values().col(j);
    c.marginals.emplace_back(std::vector<double>(col.data(), col.data() + col.size()));
    for (Eigen::Index i = 0; i < n; ++i)
      scores(i, j) = c.marginals.back().degenerate() ? 0.0 : c.marginals.back().to_score(col[i]);
  }
  const Matrix cov = linalg::sample_covariance(scores);
  c.correlation = Matrix::Identity(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      if (a != b && cov(a, a) > 0.0 && cov(b, b) > 0.0)
        c.correlation(a, b) = cov(a, b) / std::sqrt(cov(a, a) * cov(b, b));
  return c;
}

class CopulaSampler : public ConditionalSampler {
 public:
  explicit CopulaSampler(CopulaModel model)
      : model_(std::move(model)), latent_(GaussianModel{model_.names, Vector::Zero(model_.correlation.rows()),
                                                        model_.correlation, {}}) {
    if (model_.marginals.size() != static_cast<std::size_t>(model_.correlation.rows()))
      throw SizeError("copula marginal count does not match correlation size");
    if (model_.names.empty()) model_.names = default_names(model_.marginals.size());
  }

  std::string kind() const override { return "copula"; }
  std::size_t features() const override { return model_.marginals.size(); }
  const std::vector<std::string>& names() const override { return model_.names; }
  const CopulaModel& model() const noexcept { return model_; }

  Matrix sample(const Coalition& known, const Sample& x, std::size_t count, RngStream& rng) const override {
    check_call(known, x);
    for (std::size_t j = 0; j < model_.marginals.size(); ++j)
      if (model_.marginals[j].degenerate())
        throw DegenerateMarginalError("copula marginal of '" + model_.names[j] + "' has zero spread");
    Sample scores = Sample::Zero(x.size());
    for (auto j : known.members()) {
      const auto jj = static_cast<Eigen::Index>(j);
      scores[jj] = model_.marginals[j].to_score(x[jj]);
    }
    Matrix draws = latent_.sample(known, scores, count, rng);
    const auto missing = known.missing();
    for (Eigen::Index c = 0; c < draws.cols(); ++c) {
      const auto& marginal = model_.marginals[missing[static_cast<std::size_t>(c)]];
      for (Eigen::Index r = 0; r < draws.rows(); ++r) draws(r, c) = marginal.from_score(draws(r, c));
    }
    return draws;
  }

  nlohmann::json to_json() const override {
    nlohmann::json j;
    j["kind"] = "copula";
    j["names"] = model_.names;
    j["marginals"] = nlohmann::json::array();
    for (const auto& m : model_.marginals) j["marginals"].push_back(m.sorted_values());
    j["correlation"] = nlohmann::json::array();
    for (Eigen::Index r = 0; r < model_.correlation.rows(); ++r) {
      std::vector<double> row;
      for (Eigen::Index c = 0; c < model_.correlation.cols(); ++c) row.push_back(model_.correlation(r, c));
      j["correlation"].push_back(row);
    }
    return j;
  }

 private:
  CopulaModel model_;
  GaussianSampler latent_;
};

// ---------------------------------------------------------------------------
// Exact discrete joint
// ---------------------------------------------------------------------------

struct DiscreteJoint {
  std::vector<Vector> support;
  std::vector<double> probs;

  DiscreteJoint() = default;
  DiscreteJoint(std::vector<Vector> s, std::vector<double> p) : support(std::move(s)), probs(std::move(p)) {
    if (support.empty() || support.size() != probs.size())
      throw SizeError("discrete joint needs matching, non-empty support and probabilities");
    const auto m = support.front().size();
    double total = 0.0;
    for (std::size_t k = 0; k < support.size(); ++k) {
      if (support[k].size() != m || m < 1) throw SizeError("support vectors differ in length");
      if (!support[k].allFinite()) throw IngestionError("support contains non-finite values");
      if (!(probs[k] >= 0.0) || !std::isfinite(probs[k])) throw IngestionError("probabilities must be >= 0");
      total += probs[k];
    }
    if (std::fabs(total - 1.0) > 1e-12) throw IngestionError("probabilities must sum to 1");
    for (std::size_t a = 0; a < support.size(); ++a)
      for (std::size_t b = a + 1; b < support.size(); ++b)
        if (support[a] == support[b]) throw IngestionError("support vectors must be distinct");
  }

  std::size_t features() const { return static_cast<std::size_t>(support.front().size()); }

  bool matches(std::size_t k, const Coalition& known, const Sample& x) const {
    for (auto j : known.members()) {
      const auto jj = static_cast<Eigen::Index>(j);
      if (support[k][jj] != x[jj]) return false;
    }
    return true;
  }

  /// Support rows consistent with x_S and their renormalized probabilities.
  /// Empty when the event has probability zero.
  std::vector<std::pair<std::size_t, double>> conditional(const Coalition& known, const Sample& x) const {
    std::vector<std::pair<std::size_t, double>> out;
    double mass = 0.0;
    for (std::size_t k = 0; k < support.size(); ++k)
      if (probs[k] > 0.0 && matches(k, known, x)) {
        out.emplace_back(k, probs[k]);
        mass += probs[k];
      }
    for (auto& [k, p] : out) p /= mass;
    return out;
  }
};

/// Empirical pmf of the rows of `data` (distinct rows in lexicographic order).
inline DiscreteJoint fit_discrete(const FeatureMatrix& data) {
  std::map<std::vector<double>, std::size_t> counts;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const Vector r = data.row(i);
    ++counts[std::vector<double>(r.data(), r.data() + r.size())];
  }
  std::vector<Vector> support;
  std::vector<double> probs;
  for (const auto& [row, n] : counts) {
    support.push_back(Eigen::Map<const Vector>(row.data(), static_cast<Eigen::Index>(row.size())));
    probs.push_back(static_cast<double>(n) / static_cast<double>(data.rows()));
  }
  // Renormalize so the sum is 1 to round-off.
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  for (auto& p : probs) p /= total;
  return DiscreteJoint(std::move(support), std::move(probs));
}

class DiscreteSampler : public ConditionalSampler {
 public:
  explicit DiscreteSampler(DiscreteJoint joint, std::vector<std::string> names = {})
      : joint_(std::move(joint)), names_(std::move(names)) {
    if (names_.empty()) names_ = default_names(joint_.features());
    if (names_.size() != joint_.features()) throw SizeError("name count does not match discrete joint");
  }

  std::string kind() const override { return "discrete"; }
  std::size_t features() const override { return joint_.features(); }
  const std::vector<std::string>& names() const override { return names_; }
  const DiscreteJoint& joint() const noexcept { return joint_; }

  Matrix sample(const Coalition& known, const Sample& x, std::size_t count, RngStream& rng) const override {
    check_call(known, x);
    const auto cond = joint_.conditional(known, x);
    if (cond.empty()) throw ConditioningError("no support row matches the known feature values");
    std::vector<double> cumulative(cond.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < cond.size(); ++k) cumulative[k] = (acc += cond[k].second);
    const auto missing = known.missing();
    Matrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(missing.size()));
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      const double u = rng.uniform() * acc;
      auto pick = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                           cumulative.begin());
      pick = std::min(pick, cond.size() - 1);
      const Vector& row = joint_.support[cond[pick].first];
      for (std::size_t c = 0; c < missing.size(); ++c)
        out(r, static_cast<Eigen::Index>(c)) = row[static_cast<Eigen::Index>(missing[c])];
    }
    return out;
  }

  nlohmann::json to_json() const override {
    nlohmann::json j;
    j["kind"] = "discrete";
    j["names"] = names_;
    j["support"] = nlohmann::json::array();
    for (const auto& s : joint_.support) j["support"].push_back(std::vector<double>(s.data(), s.data() + s.size()));
    j["probs"] = joint_.probs;
    return j;
  }

 private:
  DiscreteJoint joint_;
  std::vector<std::string> names_;
};

// ---------------------------------------------------------------------------
// Empirical marginal rows (interventional expectations)
// ---------------------------------------------------------------------------

/// Uniform draws, with replacement, of complete rows of `data`.
inline Matrix sample_marginal_rows(const FeatureMatrix& data, std::size_t count, RngStream& rng) {
  if (count < 1) throw SizeError("draw count must be positive");
  Matrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(data.features()));
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    out.row(r) = data.values().row(static_cast<Eigen::Index>(rng.below(data.rows())));
  return out;
}

/// Ignores the known values: missing features come from whole background
/// rows. Used as a conditional sampler it encodes the independence assumption.
class MarginalSampler : public ConditionalSampler {
 public:
  explicit MarginalSampler(FeatureMatrix data) : data_(std::move(data)) {}

  std::string kind() const override { return "marginal"; }
  std::size_t features() const override { return data_.features(); }
  const std::vector<std::string>& names() const override { return data_.names(); }
  const FeatureMatrix& data() const noexcept { return data_; }

  Matrix sample(const Coalition& known, const Sample& x, std::size_t count, RngStream& rng) const override {
    check_call(known, x);
    const auto missing = known.missing();
    Matrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(missing.size()));
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      const auto row = static_cast<Eigen::Index>(rng.below(data_.rows()));
      for (std::size_t c = 0; c < missing.size(); ++c)
        out(r, static_cast<Eigen::Index>(c)) = data_.values()(row, static_cast<Eigen::Index>(missing[c]));
    }
    return out;
  }

  Vector conditional_mean(const Coalition& known, const Sample& x, RngStream&) const override {
    check_call(known, x);
    return linalg::select(data_.column_means(), known.missing());
  }

  nlohmann::json to_json() const override {
    nlohmann::json j;
    j["kind"] = "marginal";
    j["names"] = data_.names();
    j["rows"] = nlohmann::json::array();
    for (std::size_t i = 0; i < data_.rows(); ++i) {
      const Vector r = data_.row(i);
      j["rows"].push_back(std::vector<double>(r.data(), r.data() + r.size()));
    }
    return j;
  }

 private:
  FeatureMatrix data_;
};

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace detail {

inline Matrix matrix_from_json(const nlohmann::json& rows) {
  if (!rows.is_array() || rows.empty()) throw IngestionError("expected a non-empty array of rows");
  const auto n = rows.size();
  const auto m = rows.at(0).size();
  Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (std::size_t r = 0; r < n; ++r) {
    if (rows[r].size() != m) throw IngestionError("ragged matrix in JSON");
    for (std::size_t c = 0; c < m; ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
  }
  return out;
}

inline Vector vector_from_json(const nlohmann::json& arr) {
  const auto v = arr.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

inline std::unique_ptr<ConditionalSampler> sampler_from_json(const nlohmann::json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    const auto names = j.contains("names") ? j["names"].get<std::vector<std::string>>() : std::vector<std::string>{};
    if (kind == "gaussian") {
      GaussianModel g{names, detail::vector_from_json(j.at("mean")), detail::matrix_from_json(j.at("cov")), {}};
      return std::make_unique<GaussianSampler>(std::move(g));
    }
    if (kind == "copula") {
      CopulaModel c;
      c.names = names;
      for (const auto& m : j.at("marginals")) c.marginals.emplace_back(m.get<std::vector<double>>());
      c.correlation = detail::matrix_from_json(j.at("correlation"));
      return std::make_unique<CopulaSampler>(std::move(c));
    }
    if (kind == "discrete") {
      std::vector<Vector> support;
      for (const auto& s : j.at("support")) support.push_back(detail::vector_from_json(s));
      return std::make_unique<DiscreteSampler>(DiscreteJoint(std::move(support), j.at("probs").get<std::vector<double>>()),
                                               names);
    }
    if (kind == "marginal") {
      const Matrix rows = detail::matrix_from_json(j.at("rows"));
      return std::make_unique<MarginalSampler>(
          FeatureMatrix(names.empty() ? default_names(static_cast<std::size_t>(rows.cols())) : names, rows));
    }
    throw IngestionError("unknown sampler kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("malformed sampler JSON: ") + e.what());
  }
}

/// Fits the named sampler kind to background data.
inline std::unique_ptr<ConditionalSampler> fit_sampler(const std::string& kind, const FeatureMatrix& data) {
  if (kind == "gaussian") return std::make_unique<GaussianSampler>(fit_gaussian(data));
  if (kind == "copula") return std::make_unique<CopulaSampler>(fit_copula(data));
  if (kind == "discrete") return std::make_unique<DiscreteSampler>(fit_discrete(data), data.names());
  if (kind == "marginal") return std::make_unique<MarginalSampler>(data);
  throw UnsupportedError("unknown sampler kind '" + kind + "'");
}

}  // namespace shapdec
