#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "shapdec/core.hpp"
#include "shapdec/distributions.hpp"
#include "shapdec/models.hpp"
#include "shapdec/parallel.hpp"

namespace shapdec {

enum class ValueKind { Conditional, Interventional };

inline std::string to_string(ValueKind k) { return k == ValueKind::Conditional ? "conditional" : "interventional"; }

/// Coalition payoff v(S) for one explained sample.
///
/// Sampled implementations must be pure in (S, x, rng state): callers that
/// want common random numbers across coalitions pass copies of one stream.
/// Referenced models, samplers and data must outlive the value function.
class ValueFunction {
 public:
  virtual ~ValueFunction() = default;

  virtual ValueKind kind() const = 0;
  virtual std::size_t features() const = 0;
  virtual double value(const Coalition& known, const Sample& x, RngStream& rng) const = 0;
  /// True when value() is an exact expectation and ignores the rng.
  virtual bool exact() const { return false; }
  virtual std::string model_id() const = 0;
  virtual std::string sampler_id() const = 0;

 protected:
  void check_call(const Coalition& known, const Sample& x) const {
    if (known.n_features() != features()) throw SizeError("coalition size does not match value function");
    check_sample(x, features());
  }
};

/// v(S) ≈ (1/K1) Σ_k f(x_S, x^k_{S̄}) with x^k_{S̄} drawn from p(X_{S̄} | x_S).
class ConditionalValue : public ValueFunction {
 public:
  ConditionalValue(const Predictor& model, const ConditionalSampler& sampler, std::size_t k1)
      : model_(model), sampler_(sampler), k1_(k1) {
    if (k1_ < 1) throw SizeError("K1 must be positive");
    if (model_.features() != sampler_.features())
      throw SizeError("model and sampler disagree on the feature count");
  }

  ValueKind kind() const override { return ValueKind::Conditional; }
  std::size_t features() const override { return model_.features(); }
  std::string model_id() const override { return model_.id(); }
  std::string sampler_id() const override { return sampler_.kind(); }
  std::size_t draws() const noexcept { return k1_; }

  double value(const Coalition& known, const Sample& x, RngStream& rng) const override {
    check_call(known, x);
    if (known.is_full()) return model_.predict(x);
    const Matrix fill = sampler_.sample(known, x, k1_, rng);
    Matrix rows(fill.rows(), static_cast<Eigen::Index>(features()));
    for (Eigen::Index r = 0; r < rows.rows(); ++r) compose_row(known, x, fill.row(r), rows.row(r));
    return model_.predict_batch(rows).mean();
  }

 private:
  const Predictor& model_;
  const ConditionalSampler& sampler_;
  std::size_t k1_;
};

/// v(S) ≈ (1/K1) Σ_k f(x_S, b^k_{S̄}) over whole background rows b^k drawn
/// with replacement. With K1 = kAllRows every background row is used once
/// and the value is the exact background average.
class InterventionalValue : public ValueFunction {
 public:
  static constexpr std::size_t kAllRows = 0;

  InterventionalValue(const Predictor& model, const FeatureMatrix& background, std::size_t k1)
      : model_(model), background_(background), k1_(k1) {
    if (model_.features() != background_.features())
      throw SizeError("model and background data disagree on the feature count");
  }

  ValueKind kind() const override { return ValueKind::Interventional; }
  std::size_t features() const override { return model_.features(); }
  std::string model_id() const override { return model_.id(); }
  std::string sampler_id() const override { return "marginal"; }

  double value(const Coalition& known, const Sample& x, RngStream& rng) const override {
    check_call(known, x);
    if (known.is_full()) return model_.predict(x);
    Matrix rows = k1_ == kAllRows ? background_.values() : sample_marginal_rows(background_, k1_, rng);
    for (auto j : known.members()) rows.col(static_cast<Eigen::Index>(j)).setConstant(x[static_cast<Eigen::Index>(j)]);
    return model_.predict_batch(rows).mean();
  }

 private:
  const Predictor& model_;
  const FeatureMatrix& background_;
  std::size_t k1_;
};

/// Exact conditional or interventional expectation under a discrete joint.
class ExactDiscreteValue : public ValueFunction {
 public:
  ExactDiscreteValue(const Predictor& model, DiscreteJoint joint, ValueKind kind)
      : model_(model), joint_(std::move(joint)), kind_(kind) {
    if (model_.features() != joint_.features()) throw SizeError("model and joint disagree on the feature count");
  }

  ValueKind kind() const override { return kind_; }
  std::size_t features() const override { return model_.features(); }
  bool exact() const override { return true; }
  std::string model_id() const override { return model_.id(); }
  std::string sampler_id() const override { return "discrete-exact"; }

  double value(const Coalition& known, const Sample& x, RngStream&) const override {
    check_call(known, x);
    if (known.is_full()) return model_.predict(x);
    std::vector<std::pair<std::size_t, double>> weights;
    if (kind_ == ValueKind::Conditional) {
      weights = joint_.conditional(known, x);
      if (weights.empty()) throw OracleError("conditioning event has probability zero");
    } else {
      for (std::size_t k = 0; k < joint_.support.size(); ++k)
        if (joint_.probs[k] > 0.0) weights.emplace_back(k, joint_.probs[k]);
    }
    Matrix rows(static_cast<Eigen::Index>(weights.size()), static_cast<Eigen::Index>(features()));
    for (std::size_t r = 0; r < weights.size(); ++r) {
      auto row = rows.row(static_cast<Eigen::Index>(r));
      row = joint_.support[weights[r].first].transpose();
      for (auto j : known.members()) row[static_cast<Eigen::Index>(j)] = x[static_cast<Eigen::Index>(j)];
    }
    const Vector out = model_.predict_batch(rows);
    double acc = 0.0;
    for (std::size_t r = 0; r < weights.size(); ++r) acc += weights[r].second * out[static_cast<Eigen::Index>(r)];
    return acc;
  }

 private:
  const Predictor& model_;
  DiscreteJoint joint_;
  ValueKind kind_;
};

/// Closed-form expectation of a quadratic model under a Gaussian:
/// E[c + b'X + X'AX] = c + b'm + m'Am + tr(A C) with m, C the (conditional or
/// interventional) mean and covariance, known coordinates fixed to x.
class QuadraticGaussianValue : public ValueFunction {
 public:
  QuadraticGaussianValue(const QuadraticModel& model, GaussianModel gaussian, ValueKind kind)
      : model_(model), g_(std::move(gaussian)), kind_(kind) {
    if (static_cast<std::size_t>(g_.mean.size()) != model_.features())
      throw SizeError("model and gaussian disagree on the feature count");
  }

  ValueKind kind() const override { return kind_; }
  std::size_t features() const override { return model_.features(); }
  bool exact() const override { return true; }
  std::string model_id() const override { return model_.id(); }
  std::string sampler_id() const override { return "gaussian-exact"; }

  double value(const Coalition& known, const Sample& x, RngStream&) const override {
    check_call(known, x);
    const auto m = static_cast<Eigen::Index>(features());
    Vector mean = x;
    Matrix cov = Matrix::Zero(m, m);
    const auto missing = known.missing();
    if (!missing.empty()) {
      Vector mm;
      Matrix cc;
      if (kind_ == ValueKind::Conditional) {
        const auto plan = detail::make_plan(g_, known);
        mm = detail::plan_mean(g_, plan, x);
        cc = plan.cond_cov;
      } else {
        mm = linalg::select(g_.mean, missing);
        cc = linalg::select(g_.cov, missing, missing);
      }
      for (std::size_t a = 0; a < missing.size(); ++a) {
        const auto ia = static_cast<Eigen::Index>(missing[a]);
        mean[ia] = mm[static_cast<Eigen::Index>(a)];
        for (std::size_t b = 0; b < missing.size(); ++b)
          cov(ia, static_cast<Eigen::Index>(missing[b])) =
              cc(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      }
    }
    const Matrix& a = model_.quadratic();
    return model_.intercept() + model_.linear().dot(mean) + mean.dot(a * mean) + (a * cov).trace();
  }

 private:
  const QuadraticModel& model_;
  GaussianModel g_;
  ValueKind kind_;
};

// ---------------------------------------------------------------------------
// Kernel SHAP
// ---------------------------------------------------------------------------

inline constexpr double kKernelRidge = 1e-10;

/// Shapley kernel weight of a coalition of size s (0 < s < M).
inline double kernel_weight(std::size_t n_features, std::size_t s) {
  const double m = static_cast<double>(n_features);
  const double k = static_cast<double>(s);
  return (m - 1.0) / (binomial(n_features, s) * k * (m - k));
}

struct KernelShapOptions {
  /// Enumerate every coalition when 2^M is at most this many.
  std::size_t max_enumerated = 2048;
  /// Coalition draws (including paired complements) when sampling.
  std::size_t samples = 2048;
};

struct KernelShapResult : AttributionVector {
  std::size_t coalitions = 0;
  std::vector<std::string> warnings;
};

namespace detail {

struct WeightedCoalitions {
  std::vector<Coalition> coalitions;
  std::vector<double> weights;
};

inline WeightedCoalitions kernel_coalitions(std::size_t m, const KernelShapOptions& options, RngStream rng) {
  WeightedCoalitions out;
  if (m < 63 && (std::uint64_t{1} << m) <= options.max_enumerated) {
    for (const auto& c : enumerate_coalitions(m)) {
      if (c.empty() || c.is_full()) continue;
      out.coalitions.push_back(c);
      out.weights.push_back(kernel_weight(m, c.size()));
    }
    return out;
  }
  // Sizes are drawn with probability proportional to their total kernel
  // mass (M-1)/(s(M-s)); members uniformly; each draw is paired with its
  // complement. Repeated coalitions are merged into counts.
  std::vector<double> cumulative(m - 1);
  double acc = 0.0;
  for (std::size_t s = 1; s < m; ++s)
    cumulative[s - 1] = (acc += static_cast<double>(m - 1) / static_cast<double>(s * (m - s)));
  std::map<Coalition, double> counts;
  std::vector<std::size_t> pool(m);
  const std::size_t pairs = std::max<std::size_t>(1, options.samples / 2);
  for (std::size_t d = 0; d < pairs; ++d) {
    const double u = rng.uniform() * acc;
    const auto size = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin()) + 1,
        m - 1);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    Coalition c(m);
    for (std::size_t j = 0; j < size; ++j) {
      const auto pick = j + static_cast<std::size_t>(rng.below(m - j));
      std::swap(pool[j], pool[pick]);
      c.insert(pool[j]);
    }
    counts[c] += 1.0;
    counts[c.complement()] += 1.0;
  }
  for (const auto& [c, n] : counts) {
    out.coalitions.push_back(c);
    out.weights.push_back(n);
  }
  return out;
}

}  // namespace detail

/// Kernel SHAP: weighted least squares over coalitions with the constraints
/// g(∅) = v(∅) and g(full) = v(full) imposed exactly by eliminating the last
/// attribution. Every coalition is evaluated with a copy of
/// rng.substream(0); coalition sampling uses rng.substream(1).
inline KernelShapResult kernel_shap(const ValueFunction& vf, const Sample& x, const RngStream& rng,
                                    const KernelShapOptions& options = {}) {
  const std::size_t m = vf.features();
  if (m < 1) throw SizeError("kernel SHAP needs at least one feature");
  check_sample(x, m);
  const RngStream value_stream = rng.substream(0);

  KernelShapResult result;
  RngStream s0 = value_stream;
  const double v_empty = vf.value(Coalition(m), x, s0);
  RngStream s1 = value_stream;
  const double v_full = vf.value(Coalition::full(m), x, s1);
  result.base = v_empty;
  const double delta = v_full - v_empty;
  if (m == 1) {
    result.phi = Vector::Constant(1, delta);
    return result;
  }

  const auto design = detail::kernel_coalitions(m, options, rng.substream(1));
  const std::size_t n = design.coalitions.size();
  result.coalitions = n;
  std::vector<double> values(n);
  parallel_for(n, [&](std::size_t k) {
    RngStream s = value_stream;
    values[k] = vf.value(design.coalitions[k], x, s);
  });

  const auto p = static_cast<Eigen::Index>(m - 1);
  Matrix a(static_cast<Eigen::Index>(n), p);
  Vector y(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const auto& c = design.coalitions[k];
    const double last = c.contains(m - 1) ? 1.0 : 0.0;
    const double sw = std::sqrt(design.weights[k]);
    for (Eigen::Index j = 0; j < p; ++j)
      a(static_cast<Eigen::Index>(k), j) = sw * ((c.contains(static_cast<std::size_t>(j)) ? 1.0 : 0.0) - last);
    y[static_cast<Eigen::Index>(k)] = sw * (values[k] - v_empty - last * delta);
  }

  Vector head;
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  if (qr.rank() == p) {
    head = qr.solve(y);
  } else {
    const Matrix normal = a.transpose() * a + kKernelRidge * Matrix::Identity(p, p);
    head = normal.ldlt().solve(a.transpose() * y);
    result.warnings.push_back("kernel SHAP regression was rank deficient; used ridge 1e-10");
  }
  result.phi.resize(static_cast<Eigen::Index>(m));
  result.phi.head(p) = head;
  result.phi[p] = delta - head.sum();
  return result;
}

// ---------------------------------------------------------------------------
// Interventional SHAP parts
// ---------------------------------------------------------------------------

inline constexpr std::size_t kPartsBlock = 1024;

/// Monte Carlo estimate of φ_{i,int} for every feature. Permutation k comes
/// from rng.substream(0).substream(k) and is shared by all features; the
/// single conditional draw of X_{S̄} for (i, k) comes from
/// rng.substream(1 + i).substream(k) and feeds both terms of the paired
/// difference f(x_S, x_i, x⁰_{S̄∖i}) − f(x_S, x⁰_{S̄}).
inline Vector interventional_parts(const Predictor& model, const ConditionalSampler& sampler, const Sample& x,
                                   std::size_t k2, const RngStream& rng) {
  const std::size_t m = model.features();
  if (sampler.features() != m) throw SizeError("model and sampler disagree on the feature count");
  if (k2 < 1) throw SizeError("K2 must be positive");
  check_sample(x, m);
  const auto perms = sample_permutations(m, k2, rng.substream(0));

  const std::size_t blocks = (k2 + kPartsBlock - 1) / kPartsBlock;
  std::vector<double> partial(m * blocks, 0.0);
  parallel_for(m * blocks, [&](std::size_t item) {
    const std::size_t i = item / blocks;
    const std::size_t b = item % blocks;
    const std::size_t lo = b * kPartsBlock;
    const std::size_t hi = std::min(k2, lo + kPartsBlock);
    const auto ii = static_cast<Eigen::Index>(i);
    const RngStream feature_stream = rng.substream(1 + i);
    Matrix rows(static_cast<Eigen::Index>(2 * (hi - lo)), static_cast<Eigen::Index>(m));
    for (std::size_t k = lo; k < hi; ++k) {
      const Coalition known = prefix_set(perms[k], i);
      RngStream s = feature_stream.substream(k);
      const Matrix draw = sampler.sample(known, x, 1, s);
      const auto r = static_cast<Eigen::Index>(2 * (k - lo));
      compose_row(known, x, draw.row(0), rows.row(r + 1));
      rows.row(r) = rows.row(r + 1);
      rows(r, ii) = x[ii];
    }
    const Vector out = model.predict_batch(rows);
    double acc = 0.0;
    for (Eigen::Index r = 0; r < out.size(); r += 2) acc += out[r] - out[r + 1];
    partial[item] = acc;
  });

  Vector phi_int = Vector::Zero(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) acc += partial[i * blocks + b];
    phi_int[static_cast<Eigen::Index>(i)] = acc / static_cast<double>(k2);
  }
  return phi_int;
}

// ---------------------------------------------------------------------------
// Decomposition
// ---------------------------------------------------------------------------

/// Conditional SHAP values by Kernel SHAP (K1 draws per coalition), their
/// interventional parts from K2 permutations, and the dependent parts as the
/// difference. The kernel stage uses RngStream(seed, 0), the parts stage
/// RngStream(seed, 1).
inline Decomposition decompose(const Predictor& model, const ConditionalSampler& sampler, const Sample& x,
                               std::size_t k1, std::size_t k2, std::uint64_t seed,
                               const KernelShapOptions& options = {}) {
  Decomposition d;
  d.names = sampler.names();
  d.meta.sampler = sampler.kind();
  d.meta.model = model.id();
  d.meta.k1 = k1;
  d.meta.k2 = k2;
  d.meta.seed = seed;
  if (k2 < k1) d.meta.warnings.push_back("K2 < K1; a larger permutation budget than draw budget is advised");

  KernelShapResult shap;
  try {
    const ConditionalValue vf(model, sampler, k1);
    shap = kernel_shap(vf, x, RngStream(seed, 0), options);
  } catch (const Error& e) {
    rethrow_with_context(e, "conditional SHAP stage");
  }
  try {
    d.phi_int = interventional_parts(model, sampler, x, k2, RngStream(seed, 1));
  } catch (const Error& e) {
    rethrow_with_context(e, "interventional part stage");
  }
  d.base = shap.base;
  d.phi = shap.phi;
  d.phi_dep = d.phi - d.phi_int;
  d.meta.warnings.insert(d.meta.warnings.end(), shap.warnings.begin(), shap.warnings.end());
  return d;
}

/// Exact decomposition under a discrete joint by enumerating all M!
/// orderings. For prefix S of feature i:
///   int = E[f(x_S, x_i, X_rest) | x_S] − E[f(x_S, X_{S̄}) | x_S]
///   dep = E[f(x_S, x_i, X_rest) | x_S, x_i] − E[f(x_S, x_i, X_rest) | x_S]
/// and phi = int + dep.
inline Decomposition exact_decomposition(const Predictor& model, const DiscreteJoint& joint, const Sample& x,
                                         std::vector<std::string> names = {}) {
  const std::size_t m = joint.features();
  if (m > 8) throw SizeError("exact decomposition supports at most 8 features");
  if (model.features() != m) throw SizeError("model and joint disagree on the feature count");
  check_sample(x, m);
  if (names.empty()) names = default_names(m);

  // E[f(x_T, X_rest) | x_S] for T ⊇ S, by summation over support rows
  // matching x_S.
  auto expectation = [&](const Coalition& given, const Coalition& fixed) {
    if (fixed.is_full()) return model.predict(x);
    const auto cond = joint.conditional(given, x);
    if (cond.empty()) throw OracleError("conditioning on a zero-probability event in the exact oracle");
    Matrix rows(static_cast<Eigen::Index>(cond.size()), static_cast<Eigen::Index>(m));
    for (std::size_t r = 0; r < cond.size(); ++r) {
      auto row = rows.row(static_cast<Eigen::Index>(r));
      row = joint.support[cond[r].first].transpose();
      for (auto j : fixed.members()) row[static_cast<Eigen::Index>(j)] = x[static_cast<Eigen::Index>(j)];
    }
    const Vector out = model.predict_batch(rows);
    double acc = 0.0;
    for (std::size_t r = 0; r < cond.size(); ++r) acc += cond[r].second * out[static_cast<Eigen::Index>(r)];
    return acc;
  };

  const std::size_t total = std::size_t{1} << m;
  std::vector<double> cond_value(total, std::nan(""));
  std::vector<double> shifted(total * m, std::nan(""));
  auto v = [&](const Coalition& s) {
    double& slot = cond_value[s.mask()];
    if (std::isnan(slot)) slot = expectation(s, s);
    return slot;
  };
  auto a_term = [&](const Coalition& s, std::size_t i) {
    double& slot = shifted[s.mask() * m + i];
    if (std::isnan(slot)) slot = expectation(s, s.with(i));
    return slot;
  };

  Vector phi_int = Vector::Zero(static_cast<Eigen::Index>(m));
  Vector phi_dep = Vector::Zero(static_cast<Eigen::Index>(m));
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t count = 0;
  do {
    Coalition prefix(m);
    for (auto i : order) {
      const double a = a_term(prefix, i);
      const auto ii = static_cast<Eigen::Index>(i);
      phi_int[ii] += a - v(prefix);
      phi_dep[ii] += v(prefix.with(i)) - a;
      prefix.insert(i);
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));

  Decomposition d;
  d.names = std::move(names);
  d.phi_int = phi_int / static_cast<double>(count);
  d.phi_dep = phi_dep / static_cast<double>(count);
  d.phi = d.phi_int + d.phi_dep;
  d.base = v(Coalition(m));
  d.meta.sampler = "discrete-exact";
  d.meta.model = model.id();
  return d;
}

// ---------------------------------------------------------------------------
// Shapley residuals
// ---------------------------------------------------------------------------

/// Per feature i: the single-coalition contributions φ_{i,S} = v(S∪i) − v(S)
/// over every S ∌ i, the Shapley value φ_i and residuals r_{i,S} = φ_{i,S} − φ_i.
struct ResidualTable {
  struct Entry {
    Coalition coalition;
    double weight = 0.0;  // probability that S is the prefix of i
    double contribution = 0.0;
    double residual = 0.0;
  };

  std::vector<std::string> names;
  Vector phi;
  std::vector<std::vector<Entry>> entries;  // entries[i] ordered by (|S|, mask)

  /// Euclidean norm of the coalition-indexed residual vector of feature i.
  double norm(std::size_t i) const {
    double acc = 0.0;
    for (const auto& e : entries.at(i)) acc += e.residual * e.residual;
    return std::sqrt(acc);
  }

  /// Permutation-weighted average of r_{i,S}; zero up to round-off.
  double weighted_mean(std::size_t i) const {
    double acc = 0.0;
    for (const auto& e : entries.at(i)) acc += e.weight * e.residual;
    return acc;
  }
};

inline ResidualTable shapley_residuals(const ValueFunction& vf, const Sample& x, const RngStream& rng = RngStream()) {
  const std::size_t m = vf.features();
  if (m < 1 || m > 12) throw SizeError("Shapley residuals support 1 <= M <= 12");
  check_sample(x, m);
  const auto all = enumerate_coalitions(m);
  std::vector<double> values(std::size_t{1} << m);
  const RngStream value_stream = rng.substream(0);
  parallel_for(all.size(), [&](std::size_t k) {
    RngStream s = value_stream;
    values[all[k].mask()] = vf.value(all[k], x, s);
  });

  ResidualTable table;
  table.phi = Vector::Zero(static_cast<Eigen::Index>(m));
  table.entries.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (const auto& c : all) {
      if (c.contains(i)) continue;
      ResidualTable::Entry e;
      e.coalition = c;
      e.weight = shapley_weight(m, c.size());
      e.contribution = values[c.with(i).mask()] - values[c.mask()];
      table.phi[static_cast<Eigen::Index>(i)] += e.weight * e.contribution;
      table.entries[i].push_back(std::move(e));
    }
    for (auto& e : table.entries[i]) e.residual = e.contribution - table.phi[static_cast<Eigen::Index>(i)];
  }
  table.names = default_names(m);
  return table;
}

// ---------------------------------------------------------------------------
// Additive split check
// ---------------------------------------------------------------------------

/// Component f_A of an additive model f = Σ_A f_A; `features` lists A.
struct AdditiveComponent {
  std::vector<std::size_t> features;
  PredictorPtr model;
};

struct AdditiveSplitReport {
  Vector phi_int_full;        // φ_{i,int}(f)
  Vector phi_int_restricted;  // φ_{i,int}(Σ_{A∋i} f_A)
  Vector delta;               // difference of the two
  double max_abs_delta() const { return delta.size() ? delta.cwiseAbs().maxCoeff() : 0.0; }
};

/// Checks with the exact oracle that the interventional part of feature i
/// only sees the components whose feature set contains i. Needs a discrete
/// sampler.
inline AdditiveSplitReport additive_split_check(const std::vector<AdditiveComponent>& components,
                                                const ConditionalSampler& sampler, const Sample& x) {
  const auto* discrete = dynamic_cast<const DiscreteSampler*>(&sampler);
  if (discrete == nullptr) throw UnsupportedError("additive split check needs a discrete sampler");
  if (components.empty()) throw SizeError("additive split check needs at least one component");
  const std::size_t m = sampler.features();
  std::vector<PredictorPtr> parts;
  for (const auto& c : components) {
    if (!c.model || c.model->features() != m) throw SizeError("component feature count does not match sampler");
    for (auto j : c.features)
      if (j >= m) throw IndexError("component references feature " + std::to_string(j));
    parts.push_back(c.model);
  }
  const SumModel full(parts);
  AdditiveSplitReport report;
  report.phi_int_full = exact_decomposition(full, discrete->joint(), x).phi_int;
  report.phi_int_restricted = Vector::Zero(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<PredictorPtr> touching;
    for (const auto& c : components)
      if (std::find(c.features.begin(), c.features.end(), i) != c.features.end()) touching.push_back(c.model);
    if (touching.empty()) continue;
    const SumModel restricted(touching);
    report.phi_int_restricted[static_cast<Eigen::Index>(i)] =
        exact_decomposition(restricted, discrete->joint(), x).phi_int[static_cast<Eigen::Index>(i)];
  }
  report.delta = report.phi_int_full - report.phi_int_restricted;
  return report;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const Decomposition& d) {
  nlohmann::json features = nlohmann::json::array();
  for (Eigen::Index i = 0; i < d.phi.size(); ++i) {
    const auto name = static_cast<std::size_t>(i) < d.names.size() ? d.names[static_cast<std::size_t>(i)]
                                                                     : "x" + std::to_string(i);
    features.push_back({{"name", name}, {"phi", d.phi[i]}, {"phi_int", d.phi_int[i]}, {"phi_dep", d.phi_dep[i]}});
  }
  nlohmann::json meta = {{"k1", d.meta.k1},
                         {"k2", d.meta.k2},
                         {"seed", d.meta.seed},
                         {"sampler", d.meta.sampler},
                         {"model", d.meta.model}};
  if (!d.meta.warnings.empty()) meta["warnings"] = d.meta.warnings;
  return {{"base", d.base}, {"features", features}, {"meta", meta}};
}

inline Decomposition decomposition_from_json(const nlohmann::json& j) {
  try {
    Decomposition d;
    d.base = j.at("base").get<double>();
    const auto& fs = j.at("features");
    const auto m = static_cast<Eigen::Index>(fs.size());
    d.phi.resize(m);
    d.phi_int.resize(m);
    d.phi_dep.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto& f = fs[static_cast<std::size_t>(i)];
      d.names.push_back(f.at("name").get<std::string>());
      d.phi[i] = f.at("phi").get<double>();
      d.phi_int[i] = f.at("phi_int").get<double>();
      d.phi_dep[i] = f.at("phi_dep").get<double>();
    }
    const auto& meta = j.at("meta");
    d.meta.k1 = meta.at("k1").get<std::uint64_t>();
    d.meta.k2 = meta.at("k2").get<std::uint64_t>();
    d.meta.seed = meta.at("seed").get<std::uint64_t>();
    d.meta.sampler = meta.at("sampler").get<std::string>();
    d.meta.model = meta.at("model").get<std::string>();
    if (meta.contains("warnings")) d.meta.warnings = meta["warnings"].get<std::vector<std::string>>();
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("malformed decomposition JSON: ") + e.what());
  }
}

}  // namespace shapdec
