#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "shapdec/core.hpp"
#include "shapdec/parallel.hpp"
#include "shapdec/rng.hpp"

namespace shapdec {

/// Black-box batch predictor f: rows (k x M) -> k outputs.
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual std::size_t features() const = 0;
  virtual std::string id() const = 0;
  virtual nlohmann::json to_json() const { throw UnsupportedError("model '" + id() + "' has no JSON form"); }

  Vector predict_batch(const Matrix& rows) const {
    if (static_cast<std::size_t>(rows.cols()) != features())
      throw SizeError("rows have " + std::to_string(rows.cols()) + " columns, model expects " +
                      std::to_string(features()));
    if (!rows.allFinite()) throw IngestionError("rows passed to the model contain non-finite values");
    return evaluate(rows);
  }

  double predict(const Sample& x) const { return predict_batch(x.transpose())[0]; }

 protected:
  virtual Vector evaluate(const Matrix& rows) const = 0;
};

using PredictorPtr = std::shared_ptr<const Predictor>;

// ---------------------------------------------------------------------------

class LinearModel : public Predictor {
 public:
  LinearModel(Vector coefficients, double intercept) : coef_(std::move(coefficients)), intercept_(intercept) {
    if (coef_.size() < 1) throw SizeError("linear model needs at least one coefficient");
    if (!coef_.allFinite() || !std::isfinite(intercept_)) throw IngestionError("linear model must be finite");
  }

  std::size_t features() const override { return static_cast<std::size_t>(coef_.size()); }
  std::string id() const override { return "linear"; }
  const Vector& coefficients() const noexcept { return coef_; }
  double intercept() const noexcept { return intercept_; }

  nlohmann::json to_json() const override {
    return {{"kind", "linear"},
            {"coefficients", std::vector<double>(coef_.data(), coef_.data() + coef_.size())},
            {"intercept", intercept_}};
  }

 protected:
  Vector evaluate(const Matrix& rows) const override {
    return (rows * coef_).array() + intercept_;
  }

 private:
  Vector coef_;
  double intercept_;
};

/// f(x) = c + b'x + x'Ax. Used for models with pairwise interactions, where
/// Gaussian expectations have closed forms.
class QuadraticModel : public Predictor {
 public:
  QuadraticModel(double intercept, Vector linear, Matrix quadratic)
      : intercept_(intercept), linear_(std::move(linear)), quadratic_(std::move(quadratic)) {
    const auto m = linear_.size();
    if (m < 1 || quadratic_.rows() != m || quadratic_.cols() != m)
      throw SizeError("quadratic model dimensions disagree");
    if (!linear_.allFinite() || !quadratic_.allFinite() || !std::isfinite(intercept_))
      throw IngestionError("quadratic model must be finite");
  }

  std::size_t features() const override { return static_cast<std::size_t>(linear_.size()); }
  std::string id() const override { return "quadratic"; }
  double intercept() const noexcept { return intercept_; }
  const Vector& linear() const noexcept { return linear_; }
  const Matrix& quadratic() const noexcept { return quadratic_; }

  nlohmann::json to_json() const override {
    nlohmann::json q = nlohmann::json::array();
    for (Eigen::Index r = 0; r < quadratic_.rows(); ++r) {
      std::vector<double> row;
      for (Eigen::Index c = 0; c < quadratic_.cols(); ++c) row.push_back(quadratic_(r, c));
      q.push_back(row);
    }
    return {{"kind", "quadratic"},
            {"intercept", intercept_},
            {"linear", std::vector<double>(linear_.data(), linear_.data() + linear_.size())},
            {"quadratic", q}};
  }

 protected:
  Vector evaluate(const Matrix& rows) const override {
    const Matrix xa = rows * quadratic_;
    return (rows * linear_).array() + intercept_ + (xa.array() * rows.array()).rowwise().sum();
  }

 private:
  double intercept_;
  Vector linear_;
  Matrix quadratic_;
};

/// Lookup table over exact input vectors.
class TabulatedModel : public Predictor {
 public:
  TabulatedModel(std::vector<Vector> support, std::vector<double> outputs) {
    if (support.empty() || support.size() != outputs.size())
      throw SizeError("tabulated model needs matching, non-empty support and outputs");
    m_ = static_cast<std::size_t>(support.front().size());
    for (std::size_t k = 0; k < support.size(); ++k) {
      if (static_cast<std::size_t>(support[k].size()) != m_) throw SizeError("support rows differ in length");
      if (!std::isfinite(outputs[k])) throw IngestionError("tabulated outputs must be finite");
      table_[key(support[k])] = outputs[k];
    }
  }

  std::size_t features() const override { return m_; }
  std::string id() const override { return "tabulated"; }

  nlohmann::json to_json() const override {
    nlohmann::json support = nlohmann::json::array();
    std::vector<double> outputs;
    for (const auto& [k, v] : table_) {
      support.push_back(k);
      outputs.push_back(v);
    }
    return {{"kind", "tabulated"}, {"support", support}, {"outputs", outputs}};
  }

 protected:
  Vector evaluate(const Matrix& rows) const override {
    Vector out(rows.rows());
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
      const Vector row = rows.row(r).transpose();
      auto it = table_.find(key(row));
      if (it == table_.end()) throw UnsupportedError("input outside the tabulated model's support");
      out[r] = it->second;
    }
    return out;
  }

 private:
  static std::vector<double> key(const Vector& v) { return {v.data(), v.data() + v.size()}; }

  std::size_t m_ = 0;
  std::map<std::vector<double>, double> table_;
};

/// Wraps a scalar function of one row.
class FunctionModel : public Predictor {
 public:
  FunctionModel(std::size_t n_features, std::function<double(const Sample&)> fn, std::string name = "function")
      : m_(n_features), fn_(std::move(fn)), name_(std::move(name)) {}

  std::size_t features() const override { return m_; }
  std::string id() const override { return name_; }

 protected:
  Vector evaluate(const Matrix& rows) const override {
    Vector out(rows.rows());
    for (Eigen::Index r = 0; r < rows.rows(); ++r) out[r] = fn_(rows.row(r).transpose());
    return out;
  }

 private:
  std::size_t m_;
  std::function<double(const Sample&)> fn_;
  std::string name_;
};

/// f = sum of component models over the same input space.
class SumModel : public Predictor {
 public:
  explicit SumModel(std::vector<PredictorPtr> parts) : parts_(std::move(parts)) {
    if (parts_.empty()) throw SizeError("sum model needs at least one component");
    for (const auto& p : parts_)
      if (p->features() != parts_.front()->features()) throw SizeError("components differ in feature count");
  }

  std::size_t features() const override { return parts_.front()->features(); }
  std::string id() const override { return "sum"; }

 protected:
  Vector evaluate(const Matrix& rows) const override {
    Vector out = Vector::Zero(rows.rows());
    for (const auto& p : parts_) out += p->predict_batch(rows);
    return out;
  }

 private:
  std::vector<PredictorPtr> parts_;
};

// ---------------------------------------------------------------------------
// Log odds
// ---------------------------------------------------------------------------

inline constexpr double kProbabilityClamp = 1e-6;

inline double logit(double p) {
  p = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return std::log(p / (1.0 - p));
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Log odds of a probability model; probabilities are clamped to [1e-6, 1-1e-6].
class LogOddsModel : public Predictor {
 public:
  explicit LogOddsModel(PredictorPtr probability_model) : inner_(std::move(probability_model)) {}

  std::size_t features() const override { return inner_->features(); }
  std::string id() const override { return "log-odds(" + inner_->id() + ")"; }
  const PredictorPtr& inner() const noexcept { return inner_; }

 protected:
  Vector evaluate(const Matrix& rows) const override {
    Vector p = inner_->predict_batch(rows);
    for (auto& v : p) v = logit(v);
    return p;
  }

 private:
  PredictorPtr inner_;
};

inline Vector log_odds(const Predictor& probability_model, const Matrix& rows) {
  Vector p = probability_model.predict_batch(rows);
  for (auto& v : p) v = logit(v);
  return p;
}

// ---------------------------------------------------------------------------
// Ordinary least squares
// ---------------------------------------------------------------------------

inline constexpr double kOlsRidge = 1e-8;

/// OLS with intercept via column-pivoted QR; falls back to a ridge of 1e-8
/// (intercept unpenalized) when the design is rank deficient.
inline LinearModel fit_ols(const FeatureMatrix& data, const Vector& target) {
  const auto n = static_cast<Eigen::Index>(data.rows());
  const auto m = static_cast<Eigen::Index>(data.features());
  if (target.size() != n) throw SizeError("target length does not match data rows");
  if (n <= m)
    throw UnderdeterminedError("OLS needs more rows than features (" + std::to_string(n) + " rows, " +
                               std::to_string(m) + " features)");
  Matrix design(n, m + 1);
  design.col(0).setOnes();
  design.rightCols(m) = data.values();

  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  Vector beta;
  if (qr.rank() == m + 1) {
    beta = qr.solve(target);
  } else {
    Matrix gram = design.transpose() * design;
    gram.diagonal().tail(m).array() += kOlsRidge;
    beta = gram.ldlt().solve(design.transpose() * target);
  }
  return LinearModel(beta.tail(m), beta[0]);
}

// ---------------------------------------------------------------------------
// Random forest (CART)
// ---------------------------------------------------------------------------

enum class ForestTask { Regression, BinaryProbability };

inline std::string to_string(ForestTask t) {
  return t == ForestTask::Regression ? "regression" : "binary-probability";
}

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool leaf() const noexcept { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  template <typename Row>
  double predict(const Row& x) const {
    int at = 0;
    while (!nodes[static_cast<std::size_t>(at)].leaf()) {
      const auto& n = nodes[static_cast<std::size_t>(at)];
      at = x[n.feature] < n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(at)].value;
  }
};

struct ForestParams {
  std::size_t trees = 200;
  std::size_t max_depth = 8;
  std::size_t min_leaf = 5;
  std::size_t features_per_split = 0;  // 0: ceil(sqrt(M))
  bool bootstrap = true;
};

class ForestModel : public Predictor {
 public:
  ForestModel(std::size_t n_features, ForestTask task, std::vector<Tree> trees)
      : m_(n_features), task_(task), trees_(std::move(trees)) {
    if (trees_.empty()) throw SizeError("forest needs at least one tree");
    for (const auto& t : trees_) {
      if (t.nodes.empty()) throw IngestionError("empty tree");
      for (const auto& n : t.nodes) {
        if (n.leaf()) {
          if (!std::isfinite(n.value)) throw IngestionError("leaf values must be finite");
          if (task_ == ForestTask::BinaryProbability && (n.value < 0.0 || n.value > 1.0))
            throw IngestionError("probability leaves must lie in [0, 1]");
        } else {
          const auto nodes = static_cast<int>(t.nodes.size());
          if (static_cast<std::size_t>(n.feature) >= m_) throw IndexError("split references an invalid feature");
          if (n.left <= 0 || n.right <= 0 || n.left >= nodes || n.right >= nodes)
            throw IngestionError("split references an invalid child");
        }
      }
    }
  }

  std::size_t features() const override { return m_; }
  std::string id() const override { return "forest"; }
  ForestTask task() const noexcept { return task_; }
  const std::vector<Tree>& trees() const noexcept { return trees_; }

  nlohmann::json to_json() const override {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) trees.push_back(node_json(t, 0));
    return {{"kind", "forest"}, {"task", to_string(task_)}, {"n_features", m_}, {"trees", trees}};
  }

 protected:
  Vector evaluate(const Matrix& rows) const override {
    Vector out = Vector::Zero(rows.rows());
    Eigen::RowVectorXd row(rows.cols());
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
      row = rows.row(r);
      double acc = 0.0;
      for (const auto& t : trees_) acc += t.predict(row);
      out[r] = acc / static_cast<double>(trees_.size());
    }
    return out;
  }

 private:
  static nlohmann::json node_json(const Tree& t, int at) {
    const auto& n = t.nodes[static_cast<std::size_t>(at)];
    if (n.leaf()) return {{"value", n.value}};
    return {{"feature", n.feature},
            {"threshold", n.threshold},
            {"left", node_json(t, n.left)},
            {"right", node_json(t, n.right)}};
  }

  std::size_t m_;
  ForestTask task_;
  std::vector<Tree> trees_;
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const Vector& y, ForestTask task, const ForestParams& params, RngStream& rng)
      : x_(x), y_(y), task_(task), params_(params), rng_(rng) {}

  Tree build(std::vector<Eigen::Index> rows) {
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;
  };

  int grow(std::vector<Eigen::Index> rows, std::size_t depth) {
    const int at = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double sum = 0.0;
    for (auto r : rows) sum += y_[r];
    const double mean = sum / static_cast<double>(rows.size());

    bool constant = true;
    for (auto r : rows)
      if (y_[r] != y_[rows.front()]) {
        constant = false;
        break;
      }
    Split best;
    if (!constant && depth < params_.max_depth && rows.size() >= 2 * params_.min_leaf) best = find_split(rows);
    if (best.feature < 0) {
      tree_.nodes[static_cast<std::size_t>(at)].value = mean;
      return at;
    }

    std::vector<Eigen::Index> left, right;
    for (auto r : rows) (x_(r, best.feature) < best.threshold ? left : right).push_back(r);
    const int l = grow(std::move(left), depth + 1);
    const int rr = grow(std::move(right), depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(at)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = l;
    node.right = rr;
    node.value = mean;
    return at;
  }

  // Impurity of a child holding `n` rows with target sum `s` and square sum `q`,
  // scaled by n: SSE for regression, n * Gini for binary targets.
  double impurity(double n, double s, double q) const {
    if (task_ == ForestTask::Regression) return q - s * s / n;
    const double p = s / n;
    return n * 2.0 * p * (1.0 - p);
  }

  Split find_split(const std::vector<Eigen::Index>& rows) {
    const auto m = static_cast<std::size_t>(x_.cols());
    std::size_t mtry = params_.features_per_split;
    if (mtry == 0) mtry = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m))));
    mtry = std::min(mtry, m);

    std::vector<std::size_t> candidates(m);
    std::iota(candidates.begin(), candidates.end(), std::size_t{0});
    for (std::size_t k = 0; k < mtry; ++k) {
      const auto pick = k + static_cast<std::size_t>(rng_.below(m - k));
      std::swap(candidates[k], candidates[pick]);
    }

    const double n = static_cast<double>(rows.size());
    double total_s = 0.0, total_q = 0.0;
    for (auto r : rows) {
      total_s += y_[r];
      total_q += y_[r] * y_[r];
    }
    const double parent = impurity(n, total_s, total_q);

    Split best;
    std::vector<Eigen::Index> order(rows);
    for (std::size_t k = 0; k < mtry; ++k) {
      const auto f = static_cast<Eigen::Index>(candidates[k]);
      std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return x_(a, f) < x_(b, f); });
      double ls = 0.0, lq = 0.0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const double yi = y_[order[i]];
        ls += yi;
        lq += yi * yi;
        const std::size_t nl = i + 1, nr = order.size() - nl;
        if (nl < params_.min_leaf || nr < params_.min_leaf) continue;
        const double a = x_(order[i], f), b = x_(order[i + 1], f);
        if (!(a < b)) continue;
        const double child = impurity(static_cast<double>(nl), ls, lq) +
                             impurity(static_cast<double>(nr), total_s - ls, total_q - lq);
        const double gain = parent - child;
        if (gain > best.score + 1e-12 * std::max(1.0, std::fabs(parent))) {
          best.feature = static_cast<int>(f);
          best.threshold = 0.5 * (a + b);
          best.score = gain;
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  const Vector& y_;
  ForestTask task_;
  const ForestParams& params_;
  RngStream& rng_;
  Tree tree_;
};

}  // namespace detail

/// Random forest of CART trees. Tree t draws its bootstrap rows and split
/// candidates from rng.substream(t), so the forest is identical for any
/// worker count.
inline ForestModel fit_forest(const FeatureMatrix& data, const Vector& target, const ForestParams& params,
                              const RngStream& rng, ForestTask task = ForestTask::Regression) {
  const auto n = data.rows();
  if (static_cast<std::size_t>(target.size()) != n) throw SizeError("target length does not match data rows");
  if (params.trees < 1 || params.min_leaf < 1) throw SizeError("forest needs trees >= 1 and min_leaf >= 1");
  if (n < 2 * params.min_leaf) throw SizeError("forest needs at least 2 * min_leaf rows");
  if (!target.allFinite()) throw IngestionError("target contains non-finite values");
  if (task == ForestTask::BinaryProbability)
    for (auto v : target)
      if (v != 0.0 && v != 1.0) throw IngestionError("binary forest needs 0/1 labels");

  std::vector<Tree> trees(params.trees);
  parallel_for(params.trees, [&](std::size_t t) {
    RngStream stream = rng.substream(t);
    std::vector<Eigen::Index> rows(n);
    if (params.bootstrap) {
      for (auto& r : rows) r = static_cast<Eigen::Index>(stream.below(n));
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    }
    detail::TreeBuilder builder(data.values(), target, task, params, stream);
    trees[t] = builder.build(std::move(rows));
  });
  return ForestModel(data.features(), task, std::move(trees));
}

}  // namespace shapdec
