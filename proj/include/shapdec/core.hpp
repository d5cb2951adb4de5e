#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "shapdec/errors.hpp"
#include "shapdec/rng.hpp"

namespace shapdec {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A single input vector to explain. Its length must equal the feature count
/// of the data or model it is explained against.
using Sample = Vector;

inline void check_sample(const Sample& x, std::size_t n_features) {
  if (static_cast<std::size_t>(x.size()) != n_features)
    throw SizeError("sample has " + std::to_string(x.size()) + " values, expected " +
                    std::to_string(n_features));
  if (!x.allFinite()) throw IngestionError("sample contains non-finite values");
}

/// Background data: n rows of M named numeric features.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::vector<std::string> names, Matrix values)
      : names_(std::move(names)), values_(std::move(values)) {
    if (values_.cols() < 1) throw SizeError("feature matrix needs at least one feature");
    if (values_.rows() < 2) throw SizeError("feature matrix needs at least two rows");
    if (static_cast<Eigen::Index>(names_.size()) != values_.cols())
      throw SizeError("feature name count does not match column count");
    if (std::set<std::string>(names_.begin(), names_.end()).size() != names_.size())
      throw IngestionError("feature names must be unique");
    if (!values_.allFinite()) throw IngestionError("feature matrix contains non-finite values");
  }

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t features() const noexcept { return static_cast<std::size_t>(values_.cols()); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const Matrix& values() const noexcept { return values_; }
  Vector row(std::size_t i) const { return values_.row(static_cast<Eigen::Index>(i)).transpose(); }
  Vector column_means() const { return values_.colwise().mean().transpose(); }

  std::size_t index_of(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw IndexError("unknown feature '" + name + "'");
    return static_cast<std::size_t>(it - names_.begin());
  }

 private:
  std::vector<std::string> names_;
  Matrix values_;
};

/// Set of "known" feature indices, stored as a bitset over M features.
class Coalition {
 public:
  Coalition() = default;
  explicit Coalition(std::size_t n_features) : n_(n_features), words_((n_features + 63) / 64, 0) {}

  static Coalition from_mask(std::size_t n_features, std::uint64_t mask) {
    if (n_features > 64) throw SizeError("mask construction supports at most 64 features");
    if (n_features < 64 && (mask >> n_features) != 0)
      throw IndexError("mask has bits outside the feature range");
    Coalition c(n_features);
    if (n_features > 0) c.words_[0] = mask;
    return c;
  }

  static Coalition from_indices(std::size_t n_features, const std::vector<std::size_t>& members) {
    Coalition c(n_features);
    for (auto i : members) c.insert(i);
    return c;
  }

  static Coalition full(std::size_t n_features) {
    Coalition c(n_features);
    for (std::size_t i = 0; i < n_features; ++i) c.insert(i);
    return c;
  }

  std::size_t n_features() const noexcept { return n_; }

  bool contains(std::size_t i) const {
    check_index(i);
    return (words_[i / 64] >> (i % 64)) & 1U;
  }
  void insert(std::size_t i) {
    check_index(i);
    words_[i / 64] |= std::uint64_t{1} << (i % 64);
  }
  void erase(std::size_t i) {
    check_index(i);
    words_[i / 64] &= ~(std::uint64_t{1} << (i % 64));
  }
  Coalition with(std::size_t i) const {
    Coalition c = *this;
    c.insert(i);
    return c;
  }
  Coalition without(std::size_t i) const {
    Coalition c = *this;
    c.erase(i);
    return c;
  }

  std::size_t size() const noexcept {
    std::size_t s = 0;
    for (auto w : words_) s += static_cast<std::size_t>(std::popcount(w));
    return s;
  }
  bool empty() const noexcept { return size() == 0; }
  bool is_full() const noexcept { return size() == n_; }

  Coalition complement() const {
    Coalition c(n_);
    for (std::size_t i = 0; i < n_; ++i)
      if (!contains(i)) c.insert(i);
    return c;
  }

  std::vector<std::size_t> members() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n_; ++i)
      if (contains(i)) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> missing() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n_; ++i)
      if (!contains(i)) out.push_back(i);
    return out;
  }

  std::uint64_t mask() const {
    if (n_ > 64) throw SizeError("mask view supports at most 64 features");
    return words_.empty() ? 0 : words_[0];
  }

  const std::vector<std::uint64_t>& words() const noexcept { return words_; }

  friend bool operator==(const Coalition&, const Coalition&) = default;
  friend bool operator<(const Coalition& a, const Coalition& b) {
    return std::tie(a.n_, a.words_) < std::tie(b.n_, b.words_);
  }

 private:
  void check_index(std::size_t i) const {
    if (i >= n_)
      throw IndexError("feature index " + std::to_string(i) + " out of range for " + std::to_string(n_) +
                       " features");
  }

  std::size_t n_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Ordering of all M features.
struct Permutation {
  std::vector<std::size_t> order;

  Permutation() = default;
  explicit Permutation(std::vector<std::size_t> o) : order(std::move(o)) {
    std::vector<bool> seen(order.size(), false);
    for (auto i : order) {
      if (i >= order.size() || seen[i]) throw IndexError("permutation is not a bijection");
      seen[i] = true;
    }
  }

  std::size_t size() const noexcept { return order.size(); }
  friend bool operator==(const Permutation&, const Permutation&) = default;
};

struct AttributionVector {
  double base = 0.0;
  Vector phi;
};

struct DecompositionMeta {
  std::string sampler;
  std::string model;
  std::uint64_t k1 = 1;
  std::uint64_t k2 = 1;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

/// Conditional SHAP values split into interventional and dependent parts.
/// phi == phi_int + phi_dep holds exactly because phi_dep is formed by
/// subtraction.
struct Decomposition {
  std::vector<std::string> names;
  double base = 0.0;
  Vector phi;
  Vector phi_int;
  Vector phi_dep;
  DecompositionMeta meta;
};

/// Every subset of {0..M-1} once, ordered by cardinality then numeric mask.
inline std::vector<Coalition> enumerate_coalitions(std::size_t n_features) {
  if (n_features < 1 || n_features > 20)
    throw SizeError("coalition enumeration needs 1 <= M <= 20, got " + std::to_string(n_features));
  const std::uint64_t total = std::uint64_t{1} << n_features;
  std::vector<std::uint64_t> masks(total);
  std::iota(masks.begin(), masks.end(), std::uint64_t{0});
  std::stable_sort(masks.begin(), masks.end(), [](std::uint64_t a, std::uint64_t b) {
    const int pa = std::popcount(a), pb = std::popcount(b);
    return pa != pb ? pa < pb : a < b;
  });
  std::vector<Coalition> out;
  out.reserve(total);
  for (auto m : masks) out.push_back(Coalition::from_mask(n_features, m));
  return out;
}

/// Uniform random ordering (Fisher-Yates).
inline Permutation random_permutation(std::size_t n_features, RngStream& rng) {
  std::vector<std::size_t> order(n_features);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t j = n_features; j > 1; --j) {
    const auto k = static_cast<std::size_t>(rng.below(j));
    std::swap(order[j - 1], order[k]);
  }
  Permutation p;
  p.order = std::move(order);
  return p;
}

/// `count` uniform permutations; permutation k comes from rng.substream(k).
inline std::vector<Permutation> sample_permutations(std::size_t n_features, std::size_t count,
                                                    const RngStream& rng) {
  if (count < 1) throw SizeError("permutation count must be positive");
  std::vector<Permutation> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    RngStream sub = rng.substream(k);
    out.push_back(random_permutation(n_features, sub));
  }
  return out;
}

/// Features strictly before `feature` in the ordering.
inline Coalition prefix_set(const Permutation& perm, std::size_t feature) {
  Coalition s(perm.size());
  for (auto j : perm.order) {
    if (j == feature) return s;
    s.insert(j);
  }
  throw IndexError("feature " + std::to_string(feature) + " does not appear in permutation");
}

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

/// Probability that a uniform random permutation puts exactly the coalition of
/// size s before a given feature: s! (M-s-1)! / M!.
inline double shapley_weight(std::size_t n_features, std::size_t s) {
  return 1.0 / (static_cast<double>(n_features) * binomial(n_features - 1, s));
}

/// Fills the coordinates of `known` from x and the rest from `fill`, whose
/// entries are ordered by ascending feature index.
template <typename Fill, typename Out>
void compose_row(const Coalition& known, const Sample& x, const Fill& fill, Out&& out) {
  Eigen::Index f = 0;
  for (std::size_t j = 0; j < known.n_features(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    out(jj) = known.contains(j) ? x(jj) : fill(f++);
  }
}

}  // namespace shapdec
