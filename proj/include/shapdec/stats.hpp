#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "shapdec/core.hpp"
#include "shapdec/linalg.hpp"

namespace shapdec {

/// Mid-ranks (1-based, ties get the average of their positions).
inline Vector mid_ranks(const Vector& v) {
  const auto n = static_cast<std::size_t>(v.size());
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return v[static_cast<Eigen::Index>(a)] < v[static_cast<Eigen::Index>(b)];
  });
  Vector ranks(v.size());
  std::size_t lo = 0;
  while (lo < n) {
    std::size_t hi = lo + 1;
    while (hi < n && v[static_cast<Eigen::Index>(idx[hi])] == v[static_cast<Eigen::Index>(idx[lo])]) ++hi;
    const double r = 0.5 * static_cast<double>(lo + 1 + hi);
    for (std::size_t k = lo; k < hi; ++k) ranks[static_cast<Eigen::Index>(idx[k])] = r;
    lo = hi;
  }
  return ranks;
}

inline double pearson(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw SizeError("correlation needs vectors of equal length");
  const Vector dx = x.array() - x.mean();
  const Vector dy = y.array() - y.mean();
  const double sxx = dx.squaredNorm();
  const double syy = dy.squaredNorm();
  if (sxx == 0.0 || syy == 0.0) throw UnsupportedError("correlation is undefined for a constant vector");
  return std::clamp(dx.dot(dy) / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Spearman rank correlation: Pearson correlation of mid-ranks.
inline double spearman(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw SizeError("spearman needs vectors of equal length");
  if (x.size() < 3) throw SizeError("spearman needs at least 3 observations");
  return pearson(mid_ranks(x), mid_ranks(y));
}

struct CorrelationMatrix {
  std::vector<std::string> names;
  Matrix values;

  double at(const std::string& a, const std::string& b) const {
    auto find = [&](const std::string& n) {
      auto it = std::find(names.begin(), names.end(), n);
      if (it == names.end()) throw IndexError("unknown variable '" + n + "'");
      return static_cast<Eigen::Index>(it - names.begin());
    };
    return values(find(a), find(b));
  }
};

/// Spearman partial correlations: rank-transform each column, invert the
/// covariance of the ranks (jitter-regularized) and read
/// ρ_{ij·rest} = −P_ij / sqrt(P_ii P_jj).
inline CorrelationMatrix partial_correlation_graph(const Matrix& columns, std::vector<std::string> names) {
  const auto n = columns.rows();
  const auto m = columns.cols();
  if (static_cast<Eigen::Index>(names.size()) != m) throw SizeError("name count does not match column count");
  if (m < 2) throw SizeError("partial correlations need at least two columns");
  if (n < m + 2) throw SizeError("partial correlations need at least M+2 rows");
  if (!columns.allFinite()) throw IngestionError("columns contain non-finite values");

  Matrix ranks(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    ranks.col(j) = mid_ranks(columns.col(j));
    if ((ranks.col(j).array() == ranks(0, j)).all())
      throw SingularityError("column '" + names[static_cast<std::size_t>(j)] + "' has no rank variance");
  }
  const Matrix cov = linalg::sample_covariance(ranks);
  const auto chol = linalg::jittered_cholesky(cov);
  if (!chol) throw SingularityError("rank covariance is singular after jitter");
  const Matrix precision = linalg::symmetrize(chol->solve(Matrix::Identity(m, m)));

  CorrelationMatrix out;
  out.names = std::move(names);
  out.values = Matrix::Identity(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (i != j)
        out.values(i, j) =
            std::clamp(-precision(i, j) / std::sqrt(precision(i, i) * precision(j, j)), -1.0, 1.0);
  return out;
}

/// Undirected graph in DOT: one edge per pair, labelled with the partial
/// correlation to 2 decimals, red for positive and blue for negative, pen
/// width linear in |ρ|. Edges with |ρ| below `min_abs` are omitted.
inline std::string to_dot(const CorrelationMatrix& g, double min_abs = 0.0) {
  std::ostringstream os;
  os << "graph partial_correlations {\n";
  os << "  node [shape=ellipse, fontname=\"sans-serif\"];\n";
  for (const auto& n : g.names) os << "  \"" << n << "\";\n";
  char buf[64];
  for (std::size_t i = 0; i < g.names.size(); ++i)
    for (std::size_t j = i + 1; j < g.names.size(); ++j) {
      const double rho = g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (std::fabs(rho) < min_abs) continue;
      std::snprintf(buf, sizeof buf, "%.2f", rho);
      std::string label = buf;
      if (label == "-0.00") label = "0.00";
      std::snprintf(buf, sizeof buf, "%.3f", 0.5 + 5.5 * std::fabs(rho));
      os << "  \"" << g.names[i] << "\" -- \"" << g.names[j] << "\" [label=\"" << label << "\", color=\""
         << (rho >= 0.0 ? "red" : "blue") << "\", penwidth=" << buf << "];\n";
    }
  os << "}\n";
  return os.str();
}

}  // namespace shapdec
