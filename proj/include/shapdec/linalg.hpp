#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "shapdec/core.hpp"

namespace shapdec::linalg {

inline constexpr int kMaxJitterAttempts = 10;

// Rejects factorizations whose smallest pivot is round-off sized.
inline bool well_posed(const Eigen::LLT<Matrix>& llt, double mean_diag) {
  if (llt.info() != Eigen::Success) return false;
  const Vector pivots = Matrix(llt.matrixL()).diagonal().array().square();
  return pivots.size() == 0 || pivots.minCoeff() > 1e-13 * mean_diag;
}

/// Cholesky factor of `a`, adding eps*I when the plain factorization fails.
/// eps starts at 1e-9 * trace/n and doubles, at most kMaxJitterAttempts times.
/// Returns nullopt when every attempt fails. `jitter_used` receives the
/// diagonal shift that succeeded (0 when none was needed).
inline std::optional<Eigen::LLT<Matrix>> jittered_cholesky(const Matrix& a, double* jitter_used = nullptr) {
  const double n = static_cast<double>(a.rows());
  const double mean_diag = n > 0 ? a.trace() / n : 0.0;
  Eigen::LLT<Matrix> llt(a);
  if (a.allFinite() && well_posed(llt, mean_diag)) {
    if (jitter_used) *jitter_used = 0.0;
    return llt;
  }
  if (!a.allFinite()) return std::nullopt;
  double eps = 1e-9 * (mean_diag > 0.0 ? mean_diag : 1.0);
  const Matrix identity = Matrix::Identity(a.rows(), a.cols());
  for (int attempt = 0; attempt < kMaxJitterAttempts; ++attempt, eps *= 2.0) {
    llt.compute(a + eps * identity);
    if (well_posed(llt, 0.0)) {
      if (jitter_used) *jitter_used = eps;
      return llt;
    }
  }
  return std::nullopt;
}

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

/// Sample covariance with divisor n-1, symmetrized.
inline Matrix sample_covariance(const Matrix& data) {
  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Matrix centered = data.rowwise() - mean;
  return symmetrize(centered.transpose() * centered / static_cast<double>(data.rows() - 1));
}

inline Matrix select(const Matrix& a, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
  Matrix out(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          a(static_cast<Eigen::Index>(rows[r]), static_cast<Eigen::Index>(cols[c]));
  return out;
}

inline Vector select(const Vector& v, const std::vector<std::size_t>& idx) {
  Vector out(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r)
    out[static_cast<Eigen::Index>(r)] = v[static_cast<Eigen::Index>(idx[r])];
  return out;
}

}  // namespace shapdec::linalg
