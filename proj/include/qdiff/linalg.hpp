#pragma once

// Dense complex linear algebra helpers on top of Eigen.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

namespace qdiff {

using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;

/// Default relative singular-value threshold for rank decisions.
inline constexpr double kRankTolerance = 1e-10;

struct RankInfo {
  Eigen::Index rank = 0;
  double threshold = 0.0;
  Eigen::VectorXd singular_values;
  /// Some singular value sits within a factor 10 of the threshold.
  bool ambiguous = false;
};

inline RankInfo rank_info(const cmat& m, double rel_tol = kRankTolerance) {
  RankInfo info;
  if (m.size() == 0) return info;
  Eigen::JacobiSVD<cmat> svd(m);
  info.singular_values = svd.singularValues();
  const double smax = info.singular_values.size() ? info.singular_values(0) : 0.0;
  info.threshold = rel_tol * smax;
  for (Eigen::Index k = 0; k < info.singular_values.size(); ++k) {
    const double s = info.singular_values(k);
    if (smax > 0.0 && s > info.threshold) ++info.rank;
    if (smax > 0.0 && s > 0.1 * info.threshold && s < 10.0 * info.threshold) info.ambiguous = true;
  }
  return info;
}

inline Eigen::Index numerical_rank(const cmat& m, double rel_tol = kRankTolerance) {
  return rank_info(m, rel_tol).rank;
}

/// Orthonormal basis of ker m, one vector per column.
inline cmat null_space(const cmat& m, double rel_tol = kRankTolerance) {
  const Eigen::Index cols = m.cols();
  if (m.rows() == 0) return cmat::Identity(cols, cols);
  Eigen::JacobiSVD<cmat> svd(m, Eigen::ComputeFullV);
  const Eigen::VectorXd s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  Eigen::Index r = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (smax > 0.0 && s(k) > rel_tol * smax) ++r;
  return svd.matrixV().rightCols(cols - r);
}

/// A maximal set of linearly independent rows of m, in their original order.
inline cmat independent_rows(const cmat& m, double rel_tol = kRankTolerance) {
  const Eigen::Index r = numerical_rank(m, rel_tol);
  if (r == 0) return cmat(0, m.cols());
  Eigen::ColPivHouseholderQR<cmat> qr(m.adjoint());
  std::vector<Eigen::Index> rows;
  for (Eigen::Index k = 0; k < r; ++k) rows.push_back(qr.colsPermutation().indices()(k));
  std::sort(rows.begin(), rows.end());
  cmat out(r, m.cols());
  for (Eigen::Index k = 0; k < r; ++k) out.row(k) = m.row(rows[static_cast<std::size_t>(k)]);
  return out;
}

/// 2-norm condition number; infinity for singular input.
inline double condition_number(const cmat& m) {
  if (m.size() == 0) return 1.0;
  Eigen::JacobiSVD<cmat> svd(m);
  const Eigen::VectorXd s = svd.singularValues();
  const double smin = s(s.size() - 1);
  return smin > 0.0 ? s(0) / smin : INFINITY;
}

inline double inf_norm(const cmat& m) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) best = std::max(best, m.row(i).cwiseAbs().sum());
  return best;
}

}  // namespace qdiff
