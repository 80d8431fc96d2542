#pragma once

// Boundary-value problems T Y = F (at a given lambda) through the fundamental
// matrix of the reduced first-order system.

#include <cmath>
#include <string>
#include <vector>

#include "qdiff/error.hpp"
#include "qdiff/ivp.hpp"
#include "qdiff/linalg.hpp"
#include "qdiff/operator.hpp"

namespace qdiff {

struct BvpOptions {
  IvpOptions ivp;
  double rank_tol = kRankTolerance;
  /// solvable iff residual < solvability_tol * (1 + ||F||).
  double solvability_tol = 1e-8;
};

struct BvpSolution {
  VectorTrajectory trajectory;  // y^[0..n+m-1]
  /// Trial components Y_0..Y_n (top one recovered from the state).
  VectorTrajectory trial;
  std::size_t kernel_dim = 0;
  std::size_t defect_dim = 0;
  double residual = 0.0;
  bool solvable = false;
  /// A singular value of the boundary matrix sits within 10x of the threshold.
  bool rank_ambiguous = false;
  cmat boundary;        // row-equilibrated conditions on y(0)
  cvec initial;         // chosen y(0)
  cmat kernel;          // basis of initial vectors of homogeneous solutions
  Eigen::VectorXd singular_values;
  FirstOrderSystem system;
};

inline BvpSolution solve_bvp(const OperatorSpec& spec, complex lambda, const FunctionalData& F,
                             const BvpOptions& opts = {}) {
  require_valid(spec, "solve_bvp");
  const detail::Reduction red = detail::reduce(spec, lambda, F);
  const std::size_t dim = spec.n + spec.m;
  const auto di = static_cast<Eigen::Index>(dim);

  // State [Phi | y_p]: Phi(0) = I, y_p(0) = 0, y_p' = C y_p + g.
  const bool forced = red.system.has_forcing();
  cmat y0 = cmat::Zero(di, forced ? di + 1 : di);
  y0.leftCols(di).setIdentity();
  const MatrixSolution sol(red.system, y0, forced ? ForcingMode::direct : ForcingMode::none, opts.ivp);
  const cmat& end = sol.final_state();
  const cmat phi1 = end.leftCols(di);
  const cvec yp1 = forced ? cvec(end.col(di)) : cvec::Zero(di);

  const BoundaryOperator bop = boundary_matrix(spec, opts.rank_tol);
  auto [D, rhs] = boundary_system(bop, phi1, yp1, F.mu);
  equilibrate(D, rhs, bop.condition_scales());

  BvpSolution out;
  out.system = red.system;
  // With no conditions at all every initial vector is admissible.
  if (D.rows() == 0) {
    D = cmat::Zero(1, di);
    rhs = cvec::Zero(1);
  }
  Eigen::JacobiSVD<cmat> svd(D, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  out.singular_values = sv;
  const double smax = sv.size() ? sv(0) : 0.0;
  const double thr = opts.rank_tol * std::max(smax, 1.0);
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    if (sv(k) > thr) ++rank;
    if (sv(k) > 0.1 * thr && sv(k) < 10.0 * thr) out.rank_ambiguous = true;
  }
  out.rank_ambiguous = out.rank_ambiguous || bop.rank_ambiguous;
  out.kernel_dim = static_cast<std::size_t>(di - rank);
  out.defect_dim = bop.condition_count() - static_cast<std::size_t>(rank);


  // Minimum-norm least-squares solution on the numerically nonzero part.
  cvec c = cvec::Zero(di);
  if (D.rows() > 0) {
    const cvec ur = svd.matrixU().adjoint() * rhs;
    for (Eigen::Index k = 0; k < rank; ++k) c += svd.matrixV().col(k) * (ur(k) / sv(k));
  }
  out.initial = c;
  out.kernel = svd.matrixV().rightCols(di - rank);
  out.boundary = D;
  out.residual = D.rows() ? (D * c - rhs).norm() : 0.0;
  out.solvable = out.residual < opts.solvability_tol * (1.0 + functional_norm(F));

  out.trajectory = sol.to_trajectory(
      [c, di, forced](const cmat& s) -> cvec {
        cvec y = s.leftCols(di) * c;
        if (forced) y += s.col(di);
        return y;
      },
      red.system.labels);
  out.trial = trial_from_state(spec, red.top, out.trajectory);
  return out;
}

/// Sup-norm mismatch between a solution and a fresh integration of its own
/// system at a finer tolerance, over the solution grid.
inline double integration_residual(const BvpSolution& s, double tol) {
  IvpOptions fine;
  fine.tol = tol;
  const VectorTrajectory again = integrate_ivp(s.system, s.trajectory.values().front(), fine);
  double worst = 0.0;
  for (std::size_t k = 0; k < s.trajectory.grid().size(); ++k)
    worst = std::max(worst, (again.at(s.trajectory.grid()[k]) - s.trajectory.values()[k]).cwiseAbs().maxCoeff());
  return worst;
}

}  // namespace qdiff
