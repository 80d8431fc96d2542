#pragma once

// Random trajectories of a coefficient system satisfying homogeneous
// boundary conditions W (Y(0), Y(1)) = 0.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "qdiff/coeffs.hpp"
#include "qdiff/error.hpp"
#include "qdiff/linalg.hpp"
#include "qdiff/quasisystem.hpp"

namespace qdiff {

class AdmissibleSampler {
 public:
  /// W has 2k columns acting on (Y_0..Y_{k-1} at 0, then at 1).
  AdmissibleSampler(CoefficientSystem a, const cmat& W, IvpOptions opts = {})
      : a_(std::move(a)), opts_(std::move(opts)) {
    const std::size_t k = a_.order();
    const auto ki = static_cast<Eigen::Index>(k);
    if (static_cast<std::size_t>(W.cols()) != 2 * k) throw SpecError("sampler: W must have 2k columns");
    for (const char* src : {"1", "x", "x^2", "cos(pi*x)", "sin(pi*x)", "cos(2*pi*x)", "sin(2*pi*x)", "cos(3*pi*x)"})
      basis_.push_back(CoefficientFunction::parse(src));
    const auto nb = static_cast<Eigen::Index>(basis_.size());

    // trace = L (c, theta): left block is the identity, right block M(1) c + R theta.
    const cmat m1 = fundamental_matrix(a_, opts_).at(1.0);
    cmat L = cmat::Zero(2 * ki, ki + nb);
    L.topLeftCorner(ki, ki).setIdentity();
    L.bottomLeftCorner(ki, ki) = m1;
    const cvec zero = cvec::Zero(ki);
    for (Eigen::Index l = 0; l < nb; ++l)
      L.block(ki, ki + l, ki, 1) = reconstruct(a_, zero, basis_[static_cast<std::size_t>(l)], opts_).at(1.0).head(ki);
    if (W.rows() == 0) N_ = cmat::Identity(ki + nb, ki + nb);
    else N_ = null_space(W * L);
    if (N_.cols() == 0) throw UnsupportedSpec("sampler: boundary conditions leave no admissible trajectories");
  }

  std::size_t order() const noexcept { return a_.order(); }
  /// Dimension of the sampled family.
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(N_.cols()); }

  /// Components Y_0..Y_k of one random admissible trajectory.
  template <class Rng>
  VectorTrajectory draw(Rng& rng) const {
    std::normal_distribution<double> normal;
    cvec w(N_.cols());
    for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = complex(normal(rng), normal(rng));
    return build(N_ * w);
  }

  /// Trajectory for explicit parameters (init, basis coefficients).
  VectorTrajectory build(const cvec& params) const {
    const auto ki = static_cast<Eigen::Index>(a_.order());
    CoefficientFunction top(0.0);
    for (std::size_t l = 0; l < basis_.size(); ++l) {
      const complex t = params(ki + static_cast<Eigen::Index>(l));
      if (t != complex{}) top = top + CoefficientFunction(t) * basis_[l];
    }
    return reconstruct(a_, params.head(ki), top, opts_);
  }

 private:
  CoefficientSystem a_;
  IvpOptions opts_;
  std::vector<CoefficientFunction> basis_;
  cmat N_;
};

}  // namespace qdiff
