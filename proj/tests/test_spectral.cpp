#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qdiff/problems.hpp"
#include "qdiff/solver.hpp"
#include "qdiff/spectral.hpp"

using namespace qdiff;

namespace {

constexpr double kPi = std::numbers::pi;

/// k-th positive root of cos(mu) cosh(mu) = 1 by plain bisection; the roots
/// sit near (k + 1/2) pi.
double clamped_mu(int k) {
  auto g = [](double mu) { return std::cos(mu) * std::cosh(mu) - 1.0; };
  double lo = (k + 0.5) * kPi - 0.5, hi = (k + 0.5) * kPi + 0.5;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((g(lo) < 0) == (g(mid) < 0)) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> real_parts(const SpectralResult& r) {
  std::vector<double> out;
  for (const auto& e : r.eigenvalues) out.push_back(e.lambda.real());
  return out;
}

}  // namespace

TEST(CharDet, BeamExamples) {
  const auto beam = fourth_order_dirichlet(1.0, 0.0, 0.0);
  EXPECT_GT(std::abs(char_det(beam, 0.0)), 1e-3);
  const double l1 = std::pow(clamped_mu(1), 4);
  EXPECT_LT(std::abs(char_det(beam, l1)), 1e-9);
}

TEST(CharDet, PeriodicZeroIsRoot) {
  EXPECT_LT(std::abs(char_det(third_order_periodic(0.0, 0.0), 0.0)), 1e-12);
}

TEST(CharDet, NonSquareSystemRejected) {
  OperatorSpec s = fourth_order_dirichlet(1.0, 0.0, 0.0);
  s.U.row(3).setZero();
  EXPECT_THROW(char_det(s, 1.0), SpecError);
}

TEST(FindEigenvalues, ClampedBeam) {
  const auto r = find_eigenvalues(fourth_order_dirichlet(1.0, 0.0, 0.0), 1.0, 20000.0);
  ASSERT_EQ(r.eigenvalues.size(), 3u);
  for (int k = 0; k < 3; ++k) {
    const double oracle = std::pow(clamped_mu(k + 1), 4);
    EXPECT_NEAR(r.eigenvalues[static_cast<std::size_t>(k)].lambda.real() / oracle, 1.0, 1e-9);
    EXPECT_EQ(r.eigenvalues[static_cast<std::size_t>(k)].multiplicity, 1u);
  }
  EXPECT_NEAR(r.eigenvalues[0].lambda.real(), 500.5639, 1e-4);
  EXPECT_NEAR(r.eigenvalues[1].lambda.real(), 3803.5371, 1e-4);
  EXPECT_NEAR(r.eigenvalues[2].lambda.real(), 14617.6301, 1e-4);
}

TEST(FindEigenvalues, PeriodicThirdOrder) {
  const auto r = find_eigenvalues(third_order_periodic(0.0, 0.0), -300.0, 300.0);
  ASSERT_EQ(r.eigenvalues.size(), 3u);
  const double k3 = std::pow(2 * kPi, 3);
  EXPECT_NEAR(r.eigenvalues[0].lambda.real(), -k3, 1e-6 * k3);
  EXPECT_NEAR(r.eigenvalues[1].lambda.real(), 0.0, 1e-9);
  EXPECT_NEAR(r.eigenvalues[2].lambda.real(), k3, 1e-6 * k3);
  EXPECT_NEAR(r.eigenvalues[2].lambda.real(), 248.0502, 1e-4);
}

TEST(FindEigenvalues, SecondOrderDirichlet) {
  // (k pi)^2 for k = 1, 2, 3 all lie below 100.
  const auto r = find_eigenvalues(second_order_dirichlet(0.0), 1.0, 100.0);
  ASSERT_EQ(r.eigenvalues.size(), 3u);
  for (int k = 1; k <= 3; ++k) EXPECT_NEAR(r.eigenvalues[static_cast<std::size_t>(k - 1)].lambda.real(), k * k * kPi * kPi, 1e-9);
  const auto r2 = find_eigenvalues(second_order_dirichlet(0.0), 1.0, 50.0);
  ASSERT_EQ(r2.eigenvalues.size(), 2u);
}

TEST(FindEigenvalues, RefusesNonInjective) {
  OperatorSpec s = second_order_dirichlet(0.0);
  s.non_injective = true;
  EXPECT_THROW(find_eigenvalues(s, 1.0, 10.0), UnsupportedSpec);
}

TEST(FindEigenvalues, EveryEigenvalueHasKernel) {
  const auto spec = fourth_order_dirichlet(CoefficientFunction::parse("1 + x"), 0.0, CoefficientFunction::parse("x"));
  const auto r = find_eigenvalues(spec, 1.0, 6000.0);
  ASSERT_FALSE(r.eigenvalues.empty());
  for (const auto& e : r.eigenvalues) {
    const auto s = solve_bvp(spec, e.lambda, FunctionalData::zero(2), [] {
      BvpOptions o;
      o.rank_tol = 1e-7;
      return o;
    }());
    EXPECT_GE(s.kernel_dim, 1u) << e.lambda;
  }
}

TEST(FindEigenvalues, EigenpairsSatisfyWeakForm) {
  // <T(lambda) Y, Z> = 0 for the eigenfunction and random test functions.
  std::mt19937_64 rng(11);
  const auto spec = fourth_order_dirichlet(1.0, CoefficientFunction::parse("x"), CoefficientFunction::parse("step(x-0.3)"));
  const auto r = find_eigenvalues(spec, 1.0, 5000.0);
  ASSERT_GE(r.eigenvalues.size(), 2u);
  const AdmissibleSampler tests(spec.B, spec.V);
  for (const auto& e : r.eigenvalues) {
    const auto y = eigenfunction_trial(spec, e.lambda, eigenfunction(spec, e.lambda));
    for (int k = 0; k < 10; ++k) {
      const auto Z = tests.draw(rng);
      EXPECT_LT(std::abs(apply_T(spec, e.lambda, y, Z)), 1e-6) << e.lambda;
    }
  }
}

TEST(FindEigenvalues, GridRefinementStable) {
  for (const auto& spec : {fourth_order_dirichlet(1.0, 0.0, CoefficientFunction::parse("step(x-0.5)")),
                           third_order_periodic(CoefficientFunction::parse("x"), 0.0),
                           second_order_dirichlet(CoefficientFunction::parse("x^2"))}) {
    SpectralOptions coarse, fine;
    coarse.grid = 200;
    fine.grid = 400;
    const auto a = real_parts(find_eigenvalues(spec, -400.0, 400.0, coarse));
    const auto b = real_parts(find_eigenvalues(spec, -400.0, 400.0, fine));
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-8 * std::max(1.0, std::abs(a[k])));
  }
}

TEST(FindEigenvalues, InvariantUnderBoundaryRowScaling) {
  OperatorSpec spec = fourth_order_dirichlet(1.0, 0.0, CoefficientFunction::parse("x"));
  const auto a = real_parts(find_eigenvalues(spec, 1.0, 6000.0));
  spec.U.row(0) *= 1e3;
  spec.U.row(2) *= complex(0.0, -0.01);
  const auto b = real_parts(find_eigenvalues(spec, 1.0, 6000.0));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-8 * a[k]);
}

TEST(FindEigenvalues, RectangleStepPeriodicIsReal) {
  const auto spec = third_order_periodic(CoefficientFunction::parse("step(x-0.5)"), 0.0);
  const auto r = find_eigenvalues(spec, complex(-300.0, -50.0), complex(300.0, 50.0));
  ASSERT_GE(r.eigenvalues.size(), 3u);
  for (const auto& e : r.eigenvalues) EXPECT_LT(std::abs(e.lambda.imag()), 1e-6) << e.lambda;
  EXPECT_LT(check_symmetry(spec, 4).sigma, 1e-8);
}

TEST(Eigenfunction, BeamFirstModeHasNoSignChange) {
  const auto beam = fourth_order_dirichlet(1.0, 0.0, 0.0);
  const double l1 = std::pow(clamped_mu(1), 4);
  const auto y = eigenfunction(beam, l1);
  int changes = 0;
  double prev = 0.0;
  for (int i = 1; i < 200; ++i) {
    const double v = y.at(i / 200.0)(0).real();
    if (prev != 0.0 && (v < 0) != (prev < 0)) ++changes;
    prev = v;
  }
  EXPECT_EQ(changes, 0);
  EXPECT_NEAR(y.at(0.5)(0).real(), 1.0, 1e-9);  // symmetric mode peaks at the midpoint
}

TEST(Eigenfunction, SineMode) {
  const auto y = eigenfunction(second_order_dirichlet(0.0), kPi * kPi);
  double e = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double x = i / 400.0;
    e = std::max(e, std::abs(y.at(x)(0) - std::sin(kPi * x)));
  }
  EXPECT_LT(e, 1e-7);
}

TEST(Eigenfunction, PeriodicKernelIsConstant) {
  const auto y = eigenfunction(third_order_periodic(0.0, 0.0), 0.0);
  for (int i = 0; i <= 20; ++i) EXPECT_NEAR(std::abs(y.at(i / 20.0)(0) - 1.0), 0.0, 1e-12);
}

TEST(Eigenfunction, NotAnEigenvalue) {
  EXPECT_THROW(eigenfunction(second_order_dirichlet(0.0), 5.0), NotAnEigenvalue);
}

TEST(CheckSymmetry, Examples) {
  EXPECT_LT(check_symmetry(third_order_periodic(CoefficientFunction::parse("step(x-0.5)"), 0.0), 5).sigma, 1e-8);
  EXPECT_LT(check_symmetry(fourth_order_dirichlet(CoefficientFunction::parse("2 + sin(x)"), CoefficientFunction::parse("x"),
                                                  CoefficientFunction::parse("cos(3*x)")),
                           5)
                .sigma,
            1e-8);
  // A constant q drops out of the periodic form entirely, so the
  // non-symmetric example needs a nonconstant imaginary q.
  EXPECT_GT(check_symmetry(third_order_periodic(0.0, CoefficientFunction::parse("i*x")), 5).sigma, 0.1);
  EXPECT_LT(check_symmetry(third_order_periodic(0.0, complex(0.0, 1.0)), 5).sigma, 1e-8);
}

TEST(CheckSymmetry, UnsupportedWhenInclusionUndefined) {
  OperatorSpec s = fourth_order_dirichlet(1.0, 0.0, 0.0);
  CoefficientSystem b(2);
  b.set(0, 1, 2.0).set(1, 2, 1.0);
  s.B = b;
  EXPECT_THROW(check_symmetry(s, 2), UnsupportedSpec);
}

TEST(NumericalRange, PositiveForms) {
  for (const auto& spec : {second_order_dirichlet(0.0), fourth_order_dirichlet(1.0, 0.0, 0.0)}) {
    const auto s = numerical_range_sector(spec, 6);
    for (const complex v : s.values) {
      EXPECT_GT(v.real(), 0.0);
      EXPECT_LT(std::abs(v.imag()), 1e-9 * v.real());
    }
    EXPECT_LT(s.half_angle, 1e-9);
  }
}

TEST(NumericalRange, ComplexFormReportsSector) {
  // Report-only: the step potential makes the sampled form non-real.
  const auto s = numerical_range_sector(fourth_order_dirichlet(1.0, 0.0, CoefficientFunction::parse("10*step(x-0.5)")), 6);
  EXPECT_EQ(s.values.size(), 6u);
  EXPECT_GE(s.half_angle, 0.0);
  EXPECT_LE(s.half_angle, kPi);
}
