#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "qdiff/krein.hpp"
#include "qdiff/problems.hpp"
#include "qdiff/solver.hpp"
#include "qdiff/spectral.hpp"

using namespace qdiff;

namespace {

constexpr double kPi = std::numbers::pi;

/// Eigenvalues of the symmetric generalized problem K v = lambda M v (2x2).
std::pair<double, double> generalized_2x2(double k11, double k12, double k22, double m1, double m2) {
  // det(K - lambda M) = m1 m2 l^2 - (k11 m2 + k22 m1) l + (k11 k22 - k12^2)
  const double a = m1 * m2, b = -(k11 * m2 + k22 * m1), c = k11 * k22 - k12 * k12;
  const double d = std::sqrt(b * b - 4 * a * c);
  return {(-b - d) / (2 * a), (-b + d) / (2 * a)};
}

double bisect(const std::function<double(double)>& f, double lo, double hi) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((f(lo) < 0) == (f(mid) < 0)) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(MeasureSubstitution, IdentityCase) {
  const MeasureSubstitution sub(CoefficientFunction::parse("x"));
  for (double t : {0.0, 0.1, 0.37, 0.5, 0.99, 1.0}) EXPECT_NEAR(sub.xi(t), t, 1e-15);
  const auto dxi = sub.xi_prime(), deta = sub.eta_prime();
  for (double t : {0.05, 0.5, 0.95}) {
    EXPECT_NEAR(dxi.value(t).real(), 1.0, 1e-15);
    EXPECT_NEAR(deta.value(t).real(), 1.0, 1e-15);
  }
}

TEST(MeasureSubstitution, DoubledH) {
  // (x + 2x) / 3 = x: xi(t) = t, eta(t) = 2t.
  const MeasureSubstitution sub(CoefficientFunction::parse("2*x"));
  const auto deta = sub.eta_prime();
  for (double t : {0.2, 0.6}) {
    EXPECT_NEAR(sub.xi(t), t, 1e-15);
    EXPECT_NEAR(deta.value(t).real(), 2.0, 1e-14);
  }
}

TEST(MeasureSubstitution, QuadraticHAgainstBisection) {
  const MeasureSubstitution sub(CoefficientFunction::parse("x^2 + x"));
  EXPECT_EQ(sub.xi(0.0), 0.0);
  EXPECT_EQ(sub.xi(1.0), 1.0);
  for (double t : {0.1, 0.3, 0.5, 0.8}) {
    const double oracle = bisect([t](double x) { return (x + x * x + x) / 3.0 - t; }, 0.0, 1.0);
    EXPECT_NEAR(sub.xi(t), oracle, 1e-14);
  }
  // xi' = 3 / (2 + 2 xi) at t = 0.5.
  const double x = sub.xi(0.5);
  EXPECT_NEAR(sub.xi_prime().value(0.5).real(), 3.0 / (2.0 + 2.0 * x), 1e-13);
}

TEST(MeasureSubstitution, RejectsNonMonotoneH) {
  EXPECT_THROW(MeasureSubstitution(CoefficientFunction::parse("sin(2*pi*x)")), SpecError);
  EXPECT_THROW(MeasureSubstitution(CoefficientFunction::parse("step(x-0.5)")), SpecError);
  EXPECT_THROW(fourth_order_measure(CoefficientFunction::parse("-x"), 0.0, 0.0), SpecError);
}

TEST(MeasureSubstitution, StepDensityCutsAtImages) {
  // H' jumps at 1/2, so xi' jumps at phi(1/2).
  const auto H = CoefficientFunction::piecewise({Piece{0.0, 0.5, Expr::parse("x")}, Piece{0.5, 1.0, Expr::parse("3*x - 1")}});
  const MeasureSubstitution sub(H);
  const double t = sub.phi(0.5);
  EXPECT_NEAR(t, (0.5 + 0.5) / 3.0, 1e-15);
  const auto dxi = sub.xi_prime();
  EXPECT_NEAR(dxi.value(t - 1e-9).real(), 3.0 / 2.0, 1e-12);
  EXPECT_NEAR(dxi.value(t + 1e-9).real(), 3.0 / 4.0, 1e-12);
}

TEST(FourthOrderMeasure, IdentityMatchesDirichletSpectrum) {
  const auto q = CoefficientFunction::parse("sin(x)"), r = CoefficientFunction::parse("x^2");
  const auto a = find_eigenvalues(fourth_order_measure(CoefficientFunction::parse("x"), q, r), 1.0, 4000.0);
  const auto b = find_eigenvalues(fourth_order_dirichlet(1.0, q, r), 1.0, 4000.0);
  ASSERT_EQ(a.eigenvalues.size(), b.eigenvalues.size());
  ASSERT_FALSE(a.eigenvalues.empty());
  for (std::size_t k = 0; k < a.eigenvalues.size(); ++k)
    EXPECT_NEAR(a.eigenvalues[k].lambda.real(), b.eigenvalues[k].lambda.real(), 1e-7 * b.eigenvalues[k].lambda.real());
}

TEST(FourthOrderMeasure, ForcedIdentityCase) {
  const auto H = CoefficientFunction::parse("x");
  const auto s = solve_bvp(fourth_order_measure(H, 0.0, 0.0), 0.0, measure_rhs(H, 24.0));
  EXPECT_NEAR(s.trajectory.at(0.5)(0).real(), 0.0625, 1e-10);
}

TEST(FourthOrderMeasure, LinearHScalesTheBeam) {
  // H = 2x: p = 1/2 in the original variable, so (y''/2)'' = 24 gives
  // y = 2 x^2 (1 - x)^2 and y(1/2) = 0.125.
  const auto H = CoefficientFunction::parse("2*x");
  const auto s = solve_bvp(fourth_order_measure(H, 0.0, 0.0), 0.0, measure_rhs(H, 24.0));
  EXPECT_NEAR(s.trajectory.at(0.5)(0).real(), 0.125, 1e-10);
}

TEST(ThirdOrderPeriodic, ConstantShiftOfQLeavesSpectrum) {
  const auto p = CoefficientFunction::parse("1 + step(x-0.5)");
  const auto q = CoefficientFunction::parse("cos(2*pi*x)");
  const auto a = find_eigenvalues(third_order_periodic(p, q), -2100.0, 2100.0);
  const auto b = find_eigenvalues(third_order_periodic(p, q + CoefficientFunction(3.5)), -2100.0, 2100.0);
  ASSERT_GE(a.eigenvalues.size(), 4u);
  ASSERT_EQ(a.eigenvalues.size(), b.eigenvalues.size());
  for (std::size_t k = 0; k < a.eigenvalues.size(); ++k)
    EXPECT_NEAR(a.eigenvalues[k].lambda.real(), b.eigenvalues[k].lambda.real(),
                1e-6 * std::max(1.0, std::abs(a.eigenvalues[k].lambda)));
}

TEST(SecondOrderDirichlet, Examples) {
  const auto spec = second_order_dirichlet(0.0);
  EXPECT_NEAR(solve_bvp(spec, 0.0, FunctionalData::scalar(1, 1.0)).trajectory.at(0.5)(0).real(), 0.125, 1e-12);
  const auto r = find_eigenvalues(spec, 1.0, 50.0);
  ASSERT_EQ(r.eigenvalues.size(), 2u);
  const auto r3 = find_eigenvalues(spec, 80.0, 90.0);
  ASSERT_EQ(r3.eigenvalues.size(), 1u);
  EXPECT_NEAR(r3.eigenvalues[0].lambda.real(), 9 * kPi * kPi, 1e-8);
}

TEST(KreinFeller, LebesgueString) {
  const auto k = krein_feller(CoefficientFunction::parse("x"), MeasureFunction::lebesgue());
  const auto ev = k.eigenvalues(1.0, 100.0);
  ASSERT_EQ(ev.size(), 3u);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(ev[static_cast<std::size_t>(j)], std::pow((j + 1) * kPi, 2), 1e-8);
}

TEST(KreinFeller, SingleAtom) {
  // u = x up to 1/2, then slope 1 - lambda/2: u(1) = 1 - lambda/4.
  const auto k = krein_feller(CoefficientFunction::parse("x"), MeasureFunction{0.0, {{0.5, 1.0}}});
  const auto ev = k.eigenvalues(0.5, 200.0);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_NEAR(ev[0], 4.0, 1e-10);
}

TEST(KreinFeller, TwoAtomsMatchFiniteMatrix) {
  // Piecewise-linear modes with nodes 1/3, 2/3: stiffness (1/h)[[2, -1], [-1, 2]], mass diag(w).
  const auto [l1, l2] = generalized_2x2(6.0, -3.0, 6.0, 0.5, 0.5);
  const auto k = krein_feller(CoefficientFunction::parse("x"), MeasureFunction{0.0, {{1.0 / 3, 0.5}, {2.0 / 3, 0.5}}});
  const auto ev = k.eigenvalues(0.5, 200.0);
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_NEAR(ev[0], l1, 1e-10);
  EXPECT_NEAR(ev[1], l2, 1e-10);
}

TEST(KreinFeller, DoublingWeightsHalvesEigenvalues) {
  const auto H = CoefficientFunction::parse("x");
  const MeasureFunction N{CoefficientFunction::parse("1 + x"), {{0.25, 0.3}, {0.6, 0.7}}};
  MeasureFunction N2{CoefficientFunction::parse("2 + 2*x"), {{0.25, 0.6}, {0.6, 1.4}}};
  const auto a = krein_feller(H, N).eigenvalues(0.5, 400.0);
  const auto b = krein_feller(H, N2).eigenvalues(0.25, 200.0);
  ASSERT_EQ(a.size(), b.size());
  ASSERT_FALSE(a.empty());
  for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(b[j], 0.5 * a[j], 1e-9 * a[j]);
}

TEST(KreinFeller, Errors) {
  EXPECT_THROW(krein_feller(CoefficientFunction::parse("x"), MeasureFunction{0.0, {}}), SpecError);
  EXPECT_THROW(krein_feller(CoefficientFunction::parse("x"), MeasureFunction{0.0, {{0.5, -1.0}}}), SpecError);
  EXPECT_THROW(krein_feller(CoefficientFunction::parse("2*x"), MeasureFunction::lebesgue()), SpecError);
}

TEST(KreinFeller, PositivityDiagnostic) {
  const auto k = krein_feller(CoefficientFunction::parse("x"), MeasureFunction::lebesgue());
  const auto s = k.positivity(5);
  for (const complex v : s.values) EXPECT_GT(v.real(), 0.0);
  EXPECT_LT(s.half_angle, 1e-9);
  EXPECT_THROW(find_eigenvalues(KreinFeller::form_spec(), 1.0, 10.0), UnsupportedSpec);
}

TEST(KreinFeller, EigenfunctionOfSingleAtom) {
  const auto k = krein_feller(CoefficientFunction::parse("x"), MeasureFunction{0.0, {{0.5, 1.0}}});
  const auto u = k.eigenfunction(4.0);
  EXPECT_NEAR(u.at(0.5)(0).real(), 0.5, 1e-12);
  EXPECT_NEAR(std::abs(u.at(1.0)(0)), 0.0, 1e-12);
  EXPECT_NEAR(k.original(u, 0.25).real(), 0.25, 1e-12);
}
