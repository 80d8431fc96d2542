#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qdiff/quasisystem.hpp"

using namespace qdiff;

namespace {

double sup_diff(const cmat& a, const cmat& b) { return (a - b).cwiseAbs().maxCoeff(); }

cmat mat2(complex a, complex b, complex c, complex d) {
  cmat m(2, 2);
  m << a, b, c, d;
  return m;
}

/// Random smooth system of order n: trigonometric/polynomial entries with
/// superdiagonal bounded away from zero.
CoefficientSystem random_system(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CoefficientSystem a(n);
  auto num = [&] { return format_double(std::round(u(rng) * 100.0) / 100.0); };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j)
      a.set(i, j, CoefficientFunction::parse("(" + num() + ")*cos(" + num() + "*x) + (" + num() + ")*x"));
    a.set(i, i + 1, CoefficientFunction::parse("1.5 + (" + num() + ")*sin(3*x)"));
  }
  return a;
}

}  // namespace

TEST(ValidateSystem, SpecExamples) {
  EXPECT_TRUE(validate_system(CoefficientSystem::sobolev(3)).ok());
  CoefficientSystem bad = CoefficientSystem::sobolev(2);
  bad.set(0, 2, 1.0);
  const auto r = validate_system(bad);
  ASSERT_FALSE(r.ok());
  EXPECT_TRUE(r.has("shape"));
  EXPECT_EQ(r.violations.front().i, 0u);
  EXPECT_EQ(r.violations.front().j, 2u);
  CoefficientSystem step(1);
  step.set(0, 1, CoefficientFunction::parse("step(x-0.5)"));
  const auto s = validate_system(step);
  ASSERT_FALSE(s.ok());
  EXPECT_TRUE(s.has("monotonicity"));
}

TEST(ValidateSystem, RejectsAtomsAndMissingSuperdiagonal) {
  CoefficientSystem a(2);
  a.set(0, 1, CoefficientFunction(1.0).with_atoms({{0.5, 1.0}}));
  const auto r = validate_system(a);
  EXPECT_TRUE(r.has("atoms"));
  EXPECT_TRUE(r.has("monotonicity"));  // A_{1,2} absent
}

TEST(FundamentalMatrix, SpecExamples) {
  CoefficientSystem one(1);
  one.set(0, 1, 1.0);
  const auto m1 = fundamental_matrix(one);
  EXPECT_NEAR(std::abs(m1.at(0.6)(0, 0) - 1.0), 0.0, 1e-15);

  const auto m2 = fundamental_matrix(CoefficientSystem::sobolev(2));
  EXPECT_LT(sup_diff(m2.at(1.0), mat2(1, 1, 0, 1)), 1e-14);
  EXPECT_LT(sup_diff(m2.at(0.3), mat2(1, 0.3, 0, 1)), 1e-14);

  CoefficientSystem e(1);
  e.set(0, 0, 1.0).set(0, 1, 1.0);
  EXPECT_NEAR(fundamental_matrix(e).at(1.0)(0, 0).real(), 2.718281828, 1e-9);
}

TEST(FundamentalMatrix, StartsAtIdentity) {
  std::mt19937_64 rng(7);
  const auto m = fundamental_matrix(random_system(3, rng));
  EXPECT_EQ(m.grid().front(), 0.0);
  EXPECT_EQ(m.grid().back(), 1.0);
  EXPECT_LT(sup_diff(m.at(0.0), cmat::Identity(3, 3)), 1e-15);
}

TEST(FundamentalMatrix, InvalidSystemRejected) {
  CoefficientSystem step(1);
  step.set(0, 1, CoefficientFunction::parse("step(x-0.5)"));
  EXPECT_THROW(fundamental_matrix(step), SpecError);
}

TEST(FundamentalMatrix, ConditioningCap) {
  // M = diag(exp(30x), exp(-30x)) has condition exp(60) at x = 1.
  CoefficientSystem stiff(2);
  stiff.set(0, 0, 30.0).set(1, 1, -30.0).set(0, 1, 1.0).set(1, 2, 1.0);
  EXPECT_THROW(fundamental_matrix(stiff), ConditioningError);
}

TEST(InvertFundamental, SpecExamples) {
  const auto m2 = fundamental_matrix(CoefficientSystem::sobolev(2));
  EXPECT_LT(sup_diff(invert_fundamental(m2).at(1.0), mat2(1, -1, 0, 1)), 1e-14);

  CoefficientSystem one(1);
  one.set(0, 1, 1.0);
  const auto id = fundamental_matrix(one);
  const auto inv_id = invert_fundamental(id);
  for (std::size_t k = 0; k < id.grid().size(); ++k) EXPECT_LT(sup_diff(inv_id.values()[k], id.values()[k]), 1e-15);

  CoefficientSystem e(1);
  e.set(0, 0, 1.0).set(0, 1, 1.0);
  EXPECT_NEAR(invert_fundamental(fundamental_matrix(e)).at(1.0)(0, 0).real(), 0.3678794412, 1e-9);
}

TEST(InvertFundamental, ProductIsIdentityEverywhere) {
  std::mt19937_64 rng(11);
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto m = fundamental_matrix(random_system(n, rng));
    const auto inv = invert_fundamental(m);
    const auto ni = static_cast<Eigen::Index>(n);
    for (std::size_t k = 0; k < m.grid().size(); ++k)
      EXPECT_LT(inf_norm(m.values()[k] * inv.values()[k] - cmat::Identity(ni, ni)), 1e-10);
    EXPECT_LT(inf_norm(m.at(0.4321) * inv.at(0.4321) - cmat::Identity(ni, ni)), 1e-10);
  }
}

TEST(Reconstruct, SpecExamples) {
  CoefficientSystem s1(1);
  s1.set(0, 1, 1.0);
  cvec z1 = cvec::Zero(1);
  EXPECT_NEAR(reconstruct(s1, z1, CoefficientFunction::parse("2*x")).at(1.0)(0).real(), 1.0, 1e-12);
  EXPECT_NEAR(reconstruct(CoefficientSystem::sobolev(2), cvec::Zero(2), 1.0).at(1.0)(0).real(), 0.5, 1e-12);
  CoefficientSystem e(1);
  e.set(0, 0, 1.0).set(0, 1, 1.0);
  EXPECT_NEAR(reconstruct(e, z1, 1.0).at(1.0)(0).real(), 1.7182818, 1e-7);
}

TEST(Reconstruct, TopComponentIsTheSuppliedFunction) {
  const auto yn = CoefficientFunction::parse("sin(5*x)");
  const auto y = reconstruct(CoefficientSystem::sobolev(2), cvec::Zero(2), yn);
  ASSERT_EQ(y.components(), 3u);
  EXPECT_NEAR(std::abs(y.at(0.3)(2) - yn(0.3)), 0.0, 1e-15);
}

TEST(Reconstruct, RoundTripAgainstForwardIntegration) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 4);
    const auto a = random_system(n, rng);
    cvec init(static_cast<Eigen::Index>(n));
    for (Eigen::Index k = 0; k < init.size(); ++k) init(k) = complex(u(rng), u(rng));
    const auto yn = CoefficientFunction::parse(format_double(u(rng)) + "*exp(x) + " + format_double(u(rng)) + "*cos(4*x)");
    const auto rec = reconstruct(a, init, yn);

    FirstOrderSystem direct = a.truncated();
    direct.forcing[n - 1] = a.get(n - 1, n) * yn;
    const auto fwd = integrate_ivp(direct, init);

    double err = 0.0;
    for (double x : fwd.grid()) err = std::max(err, (rec.at(x).head(static_cast<Eigen::Index>(n)) - fwd.at(x)).cwiseAbs().maxCoeff());
    for (double x : rec.grid()) err = std::max(err, (rec.at(x).head(static_cast<Eigen::Index>(n)) - fwd.at(x)).cwiseAbs().maxCoeff());
    EXPECT_LT(err, 1e-8) << "n = " << n;
  }
}

TEST(Reconstruct, CocycleRestart) {
  std::mt19937_64 rng(99);
  const auto a = random_system(3, rng);
  FirstOrderSystem sys = a.truncated();
  const cvec y0 = cvec::Ones(3);
  const double b = 0.4, c = 0.9;
  const auto whole = integrate_ivp(sys, y0);
  // Restart at b: the system shifted onto [0, 1 - b] by substitution x -> x + b.
  FirstOrderSystem shifted(3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      const auto& f = sys.entry(i, j);
      if (f.is_zero()) continue;
      shifted.entry(i, j) = CoefficientFunction(
          Expr::custom({"shifted", [f, b](double t) { return f.value(std::min(1.0, t + b)); }, nullptr, "", true}));
    }
  const auto second = integrate_ivp(shifted, whole.at(b));
  EXPECT_LT((second.at(c - b) - whole.at(c)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(BoundaryTrace, SpecExamples) {
  const auto y = VectorTrajectory::from_function([](double x) {
    cvec v(2);
    v << x, 1.0;
    return v;
  });
  const cvec t = boundary_trace(y, 2);
  EXPECT_EQ(t, (cvec(4) << 0.0, 1.0, 1.0, 1.0).finished());

  const auto zero = VectorTrajectory::from_function([](double) { return cvec::Zero(1).eval(); });
  EXPECT_EQ(boundary_trace(zero, 1), cvec::Zero(2));

  const auto clamped = VectorTrajectory::from_function([](double x) {
    cvec v(2);
    v << x * x * (1 - x) * (1 - x), 2 * x * (1 - x) * (1 - 2 * x);
    return v;
  });
  EXPECT_EQ(boundary_trace(clamped, 2), cvec::Zero(4));
  EXPECT_THROW(boundary_trace(zero, 2), SpecError);
}

TEST(BoundaryTrace, MatchesInitAndTerminalValuesOfReconstruct) {
  std::mt19937_64 rng(5);
  const auto a = random_system(3, rng);
  const cvec init = (cvec(3) << complex(1, 2), -0.5, 3.0).finished();
  const auto y = reconstruct(a, init, CoefficientFunction::parse("x"));
  const cvec t = boundary_trace(y, 3);
  for (Eigen::Index k = 0; k < 3; ++k) {
    EXPECT_EQ(t(k), y.values().front()(k));
    EXPECT_EQ(t(3 + k), y.values().back()(k));
  }
  EXPECT_LT((t.head(3) - init).cwiseAbs().maxCoeff(), 1e-15);
}
