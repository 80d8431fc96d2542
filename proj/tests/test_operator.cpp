#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qdiff/operator.hpp"
#include "qdiff/problems.hpp"

using namespace qdiff;

namespace {

constexpr double kPi = std::numbers::pi;

const std::vector<double> kSamples = {0.0, 0.1, 0.2345, 0.5, 0.61, 0.75, 0.9, 1.0};

complex entry(const FirstOrderSystem& s, std::size_t i, std::size_t j, double x) { return s.entry(i, j).value(x); }

/// Polynomial trajectory (y, y', ..., y^(k)) from coefficient lists.
VectorTrajectory poly_trajectory(std::vector<double> c, std::size_t k) {
  return VectorTrajectory::from_function([c, k](double x) {
    cvec out(static_cast<Eigen::Index>(k + 1));
    std::vector<double> d = c;
    for (std::size_t r = 0; r <= k; ++r) {
      double v = 0.0;
      for (std::size_t p = d.size(); p-- > 0;) v = v * x + d[p];
      out(static_cast<Eigen::Index>(r)) = v;
      std::vector<double> next;
      for (std::size_t p = 1; p < d.size(); ++p) next.push_back(d[p] * static_cast<double>(p));
      d = next.empty() ? std::vector<double>{0.0} : next;
    }
    return out;
  });
}

}  // namespace

TEST(ValidateSpec, PresetsAreValid) {
  EXPECT_TRUE(validate_spec(fourth_order_dirichlet(1.0, 0.0, 0.0)).ok());
  EXPECT_TRUE(validate_spec(third_order_periodic(0.0, 0.0)).ok());
  EXPECT_TRUE(validate_spec(second_order_dirichlet(0.0)).ok());
}

TEST(ValidateSpec, ShapeViolations) {
  OperatorSpec s = fourth_order_dirichlet(1.0, 0.0, 0.0);
  s.U = cmat::Identity(3, 3);
  const auto r = validate_spec(s);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(r.has("shape"));
  OperatorSpec t = fourth_order_dirichlet(1.0, 0.0, 0.0);
  t.set_p(3, 0, 1.0);
  EXPECT_TRUE(validate_spec(t).has("shape"));
}

TEST(ValidateSpec, LeadingCoefficientChecks) {
  OperatorSpec s = fourth_order_dirichlet(1.0, 0.0, 0.0);
  s.set_p(2, 2, CoefficientFunction::parse("x"));
  EXPECT_TRUE(validate_spec(s).has("leading"));
  EXPECT_THROW(assemble_system(s, 0.0, FunctionalData::zero(2)), SpecError);
}

TEST(ValidateSpec, LeadingMayNotCarryLambda) {
  OperatorSpec s = fourth_order_dirichlet(1.0, 0.0, 0.0);
  s.set_p(2, 2, 1.0, 1.0);
  EXPECT_TRUE(validate_spec(s).has("leading"));
}

TEST(ValidateSpec, IntegrabilityClasses) {
  // p_12 in L_2 needs exponent > -1/2 when s = 2.
  const auto sing = CoefficientFunction::piecewise({Piece{0.0, 1.0, Expr::parse("x^(-0.6)"), -0.6, 0.0}});
  OperatorSpec s = fourth_order_dirichlet(1.0, 0.0, 0.0);
  s.set_p(1, 2, sing);
  EXPECT_TRUE(validate_spec(s).has("integrability"));
  const auto mild = CoefficientFunction::piecewise({Piece{0.0, 1.0, Expr::parse("x^(-0.4)"), -0.4, 0.0}});
  s.set_p(1, 2, mild);
  EXPECT_TRUE(validate_spec(s).ok());
  // s = 1 forces bounded p_im.
  OperatorSpec p = third_order_periodic(0.0, 0.0);
  p.set_p(1, 1, mild);
  EXPECT_TRUE(validate_spec(p).has("integrability"));
}

TEST(ValidateSpec, ZeroSetsMustCoincide) {
  OperatorSpec s = fourth_order_dirichlet(1.0, 0.0, 0.0);
  CoefficientSystem b = CoefficientSystem::sobolev(2);
  b.set(1, 2, CoefficientFunction::parse("1 + step(x-0.5)"));
  s.B = b;
  EXPECT_TRUE(validate_spec(s).ok());
  CoefficientSystem a = CoefficientSystem::sobolev(2);
  a.set(1, 2, CoefficientFunction::parse("x"));
  s.A = a;
  s.B = CoefficientSystem::sobolev(2);
  EXPECT_TRUE(validate_spec(s).has("zero-sets"));
}

TEST(FredholmIndex, Presets) {
  EXPECT_EQ(fredholm_index(fourth_order_dirichlet(1.0, 0.0, 0.0)), 0);
  EXPECT_EQ(fredholm_index(third_order_periodic(0.0, 0.0)), 0);
  OperatorSpec s = fourth_order_dirichlet(1.0, 0.0, 0.0);
  s.U.row(3).setZero();
  EXPECT_EQ(fredholm_index(s), 1);
  s.V.row(0).setZero();
  s.V.row(1).setZero();
  EXPECT_EQ(fredholm_index(s), -1);
}

TEST(AssembleSystem, BeamSpecialization) {
  const auto sys = assemble_system(fourth_order_dirichlet(1.0, 0.0, 0.0), 0.0,
                                   FunctionalData::scalar(2, CoefficientFunction::parse("sin(x)")));
  cmat expect = cmat::Zero(4, 4);
  expect(0, 1) = 1.0;
  expect(1, 2) = 1.0;
  expect(2, 3) = -1.0;
  for (double x : kSamples) {
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        EXPECT_NEAR(std::abs(entry(sys, i, j, x) - expect(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))),
                    0.0, 1e-14);
    EXPECT_NEAR(std::abs(sys.forcing[3].value(x) + std::sin(x)), 0.0, 1e-14);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(sys.forcing[i].is_zero());
  }
  const std::string text = sys.str();
  EXPECT_NE(text.find("(y^[0])' = y^[1]"), std::string::npos);
  EXPECT_NE(text.find("(y^[2])' = -y^[3]"), std::string::npos);
}

TEST(AssembleSystem, BeamGeneralFourthRow) {
  // (y^[3])' = -p^{-1} r^2 y^[0] + p^{-1} q r y^[1] + p^{-1} r y^[2] - f
  const auto p = CoefficientFunction::parse("2 + x"), q = CoefficientFunction::parse("sin(x)"),
             r = CoefficientFunction::parse("x^2");
  const auto sys = assemble_system(fourth_order_dirichlet(p, q, r), 0.0, FunctionalData::scalar(2, 3.0));
  for (double x : kSamples) {
    const double pv = 2 + x, qv = std::sin(x), rv = x * x;
    EXPECT_NEAR(std::abs(entry(sys, 3, 0, x) - (-rv * rv / pv)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(entry(sys, 3, 1, x) - qv * rv / pv), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(entry(sys, 3, 2, x) - rv / pv), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(entry(sys, 3, 3, x)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(sys.forcing[3].value(x) + 3.0), 0.0, 1e-14);
    // Row 2 carries 2r - p^{-1} q^2 in the y^[1] slot.
    EXPECT_NEAR(std::abs(entry(sys, 2, 1, x) - (2 * rv - qv * qv / pv)), 0.0, 1e-14);
  }
}

TEST(AssembleSystem, BeamStepQRowTwo) {
  const auto sys = assemble_system(fourth_order_dirichlet(1.0, CoefficientFunction::parse("step(x-0.5)"), 0.0), 0.0,
                                   FunctionalData::zero(2));
  EXPECT_NEAR(std::abs(entry(sys, 2, 1, 0.75) + 1.0), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(entry(sys, 2, 1, 0.25)), 0.0, 1e-14);
}

TEST(AssembleSystem, PeriodicThirdRow) {
  // (y^[2])' = -lambda y^[0] - q y^[1] - f
  const auto q = CoefficientFunction::parse("cos(x)");
  const auto sys = assemble_system(third_order_periodic(CoefficientFunction::parse("1 + x"), q), complex(2.0, 0.5),
                                   FunctionalData::scalar(1, 7.0));
  for (double x : kSamples) {
    EXPECT_NEAR(std::abs(entry(sys, 2, 0, x) - complex(-2.0, -0.5)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(entry(sys, 2, 1, x) + std::cos(x)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(entry(sys, 2, 2, x)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(sys.forcing[2].value(x) + 7.0), 0.0, 1e-14);
    // y^[1]' = i (p y^[1] - q y^[0] - y^[2])
    EXPECT_NEAR(std::abs(entry(sys, 1, 1, x) - complex(0.0, 1.0 + x)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(entry(sys, 1, 0, x) - complex(0.0, -std::cos(x))), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(entry(sys, 1, 2, x) - complex(0.0, -1.0)), 0.0, 1e-14);
  }
}

TEST(AssembleSystem, SchrodingerRows) {
  const auto q = CoefficientFunction::parse("x^3");
  const auto sys = assemble_system(second_order_dirichlet(q), 5.0, FunctionalData::scalar(1, 2.0));
  for (double x : kSamples) {
    const double qv = x * x * x;
    EXPECT_NEAR(std::abs(entry(sys, 0, 0, x) - qv), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(entry(sys, 0, 1, x) - 1.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(entry(sys, 1, 0, x) - (-5.0 - qv * qv)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(entry(sys, 1, 1, x) + qv), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(sys.forcing[1].value(x) + 2.0), 0.0, 1e-14);
  }
}

TEST(BoundaryMatrix, PeriodicRanks) {
  const auto b = boundary_matrix(third_order_periodic(0.0, 0.0));
  EXPECT_EQ(b.rows_U.rows(), 2);
  EXPECT_EQ(b.null_basis.cols(), 1);
  EXPECT_EQ(b.condition_count(), 3u);
  // The kernel of V is spanned by (1, 1).
  EXPECT_NEAR(std::abs(b.null_basis(0, 0) - b.null_basis(1, 0)), 0.0, 1e-14);
}

TEST(BoundaryMatrix, VeeTraceSignConvention) {
  // n = 2, m = 1: Y^v = (y^[2](0), -y^[2](1)).
  cvec left(3), right(3);
  left << 1.0, 2.0, 3.0;
  right << 4.0, 5.0, 6.0;
  const cvec v = trace_vee(left, right, 2, 1);
  EXPECT_EQ(v(0), complex(3.0));
  EXPECT_EQ(v(1), complex(-6.0));
  // n = m = 2: (y^[3](0), y^[2](0), -y^[3](1), -y^[2](1)).
  cvec l4(4), r4(4);
  l4 << 1.0, 2.0, 3.0, 4.0;
  r4 << 5.0, 6.0, 7.0, 8.0;
  const cvec w = trace_vee(l4, r4, 2, 2);
  EXPECT_EQ(w(0), complex(4.0));
  EXPECT_EQ(w(1), complex(3.0));
  EXPECT_EQ(w(2), complex(-8.0));
  EXPECT_EQ(w(3), complex(-7.0));
}

TEST(ApplyT, BeamFormOnPolynomials) {
  // <T Y, Z> = int y'' conj(z'') - lambda int y conj(z); y = x^2, z = x^3.
  const auto spec = fourth_order_dirichlet(1.0, 0.0, 0.0);
  const auto Y = poly_trajectory({0, 0, 1}, 2), Z = poly_trajectory({0, 0, 0, 1}, 2);
  EXPECT_NEAR(std::abs(apply_T(spec, 0.0, Y, Z) - 6.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(apply_T(spec, 3.0, Y, Z) - (6.0 - 3.0 / 6.0)), 0.0, 1e-12);
}

TEST(ApplyT, BeamWithPotentialOracle) {
  // r = x: form = int (y'' - q y' + r y) z'' + (2 r y' - q y'') z' + r y'' z
  // with q = 0 gives int x y z'' + 2 x y' z' + x y'' z for y = x, z = x^2:
  // int (2x^2 + 4x^2 + 0) = 2.
  const auto spec = fourth_order_dirichlet(1.0, 0.0, CoefficientFunction::parse("x"));
  const auto Y = poly_trajectory({0, 1}, 2), Z = poly_trajectory({0, 0, 1}, 2);
  EXPECT_NEAR(std::abs(apply_T(spec, 0.0, Y, Z) - 2.0), 0.0, 1e-12);
}

TEST(ApplyT, PeriodicFormOnTrigonometricTrials) {
  // p = q = 0: int i y'' conj(z') with y = z = exp(2 pi i x) gives
  // i (2 pi i)^2 conj(2 pi i) = -(2 pi)^3.
  const auto spec = third_order_periodic(0.0, 0.0);
  auto e = [](std::size_t k) {
    return VectorTrajectory::from_function([k](double x) {
      cvec out(static_cast<Eigen::Index>(k + 1));
      complex d = 1.0;
      for (std::size_t r = 0; r <= k; ++r) {
        out(static_cast<Eigen::Index>(r)) = d * std::exp(complex(0.0, 2 * kPi * x));
        d *= complex(0.0, 2 * kPi);
      }
      return out;
    });
  };
  EXPECT_NEAR(std::abs(apply_T(spec, 0.0, e(2), e(1)) + std::pow(2 * kPi, 3)), 0.0, 1e-8);
}

TEST(ApplyT, ComponentCountChecked) {
  const auto spec = fourth_order_dirichlet(1.0, 0.0, 0.0);
  const auto short_y = poly_trajectory({0, 1}, 1);
  EXPECT_THROW(apply_T(spec, 0.0, short_y, short_y), SpecError);
}

TEST(FunctionalPairing, ScalarAndBoundaryParts) {
  const auto spec = fourth_order_dirichlet(1.0, 0.0, 0.0);
  FunctionalData F = FunctionalData::scalar(2, 24.0);
  F.mu = cvec::Zero(2);
  F.mu(0) = complex(0.0, 1.0);
  const auto Z = poly_trajectory({1, 1}, 2);  // z = 1 + x
  // int 24 (1 + x) + i conj(z(0)) = 36 + i
  EXPECT_NEAR(std::abs(functional_pairing(spec, F, Z) - complex(36.0, 1.0)), 0.0, 1e-12);
  EXPECT_NEAR(functional_norm(F), 25.0, 1e-12);
}
