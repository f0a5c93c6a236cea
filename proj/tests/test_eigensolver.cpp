#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace hillkrein;

namespace {

CMatrix scalar(Complex v) {
  CMatrix m(1, 1);
  m(0, 0) = v;
  return m;
}

// int d = 1 with a non-constant profile, so the flow is not trivially exponential
CoeffPath wavy_unit(double T) { return CoeffPath::trigpoly(scalar(1.0 / T), {scalar(0.7)}, {scalar(-0.4)}, T); }

}  // namespace

TEST(BvpEigs, ScalarExponentialRoots) {
  const double T = 1.0;
  const auto b = make_boundary(antiperiodic_boundary(1), T);
  const auto e = bvp_eigenvalues(CoeffPath::zero(1, T), wavy_unit(T), b, 0.0, 4 * kPi);
  EXPECT_EQ(e.count, 4);
  ASSERT_EQ(e.roots.size(), 4u);
  for (std::size_t i = 0; i < e.roots.size(); ++i) {
    const double k = std::round((e.roots[i].imag() / kPi - 1.0) / 2.0);
    EXPECT_LT(std::abs(e.roots[i] - Complex(0.0, kPi * (2 * k + 1))), 1e-8);
    EXPECT_EQ(e.multiplicities[i], 1);
    EXPECT_TRUE(e.verified[i]);
  }
  EXPECT_NEAR(e.winding_quadrature, 4.0, 0.1);
}

TEST(BvpEigs, ZeroFieldHasNoRoots) {
  const auto b = make_boundary(rotation_boundary(2, 1.0), 1.0);
  const auto e = bvp_eigenvalues(CoeffPath::zero(2, 1.0), CoeffPath::zero(2, 1.0), b, 0.0, 10.0);
  EXPECT_EQ(e.count, 0);
  EXPECT_TRUE(e.roots.empty());
}

TEST(BvpEigs, OscillatorDoubleRoots) {
  const double T = 1.0, R = 2.0;
  SecondOrderProblem p{CoeffPath::constant(scalar(R), T), antiperiodic_boundary(1), T, 0.0};
  const auto ff = to_first_order(p);
  EigOptions opt;
  opt.growth_exponent = 0.5;
  const double top = std::pow(4 * kPi / T, 2) / R;
  const auto e = bvp_eigenvalues(ff.D0, ff.D, ff.boundary, 0.0, top, opt);
  EXPECT_EQ(e.count, 4);
  ASSERT_EQ(e.roots.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const double want = std::pow((2 * i + 1) * kPi / T, 2) / R;
    EXPECT_EQ(e.multiplicities[i], 2);
    EXPECT_LT(std::abs(e.roots[i] - want), 1e-6 * want);
  }
}

TEST(BvpEigs, ShiftedCharacteristicFunction) {
  // with nu the roots solve e^{alpha} = -e^{nu}: alpha = nu + i pi (2k+1)
  const double T = 1.0;
  const auto b = make_boundary(antiperiodic_boundary(1), T);
  EigOptions opt;
  opt.nu = Complex(0.3, 0.0);
  const auto e = bvp_eigenvalues(CoeffPath::zero(1, T), CoeffPath::constant(scalar(1.0), T), b, 0.3, 2 * kPi, opt);
  ASSERT_EQ(e.count, 2);
  for (const auto& z : e.roots) EXPECT_NEAR(z.real(), 0.3, 1e-9);
}

TEST(EigenSum, ConvergesToMinusQuarter) {
  const double T = 1.0;
  const auto b = make_boundary(antiperiodic_boundary(1), T);
  double prev = 1.0;
  for (int K : {3, 7}) {
    const auto e = bvp_eigenvalues(CoeffPath::zero(1, T), wavy_unit(T), b, 0.0, (2 * K + 2) * kPi);
    const auto s = eigen_sum(e, 2);
    const double err = std::abs(s.value + 0.25);
    EXPECT_LE(err, s.tail_bound);
    EXPECT_LT(std::abs(s.value.imag()), 1e-10);
    EXPECT_NEAR(std::abs(s.value - oracle::antiperiodic_power_sum(1.0, 2, K)), 0.0, 1e-9);
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(EigenSum, MatchesTraceFormulaWithinTail) {
  const double T = 1.0;
  const auto b = make_boundary(rotation_boundary(2, 2.0), T);
  const auto d0 = random_trigpoly(2, T, 1, 0.3, 81);
  const auto d = random_trigpoly(2, T, 2, 1.0, 82);
  const auto e = bvp_eigenvalues(d0, d, b, 0.0, 25.0);
  const auto s = eigen_sum(e, 2);
  const auto g = build_g_factors(d0, d, b, 0.0, 2);
  EXPECT_LE(std::abs(s.value - trace_formula(g, 2, d)), s.tail_bound);
}

TEST(EigenSum, RejectsDivergentPower) {
  BvpEigs e;
  e.growth_exponent = 1.0;
  EXPECT_THROW(eigen_sum(e, 1), Error);
}
