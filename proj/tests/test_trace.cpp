#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace hillkrein;

namespace {

CMatrix scalar(Complex v) {
  CMatrix m(1, 1);
  m(0, 0) = v;
  return m;
}

struct ScalarAntiperiodic {
  double T = 1.0;
  BoundaryData b = make_boundary(antiperiodic_boundary(1), 1.0);
  CoeffPath d0 = CoeffPath::zero(1, 1.0);
  CoeffPath d = CoeffPath::constant(scalar(1.0), 1.0);
  Flow f0 = fundamental_solution(CoeffPath::zero(1, 1.0));
};

}  // namespace

TEST(GFactors, ZeroField) {
  const auto b = make_boundary(rotation_boundary(2, 1.0), 1.0);
  const auto g = build_g_factors(random_trigpoly(2, 1.0, 2, 0.5, 1), CoeffPath::zero(2, 1.0), b, 0.1, 3);
  for (int k = 1; k <= 3; ++k) EXPECT_LT(g.G(k).norm(), 1e-14);
}

TEST(GFactors, ScalarArithmetic) {
  ScalarAntiperiodic p;
  const auto g = build_g_factors(p.d0, p.d, p.b, 0.0, 2);
  EXPECT_NEAR(std::abs(g.M(0, 0) + 1.0), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(g.lambda - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(g.Q(0, 0) - 0.5), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(g.G(1)(0, 0) - 0.5), 0.0, 1e-11);
}

TEST(GFactors, CommutingConstantData) {
  const double T = 1.2;
  CMatrix a(2, 2);
  a << 0.3, 0.0, 0.0, -0.6;
  const auto b = make_boundary(rotation_boundary(2, 0.0 + 1.3), T);
  const auto f0 = fundamental_solution(CoeffPath::zero(2, T));
  const auto g = g_factors(iterated_integrals(f0, CoeffPath::constant(a, T), 3), monodromy(f0, b), 0.2, T);
  CMatrix p = CMatrix::Identity(2, 2);
  double fact = 1.0;
  for (int k = 1; k <= 3; ++k) {
    p = p * a * T;
    fact *= k;
    EXPECT_LT(oracle::rel(g.G(k), CMatrix(p / fact * g.Q)), 1e-10);
  }
}

TEST(Compositions, Counts) {
  for (int m = 1; m <= 6; ++m) EXPECT_EQ(compositions(m).size(), static_cast<std::size_t>(1) << (m - 1));
  for (const auto& c : compositions(5)) EXPECT_EQ(std::accumulate(c.begin(), c.end(), 0), 5);
}

TEST(TraceFormula, ScalarAntiperiodicValues) {
  ScalarAntiperiodic p;
  const auto g = build_g_factors(p.d0, p.d, p.b, 0.0, 4);
  EXPECT_NEAR(std::abs(trace_formula(g, 1, p.d)), 0.0, 1e-11);
  EXPECT_NEAR(std::abs(trace_formula(g, 2, p.d) + 0.25), 0.0, 1e-11);
  // odd sums vanish by symmetry; sum 1/(i pi (2k+1))^4 = 1/48
  EXPECT_NEAR(std::abs(trace_formula(g, 3, p.d)), 0.0, 1e-11);
  EXPECT_NEAR(std::abs(trace_formula(g, 4, p.d) - 1.0 / 48.0), 0.0, 1e-11);
}

TEST(TraceFormula, ZeroField) {
  const auto b = make_boundary(rotation_boundary(2, 1.0), 1.0);
  const auto z = CoeffPath::zero(2, 1.0);
  const auto g = build_g_factors(random_trigpoly(2, 1.0, 2, 0.5, 2), z, b, 0.1, 4);
  for (int m = 1; m <= 4; ++m) EXPECT_NEAR(std::abs(trace_formula(g, m, z)), 0.0, 1e-14);
}

TEST(TraceFormula, AgreesWithClosedForms) {
  const double T = 1.0;
  const auto b = make_boundary(rotation_boundary(2, 2.2), T);
  const auto d0 = random_trigpoly(2, T, 2, 0.6, 41);
  const auto d = random_trigpoly(2, T, 3, 1.0, 42);
  const Complex nu(0.3, 0.1);
  const auto f0 = fundamental_solution(d0);
  const auto g = g_factors(iterated_integrals(f0, d, 2), monodromy(f0, b), nu, T);
  EXPECT_NEAR(std::abs(trace_formula(g, 1, d) - trace_closed_m1(d, f0, b, nu)), 0.0, 1e-11);
  EXPECT_NEAR(std::abs(trace_formula(g, 2, d) - trace_closed_m2(d, f0, b, nu)), 0.0, 1e-11);
}

TEST(TraceFormula, FreeReduction) {
  const double T = 1.3;
  const auto b = make_boundary(rotation_boundary(2, 0.9), T);
  const auto d = random_trigpoly(2, T, 3, 1.0, 43);
  const Complex nu(-0.2, 0.3);
  const auto g = build_g_factors(CoeffPath::zero(2, T), d, b, nu, 1);
  EXPECT_NEAR(std::abs(trace_formula(g, 1, d) - trace_free_m1(d, b, nu)), 0.0, 1e-10);
}

TEST(TraceFormula, MatchesTruncatedPowers) {
  const double T = 1.0;
  const auto b = make_boundary(antiperiodic_boundary(2), T);
  const auto d0 = random_trigpoly(2, T, 1, 0.5, 44);
  const auto d = random_trigpoly(2, T, 2, 1.0, 45);
  const auto g = build_g_factors(d0, d, b, 0.0, 3);
  const auto sched = default_schedule(T);
  for (int m = 2; m <= 3; ++m) {
    const auto ex = truncated_power_trace(OperatorSpec::f_operator(d0, d, 0.0), b, sched, m);
    const Complex tf = trace_formula(g, m, d);
    EXPECT_LT(std::abs(ex.extrapolated - tf), 1e-6 * std::max(1.0, std::abs(tf))) << m;
  }
}

TEST(TaylorCm, LowOrderIdentities) {
  const auto b = make_boundary(rotation_boundary(2, 1.7), 1.0);
  const auto g = build_g_factors(random_trigpoly(2, 1.0, 2, 0.5, 6), random_trigpoly(2, 1.0, 2, 0.8, 7), b, 0.1, 4);
  EXPECT_NEAR(std::abs(taylor_cm(g, 1) - g.G(1).trace()), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(taylor_cm(g, 2) - (g.G(2).trace() - 0.5 * (g.G(1) * g.G(1)).trace())), 0.0, 1e-14);
  for (int m = 1; m <= 4; ++m) EXPECT_NEAR(std::abs(taylor_cm(g, m) - taylor_cm(g, m, true)), 0.0, 1e-12);
}

TEST(TaylorCm, CircleFit) {
  const double T = 1.0;
  const auto b = make_boundary(rotation_boundary(2, 2.4), T);
  const auto d0 = random_trigpoly(2, T, 2, 0.5, 51);
  const auto d = random_trigpoly(2, T, 2, 1.0, 52);
  const Complex nu(0.1, 0.05);
  const auto g = build_g_factors(d0, d, b, nu, 4, {1e-14, 1e-13});
  const auto fit = taylor_circle_fit(d0, d, b, nu, 4);
  for (int m = 1; m <= 4; ++m)
    EXPECT_LT(oracle::rel(fit[static_cast<std::size_t>(m - 1)], taylor_cm(g, m)), 1e-6) << m;
}

TEST(FreeResolvent2, Examples) {
  const double T = 1.4;
  const auto b = make_boundary(antiperiodic_boundary(1), T);
  EXPECT_NEAR(std::abs(trace_free_resolvent2(CoeffPath::constant(scalar(1.0 / T), T), b, 0.0) - T / 4.0), 0.0, 1e-14);
  const auto zero_mean = CoeffPath::trigpoly(scalar(0.0), {scalar(1.0)}, {scalar(0.5)}, T);
  EXPECT_NEAR(std::abs(trace_free_resolvent2(zero_mean, b, 0.3)), 0.0, 1e-14);
}

TEST(FreeResolvent2, IsDerivativeOfFreeTrace) {
  const double T = 1.0;
  const auto b = make_boundary(rotation_boundary(2, 1.2), T);
  const auto d = random_trigpoly(2, T, 2, 1.0, 61);
  const Complex nu(0.2, 0.1);
  const double h = 1e-5;
  const Complex fd = (trace_free_m1(d, b, nu + h) - trace_free_m1(d, b, nu - h)) / (2 * h);
  EXPECT_LT(std::abs(fd - trace_free_resolvent2(d, b, nu)), 1e-6);
}

TEST(KernelOracle, Examples) {
  ScalarAntiperiodic p;
  EXPECT_NEAR(std::abs(kernel_trace_oracle(p.d, p.f0, p.b, 0.0, 2) + 0.25), 0.0, 1e-12);
  EXPECT_EQ(kernel_trace_oracle(CoeffPath::zero(1, 1.0), p.f0, p.b, 0.0, 3), Complex(0.0));
}

TEST(KernelOracle, MatchesFormulaOnTrigpoly) {
  const double T = 1.0;
  const auto b = make_boundary(rotation_boundary(2, 2 * kPi / 5), T);
  const auto d0 = random_trigpoly(2, T, 2, 0.5, 71);
  const auto d = random_trigpoly(2, T, 3, 1.0, 72);
  const Complex nu(0.3, 0.1);
  const auto f0 = fundamental_solution(d0);
  const auto g = g_factors(iterated_integrals(f0, d, 3), monodromy(f0, b), nu, T);
  for (int m = 2; m <= 3; ++m) {
    const Complex tf = trace_formula(g, m, d);
    EXPECT_LT(std::abs(kernel_trace_oracle(d, f0, b, nu, m) - tf), 1e-6 * std::max(1.0, std::abs(tf))) << m;
  }
}
