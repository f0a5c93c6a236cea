#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace hillkrein;

namespace {

CMatrix scalar(Complex v) {
  CMatrix m(1, 1);
  m(0, 0) = v;
  return m;
}

SecondOrderProblem constant_scalar(double R, double T) {
  return {CoeffPath::constant(scalar(R), T), antiperiodic_boundary(1), T, 0.0};
}

SecondOrderProblem cosine_scalar(double a, double bcoef, double T) {
  return {CoeffPath::trigpoly(scalar(a), {scalar(bcoef)}, {scalar(0.0)}, T), antiperiodic_boundary(1), T, 0.0};
}

SecondOrderProblem random_matrix_problem(int n, double T, unsigned seed, const RMatrix& S, Complex nu) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  auto sym = [&] {
    RMatrix a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = u(gen);
    return CMatrix(to_complex(RMatrix(a + a.transpose())));
  };
  const CMatrix mean = sym() + 2.0 * CMatrix::Identity(n, n);
  std::vector<CMatrix> c{sym(), sym()}, s{sym(), sym()};
  return {CoeffPath::trigpoly(mean, c, s, T), S, T, nu};
}

}  // namespace

TEST(XPath, ConstantR) {
  const auto p = constant_scalar(3.0, 1.0);
  const auto x = x_path(p);
  EXPECT_LT(x.X(0.4).norm(), 1e-14);
  const auto xc = x_path(p, XMode::custom, scalar(0.7));
  EXPECT_LT((xc.X(0.4) - scalar(0.7)).norm(), 1e-14);
}

TEST(XPath, CosineProfile) {
  const double T = 2.0;
  const auto p = cosine_scalar(0.0, 1.0, T);
  const auto x = x_path(p);
  for (double t : {0.1, 0.9, 1.7})
    EXPECT_NEAR(std::abs(x.X(t)(0, 0) - T / (2 * kPi) * std::sin(2 * kPi * t / T)), 0.0, 1e-13);
  EXPECT_LT(x.C.norm(), 1e-14);
}

TEST(TraceRAinv, KreinFirstSum) {
  const double T = 1.3;
  const auto p = constant_scalar(2.0, T);
  EXPECT_NEAR(std::abs(trace_RAinv(p) - 2.0 * T * T / 4.0), 0.0, 1e-13);
  double sum = 0.0;
  for (int k = 0; k < 200000; ++k) sum += 2.0 * 2.0 * T * T / (kPi * kPi * (2 * k + 1) * (2 * k + 1));
  EXPECT_NEAR(trace_RAinv(p).real(), sum, 1e-5);
  const auto z = cosine_scalar(0.0, 1.0, T);
  EXPECT_NEAR(std::abs(trace_RAinv(z)), 0.0, 1e-14);
  const auto m = random_matrix_problem(2, T, 3, antiperiodic_boundary(2), 0.0);
  EXPECT_NEAR(std::abs(trace_RAinv(m) - T / 4.0 * m.R.trace_integral()), 0.0, 1e-12);
}

TEST(TraceRAinv2, Examples) {
  const double T = 1.1;
  const auto p = constant_scalar(1.5, T);
  EXPECT_NEAR(std::abs(trace_RAinv2(p) - 1.5 * std::pow(T, 4) / 48.0), 0.0, 1e-13);
  const auto z = cosine_scalar(0.0, 1.0, T);
  EXPECT_EQ(trace_RAinv2(z), Complex(0.0));
}

TEST(TraceRAinv2, SecondDerivativeRelation) {
  // Tr(R (d/dt+nu)^{-4}) = (1/6) d^2/dnu^2 Tr(R (d/dt+nu)^{-2}) and A = -(d/dt+nu)^2
  const auto base = random_matrix_problem(2, 1.0, 5, rotation_boundary(2, 1.0), Complex(0.2, 0.1));
  const double h = 1e-3;
  auto at = [&](Complex nu) {
    SecondOrderProblem q = base;
    q.nu = nu;
    return trace_RAinv(q);
  };
  const Complex d2 = (at(base.nu + h) - 2.0 * at(base.nu) + at(base.nu - h)) / (h * h);
  EXPECT_LT(std::abs(trace_RAinv2(base) + d2 / 6.0), 1e-6 * std::max(1.0, std::abs(d2)));
}

TEST(TraceCenteredSq, ConstantRIsZero) {
  const auto p = constant_scalar(2.0, 1.0);
  EXPECT_NEAR(std::abs(trace_centered_sq(p, x_path(p))), 0.0, 1e-14);
}

TEST(TraceCenteredSq, IndependentOfC) {
  const auto p = random_matrix_problem(2, 1.0, 7, antiperiodic_boundary(2), 0.0);
  const Complex a = trace_centered_sq(p, x_path(p, XMode::custom, CMatrix::Zero(2, 2)));
  const Complex b = trace_centered_sq(p, x_path(p, XMode::custom, CMatrix::Identity(2, 2)));
  const Complex c = trace_centered_sq(p, x_path(p));
  EXPECT_LT(std::abs(a - b), 1e-10);
  EXPECT_LT(std::abs(a - c), 1e-10);
}

TEST(TraceCenteredSq, MatchesKernelOracle) {
  const double T = 2 * kPi;
  const auto p = cosine_scalar(0.0, 1.0, T);
  const Complex v = trace_centered_sq(p, x_path(p));
  const Complex o = second_order_square_oracle(p.R, p.S, T, 0.0);
  EXPECT_LT(std::abs(v - o), 1e-6 * std::max(1.0, std::abs(o)));
}

TEST(TraceCenteredSq, NonCommutingCRaises) {
  const auto p = random_matrix_problem(2, 1.0, 7, rotation_boundary(2, 1.0), 0.0);
  CMatrix c(2, 2);
  c << 1.0, 0.0, 0.0, 2.0;
  try {
    trace_centered_sq(p, x_path(p, XMode::custom, c));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonCommutingC);
  }
}

TEST(TraceFullSq, Examples) {
  const double T = 1.0;
  const auto p = constant_scalar(3.0, T);
  EXPECT_NEAR(std::abs(trace_full_sq(p, x_path(p)) - 9.0 / 48.0), 0.0, 1e-13);
  const SecondOrderProblem z{CoeffPath::zero(1, T), antiperiodic_boundary(1), T, 0.0};
  EXPECT_NEAR(std::abs(trace_full_sq(z, x_path(z))), 0.0, 1e-15);
}

TEST(TraceFullSq, MatchesOracleAndFirstOrderForm) {
  const double T = 1.0;
  const Complex nu(0.3, 0.2);
  const auto p = random_matrix_problem(2, T, 11, antiperiodic_boundary(2), nu);
  const Complex v = trace_full_sq(p, x_path(p));
  EXPECT_LT(std::abs(v - second_order_square_oracle(p.R, p.S, T, nu)), 1e-8 * std::max(1.0, std::abs(v)));
  const auto ff = to_first_order(p);
  const auto g = build_g_factors(ff.D0, ff.D, ff.boundary, 0.0, 2);
  EXPECT_LT(std::abs(v - trace_formula(g, 2, ff.D)), 1e-7 * std::max(1.0, std::abs(v)));
  EXPECT_LT(std::abs(trace_RAinv(p) - trace_formula(g, 1, ff.D)), 1e-7 * std::max(1.0, std::abs(v)));
}

TEST(TraceFullSq, ScalarBoundaryCorollary) {
  for (const RMatrix& s : {RMatrix(antiperiodic_boundary(2)), RMatrix(identity_boundary(2))}) {
    const auto p = random_matrix_problem(2, 1.0, 13, s, Complex(0.4, 0.0));
    const auto x = x_path(p);
    EXPECT_LT(std::abs(trace_full_sq_scalar_boundary(p, x) - trace_full_sq(p, x)), 1e-12) << s(0, 0);
  }
}

TEST(KreinClassics, ConstantR) {
  const double T = 1.0;
  for (double R : {0.5, 2.0, 7.0}) {
    const auto k = krein_classics(constant_scalar(R, T));
    EXPECT_NEAR(std::abs(k.sum1 - R * T * T / 4.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(k.sum2 - R * R * std::pow(T, 4) / 48.0), 0.0, 1e-12);
  }
  const SecondOrderProblem z{CoeffPath::zero(1, T), antiperiodic_boundary(1), T, 0.0};
  const auto k = krein_classics(z);
  EXPECT_EQ(k.sum1, Complex(0.0));
  EXPECT_EQ(k.sum2, Complex(0.0));
}

TEST(KreinClassics, MathieuClosedForm) {
  const auto k = krein_classics(cosine_scalar(1.0, 0.5, 2 * kPi));
  EXPECT_NEAR(std::abs(k.sum1 - kPi * kPi), 0.0, 1e-11);
  EXPECT_NEAR(std::abs(k.sum2 - (kPi * kPi / 4.0 + std::pow(kPi, 4) / 3.0)), 0.0, 1e-10);
}

TEST(Validation, AsymmetricRRaises) {
  CMatrix a(2, 2);
  a << 1.0, 0.5, 0.0, 1.0;
  const SecondOrderProblem p{CoeffPath::constant(a, 1.0), antiperiodic_boundary(2), 1.0, 0.0};
  try {
    validate(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotSymmetric);
  }
}

TEST(FirstOrderForm, ZeroRHasNoEigenvalues) {
  const SecondOrderProblem z{CoeffPath::zero(1, 1.0), antiperiodic_boundary(1), 1.0, 0.0};
  const auto ff = to_first_order(z);
  EXPECT_EQ(bvp_eigenvalues(ff.D0, ff.D, ff.boundary, 0.0, 50.0).count, 0);
}
