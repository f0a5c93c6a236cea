#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace hillkrein;

TEST(Boundary, IdentityGivesFullKernel) {
  for (int n = 1; n <= 3; ++n) {
    const auto b = make_boundary(identity_boundary(n), 2.5);
    EXPECT_EQ(b.k0, n);
    EXPECT_NEAR(b.c_of_s, std::pow(2.5, -n), 1e-14);
    for (double th : b.thetas) EXPECT_EQ(th, 0.0);
  }
}

TEST(Boundary, AntiperiodicTwoByTwo) {
  const auto b = make_boundary(antiperiodic_boundary(2), 1.0);
  EXPECT_EQ(b.k0, 0);
  EXPECT_NEAR(b.c_of_s, 0.25, 1e-14);
  for (double th : b.thetas) EXPECT_NEAR(th, kPi, 1e-14);
}

TEST(Boundary, RotationConstant) {
  for (double th : {0.3, 1.0, 2.0 * kPi / 5.0, 3.0}) {
    const auto b = make_boundary(rotation_boundary(2, th), 1.0);
    EXPECT_EQ(b.k0, 0);
    EXPECT_NEAR(b.c_of_s, 1.0 / (2.0 - 2.0 * std::cos(th)), 1e-12);
  }
}

TEST(Boundary, DiagonalizesS) {
  const RMatrix s = oracle::random_orthogonal(4, 3);
  const auto b = make_boundary(s, 1.3);
  CMatrix d = CMatrix::Zero(4, 4);
  for (int j = 0; j < 4; ++j) d(j, j) = std::polar(1.0, -b.thetas[j]);
  EXPECT_LT((b.U.adjoint() * to_complex(s) * b.U - d).norm(), 1e-12);
  EXPECT_LT((b.U.adjoint() * b.U - CMatrix::Identity(4, 4)).norm(), 1e-12);
  for (std::size_t j = 1; j < b.thetas.size(); ++j) EXPECT_LE(b.thetas[j - 1], b.thetas[j]);
  const double det = (s - RMatrix::Identity(4, 4)).determinant();
  EXPECT_NEAR(b.c_of_s, 1.0 / det, 1e-10 * std::abs(1.0 / det));
}

TEST(Boundary, MixedKernel) {
  RMatrix s = RMatrix::Identity(3, 3);
  s.bottomRightCorner(2, 2) = rotation_boundary(2, 1.1);
  const auto b = make_boundary(s, 2.0);
  EXPECT_EQ(b.k0, 1);
  EXPECT_NEAR(b.c_of_s, 0.5 / (2.0 - 2.0 * std::cos(1.1)), 1e-12);
}

TEST(Boundary, RejectsBadInput) {
  RMatrix s(2, 2);
  s << 1.0, 0.1, 0.0, 1.0;
  EXPECT_THROW(make_boundary(s, 1.0), Error);
  try {
    make_boundary(s, 1.0);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotOrthogonal);
  }
  try {
    make_boundary(identity_boundary(2), 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPositivePeriod);
  }
}

TEST(Spectrum, PeriodicUnitCircle) {
  const auto b = make_boundary(identity_boundary(1), 2.0 * kPi);
  const auto modes = ddt_spectrum(b, 2.5);
  ASSERT_EQ(modes.size(), 5u);
  std::vector<double> mu;
  for (const auto& m : modes) mu.push_back(m.frequency);
  std::sort(mu.begin(), mu.end());
  for (int k = -2; k <= 2; ++k) EXPECT_NEAR(mu[static_cast<std::size_t>(k + 2)], k, 1e-12);
  EXPECT_TRUE(modes.front().kernel);
  EXPECT_EQ(std::count_if(modes.begin(), modes.end(), [](const DdtMode& m) { return m.kernel; }), 1);
}

TEST(Spectrum, AntiperiodicScalar) {
  const auto b = make_boundary(antiperiodic_boundary(1), 1.0);
  const auto modes = ddt_spectrum(b, 4.0 * kPi);
  ASSERT_EQ(modes.size(), 4u);
  std::vector<double> mu;
  for (const auto& m : modes) mu.push_back(m.frequency);
  std::sort(mu.begin(), mu.end());
  const double want[] = {-3 * kPi, -kPi, kPi, 3 * kPi};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(mu[static_cast<std::size_t>(i)], want[i], 1e-12);
}

TEST(Spectrum, CutoffIsSymmetric) {
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const auto b = make_boundary(oracle::random_orthogonal(3, seed), 0.7 + seed);
    for (double cut : {1.0, 7.3, 40.0}) EXPECT_TRUE(is_symmetric_cutoff(ddt_spectrum(b, cut)));
  }
}

TEST(Spectrum, ModesSatisfyBoundaryCondition) {
  const RMatrix s = rotation_boundary(2, 2.0 * kPi / 5.0);
  const auto b = make_boundary(s, 1.5);
  for (const auto& m : ddt_spectrum(b, 30.0)) {
    const CVector at0 = b.eigenfunction(m, 0.0), atT = b.eigenfunction(m, b.T);
    EXPECT_LT((at0 - to_complex(s) * atT).norm(), 1e-12);
    const double h = 1e-6;
    const CVector d = (b.eigenfunction(m, 0.5 + h) - b.eigenfunction(m, 0.5 - h)) / (2 * h);
    EXPECT_LT((d - m.eigenvalue() * b.eigenfunction(m, 0.5)).norm(), 1e-6 * (1 + std::abs(m.frequency)));
  }
}
