#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>

#include "error.hpp"
#include "linalg.hpp"
#include "types.hpp"

namespace hillkrein {

inline constexpr double kThetaZero = 1e-10;

// One eigenmode of d/dt under x(0) = S x(T): phi(t) = e^{i mu t} U e_branch / sqrt(T),
// mu = (theta_branch + 2 pi winding) / T, and d/dt phi = i mu phi.
struct DdtMode {
  int branch = 0;  // 0-based column of U
  int winding = 0;
  double frequency = 0.0;
  bool kernel = false;  // mu == 0, i.e. branch in ker(S - I) and winding 0

  Complex eigenvalue() const { return {0.0, frequency}; }
};

struct BoundaryData {
  RMatrix S;
  double T = 1.0;
  CMatrix U;                  // U^* S U = diag(e^{-i theta_j})
  std::vector<double> thetas;  // ascending in [0, 2 pi), kernel angles exactly 0
  int k0 = 0;
  double c_of_s = 1.0;
  double abs_c_of_s = 1.0;

  int dim() const { return static_cast<int>(S.rows()); }

  CVector eigenfunction(const DdtMode& m, double t) const {
    return std::polar(1.0 / std::sqrt(T), m.frequency * t) * U.col(m.branch);
  }
};

inline double orthogonality_defect(const RMatrix& S) {
  return (S.transpose() * S - RMatrix::Identity(S.rows(), S.cols())).norm();
}

inline BoundaryData make_boundary(const RMatrix& S, double T) {
  if (S.rows() < 1 || S.rows() != S.cols())
    throw Error(ErrorCode::DimensionMismatch, "boundary matrix must be square and non-empty");
  if (!(T > 0.0)) throw Error(ErrorCode::NonPositivePeriod, "period must be positive");
  if (orthogonality_defect(S) > 1e-10) throw Error(ErrorCode::NotOrthogonal, "S^T S != I");

  const int n = static_cast<int>(S.rows());
  Eigen::ComplexSchur<CMatrix> schur(to_complex(S));
  const CMatrix& tri = schur.matrixT();
  const CMatrix& q = schur.matrixU();

  std::vector<double> raw(n);
  for (int j = 0; j < n; ++j) {
    double th = -std::arg(tri(j, j));
    if (th < 0.0) th += 2.0 * kPi;
    if (th < kThetaZero || 2.0 * kPi - th < kThetaZero) th = 0.0;
    raw[j] = th;
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return raw[a] < raw[b]; });

  BoundaryData b;
  b.S = S;
  b.T = T;
  b.U.resize(n, n);
  for (int j = 0; j < n; ++j) {
    b.U.col(j) = q.col(order[j]);
    b.thetas.push_back(raw[order[j]]);
    if (raw[order[j]] == 0.0) ++b.k0;
  }

  Complex c = std::pow(T, -b.k0);
  for (int j = b.k0; j < n; ++j) c /= std::polar(1.0, -b.thetas[j]) - 1.0;
  if (std::abs(c.imag()) > 1e-10 * std::max(1.0, std::abs(c)))
    throw Error(ErrorCode::InvalidArgument, "C(S) is not real");
  b.c_of_s = c.real();
  b.abs_c_of_s = std::abs(c.real());
  return b;
}

inline RMatrix identity_boundary(int n) { return RMatrix::Identity(n, n); }

inline RMatrix antiperiodic_boundary(int n) { return -RMatrix::Identity(n, n); }

// Rotation by angle in the (0, 1) coordinate plane; identity elsewhere.
inline RMatrix rotation_boundary(int n, double angle) {
  if (n < 2) throw Error(ErrorCode::DimensionMismatch, "rotation needs n >= 2");
  RMatrix s = RMatrix::Identity(n, n);
  s(0, 0) = std::cos(angle);
  s(0, 1) = -std::sin(angle);
  s(1, 0) = std::sin(angle);
  s(1, 1) = std::cos(angle);
  return s;
}

// All modes with |mu| <= cutoff, ordered by |mu|, then branch, then winding.
inline std::vector<DdtMode> ddt_spectrum(const BoundaryData& b, double cutoff) {
  if (!(cutoff > 0.0)) throw Error(ErrorCode::InvalidArgument, "cutoff must be positive");
  const double lim = cutoff * (1.0 + 1e-12);
  const double step = 2.0 * kPi / b.T;
  std::vector<DdtMode> modes;
  for (int j = 0; j < b.dim(); ++j) {
    const double base = b.thetas[j] / b.T;
    const int kmin = static_cast<int>(std::ceil((-lim - base) / step));
    const int kmax = static_cast<int>(std::floor((lim - base) / step));
    for (int k = kmin; k <= kmax; ++k) {
      const double mu = base + k * step;
      if (std::abs(mu) > lim) continue;
      modes.push_back({j, k, mu, j < b.k0 && k == 0});
    }
  }
  std::sort(modes.begin(), modes.end(), [](const DdtMode& x, const DdtMode& y) {
    const double ax = std::abs(x.frequency), ay = std::abs(y.frequency);
    if (ax != ay) return ax < ay;
    if (x.branch != y.branch) return x.branch < y.branch;
    return x.winding < y.winding;
  });
  return modes;
}

// True when the frequency multiset is closed under mu -> -mu.
inline bool is_symmetric_cutoff(const std::vector<DdtMode>& modes, double tol = 1e-9) {
  std::vector<double> a, b;
  double scale = 1.0;
  for (const auto& m : modes) {
    a.push_back(m.frequency);
    b.push_back(-m.frequency);
    scale = std::max(scale, std::abs(m.frequency));
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > tol * scale) return false;
  return true;
}

}  // namespace hillkrein
