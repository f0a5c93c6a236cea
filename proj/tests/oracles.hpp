#pragma once

// Independent reference computations used only by the tests.

#include <cmath>
#include <functional>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include <hillkrein/hillkrein.hpp>

namespace oracle {

using hillkrein::CMatrix;
using hillkrein::Complex;
using hillkrein::CoeffPath;

inline CMatrix expm(const CMatrix& a) { return a.exp(); }

inline double rel(Complex a, Complex b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }
inline double rel(const CMatrix& a, const CMatrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

// Plain composite Gauss on [a, b] for matrix integrands.
inline CMatrix integrate(const std::function<CMatrix(double)>& f, double a, double b, int panels, int n) {
  const auto q = hillkrein::composite_gauss(a, b, panels, 16);
  CMatrix acc = CMatrix::Zero(n, n);
  for (std::size_t i = 0; i < q.nodes.size(); ++i) acc += q.weights[i] * f(q.nodes[i]);
  return acc;
}

// Dhat(t) = e^{-A0 t} D(t) e^{A0 t} for constant A0.
inline std::function<CMatrix(double)> conjugated(const CMatrix& a0, const CoeffPath& D) {
  return [a0, D](double t) { return CMatrix(expm(-a0 * t) * D(t) * expm(a0 * t)); };
}

inline CMatrix m1_nested(const CMatrix& a0, const CoeffPath& D, int panels = 8) {
  return integrate(conjugated(a0, D), 0.0, D.period(), panels, D.dim());
}

// int_0^T Dhat(t1) int_0^{t1} Dhat(t2) dt2 dt1
inline CMatrix m2_nested(const CMatrix& a0, const CoeffPath& D, int panels = 8) {
  const auto dh = conjugated(a0, D);
  const int n = D.dim();
  const double T = D.period();
  return integrate(
      [&](double t1) {
        const int p = std::max(1, static_cast<int>(std::ceil(panels * t1 / T)));
        return CMatrix(dh(t1) * integrate(dh, 0.0, t1, p, n));
      },
      0.0, T, panels, n);
}

// Sum over the antiperiodic lattice alpha = i pi (2k+1) / c, |k| <= K.
inline Complex antiperiodic_power_sum(double c, int m, int K) {
  Complex acc = 0.0;
  for (int k = -K - 1; k <= K; ++k) acc += 1.0 / std::pow(Complex(0.0, hillkrein::kPi * (2 * k + 1) / c), m);
  return acc;
}

inline hillkrein::RMatrix random_orthogonal(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  hillkrein::RMatrix a(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = 2.0 * hillkrein::unit_uniform(rng) - 1.0;
  Eigen::HouseholderQR<hillkrein::RMatrix> qr(a);
  return qr.householderQ();
}

}  // namespace oracle
