#pragma once

#include <cmath>

#include "types.hpp"

namespace hillkrein {

struct LogDet {
  Complex log{0.0, 0.0};  // log-modulus plus accumulated phase
  bool zero = false;
  Complex value() const { return zero ? Complex(0.0) : std::exp(log); }
};

// Determinant by partially pivoted LU, accumulated in log form so that large
// truncations neither overflow nor underflow.
inline LogDet log_determinant(const CMatrix& a) {
  LogDet out;
  if (a.rows() == 0) return out;
  Eigen::PartialPivLU<CMatrix> lu(a);
  const CMatrix& m = lu.matrixLU();
  double modulus = 0.0;
  double phase = lu.permutationP().determinant() < 0 ? kPi : 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const Complex u = m(i, i);
    if (u == Complex(0.0)) {
      out.zero = true;
      return out;
    }
    modulus += std::log(std::abs(u));
    phase += std::arg(u);
  }
  out.log = Complex(modulus, phase);
  return out;
}

inline Complex determinant(const CMatrix& a) { return log_determinant(a).value(); }

// Product of column norms: an upper bound for |det a| used to scale residuals.
inline double hadamard_scale(const CMatrix& a) {
  double s = 1.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) s *= a.col(j).norm();
  return s;
}

inline double rel_diff(Complex a, Complex b, double floor = 1e-300) {
  return std::abs(a - b) / std::max(std::abs(b), floor);
}

inline CMatrix to_complex(const RMatrix& m) { return m.cast<Complex>(); }

}  // namespace hillkrein
