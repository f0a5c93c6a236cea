#pragma once

#include <optional>
#include <string>
#include <utility>

#include "boundary.hpp"
#include "coeff_path.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"

namespace hillkrein {

// y'' + lambda R(t) y = 0 with y(0) = S y(T), y'(0) = S y'(T); A(nu) = -(d/dt + nu)^2.
struct SecondOrderProblem {
  CoeffPath R;
  RMatrix S;
  double T = 1.0;
  Complex nu{0.0};

  int dim() const { return R.dim(); }
  Complex omega() const { return std::exp(nu * T); }
  CMatrix R_ave() const { return R.integral() / T; }
};

namespace detail {

inline unsigned quad_panels(const CoeffPath& p) { return static_cast<unsigned>(4 + 2 * p.bandwidth() + p.smooth_pieces() + p.poly_degree()); }

// int_0^T f(t) dt for a matrix-valued f.
template <class F>
CMatrix integrate_matrix(F&& f, double T, int panels, int n) {
  const auto q = composite_gauss(0.0, T, panels, 24);
  CMatrix acc = CMatrix::Zero(n, n);
  for (std::size_t i = 0; i < q.nodes.size(); ++i) acc += q.weights[i] * f(q.nodes[i]);
  return acc;
}

inline CMatrix s_minus_w_inverse(const RMatrix& S, Complex w) {
  const auto n = S.rows();
  const CMatrix a = to_complex(S) - w * CMatrix::Identity(n, n);
  const Eigen::JacobiSVD<CMatrix> svd(a);
  if (!(svd.singularValues()(n - 1) > 1e-14)) throw Error(ErrorCode::SingularShift, "omega is an eigenvalue of S");
  return a.inverse();
}

inline bool commutes(const CMatrix& a, const CMatrix& b, double tol = 1e-12) {
  return (a * b - b * a).norm() <= tol * (1.0 + a.norm() * b.norm());
}

}  // namespace detail

inline void validate(const SecondOrderProblem& p) {
  if (p.R.dim() != p.S.rows() || p.S.rows() != p.S.cols())
    throw Error(ErrorCode::DimensionMismatch, "R and S dimensions differ");
  if (!(p.T > 0.0)) throw Error(ErrorCode::NonPositivePeriod, "period must be positive");
  if (std::abs(p.R.period() - p.T) > 1e-14 * p.T) throw Error(ErrorCode::DimensionMismatch, "R period differs from T");
  if (orthogonality_defect(p.S) > 1e-10) throw Error(ErrorCode::NotOrthogonal, "S^T S != I");
  for (int i = 0; i <= 32; ++i) {
    const CMatrix r = p.R(p.T * i / 32.0);
    if ((r - r.transpose()).norm() > 1e-12 * (1.0 + r.norm()) || r.imag().norm() > 1e-12 * (1.0 + r.norm()))
      throw Error(ErrorCode::NotSymmetric, "R(t) must be real symmetric");
  }
}

// Returns a message when (S - omega)^{-1} is poorly conditioned.
inline std::optional<std::string> conditioning_warning(const SecondOrderProblem& p) {
  const CMatrix inv = detail::s_minus_w_inverse(p.S, p.omega());
  const Eigen::JacobiSVD<CMatrix> svd(inv);
  if (svd.singularValues()(0) > 1e8) return std::string("||(S - omega)^{-1}|| exceeds 1e8");
  return std::nullopt;
}

enum class XMode { x_ave_zero, custom };

struct XPath {
  CoeffPath X;  // X(t) = int_0^t (R - R_ave) + C
  CMatrix C;
  XMode mode = XMode::x_ave_zero;
};

inline XPath x_path(const SecondOrderProblem& p, XMode mode = XMode::x_ave_zero,
                    std::optional<CMatrix> c_custom = std::nullopt) {
  const int n = p.dim();
  const CMatrix rave = p.R_ave();
  // int_0^t (R - R_ave) as a path
  const CoeffPath base = p.R.antiderivative() + CoeffPath::poly({CMatrix::Zero(n, n), -rave}, p.T);
  XPath x;
  x.mode = mode;
  if (mode == XMode::custom) {
    if (!c_custom) throw Error(ErrorCode::InvalidArgument, "custom X needs a constant C");
    x.C = *c_custom;
  } else {
    x.C = -base.integral() / p.T;
  }
  x.X = base + CoeffPath::constant(x.C, p.T);
  return x;
}

struct XIntegrals {
  CMatrix int_x;     // int X
  CMatrix int_x2;    // int X^2
  CMatrix int_xyx;   // int_0^T X(t) int_0^t X(s) ds dt
};

inline XIntegrals x_integrals(const XPath& x) {
  const int n = x.X.dim();
  const double T = x.X.period();
  const int panels = static_cast<int>(detail::quad_panels(x.X));
  const CoeffPath y = x.X.antiderivative();
  XIntegrals r;
  r.int_x = x.X.integral();
  r.int_x2 = detail::integrate_matrix([&](double t) { const CMatrix v = x.X(t); return CMatrix(v * v); }, T, panels, n);
  r.int_xyx = detail::integrate_matrix([&](double t) { return CMatrix(x.X(t) * y(t)); }, T, panels, n);
  return r;
}

// Tr(R A(nu)^{-1}) = -omega T^2 Tr(R_ave S (S - omega)^{-2})
inline Complex trace_RAinv(const SecondOrderProblem& p) {
  const CMatrix inv = detail::s_minus_w_inverse(p.S, p.omega());
  return -p.omega() * p.T * p.T * (p.R_ave() * to_complex(p.S) * inv * inv).trace();
}

// (omega T^4 / 6) Tr(A S (S^2 + 4 omega S + omega^2)(S - omega)^{-4}) for a constant A.
inline Complex quartic_term(const CMatrix& a, const RMatrix& S, Complex w, double T) {
  const auto n = S.rows();
  const CMatrix s = to_complex(S);
  const CMatrix inv = detail::s_minus_w_inverse(S, w);
  const CMatrix inv2 = inv * inv;
  const CMatrix poly = s * s + 4.0 * w * s + w * w * CMatrix::Identity(n, n);
  return w * std::pow(T, 4) / 6.0 * (a * s * poly * inv2 * inv2).trace();
}

// Tr(R A(nu)^{-2}); exactly zero when int R = 0.
inline Complex trace_RAinv2(const SecondOrderProblem& p) {
  const CMatrix total = p.R.integral();
  if (total.cwiseAbs().maxCoeff() <= 1e-15 * p.T) return 0.0;
  return quartic_term(p.R_ave(), p.S, p.omega(), p.T);
}

// Tr[((R - R_ave) A(nu)^{-1})^2] with any C commuting with S.
inline Complex trace_centered_sq(const SecondOrderProblem& p, const XPath& x) {
  const CMatrix s = to_complex(p.S);
  if (!detail::commutes(x.C, s)) throw Error(ErrorCode::NonCommutingC, "C must commute with S");
  const Complex w = p.omega();
  const CMatrix inv = detail::s_minus_w_inverse(p.S, w);
  const CMatrix q1 = s * inv;
  const CMatrix q2 = s * inv * inv;
  const XIntegrals xi = x_integrals(x);
  const CMatrix a = xi.int_x * q1;
  return -2.0 * w * (p.T * xi.int_x2 * q2).trace() + 2.0 * (a * a).trace() - 4.0 * (xi.int_xyx * q1).trace();
}

// Tr((R A(nu)^{-1})^2) when R_ave commutes with S.
inline Complex trace_full_sq(const SecondOrderProblem& p, const XPath& x) {
  const CMatrix s = to_complex(p.S);
  const CMatrix rave = p.R_ave();
  if (!detail::commutes(rave, s)) throw Error(ErrorCode::NonCommutingAverage, "R_ave must commute with S");
  return quartic_term(rave * rave, p.S, p.omega(), p.T) + trace_centered_sq(p, x);
}

// S = sI (s = +-1), int X = 0:
// s(1 + 4 s w + w^2) w T^2 / (6 (1 - s w)^4) Tr[(int R)^2] - 2 s w T / (1 - s w)^2 int Tr X^2
inline Complex trace_full_sq_scalar_boundary(const SecondOrderProblem& p, const XPath& x) {
  const int n = p.dim();
  double s = 0.0;
  if ((p.S - RMatrix::Identity(n, n)).norm() <= 1e-14) s = 1.0;
  else if ((p.S + RMatrix::Identity(n, n)).norm() <= 1e-14) s = -1.0;
  else throw Error(ErrorCode::InvalidArgument, "corollary needs S = +-I");
  const XIntegrals xi = x_integrals(x);
  if (xi.int_x.norm() > 1e-10 * (1.0 + xi.int_x2.norm()))
    throw Error(ErrorCode::InvalidArgument, "corollary needs int X = 0");
  const Complex w = p.omega();
  const Complex d = 1.0 - s * w;
  if (std::abs(d) < 1e-14) throw Error(ErrorCode::SingularShift, "omega is an eigenvalue of S");
  const CMatrix ir = p.R.integral();
  return s * (1.0 + 4.0 * s * w + w * w) * w * p.T * p.T / (6.0 * std::pow(d, 4)) * (ir * ir).trace() -
         2.0 * s * w * p.T / (d * d) * xi.int_x2.trace();
}

struct KreinClassics {
  Complex sum1{0.0};
  Complex sum2{0.0};
};

// Classical sums of 1/lambda_j and 1/lambda_j^2 for S = -I, nu = 0.
inline KreinClassics krein_classics(const SecondOrderProblem& p) {
  const int n = p.dim();
  if ((p.S + RMatrix::Identity(n, n)).norm() > 1e-14 || p.nu != Complex(0.0))
    throw Error(ErrorCode::InvalidArgument, "the classical sums need S = -I and nu = 0");
  const XPath x = x_path(p);
  const XIntegrals xi = x_integrals(x);
  const CMatrix ir = p.R.integral();
  return {p.T / 4.0 * p.R.trace_integral(), p.T / 2.0 * xi.int_x2.trace() + p.T * p.T / 48.0 * (ir * ir).trace()};
}

// Independent value of Tr[(W A(nu)^{-1})^2] from the kernel of (d/dt + nu)^{-2}:
// e^{-nu(t-s)} [c^2 T + c (t + T - s) + (t - s)_+], c = (I - S/omega)^{-1} S/omega.
inline Complex second_order_square_oracle(const CoeffPath& W, const RMatrix& S, double T, Complex nu,
                                          int panels = 0, unsigned order = 24) {
  const int n = W.dim();
  const Complex w = std::exp(nu * T);
  const CMatrix sw = to_complex(S) / w;
  const CMatrix I = CMatrix::Identity(n, n);
  const CMatrix c = (I - sw).partialPivLu().solve(sw);
  const CMatrix c2T = c * c * T;
  auto kern = [&](double t, double s) -> CMatrix {
    CMatrix k = c2T + c * (t + T - s);
    if (t > s) k += (t - s) * I;
    return k;
  };
  if (panels <= 0) panels = 2 + W.bandwidth() + W.smooth_pieces();
  const auto outer = composite_gauss(0.0, T, panels, order);
  const long count = static_cast<long>(outer.nodes.size());
  std::vector<Complex> part(static_cast<std::size_t>(count));
  parallel_chunks(count, [&](long b, long e) {
    for (long i = b; i < e; ++i) {
      const double t = outer.nodes[static_cast<std::size_t>(i)];
      const CMatrix wt = W(t);
      const auto inner = composite_gauss(0.0, t, std::max(1, static_cast<int>(std::ceil(panels * t / T))), order);
      Complex acc = 0.0;
      for (std::size_t j = 0; j < inner.nodes.size(); ++j) {
        const double s = inner.nodes[j];
        // (t, s) with s < t and its mirror (s, t); both orderings of the pair
        acc += inner.weights[j] * (wt * kern(t, s) * W(s) * kern(s, t)).trace() * 2.0;
      }
      part[static_cast<std::size_t>(i)] = outer.weights[static_cast<std::size_t>(i)] * acc;
    }
  });
  Complex total = 0.0;
  for (const auto& v : part) total += v;
  return total;
}

struct FirstOrderForm {
  CoeffPath D0;
  CoeffPath D;
  BoundaryData boundary;
};

// -(d/dt + nu)^2 y = lambda R y with z = (y, (d/dt + nu) y): z' = (D0 + lambda D) z,
// D0 = [[-nu, I], [0, -nu]], D = [[0, 0], [-R, 0]], boundary S (+) S.
inline FirstOrderForm to_first_order(const SecondOrderProblem& p) {
  const int n = p.dim();
  CMatrix d0 = -p.nu * CMatrix::Identity(2 * n, 2 * n);
  d0.topRightCorner(n, n).setIdentity();
  RMatrix s2 = RMatrix::Zero(2 * n, 2 * n);
  s2.topLeftCorner(n, n) = p.S;
  s2.bottomRightCorner(n, n) = p.S;
  return {CoeffPath::constant(d0, p.T), (-1.0 * p.R).embedded(2 * n, n, 0), make_boundary(s2, p.T)};
}

}  // namespace hillkrein
