#pragma once

#include <vector>

#include "boundary.hpp"
#include "coeff_path.hpp"
#include "dopri.hpp"
#include "linalg.hpp"

namespace hillkrein {

struct FlowOptions {
  OdeTolerance tol{};
  bool with_inverse = true;  // integrate Y' = -Y D alongside for gamma^{-1}
  bool dense = true;
  double t_begin = 0.0;
  double t_end = -1.0;  // negative: period of the path
};

namespace detail {

inline Eigen::Map<const CMatrix> block(const CVector& y, int n, int k) {
  return {y.data() + static_cast<Eigen::Index>(k) * n * n, n, n};
}
inline Eigen::Map<CMatrix> block(CVector& y, int n, int k) {
  return {y.data() + static_cast<Eigen::Index>(k) * n * n, n, n};
}

}  // namespace detail

// Fundamental solution gamma' = D gamma, gamma(t_begin) = I.
class Flow {
 public:
  const CoeffPath& source() const { return source_; }
  int dim() const { return n_; }
  double t_begin() const { return t_begin_; }
  double t_end() const { return t_end_; }
  const OdeTolerance& tol() const { return tol_; }
  bool has_inverse() const { return with_inverse_; }
  const std::vector<double>& checkpoints() const { return sol_.grid(); }
  int steps() const { return sol_.steps(); }

  CMatrix gamma(double t) const { return detail::block(sol_(t), n_, 0); }

  CMatrix gamma_inverse(double t) const {
    if (!with_inverse_) return gamma(t).inverse();
    return detail::block(sol_(t), n_, 1);
  }

  CMatrix monodromy_raw() const { return detail::block(sol_.final_state(), n_, 0); }

  CMatrix monodromy_raw_inverse() const {
    if (!with_inverse_) return monodromy_raw().inverse();
    return detail::block(sol_.final_state(), n_, 1);
  }

  // |det gamma(t_end) / exp(int Tr D)| - 1, relative.
  double liouville_defect() const {
    const Complex expected = std::exp(trace_integral());
    const Complex got = determinant(monodromy_raw());
    return std::abs(got - expected) / std::abs(expected);
  }

  Complex trace_integral() const {
    if (t_begin_ == 0.0 && t_end_ == source_.period()) return source_.trace_integral();
    const auto q = composite_gauss(t_begin_, t_end_, 16 + 4 * source_.smooth_pieces(), 20);
    Complex acc = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) acc += q.weights[i] * source_(q.nodes[i]).trace();
    return acc;
  }

 private:
  friend Flow fundamental_solution(const CoeffPath& D, const FlowOptions& opt);

  CoeffPath source_;
  int n_ = 1;
  double t_begin_ = 0.0, t_end_ = 1.0;
  OdeTolerance tol_{};
  bool with_inverse_ = true;
  DenseSolution sol_;
};

inline Flow fundamental_solution(const CoeffPath& D, const FlowOptions& opt = {}) {
  Flow fl;
  fl.source_ = D;
  fl.n_ = D.dim();
  fl.t_begin_ = opt.t_begin;
  fl.t_end_ = opt.t_end < 0.0 ? D.period() : opt.t_end;
  fl.tol_ = opt.tol;
  fl.with_inverse_ = opt.with_inverse;
  const int n = fl.n_;
  const int blocks = opt.with_inverse ? 2 : 1;
  CVector y0 = CVector::Zero(static_cast<Eigen::Index>(blocks) * n * n);
  for (int k = 0; k < blocks; ++k) detail::block(y0, n, k).setIdentity();
  CMatrix d(n, n);
  auto rhs = [&](double t, const CVector& y, CVector& dy) {
    d.setZero();
    D.add_to(d, t, 1.0);
    detail::block(dy, n, 0).noalias() = d * detail::block(y, n, 0);
    if (blocks == 2) detail::block(dy, n, 1).noalias() = -detail::block(y, n, 1) * d;
  };
  fl.sol_ = integrate_dopri5(rhs, fl.t_begin_, fl.t_end_, y0, opt.tol, opt.dense);
  return fl;
}

inline Flow fundamental_solution(const CoeffPath& D, OdeTolerance tol) {
  FlowOptions o;
  o.tol = tol;
  return fundamental_solution(D, o);
}

inline CMatrix monodromy(const Flow& flow, const BoundaryData& b) {
  if (flow.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "flow and boundary dimensions differ");
  return to_complex(b.S) * flow.monodromy_raw();
}

struct IteratedIntegrals {
  int K = 0;
  std::vector<CMatrix> Ms;  // Ms[k-1] = M_k
  Flow base_flow;

  const CMatrix& M(int k) const { return Ms.at(static_cast<std::size_t>(k - 1)); }
};

// M_k = int_{0<t_k<...<t_1<T} Dhat(t_1) ... Dhat(t_k), Dhat = gamma0^{-1} D gamma0,
// from one augmented solve: Gamma_k' = Dhat Gamma_{k-1}, Gamma_0 = I.
inline IteratedIntegrals iterated_integrals(const Flow& flow0, const CoeffPath& D, int K) {
  if (K < 1) throw Error(ErrorCode::InvalidArgument, "K must be >= 1");
  const CoeffPath& D0 = flow0.source();
  if (D.dim() != D0.dim()) throw Error(ErrorCode::DimensionMismatch, "D and D0 dimensions differ");
  const int n = D.dim();
  const int blocks = 2 + K;
  CVector y0 = CVector::Zero(static_cast<Eigen::Index>(blocks) * n * n);
  detail::block(y0, n, 0).setIdentity();
  detail::block(y0, n, 1).setIdentity();
  CMatrix d0(n, n), d(n, n), dhat(n, n);
  auto rhs = [&](double t, const CVector& y, CVector& dy) {
    d0.setZero();
    D0.add_to(d0, t, 1.0);
    d.setZero();
    D.add_to(d, t, 1.0);
    const auto g = detail::block(y, n, 0);
    const auto yinv = detail::block(y, n, 1);
    detail::block(dy, n, 0).noalias() = d0 * g;
    detail::block(dy, n, 1).noalias() = -yinv * d0;
    dhat.noalias() = yinv * (d * g);
    detail::block(dy, n, 2) = dhat;
    for (int k = 2; k <= K; ++k) detail::block(dy, n, k + 1).noalias() = dhat * detail::block(y, n, k);
  };
  const auto sol = integrate_dopri5(rhs, 0.0, D.period(), y0, flow0.tol(), false);
  IteratedIntegrals out;
  out.K = K;
  out.base_flow = flow0;
  for (int k = 1; k <= K; ++k) out.Ms.emplace_back(detail::block(sol.final_state(), n, k + 1));
  return out;
}

// Resolvent kernel of d/dt - D0 + nu under z(0) = S z(T):
// K(t,s) = gamma(t) [C + [s<t] I] gamma(s)^{-1}, gamma(t) = e^{-nu t} gamma0(t),
// C = (I - S gamma(T))^{-1} S gamma(T).
class GreenKernel {
 public:
  GreenKernel(Flow flow0, Complex nu, CMatrix c) : flow_(std::move(flow0)), nu_(nu), c_(std::move(c)) {}

  const CMatrix& jump_constant() const { return c_; }
  const Flow& flow() const { return flow_; }
  Complex nu() const { return nu_; }

  CMatrix operator()(double t, double s) const {
    CMatrix mid = c_;
    if (s < t) mid += CMatrix::Identity(c_.rows(), c_.cols());
    return std::exp(-nu_ * (t - s)) * flow_.gamma(t) * mid * flow_.gamma_inverse(s);
  }

 private:
  Flow flow_;
  Complex nu_;
  CMatrix c_;
};

inline CMatrix boundary_jump_constant(const CMatrix& sg) {
  const int n = static_cast<int>(sg.rows());
  const CMatrix a = CMatrix::Identity(n, n) - sg;
  Eigen::FullPivLU<CMatrix> lu(a);
  const Eigen::JacobiSVD<CMatrix> svd(a);
  const double smin = svd.singularValues()(n - 1);
  if (!(smin > 1e-12)) throw Error(ErrorCode::SingularBoundary, "I - S gamma(T) is singular");
  return lu.solve(sg);
}

inline GreenKernel green_kernel(const Flow& flow0, const BoundaryData& b, Complex nu) {
  if (flow0.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "flow and boundary dimensions differ");
  const CMatrix sg = std::exp(-nu * b.T) * monodromy(flow0, b);
  return GreenKernel(flow0, nu, boundary_jump_constant(sg));
}

}  // namespace hillkrein
