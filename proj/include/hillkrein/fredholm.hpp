#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "boundary.hpp"
#include "coeff_path.hpp"
#include "linalg.hpp"
#include "parallel.hpp"
#include "propagator.hpp"

namespace hillkrein {

struct AssemblyOptions {
  unsigned quad_order = 20;
  int min_panels = 0;
  int threads = 0;  // 0: hardware concurrency
};

namespace detail {

// (1/T) int_0^T e^{i w t} dt with x = w T.
inline Complex mean_exp(double x) {
  if (x == 0.0) return 1.0;
  const double s = std::sin(0.5 * x);
  return {std::sin(x) / x, 2.0 * s * s / x};
}

}  // namespace detail

// Table of c_ab(p) = (1/T) int e^{i(Delta_ab + 2 pi p / T) t} u_b^* D(t) u_a dt,
// Delta_ab = (theta_a - theta_b) / T, for |p| <= max_gap. Then
// <D phi_k, phi_l> = c_{branch k, branch l}(winding k - winding l).
class MatrixElements {
 public:
  MatrixElements(const CoeffPath& D, const BoundaryData& b, int max_gap, const AssemblyOptions& opt = {})
      : n_(b.dim()), P_(std::max(0, max_gap)) {
    if (D.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "path and boundary dimensions differ");
    table_.assign(static_cast<std::size_t>(n_) * n_ * (2 * P_ + 1), Complex(0.0));
    if (D.is_zero()) return;
    if (auto series = D.exponential_series()) fill_exact(*series, b);
    else fill_quadrature(D, b, opt);
  }

  int max_gap() const { return P_; }

  Complex entry(int a, int bb, int p) const {
    if (std::abs(p) > P_) throw Error(ErrorCode::InvalidArgument, "winding gap outside table");
    return table_[index(a, bb, p)];
  }

  Complex operator()(const DdtMode& k, const DdtMode& l) const {
    return entry(k.branch, l.branch, k.winding - l.winding);
  }

  // Dense matrix M(l, k) = <D phi_k, phi_l> over the given modes.
  CMatrix matrix(const std::vector<DdtMode>& modes) const {
    const auto d = static_cast<Eigen::Index>(modes.size());
    CMatrix m(d, d);
    for (Eigen::Index k = 0; k < d; ++k)
      for (Eigen::Index l = 0; l < d; ++l) m(l, k) = (*this)(modes[k], modes[l]);
    return m;
  }

 private:
  std::size_t index(int a, int bb, int p) const {
    return (static_cast<std::size_t>(a) * n_ + bb) * (2 * P_ + 1) + static_cast<std::size_t>(p + P_);
  }

  void fill_exact(const std::map<int, CMatrix>& series, const BoundaryData& b) {
    const CMatrix Uh = b.U.adjoint();
    for (const auto& [m, E] : series) {
      const CMatrix Eh = Uh * E * b.U;  // Eh(bb, a) = u_bb^* E u_a
      for (int a = 0; a < n_; ++a)
        for (int bb = 0; bb < n_; ++bb) {
          const double dth = b.thetas[a] - b.thetas[bb];
          for (int p = -P_; p <= P_; ++p) {
            Complex e;
            if (dth == 0.0) e = (p + m == 0) ? 1.0 : 0.0;
            else e = detail::mean_exp(dth + 2.0 * kPi * (p + m));
            if (e != Complex(0.0)) table_[index(a, bb, p)] += Eh(bb, a) * e;
          }
        }
    }
  }

  void fill_quadrature(const CoeffPath& D, const BoundaryData& b, const AssemblyOptions& opt) {
    const double T = b.T;
    const double wmax = 2.0 * kPi + 2.0 * kPi * (P_ + D.bandwidth()) + 4.0 * D.poly_degree();
    int panels = static_cast<int>(std::ceil(wmax / 4.0)) + 2;
    panels = std::max(panels, opt.min_panels);
    const int pieces = D.smooth_pieces();
    if (pieces > 1) panels = ((panels + pieces - 1) / pieces) * pieces;
    const auto q = composite_gauss(0.0, T, panels, opt.quad_order);
    const std::size_t nq = q.nodes.size();
    const int nn = n_ * n_;
    // h(ab, q) = w_q u_b^* D(t_q) u_a e^{i Delta_ab t_q} / T
    std::vector<Complex> h(nq * nn);
    const CMatrix Uh = b.U.adjoint();
    parallel_chunks(static_cast<long>(nq), [&](long s, long e) {
      for (long i = s; i < e; ++i) {
        const double t = q.nodes[i];
        const CMatrix g = Uh * D(t) * b.U;
        for (int a = 0; a < n_; ++a)
          for (int bb = 0; bb < n_; ++bb) {
            const double dl = (b.thetas[a] - b.thetas[bb]) / T;
            h[i * nn + a * n_ + bb] = (q.weights[i] / T) * g(bb, a) * std::polar(1.0, dl * t);
          }
      }
    }, opt.threads);
    const int np = 2 * P_ + 1;
    parallel_chunks(np, [&](long s, long e) {
      std::vector<Complex> acc(static_cast<std::size_t>((e - s) * nn), Complex(0.0));
      for (std::size_t i = 0; i < nq; ++i) {
        const double t = q.nodes[i];
        const double w = 2.0 * kPi * t / T;
        const Complex step = std::polar(1.0, w);
        Complex z;
        for (long p = s; p < e; ++p) {
          if ((p - s) % 64 == 0) z = std::polar(1.0, w * static_cast<double>(p - P_));
          const Complex* hi = &h[i * nn];
          Complex* out = &acc[static_cast<std::size_t>((p - s) * nn)];
          for (int ab = 0; ab < nn; ++ab) out[ab] += hi[ab] * z;
          z *= step;
        }
      }
      for (long p = s; p < e; ++p)
        for (int a = 0; a < n_; ++a)
          for (int bb = 0; bb < n_; ++bb)
            table_[index(a, bb, static_cast<int>(p) - P_)] = acc[static_cast<std::size_t>((p - s) * nn + a * n_ + bb)];
    }, opt.threads);
  }

  int n_;
  int P_;
  std::vector<Complex> table_;
};

inline int max_winding_gap(const std::vector<DdtMode>& modes) {
  if (modes.empty()) return 0;
  int lo = modes[0].winding, hi = modes[0].winding;
  for (const auto& m : modes) {
    lo = std::min(lo, m.winding);
    hi = std::max(hi, m.winding);
  }
  return hi - lo;
}

// <D phi_k, phi_l>.
inline Complex fourier_entry(const CoeffPath& D, const BoundaryData& b, const DdtMode& mode_k,
                             const DdtMode& mode_l) {
  return MatrixElements(D, b, std::abs(mode_k.winding - mode_l.winding))(mode_k, mode_l);
}

enum class OperatorKind {
  resolvent_base,        // (D + P0 - nu)(d/dt + P0)^{-1}
  multiplier_resolvent,  // D (d/dt + P0)^{-1}
  f_operator,            // D (d/dt - D0 + nu)^{-1}
};

inline std::string to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::resolvent_base: return "resolvent_base";
    case OperatorKind::multiplier_resolvent: return "multiplier_resolvent";
    case OperatorKind::f_operator: return "f_operator";
  }
  return "?";
}

struct OperatorSpec {
  OperatorKind kind = OperatorKind::resolvent_base;
  CoeffPath D;
  CoeffPath D0;
  Complex nu{0.0};

  static OperatorSpec resolvent_base(const CoeffPath& D, Complex nu) {
    return {OperatorKind::resolvent_base, D, CoeffPath::zero(D.dim(), D.period()), nu};
  }
  static OperatorSpec multiplier(const CoeffPath& D) {
    return {OperatorKind::multiplier_resolvent, D, CoeffPath::zero(D.dim(), D.period()), 0.0};
  }
  static OperatorSpec f_operator(const CoeffPath& D0, const CoeffPath& D, Complex nu) {
    return {OperatorKind::f_operator, D, D0, nu};
  }
};

struct TruncatedOperator {
  std::vector<DdtMode> modes;
  CMatrix matrix;
  OperatorKind kind = OperatorKind::resolvent_base;
  std::string meta;
  double cutoff = 0.0;

  Eigen::Index size() const { return matrix.rows(); }
};

namespace detail {

inline void check_f_hypothesis(const OperatorSpec& spec, const BoundaryData& b) {
  if (spec.D0.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "D0 and boundary dimensions differ");
  FlowOptions fo;
  fo.with_inverse = false;
  fo.dense = false;
  const Flow f0 = fundamental_solution(spec.D0, fo);
  const CMatrix a = std::exp(-spec.nu * b.T) * monodromy(f0, b) - CMatrix::Identity(b.dim(), b.dim());
  if (std::abs(determinant(a)) <= 1e-12 * std::max(hadamard_scale(a), 1e-300))
    throw Error(ErrorCode::SingularShift, "d/dt - D0 + nu is not invertible");
}

inline CMatrix finish_matrix(const OperatorSpec& spec, const std::vector<DdtMode>& modes, const CMatrix& dm,
                             const CMatrix* d0m) {
  const auto d = static_cast<Eigen::Index>(modes.size());
  CMatrix out(d, d);
  switch (spec.kind) {
    case OperatorKind::resolvent_base:
    case OperatorKind::multiplier_resolvent:
      for (Eigen::Index k = 0; k < d; ++k) {
        const double delta = modes[k].kernel ? 1.0 : 0.0;
        const Complex den = modes[k].eigenvalue() + delta;
        out.col(k) = dm.col(k) / den;
        if (spec.kind == OperatorKind::resolvent_base) out(k, k) += (delta - spec.nu) / den;
      }
      return out;
    case OperatorKind::f_operator: {
      CMatrix bm = -*d0m;
      for (Eigen::Index k = 0; k < d; ++k) bm(k, k) += modes[k].eigenvalue() + spec.nu;
      Eigen::PartialPivLU<CMatrix> lu(bm.transpose());
      if (d > 0 && !(lu.rcond() > 1e-13))
        throw Error(ErrorCode::SingularTruncation, "truncated d/dt - D0 + nu block is singular");
      return lu.solve(dm.transpose()).transpose();
    }
  }
  return out;
}

}  // namespace detail

// Assembles the operator at each cutoff of an ascending schedule. Matrix
// elements are computed once at the largest cutoff; the mode ordering makes
// every smaller truncation a leading block.
inline std::vector<TruncatedOperator> assemble_schedule(const OperatorSpec& spec, const BoundaryData& b,
                                                        const std::vector<double>& schedule,
                                                        const AssemblyOptions& opt = {}) {
  if (schedule.empty()) throw Error(ErrorCode::InvalidArgument, "empty cutoff schedule");
  for (std::size_t i = 1; i < schedule.size(); ++i)
    if (!(schedule[i] > schedule[i - 1])) throw Error(ErrorCode::InvalidArgument, "schedule must increase");
  if (spec.D.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "path and boundary dimensions differ");
  if (spec.kind == OperatorKind::f_operator) detail::check_f_hypothesis(spec, b);

  const auto all = ddt_spectrum(b, schedule.back());
  const int gap = max_winding_gap(all);
  const CMatrix dm_all = MatrixElements(spec.D, b, gap, opt).matrix(all);
  CMatrix d0m_all;
  if (spec.kind == OperatorKind::f_operator) d0m_all = MatrixElements(spec.D0, b, gap, opt).matrix(all);

  std::vector<TruncatedOperator> out;
  for (double cut : schedule) {
    TruncatedOperator op;
    op.kind = spec.kind;
    op.cutoff = cut;
    op.modes = ddt_spectrum(b, cut);
    const auto d = static_cast<Eigen::Index>(op.modes.size());
    const CMatrix dm = dm_all.topLeftCorner(d, d);
    CMatrix d0m;
    if (spec.kind == OperatorKind::f_operator) d0m = d0m_all.topLeftCorner(d, d);
    op.matrix = detail::finish_matrix(spec, op.modes, dm, spec.kind == OperatorKind::f_operator ? &d0m : nullptr);
    op.meta = to_string(spec.kind) + " d=" + std::to_string(d) + " D:" + spec.D.kind_name();
    out.push_back(std::move(op));
  }
  return out;
}

inline TruncatedOperator assemble(const OperatorSpec& spec, const BoundaryData& b, double cutoff,
                                  const AssemblyOptions& opt = {}) {
  return std::move(assemble_schedule(spec, b, {cutoff}, opt).front());
}

// Closed form of the conditional trace of D (d/dt + P0)^{-1}:
// (1/T) sum_{j<=k0} int Dhat_jj - (i/2) sum_{j>k0} cot(theta_j/2) int Dhat_jj.
inline Complex conditional_trace_closed(const CoeffPath& D, const BoundaryData& b) {
  if (D.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "path and boundary dimensions differ");
  if (D.is_zero()) return 0.0;
  const CMatrix dh = b.U.adjoint() * D.integral() * b.U;
  Complex out = 0.0;
  for (int j = 0; j < b.dim(); ++j) {
    if (j < b.k0) {
      out += dh(j, j) / b.T;
    } else {
      const double th = b.thetas[j];
      if (th == kPi) continue;
      const double cot = std::cos(0.5 * th) / std::sin(0.5 * th);
      out += Complex(0.0, -0.5 * cot) * dh(j, j);
    }
  }
  return out;
}

inline Complex conditional_trace_truncated(const TruncatedOperator& top) {
  if (top.kind != OperatorKind::multiplier_resolvent)
    throw Error(ErrorCode::InvalidArgument, "expected a D (d/dt + P0)^{-1} truncation");
  if (!is_symmetric_cutoff(top.modes)) throw Error(ErrorCode::AsymmetricCutoff, "mode set is not symmetric");
  return top.matrix.trace();
}

// Tr(F^m), splitting the power so that only one product is formed when m <= 4.
inline Complex power_trace(const CMatrix& f, int m) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "power must be >= 1");
  if (m == 1) return f.trace();
  const int lo = m / 2, hi = m - lo;
  auto power = [&f](int k) {
    CMatrix p = f;
    for (int i = 1; i < k; ++i) p = p * f;
    return p;
  };
  const CMatrix a = power(hi);
  const CMatrix bt = lo == hi ? CMatrix(a.transpose()) : CMatrix(power(lo).transpose());
  return a.cwiseProduct(bt).sum();
}

struct Extrapolation {
  std::vector<double> cutoffs;
  std::vector<Complex> values;
  Complex extrapolated{0.0};
  double error_estimate = 0.0;

  Complex last() const { return values.back(); }
};

// Richardson extrapolation in h = 1/cutoff (Neville, at most quadratic over the
// last three points). The estimate covers both the change from the lower-order
// extrapolant and the distance from the last raw value.
inline Extrapolation richardson(const std::vector<double>& cutoffs, const std::vector<Complex>& values,
                                bool check_convergence = true) {
  Extrapolation ex{cutoffs, values, values.back(), 0.0};
  const std::size_t m = values.size();
  if (m < 2) return ex;
  auto neville = [&](std::size_t count) {
    std::vector<Complex> p(values.end() - static_cast<long>(count), values.end());
    std::vector<double> h;
    for (std::size_t i = m - count; i < m; ++i) h.push_back(1.0 / cutoffs[i]);
    for (std::size_t lvl = 1; lvl < count; ++lvl)
      for (std::size_t i = count - 1; i >= lvl; --i) {
        p[i] = (h[i] * p[i - 1] - h[i - lvl] * p[i]) / (h[i] - h[i - lvl]);
        if (i == lvl) break;
      }
    return p[count - 1];
  };
  const Complex lin = neville(2);
  ex.extrapolated = m >= 3 ? neville(3) : lin;
  ex.error_estimate = std::max(std::abs(ex.extrapolated - lin), std::abs(values.back() - ex.extrapolated));
  if (check_convergence && m >= 3) {
    const double d1 = std::abs(values[m - 2] - values[m - 3]);
    const double d2 = std::abs(values[m - 1] - values[m - 2]);
    if (d2 > 1.5 * d1 + 1e-10 * (1.0 + std::abs(values.back())))
      throw Error(ErrorCode::NonConvergent, "successive-cutoff differences do not decrease");
  }
  return ex;
}

enum class DetMethod { plain_truncation, det2_times_trace };

inline std::string to_string(DetMethod m) {
  return m == DetMethod::plain_truncation ? "plain_truncation" : "det2_times_trace";
}

struct DetResult {
  Complex value{1.0};
  Complex log_value{0.0};
  DetMethod method = DetMethod::plain_truncation;
  std::vector<double> cutoffs;
  std::vector<Complex> values;
  Complex extrapolated{1.0};
  double error_estimate = 0.0;
};

// Conditional trace of the operator itself, when it has a closed form.
inline Complex operator_conditional_trace(const OperatorSpec& spec, const BoundaryData& b) {
  switch (spec.kind) {
    case OperatorKind::resolvent_base:
      return conditional_trace_closed(spec.D, b) + static_cast<double>(b.k0) * (1.0 - spec.nu);
    case OperatorKind::multiplier_resolvent:
      return conditional_trace_closed(spec.D, b);
    case OperatorKind::f_operator:
      break;
  }
  throw Error(ErrorCode::InvalidArgument, "closed conditional trace of F needs the trace formula");
}

// det(I - A) along the schedule. det2_times_trace extrapolates det2(I - A_N) =
// det(I - A_N) e^{Tr A_N} and multiplies by e^{-tau}, tau the conditional trace.
inline DetResult conditional_det(const OperatorSpec& spec, const BoundaryData& b, const std::vector<double>& schedule,
                                 DetMethod method = DetMethod::plain_truncation,
                                 std::optional<Complex> conditional_trace = std::nullopt,
                                 const AssemblyOptions& opt = {}) {
  const auto ops = assemble_schedule(spec, b, schedule, opt);
  DetResult r;
  r.method = method;
  r.cutoffs = schedule;
  Complex tau = 0.0;
  if (method == DetMethod::det2_times_trace)
    tau = conditional_trace ? *conditional_trace : operator_conditional_trace(spec, b);
  std::vector<LogDet> logs;
  for (const auto& op : ops) {
    const auto d = op.size();
    LogDet ld = log_determinant(CMatrix::Identity(d, d) - op.matrix);
    if (method == DetMethod::det2_times_trace) ld.log += op.matrix.trace();
    logs.push_back(ld);
    r.values.push_back(ld.value());
  }
  const Extrapolation ex = richardson(schedule, r.values);
  const Complex scale = std::exp(-tau);
  r.extrapolated = ex.extrapolated * scale;
  r.error_estimate = ex.error_estimate * std::abs(scale);
  if (method == DetMethod::det2_times_trace)
    for (auto& v : r.values) v *= scale;
  r.value = r.values.back();
  r.log_value = logs.back().zero ? Complex(-INFINITY, 0.0) : logs.back().log - tau;
  return r;
}

// a_m from Tr F^1..Tr F^m: determinant with Tr F^{i-j+1} on and below the
// diagonal and m - i on the superdiagonal (1-based rows).
inline Complex plemelj_coefficient(const std::vector<Complex>& traces) {
  const int m = static_cast<int>(traces.size());
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "need at least one trace");
  CMatrix a = CMatrix::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j <= i; ++j) a(i, j) = traces[static_cast<std::size_t>(i - j)];
    if (i + 1 < m) a(i, i + 1) = static_cast<double>(m - 1 - i);
  }
  return a.determinant();
}

inline std::vector<Complex> plemelj_coefficients(const std::vector<Complex>& traces) {
  std::vector<Complex> out;
  for (std::size_t m = 1; m <= traces.size(); ++m)
    out.push_back(plemelj_coefficient(std::vector<Complex>(traces.begin(), traces.begin() + static_cast<long>(m))));
  return out;
}

// Tr((P_N F P_N)^m) for each cutoff, extrapolated in 1/cutoff.
inline Extrapolation truncated_power_trace(const OperatorSpec& spec, const BoundaryData& b,
                                           const std::vector<double>& schedule, int m,
                                           const AssemblyOptions& opt = {}) {
  const auto ops = assemble_schedule(spec, b, schedule, opt);
  std::vector<Complex> v;
  for (const auto& op : ops) v.push_back(power_trace(op.matrix, m));
  return richardson(schedule, v, false);
}

inline std::vector<double> default_schedule(double T) {
  const double w = 2.0 * kPi / T;
  return {25 * w, 50 * w, 100 * w, 200 * w};
}

}  // namespace hillkrein
