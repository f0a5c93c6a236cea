#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>
#include <boost/numeric/odeint.hpp>

#include "propagator.hpp"

namespace hillkrein {

struct EigOptions {
  Complex nu{0.0};  // roots of det(S gamma_alpha(T) - e^{nu T} I)
  OdeTolerance tol{1e-13, 1e-12};
  double growth_exponent = 1.0;  // N(r) ~ r^p for the tail model
  double cluster_rel = 1e-3;
  int max_depth = 40;
};

// f(alpha) = det(S gamma_{D0 + alpha D}(T) - lambda I).
class CharacteristicFunction {
 public:
  struct Value {
    Complex f{0.0};
    Complex log_derivative{0.0};  // f'/f = tr(A^{-1} dA/dalpha)
    double scale = 0.0;           // Hadamard bound of A
  };

  CharacteristicFunction(CoeffPath D0, CoeffPath D, BoundaryData b, Complex nu, OdeTolerance tol)
      : D0_(std::move(D0)), D_(std::move(D)), b_(std::move(b)), lambda_(std::exp(nu * b_.T)), tol_(tol) {
    if (D0_.dim() != b_.dim() || D_.dim() != b_.dim())
      throw Error(ErrorCode::DimensionMismatch, "paths and boundary dimensions differ");
    det_s_ = b_.S.determinant();
    trace_D0_ = D0_.trace_integral();
    trace_D_ = D_.trace_integral();
  }

  CMatrix shifted(Complex alpha) const {
    ++evals_;
    FlowOptions fo;
    fo.tol = tol_;
    fo.with_inverse = false;
    fo.dense = false;
    const Flow fl = fundamental_solution(D0_ + alpha * D_, fo);
    return monodromy(fl, b_) - lambda_ * CMatrix::Identity(b_.dim(), b_.dim());
  }

  // A and dA/dalpha from the variational system Y' = (D0 + alpha D) Y + D gamma.
  // Integrated with Fehlberg 7(8): |alpha| runs into the hundreds on eigenvalue
  // contours and the higher order needs several times fewer steps than dopri5.
  std::pair<CMatrix, CMatrix> shifted_with_derivative(Complex alpha) const {
    namespace oi = boost::numeric::odeint;
    using State = std::vector<Complex>;
    ++evals_;
    const Eigen::Index n = b_.dim();
    State y(static_cast<std::size_t>(2 * n * n), Complex(0.0));
    for (Eigen::Index i = 0; i < n; ++i) y[static_cast<std::size_t>(i * n + i)] = 1.0;
    CMatrix a(n, n), d(n, n);
    auto rhs = [&](const State& yv, State& dy, double t) {
      d.setZero();
      D_.add_to(d, t, 1.0);
      a.setZero();
      D0_.add_to(a, t, 1.0);
      a += alpha * d;
      const Eigen::Map<const CMatrix> g(yv.data(), n, n), v(yv.data() + n * n, n, n);
      Eigen::Map<CMatrix> dg(dy.data(), n, n), dv(dy.data() + n * n, n, n);
      dg.noalias() = a * g;
      dv.noalias() = a * v;
      dv.noalias() += d * g;
    };
    auto stepper = oi::make_controlled(tol_.abs, tol_.rel, oi::runge_kutta_fehlberg78<State>());
    try {
      oi::integrate_adaptive(stepper, rhs, y, 0.0, b_.T, 0.01 * b_.T);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::IntegratorFailure, e.what());
    }
    const Eigen::Map<const CMatrix> g(y.data(), n, n), v(y.data() + n * n, n, n);
    const CMatrix s = to_complex(b_.S);
    return {s * g - lambda_ * CMatrix::Identity(n, n), s * v};
  }

  // For n <= 2 the characteristic polynomial is used with det(S gamma) taken from
  // Liouville. LU on S gamma - lambda loses det gamma entirely once the flow grows
  // like e^{+x} and e^{-x} together, which second-order problems do off the axis.
  Value evaluate(Complex alpha) const {
    const auto [a, da] = shifted_with_derivative(alpha);
    const int n = b_.dim();
    Value v;
    if (n <= 2) {
      const CMatrix m = a + lambda_ * CMatrix::Identity(n, n);
      const Complex det_m = liouville_det(alpha);
      if (n == 1) {
        v.f = a(0, 0);
        v.log_derivative = da(0, 0) / a(0, 0);
        v.scale = std::abs(m(0, 0)) + std::abs(lambda_);
      } else {
        v.f = lambda_ * lambda_ - lambda_ * m.trace() + det_m;
        const Complex df = -lambda_ * da.trace() + det_m * trace_D_;
        v.log_derivative = df / v.f;
        v.scale = std::abs(lambda_) * (std::abs(lambda_) + m.norm()) + std::abs(det_m);
      }
      return v;
    }
    v.f = determinant(a);
    v.scale = hadamard_scale(a);
    const Eigen::PartialPivLU<CMatrix> lu(a);
    v.log_derivative = lu.solve(da).trace();
    return v;
  }

  Complex operator()(Complex alpha) const { return evaluate(alpha).f; }
  Complex log_derivative(Complex alpha) const { return evaluate(alpha).log_derivative; }
  Complex derivative(Complex alpha) const {
    const Value v = evaluate(alpha);
    return v.f * v.log_derivative;
  }

  // det(S gamma_alpha(T)) = det S exp(int tr D0 + alpha int tr D)
  Complex liouville_det(Complex alpha) const { return det_s_ * std::exp(trace_D0_ + alpha * trace_D_); }

  long evaluations() const { return evals_.load(); }
  const BoundaryData& boundary() const { return b_; }

 private:
  CoeffPath D0_, D_;
  BoundaryData b_;
  Complex lambda_;
  OdeTolerance tol_;
  double det_s_ = 1.0;
  Complex trace_D0_{0.0}, trace_D_{0.0};
  mutable std::atomic<long> evals_{0};
};

struct BvpEigs {
  Complex center{0.0};
  double radius = 0.0;
  int count = 0;
  double winding_quadrature = 0.0;
  std::vector<Complex> roots;
  std::vector<int> multiplicities;
  std::vector<double> residuals;     // |f(root)| / Hadamard scale
  std::vector<double> kernel_sigma;  // sigma_min / (sigma_max + |lambda|) of S gamma(T) - lambda
  std::vector<bool> verified;
  double growth_exponent = 1.0;
  long evaluations = 0;
};

namespace detail {

struct ContourTracker {
  const CharacteristicFunction& f;
  double zero_floor;
  int max_depth = 30;

  struct Node {
    Complex z, f, g;
  };

  Node node(Complex z) const {
    const auto v = f.evaluate(z);
    if (!(std::abs(v.f) > zero_floor * v.scale))
      throw Error(ErrorCode::ContourThroughZero, "contour passes through a root");
    return {z, v.f, v.log_derivative};
  }

  // Change of arg f over a piece of path. The chord ratio only knows arg mod 2 pi,
  // so it is accepted once it matches the trapezoid estimate of the log change.
  double segment(const std::function<Complex(double)>& path, double sa, const Node& a, double sb, const Node& b,
                 int depth) const {
    const Complex ratio = b.f / a.f;
    const double d = std::arg(ratio);
    const Complex pred = 0.5 * (a.g + b.g) * (b.z - a.z);
    if (std::abs(d) < kPi / 2 && std::abs(d - pred.imag()) < 0.5 &&
        std::abs(std::log(std::abs(ratio)) - pred.real()) < 0.5)
      return d;
    if (depth >= max_depth) throw Error(ErrorCode::ContourThroughZero, "phase tracking did not resolve");
    const double sm = 0.5 * (sa + sb);
    const Node m = node(path(sm));
    return segment(path, sa, a, sm, m, depth + 1) + segment(path, sm, m, sb, b, depth + 1);
  }

  // Winding number of f along a closed path on s in [0, 1].
  int winding(const std::function<Complex(double)>& path, int n0) const {
    std::vector<Node> v;
    v.reserve(static_cast<std::size_t>(n0) + 1);
    for (int i = 0; i < n0; ++i) v.push_back(node(path(static_cast<double>(i) / n0)));
    v.push_back(v.front());
    double total = 0.0;
    for (int i = 0; i < n0; ++i)
      total += segment(path, static_cast<double>(i) / n0, v[static_cast<std::size_t>(i)],
                       static_cast<double>(i + 1) / n0, v[static_cast<std::size_t>(i + 1)], 0);
    const double w = total / (2.0 * kPi);
    return static_cast<int>(std::lround(w));
  }
};

inline std::function<Complex(double)> circle_path(Complex c, double r) {
  return [c, r](double s) { return c + std::polar(r, 2.0 * kPi * s); };
}

inline std::function<Complex(double)> rect_path(Complex lo, Complex hi) {
  return [lo, hi](double s) {
    const double w = hi.real() - lo.real(), h = hi.imag() - lo.imag();
    const double per = 2 * (w + h);
    double d = s * per;
    if (d < w) return Complex(lo.real() + d, lo.imag());
    d -= w;
    if (d < h) return Complex(hi.real(), lo.imag() + d);
    d -= h;
    if (d < w) return Complex(hi.real() - d, hi.imag());
    d -= w;
    return Complex(lo.real(), hi.imag() - d);
  };
}

// Trapezoid moments s_p = (1/2 pi i) oint w^p f'/f dz, w = (z - c)/r, p = 0..k.
inline std::vector<Complex> circle_moments(const CharacteristicFunction& f, Complex c, double r, int k, int N) {
  std::vector<Complex> s(static_cast<std::size_t>(k) + 1, Complex(0.0));
  for (int j = 0; j < N; ++j) {
    const Complex w = std::polar(1.0, 2.0 * kPi * j / N);
    const Complex z = c + r * w;
    const Complex q = f.log_derivative(z) * r * w;
    Complex wp = 1.0;
    for (int p = 0; p <= k; ++p) {
      s[static_cast<std::size_t>(p)] += q * wp;
      wp *= w;
    }
  }
  for (auto& v : s) v /= static_cast<double>(N);
  return s;
}

// Roots (in w) of the monic polynomial with power sums s_1..s_k.
inline std::vector<Complex> roots_from_power_sums(const std::vector<Complex>& s, int k) {
  std::vector<Complex> e(static_cast<std::size_t>(k) + 1, Complex(0.0));
  e[0] = 1.0;
  for (int m = 1; m <= k; ++m) {
    Complex acc = 0.0;
    for (int i = 1; i <= m; ++i)
      acc += ((i % 2 == 1) ? 1.0 : -1.0) * e[static_cast<std::size_t>(m - i)] * s[static_cast<std::size_t>(i)];
    e[static_cast<std::size_t>(m)] = acc / static_cast<double>(m);
  }
  if (k == 1) return {e[1]};
  CMatrix comp = CMatrix::Zero(k, k);
  for (int i = 1; i < k; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < k; ++i)
    comp(i, k - 1) = (((k - i) % 2 == 1) ? 1.0 : -1.0) * e[static_cast<std::size_t>(k - i)];
  Eigen::ComplexEigenSolver<CMatrix> es(comp);
  std::vector<Complex> out;
  for (int i = 0; i < k; ++i) out.push_back(es.eigenvalues()(i));
  return out;
}

}  // namespace detail

class EigenLocator {
 public:
  EigenLocator(const CharacteristicFunction& f, const EigOptions& opt)
      : f_(f), opt_(opt), tracker_{f, 1e-13} {}

  struct Found {
    Complex z;
    int mult;
  };

  std::vector<Found> roots;

  int rect_count(Complex lo, Complex hi) const { return tracker_.winding(detail::rect_path(lo, hi), 16); }

  void solve(Complex lo, Complex hi, int count, int depth) {
    if (count <= 0) return;
    const Complex c = 0.5 * (lo + hi);
    const double rho = 0.5 * std::abs(hi - lo) * 1.05;
    if (depth >= opt_.max_depth || rho < 1e-9 * (1.0 + std::abs(c))) {
      roots.push_back({c, count});
      return;
    }
    if (count <= 4 && try_moments(lo, hi, c, rho, count)) return;
    subdivide(lo, hi, count, depth);
  }

  Complex newton(Complex z, bool& ok, double max_move = INFINITY) const {
    ok = false;
    const Complex z0 = z;
    double last = INFINITY;
    for (int it = 0; it < 30; ++it) {
      const Complex g = f_.log_derivative(z);
      if (!std::isfinite(std::abs(g))) {
        ok = true;
        return z;
      }
      if (g == Complex(0.0)) return z;
      const Complex step = 1.0 / g;
      z -= step;
      last = std::abs(step);
      if (std::abs(z - z0) > max_move) return z;
      if (last <= 1e-13 * (1.0 + std::abs(z))) break;
    }
    ok = last <= 1e-9 * (1.0 + std::abs(z));
    return z;
  }

 private:
  static bool inside(Complex z, Complex lo, Complex hi) {
    return z.real() >= lo.real() && z.real() <= hi.real() && z.imag() >= lo.imag() && z.imag() <= hi.imag();
  }

  // Power sums on the circumscribed circle give starting points; Newton, the box and
  // distinctness decide. A converged tight cluster is kept as one multiple root.
  bool try_moments(Complex lo, Complex hi, Complex c, double rho, int count) {
    int circle = 0;
    try {
      circle = tracker_.winding(detail::circle_path(c, rho), 16);
    } catch (const Error&) {
      return false;
    }
    if (circle != count) return false;
    std::vector<Complex> prev;
    for (int N = 16 * count; N <= 64 * count; N *= 2) {
      const auto s = detail::circle_moments(f_, c, rho, count, N);
      const auto w = detail::roots_from_power_sums(s, count);
      const Complex centroid_w = s[1] / static_cast<double>(count);
      if (count >= 2) {
        double spread = 0.0;
        for (const auto& x : w) spread = std::max(spread, std::abs(x - centroid_w));
        const bool stable = !prev.empty() && std::abs(prev[1] - s[1]) < 1e-8 * count;
        if (spread < opt_.cluster_rel && stable) {
          roots.push_back({c + rho * centroid_w, count});
          return true;
        }
      }
      prev = s;
      if (auto polished = polish(w, c, rho, lo, hi)) {
        for (const auto& z : *polished) roots.push_back({z, 1});
        return true;
      }
    }
    return false;
  }

  std::optional<std::vector<Complex>> polish(const std::vector<Complex>& w, Complex c, double rho, Complex lo,
                                             Complex hi) const {
    std::vector<Complex> out;
    for (const auto& x : w) {
      bool ok = false;
      const Complex z = newton(c + rho * x, ok, 2.0 * rho);
      if (!ok || !inside(z, lo, hi)) return std::nullopt;
      for (const auto& y : out)
        if (std::abs(y - z) < 1e-6 * rho) return std::nullopt;
      out.push_back(z);
    }
    return out;
  }

  void subdivide(Complex lo, Complex hi, int count, int depth) {
    static const double offsets[] = {0.0137, -0.0291, 0.0419};
    for (double off : offsets) {
      const double xm = lo.real() + (0.5 + off) * (hi.real() - lo.real());
      const double ym = lo.imag() + (0.5 - 0.7 * off) * (hi.imag() - lo.imag());
      const Complex kids[4][2] = {{lo, {xm, ym}},
                                  {{xm, lo.imag()}, {hi.real(), ym}},
                                  {{lo.real(), ym}, {xm, hi.imag()}},
                                  {{xm, ym}, hi}};
      int counts[4];
      int total = 0;
      bool failed = false;
      for (int q = 0; q < 4 && !failed; ++q) {
        try {
          counts[q] = rect_count(kids[q][0], kids[q][1]);
        } catch (const Error&) {
          failed = true;
        }
        if (!failed) total += counts[q];
      }
      if (failed || total != count) continue;
      for (int q = 0; q < 4; ++q) solve(kids[q][0], kids[q][1], counts[q], depth + 1);
      return;
    }
    throw Error(ErrorCode::ContourThroughZero, "could not isolate roots in a subregion");
  }

  const CharacteristicFunction& f_;
  EigOptions opt_;
  detail::ContourTracker tracker_;
};

namespace detail {

// Trapezoid argument principle, a second opinion on the phase-tracked count. The
// error roughly squares with each doubling of N, so a step change below 0.2 leaves
// a few hundredths in the last estimate, enough to pin the integer.
inline double quadrature_winding(const CharacteristicFunction& f, Complex c, double r) {
  double prev = NAN;
  for (int N = 64; N <= 4096; N *= 2) {
    Complex acc = 0.0;
    for (int j = 0; j < N; ++j) {
      const Complex w = std::polar(1.0, 2.0 * kPi * j / N);
      const Complex z = c + r * w;
      acc += f.log_derivative(z) * r * w;
    }
    const double cur = (acc / static_cast<double>(N)).real();
    if (!std::isnan(prev) && std::abs(cur - prev) < 0.2) return cur;
    prev = cur;
  }
  return prev;
}

}  // namespace detail

inline BvpEigs bvp_eigenvalues(const CoeffPath& D0, const CoeffPath& D, const BoundaryData& b, Complex center,
                               double radius, const EigOptions& opt = {}) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "radius must be positive");
  const CharacteristicFunction f(D0, D, b, opt.nu, opt.tol);
  BvpEigs out;
  out.center = center;
  out.growth_exponent = opt.growth_exponent;
  detail::ContourTracker tracker{f, 1e-13};
  double r = radius;
  for (int attempt = 0;; ++attempt) {
    try {
      out.count = tracker.winding(detail::circle_path(center, r), 64);
      break;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ContourThroughZero || attempt >= 1) throw;
      r = radius * 1.0123;
    }
  }
  out.radius = r;
  out.winding_quadrature = detail::quadrature_winding(f, center, r);
  if (std::abs(out.winding_quadrature - std::round(out.winding_quadrature)) > 0.1)
    throw Error(ErrorCode::NonIntegerWinding, "argument-principle quadrature is not an integer");
  if (static_cast<int>(std::lround(out.winding_quadrature)) != out.count)
    throw Error(ErrorCode::NonIntegerWinding, "quadrature and phase-tracking counts differ");

  EigenLocator loc(f, opt);
  if (out.count > 0) {
    const Complex lo = center - Complex(r, r), hi = center + Complex(r, r);
    const int box = loc.rect_count(lo, hi);
    loc.solve(lo, hi, box, 0);
  }
  std::sort(loc.roots.begin(), loc.roots.end(), [](const auto& x, const auto& y) {
    if (std::abs(x.z) != std::abs(y.z)) return std::abs(x.z) < std::abs(y.z);
    return std::arg(x.z) < std::arg(y.z);
  });
  int total = 0;
  for (const auto& fr : loc.roots) {
    if (std::abs(fr.z - center) >= r) continue;
    out.roots.push_back(fr.z);
    out.multiplicities.push_back(fr.mult);
    total += fr.mult;
    const CMatrix a = f.shifted(fr.z);
    const auto fv = f.evaluate(fr.z);
    out.residuals.push_back(std::abs(fv.f) / std::max(fv.scale, 1e-300));
    const Eigen::JacobiSVD<CMatrix> svd(a);
    const auto& sv = svd.singularValues();
    // relative to the size of the two terms; sigma_max alone is useless when n = 1
    const double ratio = sv(sv.size() - 1) / std::max(sv(0) + std::abs(std::exp(opt.nu * b.T)), 1e-300);
    out.kernel_sigma.push_back(ratio);
    out.verified.push_back(ratio <= 1e-8);
  }
  if (total != out.count)
    throw Error(ErrorCode::NonIntegerWinding, "located multiplicities do not match the winding count");
  out.evaluations = f.evaluations();
  return out;
}

struct EigenSum {
  Complex value{0.0};
  double tail_bound = 0.0;
  int roots_used = 0;
};

// sum mult / alpha^m over the located roots, plus a tail bound from the counting
// model N(r) ~ kappa r^p fitted at R = max |root|:
//   tail <= 1.25 kappa p R^{p-m} / (m - p).
inline EigenSum eigen_sum(const BvpEigs& e, int m) {
  const double p = e.growth_exponent;
  if (!(m > p)) throw Error(ErrorCode::InvalidArgument, "eigen sums need m above the growth exponent");
  EigenSum s;
  double R = 0.0;
  int total = 0;
  for (std::size_t i = 0; i < e.roots.size(); ++i) {
    s.value += static_cast<double>(e.multiplicities[i]) / std::pow(e.roots[i], m);
    R = std::max(R, std::abs(e.roots[i]));
    total += e.multiplicities[i];
  }
  s.roots_used = total;
  if (total > 0 && R > 0.0) {
    const double kappa = total / std::pow(R, p);
    s.tail_bound = 1.25 * kappa * p * std::pow(R, p - m) / (m - p);
  }
  return s;
}

}  // namespace hillkrein
