#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "fredholm.hpp"
#include "propagator.hpp"

namespace hillkrein {

struct GFactors {
  CMatrix M;
  Complex lambda{1.0};
  CMatrix Q;                // M (M - lambda I)^{-1}
  std::vector<CMatrix> Ms;  // M_1..M_K
  std::vector<CMatrix> Gs;  // G_k = M_k M (M - lambda I)^{-1}

  int order() const { return static_cast<int>(Gs.size()); }
  const CMatrix& G(int k) const { return Gs.at(static_cast<std::size_t>(k - 1)); }
  // Ordering (M - lambda I)^{-1} M M_k, equal under the trace.
  CMatrix G_alt(int k) const { return Q * Ms.at(static_cast<std::size_t>(k - 1)); }
};

inline CMatrix shifted_resolvent_factor(const CMatrix& M, Complex lambda) {
  const auto n = M.rows();
  const CMatrix a = M - lambda * CMatrix::Identity(n, n);
  if (std::abs(determinant(a)) <= 1e-12 * std::max(hadamard_scale(a), 1e-300))
    throw Error(ErrorCode::SingularShift, "e^{nu T} is a Floquet multiplier of M");
  return a.transpose().partialPivLu().solve(M.transpose()).transpose();
}

inline GFactors g_factors(const IteratedIntegrals& mk, const CMatrix& M, Complex nu, double T) {
  GFactors g;
  g.M = M;
  g.lambda = std::exp(nu * T);
  g.Q = shifted_resolvent_factor(M, g.lambda);
  g.Ms = mk.Ms;
  for (const auto& m : mk.Ms) g.Gs.push_back(m * g.Q);
  return g;
}

// All compositions of m (ordered tuples of positive integers summing to m).
inline std::vector<std::vector<int>> compositions(int m) {
  std::vector<std::vector<int>> out;
  if (m < 1) return out;
  for (unsigned mask = 0; mask < (1u << (m - 1)); ++mask) {
    std::vector<int> parts;
    int run = 1;
    for (int i = 0; i < m - 1; ++i) {
      if (mask & (1u << i)) {
        parts.push_back(run);
        run = 1;
      } else {
        ++run;
      }
    }
    parts.push_back(run);
    out.push_back(std::move(parts));
  }
  return out;
}

// S_k = sum over compositions of m into k parts of Tr(G_j1 ... G_jk).
inline std::vector<Complex> composition_sums(const GFactors& g, int m, bool alt_order = false) {
  if (g.order() < m) throw Error(ErrorCode::InsufficientOrder, "not enough G factors");
  std::vector<Complex> s(static_cast<std::size_t>(m) + 1, Complex(0.0));
  const auto n = g.M.rows();
  for (const auto& parts : compositions(m)) {
    CMatrix p = CMatrix::Identity(n, n);
    for (int j : parts) p = p * (alt_order ? g.G_alt(j) : g.G(j));
    s[parts.size()] += p.trace();
  }
  return s;
}

// Taylor coefficient c_m of log det(S gamma_alpha(T) - lambda) - log det(M - lambda).
inline Complex taylor_cm(const GFactors& g, int m, bool alt_order = false) {
  const auto s = composition_sums(g, m, alt_order);
  Complex c = 0.0;
  for (int k = 1; k <= m; ++k) c += ((k % 2 == 1) ? 1.0 : -1.0) / k * s[static_cast<std::size_t>(k)];
  return c;
}

// Tr(F^m), F = D (d/dt - D0 + nu)^{-1}.
inline Complex trace_formula(const GFactors& g, int m, const CoeffPath& D) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "m must be >= 1");
  if (g.order() < m) throw Error(ErrorCode::InsufficientOrder, "not enough G factors");
  if (m == 1) return 0.5 * D.trace_integral() - g.G(1).trace();
  return -static_cast<double>(m) * taylor_cm(g, m);
}

inline GFactors build_g_factors(const CoeffPath& D0, const CoeffPath& D, const BoundaryData& b, Complex nu, int K,
                                OdeTolerance tol = {}) {
  const Flow f0 = fundamental_solution(D0, tol);
  return g_factors(iterated_integrals(f0, D, K), monodromy(f0, b), nu, b.T);
}

inline Complex trace_closed_m1(const CoeffPath& D, const Flow& flow0, const BoundaryData& b, Complex nu) {
  const CMatrix M = monodromy(flow0, b);
  const CMatrix Q = shifted_resolvent_factor(M, std::exp(nu * b.T));
  const CMatrix m1 = iterated_integrals(flow0, D, 1).M(1);
  return 0.5 * D.trace_integral() - (m1 * Q).trace();
}

inline Complex trace_closed_m2(const CoeffPath& D, const Flow& flow0, const BoundaryData& b, Complex nu) {
  const CMatrix M = monodromy(flow0, b);
  const CMatrix Q = shifted_resolvent_factor(M, std::exp(nu * b.T));
  const auto mk = iterated_integrals(flow0, D, 2);
  const CMatrix a = mk.M(1) * Q;
  return -2.0 * (mk.M(2) * Q).trace() + (a * a).trace();
}

// D0 = 0 reduction: -(1/2) Tr(int D (S + w)(S - w)^{-1}), w = e^{nu T}.
inline Complex trace_free_m1(const CoeffPath& D, const BoundaryData& b, Complex nu) {
  const auto n = b.dim();
  const Complex w = std::exp(nu * b.T);
  const CMatrix s = to_complex(b.S);
  const CMatrix I = CMatrix::Identity(n, n);
  const CMatrix sw = s - w * I;
  if (std::abs(determinant(sw)) <= 1e-12 * hadamard_scale(sw)) throw Error(ErrorCode::SingularShift, "w in spec(S)");
  const CMatrix r = sw.transpose().partialPivLu().solve((s + w * I).transpose()).transpose();
  return -0.5 * (D.integral() * r).trace();
}

// -T w Tr(int D S (S - w)^{-2}); this is d/dnu of trace_free_m1.
inline Complex trace_free_resolvent2(const CoeffPath& D, const BoundaryData& b, Complex nu) {
  const auto n = b.dim();
  const Complex w = std::exp(nu * b.T);
  const CMatrix s = to_complex(b.S);
  const CMatrix sw = s - w * CMatrix::Identity(n, n);
  if (std::abs(determinant(sw)) <= 1e-12 * hadamard_scale(sw)) throw Error(ErrorCode::SingularShift, "w in spec(S)");
  const CMatrix inv = sw.inverse();
  return -b.T * w * (D.integral() * s * inv * inv).trace();
}

// Tr(F^m) = int_{[0,T]^m} tr(Dhat(t1) B(t1,t2) ... Dhat(tm) B(tm,t1)), where
// B(t,s) = C + [s<t] I and Dhat = gamma0^{-1} D gamma0. The cube is split into
// the m! ordered simplices, each integrated by nested Gauss rules.
inline Complex kernel_trace_oracle(const CoeffPath& D, const Flow& flow0, const BoundaryData& b, Complex nu, int m,
                                   unsigned order = 24, int panels = 0) {
  if (m != 2 && m != 3) throw Error(ErrorCode::InvalidArgument, "kernel oracle supports m = 2 or 3");
  if (D.is_zero()) return 0.0;
  const GreenKernel k = green_kernel(flow0, b, nu);
  const CMatrix& C = k.jump_constant();
  const auto n = b.dim();
  const CMatrix I = CMatrix::Identity(n, n);
  const double T = b.T;
  if (panels <= 0) panels = 2 + D.bandwidth() + flow0.source().bandwidth();
  panels = std::max(panels, D.smooth_pieces());

  auto dhat = [&](double t) -> CMatrix { return flow0.gamma_inverse(t) * D(t) * flow0.gamma(t); };

  // Nested nodes x_1 < x_2 < ... < x_m with product weights.
  struct Node {
    std::vector<double> x;
    double w;
  };
  std::vector<Node> level;
  {
    const auto q = composite_gauss(0.0, T, panels, order);
    for (std::size_t i = 0; i < q.nodes.size(); ++i) level.push_back({{q.nodes[i]}, q.weights[i]});
  }
  for (int l = 1; l < m; ++l) {
    std::vector<Node> next;
    for (const auto& nd : level) {
      const double top = nd.x.front();
      const auto q = composite_gauss(0.0, top, std::max(1, static_cast<int>(std::ceil(panels * top / T))), order);
      for (std::size_t i = 0; i < q.nodes.size(); ++i) {
        Node c{nd.x, nd.w * q.weights[i]};
        c.x.insert(c.x.begin(), q.nodes[i]);
        next.push_back(std::move(c));
      }
    }
    level = std::move(next);
  }

  std::vector<int> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<CMatrix>> bmats;
  std::vector<std::vector<int>> perms;
  do {
    // t_i = x_{rank(i)}; rank(i) = perm[i]
    std::vector<CMatrix> bs;
    for (int i = 0; i < m; ++i) {
      const int j = (i + 1) % m;
      bs.push_back(perm[static_cast<std::size_t>(j)] < perm[static_cast<std::size_t>(i)] ? CMatrix(C + I) : C);
    }
    bmats.push_back(std::move(bs));
    perms.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));

  const long count = static_cast<long>(level.size());
  std::vector<Complex> partial(static_cast<std::size_t>(count));
  parallel_chunks(count, [&](long s, long e) {
    std::vector<CMatrix> dv(static_cast<std::size_t>(m));
    for (long idx = s; idx < e; ++idx) {
      const Node& nd = level[static_cast<std::size_t>(idx)];
      for (int r = 0; r < m; ++r) dv[static_cast<std::size_t>(r)] = dhat(nd.x[static_cast<std::size_t>(r)]);
      Complex acc = 0.0;
      for (std::size_t p = 0; p < perms.size(); ++p) {
        CMatrix prod = CMatrix::Identity(n, n);
        for (int i = 0; i < m; ++i)
          prod = prod * dv[static_cast<std::size_t>(perms[p][static_cast<std::size_t>(i)])] * bmats[p][static_cast<std::size_t>(i)];
        acc += prod.trace();
      }
      partial[static_cast<std::size_t>(idx)] = nd.w * acc;
    }
  });
  Complex total = 0.0;
  for (const auto& v : partial) total += v;
  return total;
}

// c_1..c_K from trapezoid sampling of log det(S gamma_alpha(T) - lambda) / det(M - lambda)
// on |alpha| = radius, with the phase tracked continuously along the circle.
// radius <= 0 picks one: a pilot fit at 0.05 estimates the distance rho to the nearest zero,
// then the fit is redone at clamp(rho/4, 0.05, 1) so ODE noise is not amplified by r^{-m}.
inline std::vector<Complex> taylor_circle_fit(const CoeffPath& D0, const CoeffPath& D, const BoundaryData& b,
                                              Complex nu, int K, double radius = 0.0, int points = 64,
                                              OdeTolerance tol = {1e-14, 1e-13}) {
  if (!(radius > 0.0)) {
    const auto pilot = taylor_circle_fit(D0, D, b, nu, K, 0.05, points, tol);
    double rho = 1e300;
    for (int m = 1; m <= K; ++m) {
      const double c = std::abs(pilot[static_cast<std::size_t>(m - 1)]);
      if (c > 0.0) rho = std::min(rho, std::pow(c, -1.0 / m));
    }
    radius = std::clamp(0.25 * rho, 0.05, 1.0);
  }
  const auto n = b.dim();
  const Complex lambda = std::exp(nu * b.T);
  FlowOptions fo;
  fo.tol = tol;
  fo.with_inverse = false;
  fo.dense = false;
  auto f = [&](Complex alpha) {
    const Flow fl = fundamental_solution(D0 + alpha * D, fo);
    return determinant(monodromy(fl, b) - lambda * CMatrix::Identity(n, n));
  };
  const Complex f0 = f(0.0);
  std::vector<Complex> g(static_cast<std::size_t>(points));
  double phase = 0.0;
  Complex prev = 1.0;
  for (int j = 0; j < points; ++j) {
    const Complex alpha = std::polar(radius, 2.0 * kPi * j / points);
    const Complex ratio = f(alpha) / f0;
    if (j == 0) phase = std::arg(ratio);
    else phase += std::arg(ratio / prev);
    prev = ratio;
    g[static_cast<std::size_t>(j)] = Complex(std::log(std::abs(ratio)), phase);
  }
  std::vector<Complex> c;
  for (int m = 1; m <= K; ++m) {
    Complex acc = 0.0;
    for (int j = 0; j < points; ++j) acc += g[static_cast<std::size_t>(j)] * std::polar(std::pow(radius, -m), -2.0 * kPi * m * j / points);
    c.push_back(acc / static_cast<double>(points));
  }
  return c;
}

}  // namespace hillkrein
