#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

#include "fredholm.hpp"

namespace hillkrein {

// (-1)^n |C(S)| e^{-n nu T/2} e^{-(1/2) int Tr D} det(S gamma_D(T) - e^{nu T} I)
inline Complex hill_rhs(const Flow& flowD, const BoundaryData& b, Complex nu) {
  const int n = b.dim();
  const CMatrix a = monodromy(flowD, b) - std::exp(nu * b.T) * CMatrix::Identity(n, n);
  const double sign = n % 2 == 0 ? 1.0 : -1.0;
  return sign * b.abs_c_of_s * std::exp(-0.5 * n * nu * b.T - 0.5 * flowD.source().trace_integral()) *
         determinant(a);
}

// Scale of the RHS used to decide whether it vanishes.
inline double hill_rhs_scale(const Flow& flowD, const BoundaryData& b, Complex nu) {
  const int n = b.dim();
  // rows of S gamma and e^{nu T} I measured separately, so cancellation does not shrink the scale
  const CMatrix m = monodromy(flowD, b);
  const double w = std::abs(std::exp(nu * b.T));
  double rows = 1.0;
  for (int i = 0; i < n; ++i) rows *= m.row(i).norm() + w;
  return b.abs_c_of_s * std::abs(std::exp(-0.5 * n * nu * b.T - 0.5 * flowD.source().trace_integral())) * rows;
}

inline std::string hex_digest(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::uint64_t fnv1a(const void* p, std::size_t len, std::uint64_t h = 1469598103934665603ull) {
  const auto* c = static_cast<const unsigned char*>(p);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= c[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string inputs_digest(const CoeffPath& D, const BoundaryData& b, Complex nu,
                                 const std::vector<double>& schedule) {
  std::uint64_t h = D.digest();
  h = fnv1a(b.S.data(), sizeof(double) * static_cast<std::size_t>(b.S.size()), h);
  h = fnv1a(&b.T, sizeof b.T, h);
  h = fnv1a(&nu, sizeof nu, h);
  for (double s : schedule) h = fnv1a(&s, sizeof s, h);
  return hex_digest(h);
}

struct HillReport {
  DetResult lhs;
  Complex rhs{0.0};
  double rel_error = 0.0;
  double tolerance = 0.0;
  bool singular = false;
  bool sign_consistent = true;
  bool passed = false;
  std::string inputs_digest;
};

// Both sides of the Hill-type identity for (d/dt - D + nu)(d/dt + P0)^{-1}.
inline HillReport hill_verify(const CoeffPath& D, const BoundaryData& b, Complex nu,
                              const std::vector<double>& schedule, OdeTolerance tol = {},
                              const AssemblyOptions& opt = {}) {
  HillReport r;
  r.inputs_digest = inputs_digest(D, b, nu, schedule);
  r.lhs = conditional_det(OperatorSpec::resolvent_base(D, nu), b, schedule, DetMethod::plain_truncation,
                          std::nullopt, opt);
  FlowOptions fo;
  fo.tol = tol;
  fo.with_inverse = false;
  fo.dense = false;
  const Flow flow = fundamental_solution(D, fo);
  r.rhs = hill_rhs(flow, b, nu);
  const double signed_form = (b.k0 % 2 == 0 ? 1.0 : -1.0) * b.c_of_s;
  const double abs_form = (b.dim() % 2 == 0 ? 1.0 : -1.0) * b.abs_c_of_s;
  r.sign_consistent = std::abs(signed_form - abs_form) <= 1e-10 * b.abs_c_of_s;
  r.rel_error = std::abs(r.lhs.extrapolated - r.rhs) / std::max(std::abs(r.rhs), 1e-300);
  r.tolerance = std::max(5e-3, 3.0 * r.lhs.error_estimate / std::max(std::abs(r.rhs), 1e-300));
  r.singular = std::abs(r.rhs) <= 1e-8 * hill_rhs_scale(flow, b, nu);
  if (r.singular) r.passed = std::abs(r.lhs.extrapolated) <= 1e-4 && std::abs(r.rhs) <= 1e-4;
  else r.passed = r.rel_error <= r.tolerance;
  r.passed = r.passed && r.sign_consistent;
  return r;
}

// det[(d/dt - D1 + nu)(d/dt - D)^{-1}] = hill_rhs(D1, nu) / hill_rhs(D, 0)
//   = e^{-n nu T/2} e^{-(1/2) int Tr(D1 - D)} det(S g_D1(T) - e^{nu T}) / det(S g_D(T) - I).
inline Complex det_quotient(const CoeffPath& D1, const CoeffPath& D, const BoundaryData& b, Complex nu,
                            OdeTolerance tol = {}) {
  const int n = b.dim();
  FlowOptions fo;
  fo.tol = tol;
  fo.with_inverse = false;
  fo.dense = false;
  const Flow f = fundamental_solution(D, fo);
  const CMatrix den = monodromy(f, b) - CMatrix::Identity(n, n);
  const Complex dden = determinant(den);
  if (std::abs(dden) <= 1e-12 * std::max(hadamard_scale(den), 1e-300))
    throw Error(ErrorCode::SingularDenominator, "det(S gamma_D(T) - I) vanishes");
  const Flow f1 = fundamental_solution(D1, fo);
  const CMatrix num = monodromy(f1, b) - std::exp(nu * b.T) * CMatrix::Identity(n, n);
  return std::exp(-0.5 * n * nu * b.T - 0.5 * (D1.trace_integral() - D.trace_integral())) * determinant(num) /
         dden;
}

}  // namespace hillkrein
