#pragma once

#include <chrono>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eigensolver.hpp"
#include "hill.hpp"
#include "krein2.hpp"
#include "problem.hpp"
#include "trace.hpp"

namespace hillkrein {

struct RunFlags {
  std::string format = "json";
  std::optional<int> m;
  std::optional<double> cutoff;
  std::optional<Complex> center;
  std::optional<double> radius;
  std::string formula;
};

struct Record {
  std::string name;
  Complex value{0.0};
  std::string method;
  double error_estimate = 0.0;
  double cutoff = 0.0;
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunReport {
  std::string command;
  std::string digest;
  std::vector<Record> records;
  std::vector<std::string> table_header;
  std::vector<std::vector<double>> table;
  std::vector<Check> checks;
  std::vector<std::string> warnings;
  double elapsed_ms = 0.0;

  bool passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
  int exit_code() const { return passed() ? 0 : 1; }

  json to_json(bool with_timings = true) const {
    json j;
    j["command"] = command;
    j["digest"] = digest;
    j["records"] = json::array();
    for (const auto& r : records)
      j["records"].push_back({{"name", r.name},
                              {"re", r.value.real()},
                              {"im", r.value.imag()},
                              {"method", r.method},
                              {"error_estimate", r.error_estimate},
                              {"cutoff", r.cutoff}});
    json conv = json::array();
    for (const auto& row : table) {
      json o;
      for (std::size_t i = 0; i < table_header.size() && i < row.size(); ++i) o[table_header[i]] = row[i];
      conv.push_back(o);
    }
    j["convergence"] = conv;
    j["checks"] = json::array();
    for (const auto& c : checks) j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    j["warnings"] = warnings;
    j["passed"] = passed();
    if (with_timings) j["timings"] = {{"total_ms", elapsed_ms}};
    return j;
  }

  // Tables as CSV; commands without a table list their records instead.
  std::string to_csv() const {
    std::ostringstream os;
    os << std::setprecision(17);
    if (!table.empty()) {
      for (std::size_t i = 0; i < table_header.size(); ++i) os << (i ? "," : "") << table_header[i];
      os << "\n";
      for (const auto& row : table) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
        os << "\n";
      }
      return os.str();
    }
    os << "name,re,im,method,error_estimate,cutoff\n";
    for (const auto& r : records)
      os << r.name << "," << r.value.real() << "," << r.value.imag() << "," << r.method << "," << r.error_estimate
         << "," << r.cutoff << "\n";
    return os.str();
  }
};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

// |a - b| <= max(est_a, est_b) with a small safety factor.
inline Check agreement(const std::string& name, Complex a, double ea, Complex b, double eb, double floor = 1e-9) {
  const double d = std::abs(a - b);
  const double lim = 2.0 * std::max(ea, eb) + floor * (1.0 + std::abs(a));
  return {name, d <= lim, "diff=" + fmt(d) + " limit=" + fmt(lim)};
}

inline void run_spectrum(RunReport& rep, const ProblemFile& p, const RunFlags& f) {
  const BoundaryData b = p.boundary();
  const double cut = f.cutoff.value_or(p.schedule.back());
  const auto modes = ddt_spectrum(b, cut);
  rep.table_header = {"branch", "winding", "re", "im"};
  double bc = 0.0;
  for (const auto& m : modes) {
    rep.records.push_back({"mode[" + std::to_string(m.branch) + "," + std::to_string(m.winding) + "]", m.eigenvalue(),
                           "closed_form", 0.0, cut});
    rep.table.push_back({static_cast<double>(m.branch), static_cast<double>(m.winding), 0.0, m.frequency});
    bc = std::max(bc, (b.eigenfunction(m, 0.0) - to_complex(b.S) * b.eigenfunction(m, b.T)).norm());
  }
  rep.records.push_back({"C(S)", b.c_of_s, "closed_form", 0.0, 0.0});
  rep.checks.push_back({"symmetric_cutoff", is_symmetric_cutoff(modes), std::to_string(modes.size()) + " modes"});
  rep.checks.push_back({"boundary_condition", bc <= 1e-10, "max defect " + fmt(bc)});
}

inline void run_hill(RunReport& rep, const ProblemFile& p) {
  const BoundaryData b = p.boundary();
  const HillReport h = hill_verify(p.D, b, p.nu, p.schedule, {}, p.quadrature);
  const double top = p.schedule.back();
  rep.records.push_back({"hill_lhs", h.lhs.extrapolated, "plain_truncation+richardson", h.lhs.error_estimate, top});
  rep.records.push_back({"hill_lhs_last", h.lhs.value, "plain_truncation", h.lhs.error_estimate, top});
  rep.records.push_back({"hill_rhs", h.rhs, "monodromy", 1e-9 * std::abs(h.rhs), 0.0});
  const DetResult d2 = conditional_det(OperatorSpec::resolvent_base(p.D, p.nu), b, p.schedule,
                                       DetMethod::det2_times_trace, std::nullopt, p.quadrature);
  rep.records.push_back({"hill_lhs_det2", d2.extrapolated, "det2_times_trace+richardson", d2.error_estimate, top});
  rep.table_header = {"cutoff", "re", "im", "rel_error"};
  for (std::size_t i = 0; i < h.lhs.values.size(); ++i)
    rep.table.push_back({h.lhs.cutoffs[i], h.lhs.values[i].real(), h.lhs.values[i].imag(),
                         std::abs(h.lhs.values[i] - h.rhs) / std::max(std::abs(h.rhs), 1e-300)});
  std::string detail = "rel_error=" + fmt(h.rel_error) + " tol=" + fmt(h.tolerance);
  if (h.singular) detail += " (singular case)";
  rep.checks.push_back({"hill_identity", h.passed, detail});
  rep.checks.push_back({"sign_consistency", h.sign_consistent, "(-1)^k0 C(S) vs (-1)^n |C(S)|"});
  rep.checks.push_back(agreement("det_methods_agree", h.lhs.extrapolated, h.lhs.error_estimate, d2.extrapolated,
                                 d2.error_estimate, 1e-8));
  rep.records.push_back({"hill_rel_error", h.rel_error, "diagnostic", 0.0, top});
}

inline void run_trace(RunReport& rep, const ProblemFile& p, const RunFlags& f) {
  const int m = f.m.value_or(1);
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "--m must be >= 1");
  const BoundaryData b = p.boundary();
  const double top = p.schedule.back();
  const Flow f0 = fundamental_solution(p.D0);
  const GFactors g = g_factors(iterated_integrals(f0, p.D, m), monodromy(f0, b), p.nu, b.T);
  const Complex formula = trace_formula(g, m, p.D);
  const double ef = 1e-8 * (1.0 + std::abs(formula));
  rep.records.push_back({"trace_formula", formula, "iterated_integrals", ef, 0.0});
  const Extrapolation tr = truncated_power_trace(OperatorSpec::f_operator(p.D0, p.D, p.nu), b, p.schedule, m, p.quadrature);
  rep.records.push_back({"trace_truncated", tr.extrapolated, "truncated_power+richardson", tr.error_estimate, top});
  rep.table_header = {"cutoff", "re", "im", "abs_error"};
  for (std::size_t i = 0; i < tr.values.size(); ++i)
    rep.table.push_back({tr.cutoffs[i], tr.values[i].real(), tr.values[i].imag(), std::abs(tr.values[i] - formula)});
  rep.checks.push_back(agreement("formula_vs_truncated", formula, ef, tr.extrapolated, tr.error_estimate, 1e-6));
  if (m == 2 || m == 3) {
    const Complex o = kernel_trace_oracle(p.D, f0, b, p.nu, m);
    const double eo = (m == 2 ? 1e-6 : 1e-4) * std::abs(o) + 1e-12;
    rep.records.push_back({"trace_kernel_oracle", o, "green_kernel_quadrature", eo, 0.0});
    rep.checks.push_back(agreement("formula_vs_oracle", formula, ef, o, eo));
  }
  if (m == 1 && p.D0.is_zero()) {
    const Complex closed = trace_free_m1(p.D, b, p.nu);
    rep.records.push_back({"trace_free_m1", closed, "closed_form", 1e-12, 0.0});
    rep.checks.push_back(agreement("formula_vs_free_reduction", formula, ef, closed, 1e-12));
  }
  if (f.radius && m >= 2) {
    EigOptions eo;
    eo.nu = p.nu;
    const BvpEigs e = bvp_eigenvalues(p.D0, p.D, b, f.center.value_or(0.0), *f.radius, eo);
    const EigenSum s = eigen_sum(e, m);
    rep.records.push_back({"trace_eigsum", s.value, "argument_principle", s.tail_bound, *f.radius});
    rep.checks.push_back(agreement("formula_vs_eigsum", formula, ef, s.value, s.tail_bound));
  }
}

inline void run_eigs(RunReport& rep, const ProblemFile& p, const RunFlags& f) {
  if (!f.radius) throw Error(ErrorCode::InvalidArgument, "eigs needs --radius");
  EigOptions eo;
  BvpEigs e;
  if (!p.has_D && p.second_order) {
    const SecondOrderProblem sp = p.second_order_problem();
    validate(sp);
    const FirstOrderForm ff = to_first_order(sp);
    eo.growth_exponent = 0.5;
    e = bvp_eigenvalues(ff.D0, ff.D, ff.boundary, f.center.value_or(0.0), *f.radius, eo);
  } else {
    eo.nu = p.nu;
    e = bvp_eigenvalues(p.D0, p.D, p.boundary(), f.center.value_or(0.0), *f.radius, eo);
  }
  rep.table_header = {"re", "im", "multiplicity", "residual", "sigma_ratio"};
  bool all_verified = true;
  int total = 0;
  for (std::size_t i = 0; i < e.roots.size(); ++i) {
    rep.records.push_back({"root[" + std::to_string(i) + "]", e.roots[i],
                           "argument_principle/m=" + std::to_string(e.multiplicities[i]), e.residuals[i], e.radius});
    rep.table.push_back({e.roots[i].real(), e.roots[i].imag(), static_cast<double>(e.multiplicities[i]), e.residuals[i],
                         e.kernel_sigma[i]});
    all_verified = all_verified && e.verified[i];
    total += e.multiplicities[i];
  }
  rep.records.push_back({"count", static_cast<double>(e.count), "winding_number", 0.0, e.radius});
  rep.checks.push_back({"multiplicity_sum", total == e.count, std::to_string(total) + " of " + std::to_string(e.count)});
  rep.checks.push_back({"winding_integer", std::abs(e.winding_quadrature - e.count) <= 1e-3,
                        "quadrature winding " + fmt(e.winding_quadrature)});
  rep.checks.push_back({"kernel_vectors", all_verified, "sigma_min/(sigma_max+|lambda|) <= 1e-8 at every root"});
}

inline void run_krein(RunReport& rep, const ProblemFile& p, const RunFlags& f) {
  const SecondOrderProblem sp = p.second_order_problem();
  validate(sp);
  if (auto w = conditioning_warning(sp)) rep.warnings.push_back(*w);
  const std::string name = f.formula.empty() ? "krein" : f.formula;
  const FirstOrderForm ff = to_first_order(sp);
  auto first_order_trace = [&](int m) {
    const Flow f0 = fundamental_solution(ff.D0);
    // the shift already sits in the reduced D0
    const GFactors g = g_factors(iterated_integrals(f0, ff.D, m), monodromy(f0, ff.boundary), 0.0, sp.T);
    return trace_formula(g, m, ff.D);
  };
  const int n = sp.dim();
  if (name == "resolvent") {
    const Complex v = trace_RAinv(sp);
    rep.records.push_back({"trace_RAinv", v, "closed_form", 1e-12 * (1 + std::abs(v)), 0.0});
    const Complex fo = first_order_trace(1);
    rep.records.push_back({"trace_RAinv_first_order", fo, "trace_formula(m=1) on reduction", 1e-8 * (1 + std::abs(fo)), 0.0});
    rep.checks.push_back(agreement("resolvent_vs_first_order", v, 1e-12, fo, 1e-8 * (1 + std::abs(fo))));
  } else if (name == "resolvent2") {
    const Complex v = trace_RAinv2(sp);
    rep.records.push_back({"trace_RAinv2", v, "closed_form", 1e-12 * (1 + std::abs(v)), 0.0});
    // Tr(R (d/dt+nu)^{-4}) = -(1/6) d^2/dnu^2 Tr(R (d/dt+nu)^{-2}); checked by central differences
    const double h = 1e-3;
    auto a1 = [&](Complex nu) {
      SecondOrderProblem q = sp;
      q.nu = nu;
      return trace_RAinv(q);
    };
    const Complex d2 = (a1(sp.nu + h) - 2.0 * a1(sp.nu) + a1(sp.nu - h)) / (h * h);
    rep.records.push_back({"trace_RAinv2_from_second_difference", -d2 / 6.0, "second_difference", 1e-5 * (1 + std::abs(v)), 0.0});
    rep.checks.push_back(agreement("resolvent2_vs_second_derivative", v, 0.0, -d2 / 6.0, 1e-5 * (1 + std::abs(v))));
  } else if (name == "centered_square") {
    const XPath x = x_path(sp);
    const Complex v = trace_centered_sq(sp, x);
    rep.records.push_back({"trace_centered_sq", v, "closed_form", 1e-10 * (1 + std::abs(v)), 0.0});
    const CoeffPath w = sp.R - CoeffPath::constant(sp.R_ave(), sp.T);
    const Complex o = second_order_square_oracle(w, sp.S, sp.T, sp.nu);
    rep.records.push_back({"trace_centered_sq_oracle", o, "kernel_quadrature", 1e-6 * (1 + std::abs(o)), 0.0});
    rep.checks.push_back(agreement("centered_square_vs_oracle", v, 0.0, o, 1e-6 * (1 + std::abs(o))));
  } else if (name == "full_square" || name == "scalar_boundary_square") {
    const XPath x = x_path(sp);
    const Complex v = trace_full_sq(sp, x);
    rep.records.push_back({"trace_full_sq", v, "closed_form", 1e-10 * (1 + std::abs(v)), 0.0});
    if (name == "scalar_boundary_square") {
      const Complex c = trace_full_sq_scalar_boundary(sp, x);
      rep.records.push_back({"trace_full_sq_scalar_boundary", c, "closed_form", 1e-12 * (1 + std::abs(c)), 0.0});
      rep.checks.push_back(agreement("scalar_boundary_vs_full", c, 0.0, v, 1e-12 * (1 + std::abs(v))));
    } else {
      const Complex o = second_order_square_oracle(sp.R, sp.S, sp.T, sp.nu);
      rep.records.push_back({"trace_full_sq_oracle", o, "kernel_quadrature", 1e-6 * (1 + std::abs(o)), 0.0});
      rep.checks.push_back(agreement("full_square_vs_oracle", v, 0.0, o, 1e-6 * (1 + std::abs(o))));
      const Complex fo = first_order_trace(2);
      rep.records.push_back({"trace_full_sq_first_order", fo, "trace_formula(m=2) on reduction", 1e-8 * (1 + std::abs(fo)), 0.0});
      rep.checks.push_back(agreement("full_square_vs_first_order", v, 0.0, fo, 1e-7 * (1 + std::abs(fo))));
    }
  } else if (name == "krein") {
    const KreinClassics k = krein_classics(sp);
    rep.records.push_back({"sum1", k.sum1, "closed_form", 1e-12 * (1 + std::abs(k.sum1)), 0.0});
    rep.records.push_back({"sum2", k.sum2, "closed_form", 1e-12 * (1 + std::abs(k.sum2)), 0.0});
    rep.checks.push_back(agreement("sum1_vs_resolvent", k.sum1, 0.0, trace_RAinv(sp), 1e-12 * (1 + std::abs(k.sum1))));
    rep.checks.push_back(agreement("sum2_vs_scalar_boundary_square", k.sum2, 0.0, trace_full_sq_scalar_boundary(sp, x_path(sp)),
                                   1e-12 * (1 + std::abs(k.sum2))));
    if (f.radius) {
      EigOptions eo;
      eo.growth_exponent = 0.5;
      const BvpEigs e = bvp_eigenvalues(ff.D0, ff.D, ff.boundary, f.center.value_or(0.0), *f.radius, eo);
      for (int m = 1; m <= 2; ++m) {
        const EigenSum s = eigen_sum(e, m);
        const Complex ref = m == 1 ? k.sum1 : k.sum2;
        rep.records.push_back({m == 1 ? "sum1_eigsum" : "sum2_eigsum", s.value, "argument_principle", s.tail_bound, *f.radius});
        const double d = std::abs(ref - s.value);
        rep.checks.push_back({m == 1 ? "sum1_vs_eigsum" : "sum2_vs_eigsum", d <= s.tail_bound,
                              "diff=" + fmt(d) + " tail_bound=" + fmt(s.tail_bound)});
      }
    }
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown formula '" + name + "'");
  }
  (void)n;
}

inline void run_converge(RunReport& rep, const ProblemFile& p) {
  const BoundaryData b = p.boundary();
  const HillReport h = hill_verify(p.D, b, p.nu, p.schedule, {}, p.quadrature);
  const Flow f0 = fundamental_solution(p.D0);
  const GFactors g = g_factors(iterated_integrals(f0, p.D, 2), monodromy(f0, b), p.nu, b.T);
  const Complex tf = trace_formula(g, 2, p.D);
  const Extrapolation tr = truncated_power_trace(OperatorSpec::f_operator(p.D0, p.D, p.nu), b, p.schedule, 2, p.quadrature);
  rep.table_header = {"cutoff", "det_re", "det_im", "det_rel_error", "trace2_re", "trace2_im", "trace2_abs_error"};
  for (std::size_t i = 0; i < p.schedule.size(); ++i) {
    const Complex d = h.lhs.values[i];
    rep.table.push_back({p.schedule[i], d.real(), d.imag(), std::abs(d - h.rhs) / std::max(std::abs(h.rhs), 1e-300),
                         tr.values[i].real(), tr.values[i].imag(), std::abs(tr.values[i] - tf)});
  }
  rep.records.push_back({"hill_lhs", h.lhs.extrapolated, "plain_truncation+richardson", h.lhs.error_estimate, p.schedule.back()});
  rep.records.push_back({"hill_rhs", h.rhs, "monodromy", 0.0, 0.0});
  rep.records.push_back({"trace2_formula", tf, "iterated_integrals", 0.0, 0.0});
  rep.records.push_back({"trace2_truncated", tr.extrapolated, "truncated_power+richardson", tr.error_estimate, p.schedule.back()});
  const auto& first = rep.table.front();
  const auto& last = rep.table.back();
  rep.checks.push_back({"det_error_decreases", h.singular || last[3] <= first[3] + 1e-14,
                        fmt(first[3]) + " -> " + fmt(last[3])});
  rep.checks.push_back({"trace2_error_decreases", last[6] <= first[6] + 1e-14, fmt(first[6]) + " -> " + fmt(last[6])});
}

}  // namespace detail

inline RunReport run(const std::string& command, const ProblemFile& p, const RunFlags& flags = {}) {
  const auto start = std::chrono::steady_clock::now();
  RunReport rep;
  rep.command = command;
  std::ostringstream key;
  key << command << '|' << p.source_text << '|' << flags.m.value_or(0) << '|' << flags.cutoff.value_or(0) << '|'
      << flags.radius.value_or(0) << '|' << flags.formula;
  const std::string k = key.str();
  rep.digest = hex_digest(fnv1a(k.data(), k.size()));
  if (command == "spectrum") detail::run_spectrum(rep, p, flags);
  else if (command == "hill") detail::run_hill(rep, p);
  else if (command == "trace") detail::run_trace(rep, p, flags);
  else if (command == "eigs") detail::run_eigs(rep, p, flags);
  else if (command == "krein") detail::run_krein(rep, p, flags);
  else if (command == "converge") detail::run_converge(rep, p);
  else throw Error(ErrorCode::InvalidArgument, "unknown command '" + command + "'");
  rep.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace hillkrein
