#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "boundary.hpp"
#include "coeff_path.hpp"
#include "fredholm.hpp"
#include "krein2.hpp"

namespace hillkrein {

using json = nlohmann::json;

struct SecondOrderBlock {
  CoeffPath R;
  RMatrix S;
  Complex nu{0.0};
};

struct ProblemFile {
  std::string version = "1";
  double T = 1.0;
  int n = 1;
  RMatrix S;
  CoeffPath D0;
  CoeffPath D;
  bool has_D = false;
  Complex nu{0.0};
  std::optional<SecondOrderBlock> second_order;
  std::vector<double> schedule;
  AssemblyOptions quadrature;
  std::optional<std::uint64_t> seed;
  std::string source_text;  // canonical dump used for the digest

  BoundaryData boundary() const { return make_boundary(S, T); }
  SecondOrderProblem second_order_problem() const {
    if (!second_order) throw Error(ErrorCode::SchemaError, "problem has no second_order block");
    return {second_order->R, second_order->S, T, second_order->nu};
  }
};

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Real trig polynomial of the given degree with entries uniform in [-1, 1],
// rescaled so that the Frobenius norms of all coefficients sum to `norm`.
inline CoeffPath random_trigpoly(int n, double T, int degree, double norm, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto draw = [&] {
    CMatrix m(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) m(i, j) = 2.0 * unit_uniform(rng) - 1.0;
    return m;
  };
  CMatrix mean = draw();
  std::vector<CMatrix> cs, ss;
  for (int k = 0; k < degree; ++k) {
    cs.push_back(draw());
    ss.push_back(draw());
  }
  double total = mean.norm();
  for (int k = 0; k < degree; ++k) total += cs[k].norm() + ss[k].norm();
  const double f = total > 0.0 ? norm / total : 0.0;
  mean *= f;
  for (auto& m : cs) m *= f;
  for (auto& m : ss) m *= f;
  if (degree == 0) return CoeffPath::constant(mean, T);
  return CoeffPath::trigpoly(mean, cs, ss, T);
}

namespace detail {

[[noreturn]] inline void schema(const std::string& what) { throw Error(ErrorCode::SchemaError, what); }

inline Complex parse_complex(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_object() && j.contains("re")) return {j.at("re").get<double>(), j.value("im", 0.0)};
  if (j.is_array() && j.size() == 2 && j[0].is_number()) return {j[0].get<double>(), j[1].get<double>()};
  schema("expected a number or {re, im}");
}

inline CMatrix parse_matrix(const json& j, int n) {
  if (j.is_number() || (j.is_object() && j.contains("re"))) return parse_complex(j) * CMatrix::Identity(n, n);
  if (!j.is_array() || static_cast<int>(j.size()) != n) schema("matrix must have n rows");
  CMatrix m(n, n);
  for (int i = 0; i < n; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != n) schema("matrix must have n columns");
    for (int k = 0; k < n; ++k) m(i, k) = parse_complex(row[static_cast<std::size_t>(k)]);
  }
  return m;
}

inline std::vector<CMatrix> parse_matrix_list(const json& j, int n) {
  if (!j.is_array()) schema("expected a list of matrices");
  std::vector<CMatrix> out;
  for (const auto& e : j) out.push_back(parse_matrix(e, n));
  return out;
}

inline CoeffPath parse_path(const json& j, int n, double T, std::optional<std::uint64_t> seed) {
  if (!j.is_object() || !j.contains("kind")) schema("path needs a kind");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "zero") return CoeffPath::zero(n, T);
  if (kind == "constant") return CoeffPath::constant(parse_matrix(j.at("value"), n), T);
  if (kind == "trigpoly") {
    std::vector<CMatrix> cs, ss;
    if (j.contains("cos")) cs = parse_matrix_list(j.at("cos"), n);
    if (j.contains("sin")) ss = parse_matrix_list(j.at("sin"), n);
    const CMatrix mean = j.contains("mean") ? parse_matrix(j.at("mean"), n) : CMatrix::Zero(n, n);
    if (cs.empty() && ss.empty()) return CoeffPath::constant(mean, T);
    return CoeffPath::trigpoly(mean, cs, ss, T);
  }
  if (kind == "poly") return CoeffPath::poly(parse_matrix_list(j.at("coeffs"), n), T);
  if (kind == "samples") return CoeffPath::samples(parse_matrix_list(j.at("values"), n), T);
  if (kind == "random_trigpoly") {
    const int degree = j.value("degree", 3);
    if (degree < 0) schema("degree must be >= 0");
    const auto s = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : seed.value_or(0);
    return random_trigpoly(n, T, degree, j.value("norm", 1.0), s);
  }
  if (kind == "sum") {
    CoeffPath out = CoeffPath::zero(n, T);
    for (const auto& t : j.at("terms")) {
      const Complex w = t.contains("weight") ? parse_complex(t.at("weight")) : Complex(1.0);
      out = out + w * parse_path(t.at("path"), n, T, seed);
    }
    return out;
  }
  schema("unknown path kind '" + kind + "'");
}

inline RMatrix parse_boundary(const json& j, int n) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "identity" || s == "periodic") return identity_boundary(n);
    if (s == "antiperiodic") return antiperiodic_boundary(n);
    schema("unknown boundary name '" + s + "'");
  }
  if (j.is_object() && j.contains("kind")) {
    const auto s = j.at("kind").get<std::string>();
    if (s == "identity" || s == "periodic") return identity_boundary(n);
    if (s == "antiperiodic") return antiperiodic_boundary(n);
    if (s == "rotation") return rotation_boundary(n, j.at("angle").get<double>());
    if (s == "matrix") return parse_boundary(j.at("value"), n);
    schema("unknown boundary kind '" + s + "'");
  }
  if (j.is_array()) {
    const CMatrix m = parse_matrix(j, n);
    if (m.imag().norm() != 0.0) schema("S must be real");
    return m.real();
  }
  schema("S must be a name, {kind, ...} or a matrix");
}

}  // namespace detail

inline ProblemFile parse_problem(const json& j) {
  if (!j.is_object()) detail::schema("problem must be an object");
  ProblemFile p;
  try {
    p.version = j.value("version", std::string("1"));
    if (!j.contains("T")) detail::schema("missing T");
    p.T = j.at("T").get<double>();
    if (!(p.T > 0.0)) throw Error(ErrorCode::NonPositivePeriod, "T must be positive");
    p.n = j.value("n", 1);
    if (p.n < 1) detail::schema("n must be >= 1");
    if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
    p.S = detail::parse_boundary(j.value("S", json("identity")), p.n);
    (void)make_boundary(p.S, p.T);  // orthogonality
    p.D0 = j.contains("D0") ? detail::parse_path(j.at("D0"), p.n, p.T, p.seed) : CoeffPath::zero(p.n, p.T);
    p.has_D = j.contains("D");
    p.D = p.has_D ? detail::parse_path(j.at("D"), p.n, p.T, p.seed) : CoeffPath::zero(p.n, p.T);
    if (j.contains("nu")) p.nu = detail::parse_complex(j.at("nu"));
    if (j.contains("second_order")) {
      const json& so = j.at("second_order");
      const int m = so.value("n", p.n);
      SecondOrderBlock b;
      b.R = detail::parse_path(so.at("R"), m, p.T, p.seed);
      b.S = detail::parse_boundary(so.value("S", json("antiperiodic")), m);
      (void)make_boundary(b.S, p.T);
      if (so.contains("nu")) b.nu = detail::parse_complex(so.at("nu"));
      p.second_order = std::move(b);
    }
    const double w = 2.0 * kPi / p.T;
    if (j.contains("truncation")) {
      const json& tr = j.at("truncation");
      if (tr.contains("lambda_schedule")) p.schedule = tr.at("lambda_schedule").get<std::vector<double>>();
      else if (tr.contains("lambda_multiples"))
        for (double m : tr.at("lambda_multiples").get<std::vector<double>>()) p.schedule.push_back(m * w);
    }
    if (p.schedule.empty()) p.schedule = default_schedule(p.T);
    for (std::size_t i = 0; i < p.schedule.size(); ++i) {
      if (!(p.schedule[i] > 0.0)) detail::schema("cutoffs must be positive");
      if (i > 0 && !(p.schedule[i] > p.schedule[i - 1])) detail::schema("lambda_schedule must be strictly increasing");
    }
    if (j.contains("quadrature")) {
      const json& q = j.at("quadrature");
      p.quadrature.min_panels = q.value("panels", 0);
      p.quadrature.quad_order = q.value("order", 20u);
      if (p.quadrature.quad_order < 2) detail::schema("quadrature order must be >= 2");
    }
  } catch (const json::exception& e) {
    detail::schema(e.what());
  }
  p.source_text = j.dump();
  return p;
}

inline ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SchemaError, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, e.what());
  }
  return parse_problem(j);
}

}  // namespace hillkrein
