#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "quadrature.hpp"
#include "types.hpp"

namespace hillkrein {

// A continuous n x n matrix path on [0, T].
//   constant   D(t) = A
//   trigpoly   D(t) = A_0 + sum_k C_k cos(2 pi k t / T) + S_k sin(2 pi k t / T)
//   poly       D(t) = sum_k P_k t^k
//   samples    values on a uniform grid t_i = i T / N (both ends included),
//              joined by C^1 cubic Hermite pieces with finite-difference slopes
//   sum        linear combination of other paths
class CoeffPath {
 public:
  enum class Kind { zero, constant, trigpoly, poly, samples, sum };

  CoeffPath() = default;

  static CoeffPath zero(int n, double T) { return CoeffPath(Kind::zero, n, T); }

  static CoeffPath constant(const CMatrix& a, double T) {
    check_square(a);
    CoeffPath p(Kind::constant, static_cast<int>(a.rows()), T);
    p.a_ = {a};
    return p;
  }

  // cos_terms[k-1] and sin_terms[k-1] multiply frequency 2 pi k / T.
  static CoeffPath trigpoly(const CMatrix& mean, std::vector<CMatrix> cos_terms,
                            std::vector<CMatrix> sin_terms, double T) {
    check_square(mean);
    const int n = static_cast<int>(mean.rows());
    const std::size_t deg = std::max(cos_terms.size(), sin_terms.size());
    cos_terms.resize(deg, CMatrix::Zero(n, n));
    sin_terms.resize(deg, CMatrix::Zero(n, n));
    for (std::size_t k = 0; k < deg; ++k) {
      if (cos_terms[k].size() == 0) cos_terms[k] = CMatrix::Zero(n, n);
      if (sin_terms[k].size() == 0) sin_terms[k] = CMatrix::Zero(n, n);
      check_dim(cos_terms[k], n);
      check_dim(sin_terms[k], n);
    }
    CoeffPath p(Kind::trigpoly, n, T);
    p.a_.push_back(mean);
    p.a_.insert(p.a_.end(), cos_terms.begin(), cos_terms.end());
    p.b_.push_back(CMatrix::Zero(n, n));
    p.b_.insert(p.b_.end(), sin_terms.begin(), sin_terms.end());
    return p;
  }

  static CoeffPath poly(std::vector<CMatrix> coeffs, double T) {
    if (coeffs.empty()) throw Error(ErrorCode::InvalidArgument, "empty polynomial path");
    check_square(coeffs[0]);
    const int n = static_cast<int>(coeffs[0].rows());
    for (const auto& c : coeffs) check_dim(c, n);
    CoeffPath p(Kind::poly, n, T);
    p.a_ = std::move(coeffs);
    return p;
  }

  static CoeffPath samples(std::vector<CMatrix> values, double T) {
    if (values.size() < 2) throw Error(ErrorCode::InvalidArgument, "sampled path needs >= 2 samples");
    check_square(values[0]);
    const int n = static_cast<int>(values[0].rows());
    for (const auto& v : values) check_dim(v, n);
    CoeffPath p(Kind::samples, n, T);
    p.a_ = std::move(values);
    p.build_slopes();
    return p;
  }

  Kind kind() const { return kind_; }
  int dim() const { return n_; }
  double period() const { return T_; }
  bool is_zero() const { return kind_ == Kind::zero; }

  // Highest trigonometric degree (0 for non-trigonometric kinds).
  int bandwidth() const {
    if (kind_ == Kind::trigpoly) return static_cast<int>(a_.size()) - 1;
    int w = 0;
    for (const auto& t : terms_) w = std::max(w, t->bandwidth());
    return w;
  }

  // Number of equal pieces on which the path is smooth (sample intervals).
  int smooth_pieces() const {
    if (kind_ == Kind::samples) return static_cast<int>(a_.size()) - 1;
    int pieces = 1;
    for (const auto& t : terms_) pieces = std::lcm(pieces, t->smooth_pieces());
    return pieces;
  }

  // Degree of the polynomial part (for quadrature sizing).
  int poly_degree() const {
    if (kind_ == Kind::poly) return static_cast<int>(a_.size()) - 1;
    int d = 0;
    for (const auto& t : terms_) d = std::max(d, t->poly_degree());
    return d;
  }

  CMatrix operator()(double t) const {
    CMatrix out = CMatrix::Zero(n_, n_);
    add_to(out, t, Complex(1.0));
    return out;
  }

  // out += c * D(t)
  void add_to(CMatrix& out, double t, Complex c) const {
    switch (kind_) {
      case Kind::zero:
        return;
      case Kind::constant:
        out += c * a_[0];
        return;
      case Kind::trigpoly: {
        out += c * a_[0];
        const double w = 2.0 * kPi / T_;
        for (std::size_t k = 1; k < a_.size(); ++k) {
          const double arg = w * static_cast<double>(k) * t;
          out += (c * std::cos(arg)) * a_[k] + (c * std::sin(arg)) * b_[k];
        }
        return;
      }
      case Kind::poly: {
        Complex tk = c;
        for (const auto& p : a_) {
          out += tk * p;
          tk *= t;
        }
        return;
      }
      case Kind::samples: {
        const int N = static_cast<int>(a_.size()) - 1;
        const double h = T_ / N;
        double x = t / h;
        int i = static_cast<int>(std::floor(x));
        i = std::clamp(i, 0, N - 1);
        const double s = x - i;
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
        const double h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s);
        const double h11 = s * s * (s - 1);
        out += (c * h00) * a_[i] + (c * (h10 * h)) * slopes_[i] + (c * h01) * a_[i + 1] +
               (c * (h11 * h)) * slopes_[i + 1];
        return;
      }
      case Kind::sum:
        for (std::size_t k = 0; k < terms_.size(); ++k) terms_[k]->add_to(out, t, c * weights_[k]);
        return;
    }
  }

  // Integral over [0, T]; exact for every kind.
  CMatrix integral() const {
    switch (kind_) {
      case Kind::zero:
        return CMatrix::Zero(n_, n_);
      case Kind::constant:
        return T_ * a_[0];
      case Kind::trigpoly:
        return T_ * a_[0];
      case Kind::poly: {
        CMatrix out = CMatrix::Zero(n_, n_);
        double tk = T_;
        for (std::size_t k = 0; k < a_.size(); ++k) {
          out += (tk / static_cast<double>(k + 1)) * a_[k];
          tk *= T_;
        }
        return out;
      }
      case Kind::samples: {
        CMatrix out = CMatrix::Zero(n_, n_);
        const int N = static_cast<int>(a_.size()) - 1;
        const double h = T_ / N;
        for (int i = 0; i < N; ++i) out += piece_integral(i, h);
        return out;
      }
      case Kind::sum: {
        CMatrix out = CMatrix::Zero(n_, n_);
        for (std::size_t k = 0; k < terms_.size(); ++k) out += weights_[k] * terms_[k]->integral();
        return out;
      }
    }
    return CMatrix::Zero(n_, n_);
  }

  Complex trace_integral() const { return integral().trace(); }

  // t -> int_0^t D(s) ds as a path. Exact except for samples, where the
  // antiderivative is tabulated on the same grid and re-interpolated.
  CoeffPath antiderivative() const {
    switch (kind_) {
      case Kind::zero:
        return *this;
      case Kind::constant:
        return poly({CMatrix::Zero(n_, n_), a_[0]}, T_);
      case Kind::trigpoly: {
        const double w = 2.0 * kPi / T_;
        const std::size_t deg = a_.size() - 1;
        CMatrix mean = CMatrix::Zero(n_, n_);
        std::vector<CMatrix> cs(deg), ss(deg);
        for (std::size_t k = 1; k <= deg; ++k) {
          const double wk = w * static_cast<double>(k);
          mean += b_[k] / wk;
          cs[k - 1] = -b_[k] / wk;
          ss[k - 1] = a_[k] / wk;
        }
        CoeffPath osc = trigpoly(mean, cs, ss, T_);
        if (a_[0].isZero(0.0)) return osc;
        return osc + poly({CMatrix::Zero(n_, n_), a_[0]}, T_);
      }
      case Kind::poly: {
        std::vector<CMatrix> c{CMatrix::Zero(n_, n_)};
        for (std::size_t k = 0; k < a_.size(); ++k) c.push_back(a_[k] / static_cast<double>(k + 1));
        return poly(std::move(c), T_);
      }
      case Kind::samples: {
        const int N = static_cast<int>(a_.size()) - 1;
        const double h = T_ / N;
        std::vector<CMatrix> v{CMatrix::Zero(n_, n_)};
        for (int i = 0; i < N; ++i) v.push_back(v.back() + piece_integral(i, h));
        return samples(std::move(v), T_);
      }
      case Kind::sum: {
        CoeffPath out = zero(n_, T_);
        for (std::size_t k = 0; k < terms_.size(); ++k)
          out = out + weights_[k] * terms_[k]->antiderivative();
        return out;
      }
    }
    return zero(n_, T_);
  }

  // D(t) = sum_m E_m e^{2 pi i m t / T}, available for zero/constant/trigpoly
  // and sums of those.
  std::optional<std::map<int, CMatrix>> exponential_series() const {
    std::map<int, CMatrix> out;
    auto add = [&](int m, const CMatrix& x) {
      auto it = out.find(m);
      if (it == out.end()) out.emplace(m, x);
      else it->second += x;
    };
    switch (kind_) {
      case Kind::zero:
        return out;
      case Kind::constant:
        add(0, a_[0]);
        return out;
      case Kind::trigpoly:
        add(0, a_[0]);
        for (std::size_t k = 1; k < a_.size(); ++k) {
          add(static_cast<int>(k), 0.5 * (a_[k] - kI * b_[k]));
          add(-static_cast<int>(k), 0.5 * (a_[k] + kI * b_[k]));
        }
        return out;
      case Kind::sum:
        for (std::size_t k = 0; k < terms_.size(); ++k) {
          auto sub = terms_[k]->exponential_series();
          if (!sub) return std::nullopt;
          for (auto& [m, x] : *sub) add(m, weights_[k] * x);
        }
        return out;
      default:
        return std::nullopt;
    }
  }

  // Stable byte digest (FNV-1a) of the representation.
  std::uint64_t digest(std::uint64_t h = 1469598103934665603ull) const {
    auto mix = [&h](const void* p, std::size_t len) {
      const auto* c = static_cast<const unsigned char*>(p);
      for (std::size_t i = 0; i < len; ++i) {
        h ^= c[i];
        h *= 1099511628211ull;
      }
    };
    const int k = static_cast<int>(kind_);
    mix(&k, sizeof k);
    mix(&n_, sizeof n_);
    mix(&T_, sizeof T_);
    for (const auto* v : {&a_, &b_})
      for (const auto& m : *v) mix(m.data(), sizeof(Complex) * static_cast<std::size_t>(m.size()));
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      mix(&weights_[i], sizeof(Complex));
      h = terms_[i]->digest(h);
    }
    return h;
  }

  std::string kind_name() const {
    switch (kind_) {
      case Kind::zero: return "zero";
      case Kind::constant: return "constant";
      case Kind::trigpoly: return "trigpoly";
      case Kind::poly: return "poly";
      case Kind::samples: return "samples";
      case Kind::sum: return "sum";
    }
    return "?";
  }

  // The same path placed as the (row, col) block of an N x N zero matrix.
  CoeffPath embedded(int N, int row, int col) const {
    if (row + n_ > N || col + n_ > N) throw Error(ErrorCode::DimensionMismatch, "block does not fit");
    CoeffPath out = *this;
    out.n_ = N;
    auto lift = [&](CMatrix& m) {
      CMatrix big = CMatrix::Zero(N, N);
      big.block(row, col, n_, n_) = m;
      m = std::move(big);
    };
    for (auto& m : out.a_) lift(m);
    for (auto& m : out.b_) lift(m);
    for (auto& m : out.slopes_) lift(m);
    for (auto& t : out.terms_) t = std::make_shared<const CoeffPath>(t->embedded(N, row, col));
    return out;
  }

  friend CoeffPath operator*(Complex c, const CoeffPath& p) {
    if (p.kind_ == Kind::zero || c == Complex(0.0)) return zero(p.n_, p.T_);
    CoeffPath out = p;
    if (p.kind_ == Kind::sum) {
      for (auto& w : out.weights_) w *= c;
      return out;
    }
    for (auto& m : out.a_) m *= c;
    for (auto& m : out.b_) m *= c;
    for (auto& m : out.slopes_) m *= c;
    return out;
  }
  friend CoeffPath operator*(double c, const CoeffPath& p) { return Complex(c) * p; }

  friend CoeffPath operator+(const CoeffPath& x, const CoeffPath& y) {
    if (x.n_ != y.n_ || std::abs(x.T_ - y.T_) > 1e-14 * std::max(1.0, x.T_))
      throw Error(ErrorCode::DimensionMismatch, "path dimensions or periods differ");
    if (x.kind_ == Kind::zero) return y;
    if (y.kind_ == Kind::zero) return x;
    auto trig_like = [](Kind k) { return k == Kind::constant || k == Kind::trigpoly; };
    if (trig_like(x.kind_) && trig_like(y.kind_)) {
      const std::size_t deg = std::max(x.a_.size(), y.a_.size());
      std::vector<CMatrix> a(deg, CMatrix::Zero(x.n_, x.n_)), b(deg, CMatrix::Zero(x.n_, x.n_));
      for (const CoeffPath* p : {&x, &y}) {
        for (std::size_t k = 0; k < p->a_.size(); ++k) a[k] += p->a_[k];
        for (std::size_t k = 0; k < p->b_.size(); ++k) b[k] += p->b_[k];
      }
      if (deg == 1) return constant(a[0], x.T_);
      return trigpoly(a[0], std::vector<CMatrix>(a.begin() + 1, a.end()),
                      std::vector<CMatrix>(b.begin() + 1, b.end()), x.T_);
    }
    auto poly_like = [](Kind k) { return k == Kind::constant || k == Kind::poly; };
    if (poly_like(x.kind_) && poly_like(y.kind_)) {
      const std::size_t deg = std::max(x.a_.size(), y.a_.size());
      std::vector<CMatrix> a(deg, CMatrix::Zero(x.n_, x.n_));
      for (const CoeffPath* p : {&x, &y})
        for (std::size_t k = 0; k < p->a_.size(); ++k) a[k] += p->a_[k];
      return poly(std::move(a), x.T_);
    }
    if (x.kind_ == Kind::samples && y.kind_ == Kind::samples && x.a_.size() == y.a_.size()) {
      std::vector<CMatrix> v(x.a_.size());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = x.a_[i] + y.a_[i];
      return samples(std::move(v), x.T_);
    }
    CoeffPath out(Kind::sum, x.n_, x.T_);
    for (const CoeffPath* p : {&x, &y}) {
      if (p->kind_ == Kind::sum) {
        out.terms_.insert(out.terms_.end(), p->terms_.begin(), p->terms_.end());
        out.weights_.insert(out.weights_.end(), p->weights_.begin(), p->weights_.end());
      } else {
        out.terms_.push_back(std::make_shared<const CoeffPath>(*p));
        out.weights_.push_back(1.0);
      }
    }
    return out;
  }
  friend CoeffPath operator-(const CoeffPath& x, const CoeffPath& y) { return x + (-1.0) * y; }

 private:
  CoeffPath(Kind k, int n, double T) : kind_(k), n_(n), T_(T) {
    if (n < 1) throw Error(ErrorCode::DimensionMismatch, "path dimension must be positive");
    if (!(T > 0.0)) throw Error(ErrorCode::NonPositivePeriod, "path period must be positive");
  }

  static void check_square(const CMatrix& a) {
    if (a.rows() < 1 || a.rows() != a.cols())
      throw Error(ErrorCode::DimensionMismatch, "coefficient must be a non-empty square matrix");
  }
  static void check_dim(const CMatrix& a, int n) {
    if (a.rows() != n || a.cols() != n)
      throw Error(ErrorCode::DimensionMismatch, "coefficient dimensions differ");
  }

  void build_slopes() {
    const int N = static_cast<int>(a_.size()) - 1;
    const double h = T_ / N;
    slopes_.assign(a_.size(), CMatrix::Zero(n_, n_));
    if (N == 1) {
      slopes_[0] = slopes_[1] = (a_[1] - a_[0]) / h;
      return;
    }
    slopes_[0] = (-3.0 * a_[0] + 4.0 * a_[1] - a_[2]) / (2.0 * h);
    slopes_[N] = (3.0 * a_[N] - 4.0 * a_[N - 1] + a_[N - 2]) / (2.0 * h);
    for (int i = 1; i < N; ++i) slopes_[i] = (a_[i + 1] - a_[i - 1]) / (2.0 * h);
  }

  CMatrix piece_integral(int i, double h) const {
    return (0.5 * h) * (a_[i] + a_[i + 1]) + (h * h / 12.0) * (slopes_[i] - slopes_[i + 1]);
  }

  Kind kind_ = Kind::zero;
  int n_ = 1;
  double T_ = 1.0;
  std::vector<CMatrix> a_, b_, slopes_;
  std::vector<std::shared_ptr<const CoeffPath>> terms_;
  std::vector<Complex> weights_;
};

}  // namespace hillkrein
