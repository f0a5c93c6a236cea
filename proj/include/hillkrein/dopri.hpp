#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <vector>

#include "error.hpp"
#include "types.hpp"

namespace hillkrein {

struct OdeTolerance {
  double abs = 1e-12;
  double rel = 1e-10;
};

// Piecewise quartic continuous extension of a Dormand-Prince run.
class DenseSolution {
 public:
  DenseSolution() = default;

  double t_begin() const { return t_.front(); }
  double t_end() const { return t_.back(); }
  const std::vector<double>& grid() const { return t_; }
  const CVector& final_state() const { return final_; }
  int steps() const { return static_cast<int>(t_.size()) - 1; }
  bool dense() const { return !rc_.empty(); }

  CVector operator()(double t) const {
    if (rc_.empty()) throw Error(ErrorCode::InvalidArgument, "solution was built without dense output");
    if (t <= t_.front()) return start_;
    if (t >= t_.back()) return final_;
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - t_.begin()) - 1;
    const double h = t_[i + 1] - t_[i];
    const double th = (t - t_[i]) / h, th1 = 1.0 - th;
    const auto& r = rc_[i];
    return r[0] + th * (r[1] + th1 * (r[2] + th * (r[3] + th1 * r[4])));
  }

 private:
  template <class Rhs>
  friend DenseSolution integrate_dopri5(Rhs&& f, double t0, double t1, const CVector& y0,
                                        OdeTolerance tol, bool dense);

  std::vector<double> t_;
  std::vector<std::array<CVector, 5>> rc_;
  CVector start_, final_;
};

// Dormand-Prince 5(4) with FSAL and Hairer's quartic dense output.
// f(t, y, dy) writes y' into dy.
template <class Rhs>
DenseSolution integrate_dopri5(Rhs&& f, double t0, double t1, const CVector& y0, OdeTolerance tol,
                               bool dense) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                   a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;
  constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                   d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                   d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

  DenseSolution sol;
  sol.start_ = y0;
  sol.t_.push_back(t0);
  if (t1 <= t0) {
    sol.final_ = y0;
    return sol;
  }

  const Eigen::Index dim = y0.size();
  CVector y = y0, ynew(dim), ytmp(dim);
  CVector k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
  f(t0, y, k1);

  auto err_norm = [&](const CVector& err) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double sc = tol.abs + tol.rel * std::max(std::abs(y[i]), std::abs(ynew[i]));
      acc += std::norm(err[i]) / (sc * sc);
    }
    return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(dim, 1)));
  };

  // Initial step after Hairer's heuristic.
  double h;
  {
    double d0 = 0, dd1 = 0;
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double sc = tol.abs + tol.rel * std::abs(y[i]);
      d0 += std::norm(y[i]) / (sc * sc);
      dd1 += std::norm(k1[i]) / (sc * sc);
    }
    d0 = std::sqrt(d0 / dim);
    dd1 = std::sqrt(dd1 / dim);
    h = (d0 < 1e-5 || dd1 < 1e-5) ? 1e-6 : 0.01 * d0 / dd1;
    h = std::min(h, t1 - t0);
    ytmp = y + h * k1;
    f(t0 + h, ytmp, k2);
    double d2 = 0;
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double sc = tol.abs + tol.rel * std::abs(y[i]);
      d2 += std::norm(k2[i] - k1[i]) / (sc * sc);
    }
    d2 = std::sqrt(d2 / dim) / h;
    const double dm = std::max(dd1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / dm, 0.2);
    h = std::min({100 * h, h1, t1 - t0});
  }

  double t = t0;
  bool rejected = false;
  long steps = 0;
  const long max_steps = 2000000;
  while (t < t1) {
    if (++steps > max_steps) throw Error(ErrorCode::IntegratorFailure, "step budget exhausted");
    if (h < 1e-14 * std::max(1.0, std::abs(t)))
      throw Error(ErrorCode::IntegratorFailure, "step size underflow");
    bool last = false;
    if (t + h >= t1 || t + 1.01 * h >= t1) {
      h = t1 - t;
      last = true;
    }
    ytmp = y + h * (a21 * k1);
    f(t + c2 * h, ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    f(t + c3 * h, ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    f(t + c4 * h, ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(t + c5 * h, ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    const double tn = last ? t1 : t + h;
    f(tn, ytmp, k6);
    ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    f(tn, ynew, k7);
    const double err = err_norm(h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));
    if (!std::isfinite(err)) throw Error(ErrorCode::IntegratorFailure, "non-finite state");
    if (err <= 1.0) {
      if (dense) {
        std::array<CVector, 5> r;
        r[0] = y;
        r[1] = ynew - y;
        r[2] = h * k1 - r[1];
        r[3] = r[1] - h * k7 - r[2];
        r[4] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
        sol.rc_.push_back(std::move(r));
      }
      t = tn;
      sol.t_.push_back(t);
      y.swap(ynew);
      k1.swap(k7);
      double fac = err < 1e-10 ? 5.0 : 0.9 * std::pow(err, -0.2);
      fac = std::clamp(fac, 0.2, rejected ? 1.0 : 5.0);
      h *= fac;
      rejected = false;
    } else {
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      rejected = true;
    }
  }
  sol.final_ = y;
  return sol;
}

}  // namespace hillkrein
