#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <boost/math/special_functions/legendre.hpp>

#include "error.hpp"

namespace hillkrein {

// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussRule make_gauss_rule(unsigned order) {
  if (order == 0) throw Error(ErrorCode::InvalidArgument, "quadrature order must be positive");
  GaussRule rule;
  const auto zeros = boost::math::legendre_p_zeros<double>(static_cast<int>(order));
  auto weight = [order](double x) {
    const double dp = boost::math::legendre_p_prime<double>(static_cast<int>(order), x);
    return 2.0 / ((1.0 - x * x) * dp * dp);
  };
  for (auto it = zeros.rbegin(); it != zeros.rend(); ++it) {
    if (*it == 0.0) continue;
    rule.nodes.push_back(-*it);
    rule.weights.push_back(weight(*it));
  }
  for (double z : zeros) {
    rule.nodes.push_back(z);
    rule.weights.push_back(weight(z));
  }
  return rule;
}

// Rules are cached per order; the cache is safe to hit from several threads.
inline const GaussRule& gauss_rule(unsigned order) {
  static std::mutex mu;
  static std::map<unsigned, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<GaussRule>(make_gauss_rule(order));
  return *slot;
}

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Composite Gauss rule with equal panels on [a, b].
inline QuadratureRule composite_gauss(double a, double b, int panels, unsigned order) {
  if (panels < 1) panels = 1;
  const GaussRule& g = gauss_rule(order);
  QuadratureRule q;
  q.nodes.reserve(static_cast<std::size_t>(panels) * g.nodes.size());
  q.weights.reserve(q.nodes.capacity());
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      q.nodes.push_back(mid + 0.5 * h * g.nodes[i]);
      q.weights.push_back(0.5 * h * g.weights[i]);
    }
  }
  return q;
}

}  // namespace hillkrein
