#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

namespace planckwave {

/// Nodes and weights of a quadrature rule on an interval.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

namespace detail {

// Full symmetric Gauss-Legendre rule on [-1, 1] from boost's half tables.
template <unsigned Order>
const std::array<std::array<double, Order>, 2>& legendre_reference() {
  static const auto table = [] {
    using rule = boost::math::quadrature::gauss<double, Order>;
    std::array<std::array<double, Order>, 2> out{};
    const auto& x = rule::abscissa();
    const auto& w = rule::weights();
    std::size_t k = 0;
    for (std::size_t i = x.size(); i-- > 0;) {
      if (x[i] == 0.0) continue;
      out[0][k] = -x[i];
      out[1][k] = w[i];
      ++k;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      out[0][k] = x[i];
      out[1][k] = w[i];
      ++k;
    }
    return out;
  }();
  return table;
}

}  // namespace detail

/// Composite Gauss-Legendre rule with `panels` equal panels of order 10
/// (or 20) on [a, b].
template <unsigned Order = 10>
QuadratureRule composite_gauss_legendre(double a, double b, std::size_t panels) {
  static_assert(Order == 7 || Order == 10 || Order == 15 || Order == 20 || Order == 30);
  const auto& ref = detail::legendre_reference<Order>();
  QuadratureRule rule;
  rule.nodes.reserve(panels * Order);
  rule.weights.reserve(panels * Order);
  const double width = (b - a) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + width * static_cast<double>(p);
    const double mid = lo + 0.5 * width;
    for (unsigned i = 0; i < Order; ++i) {
      rule.nodes.push_back(mid + 0.5 * width * ref[0][i]);
      rule.weights.push_back(0.5 * width * ref[1][i]);
    }
  }
  return rule;
}

}  // namespace planckwave
