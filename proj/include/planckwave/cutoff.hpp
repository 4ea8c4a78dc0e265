#pragma once

#include <cmath>
#include <string_view>

namespace planckwave {

/// Smooth radial cutoff: 1 on [0,1], 0 on [2,inf), glued with the
/// exp(-1/t) mollifier so that every derivative exists.
class SmoothCutoff {
 public:
  static constexpr std::string_view profile = "exp-mollifier";

  double operator()(double t) const {
    t = std::abs(t);
    if (t <= 1.0) return 1.0;
    if (t >= 2.0) return 0.0;
    const double a = bump(2.0 - t);
    const double b = bump(t - 1.0);
    return a / (a + b);
  }

  double squared(double t) const {
    const double v = (*this)(t);
    return v * v;
  }

  /// d/dt chi(t) for t >= 0.
  double derivative(double t) const {
    t = std::abs(t);
    if (t <= 1.0 || t >= 2.0) return 0.0;
    const double sa = 2.0 - t;
    const double sb = t - 1.0;
    const double a = bump(sa);
    const double b = bump(sb);
    const double da = a / (sa * sa);
    const double db = b / (sb * sb);
    const double den = a + b;
    return -(da * b + a * db) / (den * den);
  }

 private:
  static double bump(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }
};

}  // namespace planckwave
