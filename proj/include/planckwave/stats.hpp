#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "planckwave/error.hpp"

namespace planckwave {

inline constexpr std::array<double, 7> kQuantileLevels{0.01, 0.05, 0.25, 0.50, 0.75, 0.95, 0.99};

/// Monte Carlo summary of a scalar statistic.
struct EnsembleStats {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double median = 0.0;
  std::array<double, 7> quantiles{};
  double se = 0.0;
  std::vector<std::uint64_t> seeds;
};

namespace detail {

// Linear interpolation between order statistics (type 7).
inline double sorted_quantile(const std::vector<double>& sorted, double level) {
  const double pos = level * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

/// Midpoint of the middle order statistics.
inline double median(std::span<const double> samples) {
  if (samples.empty()) throw ConfigError("median of an empty sample");
  std::vector<double> s(samples.begin(), samples.end());
  const std::size_t m = s.size() / 2;
  std::nth_element(s.begin(), s.begin() + static_cast<long>(m), s.end());
  if (s.size() % 2 == 1) return s[m];
  const double upper = s[m];
  const double lower = *std::max_element(s.begin(), s.begin() + static_cast<long>(m));
  return 0.5 * (lower + upper);
}

inline EnsembleStats summarize(std::span<const double> samples, std::vector<std::uint64_t> seeds = {}) {
  if (samples.empty()) throw ConfigError("cannot summarize an empty sample");
  EnsembleStats out;
  out.count = samples.size();
  // two-pass for stability
  const double n = static_cast<double>(out.count);
  out.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : samples) ss += (v - out.mean) * (v - out.mean);
  out.variance = out.count > 1 ? ss / (n - 1.0) : 0.0;
  out.se = std::sqrt(out.variance / n);
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t q = 0; q < kQuantileLevels.size(); ++q) out.quantiles[q] = detail::sorted_quantile(sorted, kQuantileLevels[q]);
  out.median = median(samples);
  out.seeds = std::move(seeds);
  return out;
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double rms_residual = 0.0;
};

/// Ordinary least squares y = intercept + slope x.
inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("least squares needs at least two paired points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw NumericalError("least squares with constant abscissa");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    rss += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - rss / syy : 1.0;
  fit.rms_residual = std::sqrt(rss / n);
  return fit;
}

/// Slope of log y against log x.
inline LinearFit log_log_fit(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw NumericalError("log-log fit needs positive data");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return least_squares(lx, ly);
}

}  // namespace planckwave
