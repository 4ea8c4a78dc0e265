#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "planckwave/coefficients.hpp"
#include "planckwave/error.hpp"
#include "planckwave/stats.hpp"

namespace planckwave {

/// Two-sided exceedance frequencies around the sample median and a
/// Gaussian-shape fit log(freq) = a - c_hat t^2.
struct TailCurve {
  double median = 0.0;
  std::size_t sample_count = 0;
  std::vector<double> thresholds;
  std::vector<double> frequencies;
  std::vector<std::size_t> exceedances;
  double fit_c = 0.0;
  double fit_intercept = 0.0;
  double fit_lo = 0.0;  // threshold range used by the fit
  double fit_hi = 0.0;
  double fit_residual = 0.0;  // RMS of log(freq) residual
  std::size_t fit_points = 0;
  bool fit_ok = false;
};

inline constexpr std::size_t kMinTailSamples = 1000;
inline constexpr double kFitBandLow = 1e-3;
inline constexpr double kFitBandHigh = 1e-1;

inline TailCurve empirical_median_tails(std::span<const double> samples, std::size_t threshold_count = 200) {
  if (samples.size() < kMinTailSamples) throw ConfigError("tail estimation needs at least 1000 samples");
  TailCurve out;
  out.sample_count = samples.size();
  out.median = median(samples);
  std::vector<double> dev(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) dev[i] = std::abs(samples[i] - out.median);
  std::sort(dev.begin(), dev.end());
  const double top = dev.back();
  if (!(top > 0.0)) throw NumericalError("degenerate samples: all values equal");
  const double n = static_cast<double>(samples.size());
  std::vector<double> fx, fy;
  for (std::size_t k = 0; k < threshold_count; ++k) {
    const double t = top * static_cast<double>(k) / static_cast<double>(threshold_count);
    const auto count = static_cast<std::size_t>(dev.end() - std::lower_bound(dev.begin(), dev.end(), t));
    const double freq = static_cast<double>(count) / n;
    out.thresholds.push_back(t);
    out.exceedances.push_back(count);
    out.frequencies.push_back(freq);
    if (freq >= kFitBandLow && freq <= kFitBandHigh) {
      fx.push_back(t * t);
      fy.push_back(std::log(freq));
    }
  }
  out.fit_points = fx.size();
  if (fx.size() >= 3) {
    const auto fit = least_squares(fx, fy);
    out.fit_c = -fit.slope;
    out.fit_intercept = fit.intercept;
    out.fit_residual = fit.rms_residual;
    out.fit_lo = std::sqrt(fx.front());
    out.fit_hi = std::sqrt(fx.back());
    out.fit_ok = out.fit_c > 0.0;
  }
  return out;
}

/// Power map phi(t) = sign(t)|t|^q, q > 0.
struct PhiSpec {
  std::string name;
  double q = 1.0;

  double forward(double t) const { return std::copysign(std::pow(std::abs(t), q), t); }
  double inverse(double s) const { return std::copysign(std::pow(std::abs(s), 1.0 / q), s); }
  /// |phi'(t)| = q |t|^{q-1}
  double derivative(double t) const { return q * std::pow(std::abs(t), q - 1.0); }
};

inline PhiSpec power_map(double q) {
  if (!(q > 0.0)) throw ConfigError("power map exponent must be positive");
  return PhiSpec{"power(" + std::to_string(q) + ")", q};
}

/// phi^{-1}(mean phi(X)) for nonnegative samples, in log space so large
/// exponents cannot overflow.
inline double phi_mean(std::span<const double> samples, const PhiSpec& phi) {
  if (samples.empty()) throw ConfigError("empty sample");
  bool nonneg = std::all_of(samples.begin(), samples.end(), [](double v) { return v >= 0.0; });
  if (!nonneg) {
    double acc = 0.0;
    for (double v : samples) acc += phi.forward(v);
    return phi.inverse(acc / static_cast<double>(samples.size()));
  }
  double top = -std::numeric_limits<double>::infinity();
  for (double v : samples)
    if (v > 0.0) top = std::max(top, phi.q * std::log(v));
  if (!std::isfinite(top)) return 0.0;
  double acc = 0.0;
  for (double v : samples)
    if (v > 0.0) acc += std::exp(phi.q * std::log(v) - top);
  return std::exp((top + std::log(acc / static_cast<double>(samples.size()))) / phi.q);
}

/// |mean(X) - phi^{-1}(mean(phi(X)))|.
inline double phi_commute_gap(std::span<const double> samples, const PhiSpec& phi) {
  const double m = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
  return std::abs(m - phi_mean(samples, phi));
}

/// Evaluates a statistic on every column of a coefficient matrix.
using BatchStatistic = std::function<std::vector<double>(const Eigen::MatrixXd&)>;

struct LipschitzProbe {
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
  std::size_t pairs = 0;
};

/// max |X(c) - X(d)| / ||c - d|| from statistic values already evaluated on
/// the columns of C and D.
inline LipschitzProbe lipschitz_probe(const std::vector<double>& xc, const std::vector<double>& xd,
                                      const Eigen::MatrixXd& C, const Eigen::MatrixXd& D) {
  if (C.rows() != D.rows() || C.cols() != D.cols()) throw ConfigError("probe pairs must have matching shapes");
  if (xc.size() != static_cast<std::size_t>(C.cols()) || xd.size() != xc.size())
    throw ConfigError("statistic values do not match the probe pairs");
  LipschitzProbe out;
  out.pairs = static_cast<std::size_t>(C.cols());
  double acc = 0.0;
  for (Eigen::Index k = 0; k < C.cols(); ++k) {
    const double dist = (C.col(k) - D.col(k)).norm();
    if (dist == 0.0) continue;
    const double r = std::abs(xc[k] - xd[k]) / dist;
    out.max_ratio = std::max(out.max_ratio, r);
    acc += r;
  }
  out.mean_ratio = out.pairs ? acc / static_cast<double>(out.pairs) : 0.0;
  return out;
}

/// max |X(c) - X(d)| / ||c - d|| over the given pairs (columns of C and D).
inline LipschitzProbe lipschitz_probe(const BatchStatistic& stat, const Eigen::MatrixXd& C, const Eigen::MatrixXd& D) {
  if (C.rows() != D.rows() || C.cols() != D.cols()) throw ConfigError("probe pairs must have matching shapes");
  return lipschitz_probe(stat(C), stat(D), C, D);
}

/// Independent coefficient draws from the model law, one pair per column.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> probe_pairs(Eigen::Index lattice_size, std::size_t n_pairs,
                                                               std::uint64_t seed) {
  Eigen::MatrixXd C(lattice_size, static_cast<Eigen::Index>(n_pairs));
  Eigen::MatrixXd D(lattice_size, static_cast<Eigen::Index>(n_pairs));
  for (std::size_t k = 0; k < n_pairs; ++k) {
    C.col(static_cast<Eigen::Index>(k)) = sample_coefficients(lattice_size, derive_seed(seed, 0, k)).c;
    D.col(static_cast<Eigen::Index>(k)) = sample_coefficients(lattice_size, derive_seed(seed, 1, k)).c;
  }
  return {std::move(C), std::move(D)};
}

inline LipschitzProbe lipschitz_probe(const BatchStatistic& stat, Eigen::Index lattice_size, std::size_t n_pairs,
                                      std::uint64_t seed) {
  const auto [C, D] = probe_pairs(lattice_size, n_pairs, seed);
  return lipschitz_probe(stat, C, D);
}

}  // namespace planckwave
