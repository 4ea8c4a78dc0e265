#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "planckwave/coefficients.hpp"
#include "planckwave/error.hpp"
#include "planckwave/lattice.hpp"

namespace planckwave {

using cplx = std::complex<double>;

/// u(x) = sum_j c_j exp(i <x, xi_j> / h).
struct RandomWaveField {
  std::shared_ptr<const MomentumLattice> lattice;
  CoefficientVector coeffs;

  double h() const { return lattice->params.h; }
  int dim() const { return lattice->dim(); }
};

inline RandomWaveField make_field(std::shared_ptr<const MomentumLattice> lattice, CoefficientVector coeffs) {
  if (coeffs.size() != lattice->size()) throw ConfigError("coefficient vector does not match lattice size");
  return RandomWaveField{std::move(lattice), std::move(coeffs)};
}

namespace detail {

// Neumaier-compensated accumulator.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      carry += (sum - t) + v;
    else
      carry += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + carry; }
};

}  // namespace detail

inline cplx eval_field(const RandomWaveField& field, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const auto& pts = field.lattice->points;
  const double inv_h = 1.0 / field.h();
  detail::CompensatedSum re, im;
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    const double phase = pts.col(j).dot(x) * inv_h;
    const double c = field.coeffs.c[j];
    re.add(c * std::cos(phase));
    im.add(c * std::sin(phase));
  }
  return {re.value(), im.value()};
}

/// Termwise gradient: sum_j c_j (i xi_j / h) exp(i <x, xi_j> / h).
inline Eigen::VectorXcd eval_field_gradient(const RandomWaveField& field, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const auto& pts = field.lattice->points;
  const int n = field.dim();
  const double inv_h = 1.0 / field.h();
  std::vector<detail::CompensatedSum> re(n), im(n);
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    const double phase = pts.col(j).dot(x) * inv_h;
    const double c = field.coeffs.c[j] * inv_h;
    const double cs = c * std::cos(phase);
    const double sn = c * std::sin(phase);
    // i * (cos + i sin) = -sin + i cos
    for (int d = 0; d < n; ++d) {
      re[d].add(-pts(d, j) * sn);
      im[d].add(pts(d, j) * cs);
    }
  }
  Eigen::VectorXcd g(n);
  for (int d = 0; d < n; ++d) g[d] = {re[d].value(), im[d].value()};
  return g;
}

/// |u|^2 sampled on a regular grid over an axis-aligned box.
/// Values are row-major: axis 0 varies slowest.
struct Raster {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  int resolution = 0;
  std::vector<double> values;

  int dim() const { return static_cast<int>(lo.size()); }
  double coordinate(int axis, int k) const {
    return lo[axis] + (hi[axis] - lo[axis]) * static_cast<double>(k) / static_cast<double>(resolution - 1);
  }
};

inline constexpr double kMaxRasterNodes = 1e8;

inline Raster field_raster(const RandomWaveField& field, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                           int resolution) {
  const int n = field.dim();
  if (lo.size() != n || hi.size() != n) throw ConfigError("raster window dimension mismatch");
  if (resolution < 2) throw ConfigError("raster resolution must be >= 2");
  if (std::pow(static_cast<double>(resolution), n) > kMaxRasterNodes)
    throw ConfigError("raster resolution overflows the node budget");
  for (int d = 0; d < n; ++d)
    if (!(hi[d] > lo[d])) throw ConfigError("raster window must have hi > lo on every axis");
  // the box corner furthest from the origin must lie in B_2(0)
  Eigen::VectorXd corner(n);
  for (int d = 0; d < n; ++d) corner[d] = std::max(std::abs(lo[d]), std::abs(hi[d]));
  if (corner.norm() > 2.0 + 1e-12) throw ConfigError("raster window must lie inside B_2(0)");

  Raster out{lo, hi, resolution, {}};
  const auto& pts = field.lattice->points;
  const Eigen::Index count = pts.cols();
  const double inv_h = 1.0 / field.h();
  // per-axis phase tables: table[d](k, j) = exp(i x_k xi_{j,d} / h)
  std::vector<Eigen::MatrixXcd> table(n, Eigen::MatrixXcd(resolution, count));
  for (int d = 0; d < n; ++d)
    for (Eigen::Index j = 0; j < count; ++j)
      for (int k = 0; k < resolution; ++k)
        table[d](k, j) = std::polar(1.0, out.coordinate(d, k) * pts(d, j) * inv_h);

  // leading axes combined into rows, last axis by matrix product; rows go in
  // blocks so the complex work matrix stays small
  long rows = 1;
  for (int d = 0; d + 1 < n; ++d) rows *= resolution;
  const long block = std::max<long>(1, (1L << 22) / std::max<Eigen::Index>(count, 1));
  out.values.resize(static_cast<std::size_t>(rows) * resolution);
  std::vector<int> idx(n, 0);
  for (long first = 0; first < rows; first += block) {
    const long width = std::min(block, rows - first);
    Eigen::MatrixXcd lead(width, count);
    for (long w = 0; w < width; ++w) {
      long rem = first + w;
      for (int d = n - 2; d >= 0; --d) {
        idx[d] = static_cast<int>(rem % resolution);
        rem /= resolution;
      }
      for (Eigen::Index j = 0; j < count; ++j) {
        cplx v = field.coeffs.c[j];
        for (int d = 0; d + 1 < n; ++d) v *= table[d](idx[d], j);
        lead(w, j) = v;
      }
    }
    const Eigen::MatrixXcd u = lead * table[n - 1].transpose();
    for (long w = 0; w < width; ++w)
      for (int k = 0; k < resolution; ++k)
        out.values[static_cast<std::size_t>(first + w) * resolution + k] = std::norm(u(w, k));
  }
  return out;
}

}  // namespace planckwave
