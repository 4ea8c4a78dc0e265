#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "planckwave/error.hpp"
#include "planckwave/params.hpp"

namespace planckwave {

/// Finite set of h-separated momenta in the annulus
/// S^{n-1} x [1 - h^beta, 1 + h^beta]. Column j of `points` is xi_j.
struct MomentumLattice {
  ModelParams params;
  Eigen::MatrixXd points;  // n x N

  Eigen::Index size() const { return points.cols(); }
  int dim() const { return static_cast<int>(points.rows()); }
  auto point(Eigen::Index j) const { return points.col(j); }
};

namespace detail {

// Radii 1 + k h with |k h| <= h^beta, strictly positive.
inline std::vector<double> shell_radii(const ModelParams& p) {
  const double width = p.annulus_halfwidth();
  const auto kmax = static_cast<long>(std::floor(width / p.h * (1.0 + 1e-12)));
  std::vector<double> radii;
  for (long k = -kmax; k <= kmax; ++k) {
    const double r = 1.0 + static_cast<double>(k) * p.h;
    if (r > 0.5 * p.h) radii.push_back(r);
  }
  return radii;
}

// Largest number of equally spaced points on a circle of radius r whose
// chord spacing is at least h.
inline long circle_count(double r, double h) {
  const double s = h / (2.0 * r);
  if (s >= 1.0) return 1;
  return std::max(1L, static_cast<long>(std::floor(std::numbers::pi / std::asin(s))));
}

inline Eigen::MatrixXd fibonacci_sphere(long count, double radius) {
  Eigen::MatrixXd pts(3, count);
  if (count == 1) {
    pts.col(0) << radius, 0.0, 0.0;
    return pts;
  }
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (long i = 0; i < count; ++i) {
    const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(count);
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(i);
    pts.col(i) << radius * rho * std::cos(phi), radius * rho * std::sin(phi), radius * z;
  }
  return pts;
}

}  // namespace detail

/// Smallest pairwise distance, via a uniform hash grid with cell size `probe`.
/// Pairs further apart than `probe` are not examined, so the result is exact
/// whenever it is below `probe` and otherwise reported as `probe`.
inline double min_separation(const Eigen::MatrixXd& pts, double probe) {
  const Eigen::Index count = pts.cols();
  const int n = static_cast<int>(pts.rows());
  if (count < 2) return std::numeric_limits<double>::infinity();
  struct KeyHash {
    std::size_t operator()(const std::vector<long>& k) const {
      std::size_t s = 1469598103934665603ull;
      for (long v : k) s = (s ^ static_cast<std::size_t>(v)) * 1099511628211ull;
      return s;
    }
  };
  std::unordered_map<std::vector<long>, std::vector<Eigen::Index>, KeyHash> cells;
  std::vector<long> key(n);
  for (Eigen::Index j = 0; j < count; ++j) {
    for (int d = 0; d < n; ++d) key[d] = static_cast<long>(std::floor(pts(d, j) / probe));
    cells[key].push_back(j);
  }
  double best = probe;
  std::vector<long> other(n);
  const long stencil = static_cast<long>(std::pow(3, n));
  for (const auto& [cell, members] : cells) {
    for (long s = 0; s < stencil; ++s) {
      long rem = s;
      for (int d = 0; d < n; ++d) {
        other[d] = cell[d] + (rem % 3) - 1;
        rem /= 3;
      }
      auto it = cells.find(other);
      if (it == cells.end()) continue;
      for (Eigen::Index a : members)
        for (Eigen::Index b : it->second)
          if (a < b) best = std::min(best, (pts.col(a) - pts.col(b)).norm());
    }
  }
  return best;
}

/// Deterministic h-separated lattice: equal-angle circles (n = 2) or
/// Fibonacci spheres (n = 3) on radial shells spaced h apart.
inline MomentumLattice build_lattice(const ModelParams& params) {
  params.validate();
  if (params.n != 2 && params.n != 3)
    throw ConfigError("lattice construction is available for n = 2 and n = 3 only");
  const auto radii = detail::shell_radii(params);
  std::vector<Eigen::MatrixXd> shells;
  Eigen::Index total = 0;
  for (double r : radii) {
    Eigen::MatrixXd shell;
    if (params.n == 2) {
      const long m = detail::circle_count(r, params.h);
      shell.resize(2, m);
      for (long i = 0; i < m; ++i) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(m);
        shell.col(i) << r * std::cos(theta), r * std::sin(theta);
      }
    } else {
      const double area = 4.0 * std::numbers::pi * r * r;
      long m = std::max(1L, static_cast<long>(std::floor(0.9 * area / (params.h * params.h))));
      for (;;) {
        shell = detail::fibonacci_sphere(m, r);
        if (m == 1 || min_separation(shell, params.h) >= params.h) break;
        m = std::max(1L, static_cast<long>(std::floor(0.97 * static_cast<double>(m))));
      }
    }
    total += shell.cols();
    shells.push_back(std::move(shell));
  }
  if (total == 0) throw ConfigError("annulus admits no lattice point for " + params.describe());
  MomentumLattice lattice{params, Eigen::MatrixXd(params.n, total)};
  Eigen::Index at = 0;
  for (const auto& shell : shells) {
    lattice.points.middleCols(at, shell.cols()) = shell;
    at += shell.cols();
  }
  return lattice;
}

/// N / h^(beta - n): the lattice count constant.
inline double lattice_density_constant(const MomentumLattice& lattice) {
  const auto& p = lattice.params;
  return static_cast<double>(lattice.size()) / std::pow(p.h, p.beta - p.n);
}

}  // namespace planckwave
