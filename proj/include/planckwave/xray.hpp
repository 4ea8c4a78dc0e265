#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "planckwave/error.hpp"
#include "planckwave/field.hpp"
#include "planckwave/lattice.hpp"
#include "planckwave/parallel.hpp"
#include "planckwave/quadrature.hpp"

namespace planckwave {

/// Unit segment {x + s xi : s in [0, 1]} inside the unit ball.
struct Segment {
  Eigen::VectorXd x;
  Eigen::VectorXd xi;

  Eigen::VectorXd at(double s) const { return x + s * xi; }
  Eigen::VectorXd end() const { return x + xi; }
};

inline constexpr double kSegmentMargin = 1e-9;

inline Segment make_segment(Eigen::VectorXd x, Eigen::VectorXd xi) {
  if (x.size() != xi.size() || x.size() < 2) throw ConfigError("segment base point and direction differ in dimension");
  if (std::abs(xi.norm() - 1.0) > 1e-12) throw ConfigError("segment direction must be a unit vector");
  // the ball is convex, so both endpoints suffice
  const double limit = 1.0 - kSegmentMargin;
  if (x.norm() > limit || (x + xi).norm() > limit)
    throw ConfigError("segment is not properly contained in the unit ball");
  return Segment{std::move(x), std::move(xi)};
}

namespace detail {

// sin(t)/t with a short series near zero.
inline double sinc(double t) {
  if (std::abs(t) < 0.5e-6) {
    const double t2 = t * t;
    return 1.0 - t2 / 6.0 + t2 * t2 / 120.0 - t2 * t2 * t2 / 5040.0;
  }
  return std::sin(t) / t;
}

}  // namespace detail

/// int_gamma exp(i <y, xi_j - xi_l> / h) dl(y), in closed form.
inline cplx xray_gram_entry(const Segment& seg, const Eigen::Ref<const Eigen::VectorXd>& xi_j,
                            const Eigen::Ref<const Eigen::VectorXd>& xi_l, double h) {
  const Eigen::VectorXd eta = xi_j - xi_l;
  const double along = seg.xi.dot(eta) / h;
  // (e^{ia} - 1)/(ia) = e^{ia/2} sin(a/2)/(a/2)
  const double phase = seg.x.dot(eta) / h + 0.5 * along;
  return std::polar(detail::sinc(0.5 * along), phase);
}

/// Hermitian N x N Gram matrix of the plane waves on a segment.
struct XRayGram {
  Eigen::MatrixXcd B;
  Segment segment;
};

/// Real factorization B = D S D^*, D = diag(exp(i theta_j)), S real symmetric.
/// For real coefficients F^2 = a^T S a + b^T S b with a = c cos(theta),
/// b = c sin(theta).
struct XRayQuadraticForm {
  Eigen::MatrixXd S;
  Eigen::VectorXd theta;
  Segment segment;

  /// F^2 for every column of `coeffs`.
  Eigen::VectorXd squared(const Eigen::MatrixXd& coeffs) const {
    const Eigen::ArrayXd cs = theta.array().cos();
    const Eigen::ArrayXd sn = theta.array().sin();
    const Eigen::MatrixXd a = (coeffs.array().colwise() * cs).matrix();
    const Eigen::MatrixXd b = (coeffs.array().colwise() * sn).matrix();
    const Eigen::MatrixXd Sa = S * a;
    const Eigen::MatrixXd Sb = S * b;
    return ((a.array() * Sa.array()).colwise().sum() + (b.array() * Sb.array()).colwise().sum()).matrix().transpose();
  }

  Eigen::MatrixXd real_gram() const {
    const Eigen::Index count = theta.size();
    Eigen::MatrixXd out(count, count);
    for (Eigen::Index l = 0; l < count; ++l)
      for (Eigen::Index j = 0; j < count; ++j) out(j, l) = std::cos(theta[j] - theta[l]) * S(j, l);
    return out;
  }
};

inline XRayQuadraticForm xray_quadratic_form(const MomentumLattice& lattice, const Segment& seg) {
  const double h = lattice.params.h;
  const Eigen::VectorXd proj = (lattice.points.transpose() * seg.xi) / h;
  const Eigen::VectorXd mid = seg.x + 0.5 * seg.xi;
  const Eigen::VectorXd theta = (lattice.points.transpose() * mid) / h;
  const Eigen::Index count = lattice.size();
  Eigen::MatrixXd S(count, count);
  for (Eigen::Index l = 0; l < count; ++l) {
    S(l, l) = 1.0;
    for (Eigen::Index j = l + 1; j < count; ++j) {
      const double v = detail::sinc(0.5 * (proj[j] - proj[l]));
      S(j, l) = v;
      S(l, j) = v;
    }
  }
  return XRayQuadraticForm{std::move(S), theta, seg};
}

inline XRayGram build_xray_gram(const MomentumLattice& lattice, const Segment& seg) {
  const Eigen::Index count = lattice.size();
  XRayGram out{Eigen::MatrixXcd(count, count), seg};
  for (Eigen::Index l = 0; l < count; ++l) {
    out.B(l, l) = 1.0;
    for (Eigen::Index j = l + 1; j < count; ++j) {
      const cplx v = xray_gram_entry(seg, lattice.point(j), lattice.point(l), lattice.params.h);
      out.B(j, l) = v;
      out.B(l, j) = std::conj(v);
    }
  }
  return out;
}

/// F = ||u||_{L^2(segment)} from the Gram quadratic form.
inline double f_statistic(const RandomWaveField& field, const Segment& seg) {
  const auto& pts = field.lattice->points;
  const double h = field.h();
  const Eigen::VectorXd proj = (pts.transpose() * seg.xi) / h;
  const Eigen::VectorXd theta = (pts.transpose() * (seg.x + 0.5 * seg.xi)) / h;
  const Eigen::VectorXd& c = field.coeffs.c;
  const Eigen::ArrayXd a = c.array() * theta.array().cos();
  const Eigen::ArrayXd b = c.array() * theta.array().sin();
  double total = 0.0;
  for (Eigen::Index l = 0; l < c.size(); ++l) {
    double row = 0.0;
    for (Eigen::Index j = l + 1; j < c.size(); ++j)
      row += (a[j] * a[l] + b[j] * b[l]) * detail::sinc(0.5 * (proj[j] - proj[l]));
    total += 2.0 * row + a[l] * a[l] + b[l] * b[l];
  }
  return std::sqrt(std::max(0.0, total));
}

/// Panel length of the composite 10-point rule resolving |u|^2 on a line
/// with 16 nodes per wavelength of the highest lattice frequency.
inline double xray_panel_length(const ModelParams& p) {
  const double wavelength = 2.0 * std::numbers::pi * p.h / (1.0 + p.annulus_halfwidth());
  return 10.0 * wavelength / 16.0;
}

/// F by composite Gauss-Legendre quadrature of |u|^2 along the segment.
inline double f_statistic_quadrature(const RandomWaveField& field, const Segment& seg) {
  const auto panels = static_cast<std::size_t>(std::max(2.0, std::ceil(1.0 / xray_panel_length(field.lattice->params))));
  const auto rule = composite_gauss_legendre<10>(0.0, 1.0, panels);
  double total = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) total += rule.weights[q] * std::norm(eval_field(field, seg.at(rule.nodes[q])));
  return std::sqrt(total);
}

/// Restriction exponents: delta(n) of the segment restriction bound and
/// kappa(n) of the concentration rate.
struct ExponentTable {
  double delta = 0.0;
  double kappa = 0.0;
  bool log_loss = false;
};

inline ExponentTable exponent_table(int n, double beta) {
  if (n < 2) throw ConfigError("dimension must be >= 2");
  if (n == 2) return {0.25, 0.5 - 0.25 * beta, false};
  return {0.5 * (n - 2), 0.5, n == 3};
}

/// h^{-beta delta(n) + (beta - 1)/2}, with a sqrt(log(1/h)) loss for n = 3.
inline double theoretical_lipschitz_F(const ModelParams& p) {
  const auto e = exponent_table(p.n, p.beta);
  double value = std::pow(p.h, -p.beta * e.delta + 0.5 * (p.beta - 1.0));
  if (e.log_loss) value *= std::sqrt(std::log(1.0 / p.h));
  return value;
}

// ---------------------------------------------------------------------------
// Uniform (x, xi) grid for the exception-set scan.
//
// Segments are unoriented, so directions cover a hemisphere. For each
// direction the base points lie on lines parallel to xi with transverse
// spacing `spacing`; along each line they sit at -1 + i/K with K = ceil(1/spacing),
// so every segment is a union of whole longitudinal intervals.
// ---------------------------------------------------------------------------

struct XrayGridLine {
  Eigen::VectorXd offset;  // transverse position, orthogonal to xi
  std::vector<int> bases;  // base x = offset + (-1 + i/K) xi
};

struct XrayGridDirection {
  Eigen::VectorXd xi;
  std::vector<XrayGridLine> lines;
};

struct XrayGrid {
  int dim = 2;
  double spacing = 0.0;
  double spacing_exponent = 0.0;  // spacing = h^spacing_exponent
  double count_exponent = 0.0;    // count grows like h^-count_exponent
  int intervals_per_unit = 0;     // K
  std::vector<XrayGridDirection> directions;
  std::size_t count = 0;

  double base_coordinate(int i) const { return -1.0 + static_cast<double>(i) / intervals_per_unit; }

  template <typename Visitor>
  void for_each_segment(Visitor&& visit) const {
    for (const auto& dir : directions)
      for (const auto& line : dir.lines)
        for (int i : line.bases) visit(Segment{line.offset + base_coordinate(i) * dir.xi, dir.xi});
  }
};

inline double xray_grid_spacing_exponent(int n, double beta) {
  if (n == 2) return beta / 2.0 + (2.0 - beta) * (0.5 - beta / 4.0);
  return n - 2.0 + (n - beta) / 2.0;
}

namespace detail {

// Orthonormal basis of the complement of a unit vector (columns).
inline Eigen::MatrixXd orthogonal_complement(const Eigen::VectorXd& xi) {
  const Eigen::Index n = xi.size();
  Eigen::MatrixXd basis(n, n - 1);
  Eigen::Index filled = 0;
  for (Eigen::Index e = 0; e < n && filled < n - 1; ++e) {
    Eigen::VectorXd v = Eigen::VectorXd::Unit(n, e);
    v -= v.dot(xi) * xi;
    for (Eigen::Index k = 0; k < filled; ++k) v -= v.dot(basis.col(k)) * basis.col(k);
    if (v.norm() < 1e-6) continue;
    basis.col(filled++) = v.normalized();
  }
  return basis;
}

inline std::vector<Eigen::VectorXd> hemisphere_directions(int n, double spacing) {
  std::vector<Eigen::VectorXd> out;
  if (n == 2) {
    const int m = static_cast<int>(std::ceil(std::numbers::pi / spacing));
    for (int k = 0; k < m; ++k) {
      const double t = std::numbers::pi * k / m;
      out.push_back((Eigen::VectorXd(2) << std::cos(t), std::sin(t)).finished());
    }
    return out;
  }
  const long full = static_cast<long>(std::ceil(4.0 * std::numbers::pi / (spacing * spacing)));
  const Eigen::MatrixXd pts = fibonacci_sphere(std::max(2L, full), 1.0);
  for (Eigen::Index i = 0; i < pts.cols(); ++i)
    if (pts(2, i) > 0.0) out.push_back(pts.col(i));
  return out;
}

// Integer points of Z^d scaled by `spacing` inside a ball of radius `radius`.
inline std::vector<Eigen::VectorXd> transverse_points(int d, double spacing, double radius) {
  const int kmax = static_cast<int>(std::floor(radius / spacing));
  std::vector<Eigen::VectorXd> out;
  std::vector<int> idx(d, -kmax);
  for (;;) {
    Eigen::VectorXd v(d);
    for (int k = 0; k < d; ++k) v[k] = idx[k] * spacing;
    if (v.norm() <= radius) out.push_back(v);
    int k = 0;
    while (k < d && ++idx[k] > kmax) idx[k++] = -kmax;
    if (k == d) break;
  }
  return out;
}

}  // namespace detail

inline constexpr double kDefaultGridBudget = 1e7;

inline XrayGrid uniform_grid(const ModelParams& p, double budget = kDefaultGridBudget) {
  p.validate();
  if (p.n != 2 && p.n != 3) throw ConfigError("uniform grid is available for n = 2 and n = 3 only");
  XrayGrid grid;
  grid.dim = p.n;
  grid.spacing_exponent = xray_grid_spacing_exponent(p.n, p.beta);
  grid.count_exponent = (2.0 * p.n - 1.0) * grid.spacing_exponent;
  grid.spacing = std::pow(p.h, grid.spacing_exponent);
  grid.intervals_per_unit = static_cast<int>(std::ceil(1.0 / grid.spacing));
  const double s = grid.spacing;
  // a segment of unit length fits only if its line passes within sqrt(3)/2
  const double reach = std::sqrt(3.0) / 2.0;
  const double estimate = std::pow(2.0 * reach / s, p.n - 1) * (grid.intervals_per_unit + 1.0) *
                          (p.n == 2 ? std::numbers::pi / s : 2.0 * std::numbers::pi / (s * s));
  if (estimate > budget)
    throw ConfigError("uniform grid of ~" + std::to_string(static_cast<long long>(estimate)) +
                      " points exceeds the point budget");
  const double limit = 1.0 - kSegmentMargin;
  const auto offsets = detail::transverse_points(p.n - 1, s, reach);
  for (const auto& xi : detail::hemisphere_directions(p.n, s)) {
    XrayGridDirection dir{xi, {}};
    const Eigen::MatrixXd frame = detail::orthogonal_complement(xi);
    for (const auto& t : offsets) {
      XrayGridLine line{frame * t, {}};
      const double t2 = t.squaredNorm();
      for (int i = 0; i <= grid.intervals_per_unit; ++i) {
        const double a = grid.base_coordinate(i);
        if (std::sqrt(t2 + a * a) <= limit && std::sqrt(t2 + (a + 1.0) * (a + 1.0)) <= limit) line.bases.push_back(i);
      }
      grid.count += line.bases.size();
      if (!line.bases.empty()) dir.lines.push_back(std::move(line));
    }
    grid.directions.push_back(std::move(dir));
  }
  return grid;
}

/// Evaluates F on every grid segment for batches of coefficient vectors by
/// sampling u along the grid lines and summing interval integrals.
class XrayGridScanner {
 public:
  XrayGridScanner(const MomentumLattice& lattice, const XrayGrid& grid) : lattice_(lattice), grid_(grid) {
    const int K = grid.intervals_per_unit;
    const auto panels = static_cast<std::size_t>(std::ceil((1.0 / K) / xray_panel_length(lattice.params)));
    // 2K intervals covering [-1, 1]
    interval_rule_ = composite_gauss_legendre<10>(0.0, 1.0 / K, panels);
    const std::size_t per = interval_rule_.size();
    nodes_.resize(static_cast<Eigen::Index>(2 * K * per));
    weights_.resize(nodes_.size());
    for (int k = 0; k < 2 * K; ++k)
      for (std::size_t q = 0; q < per; ++q) {
        const auto at = static_cast<Eigen::Index>(k * per + q);
        nodes_[at] = -1.0 + static_cast<double>(k) / K + interval_rule_.nodes[q];
        weights_[at] = interval_rule_.weights[q];
      }
  }

  /// Calls visit(column, direction, line, base, F^2) for every grid segment
  /// and every column of `coeffs`.
  template <typename Visitor>
  void scan(const Eigen::MatrixXd& coeffs, Visitor&& visit, unsigned threads = 1) const {
    const double inv_h = 1.0 / lattice_.params.h;
    const Eigen::Index count = lattice_.size();
    const Eigen::Index draws = coeffs.cols();
    const int K = grid_.intervals_per_unit;
    const auto per = static_cast<Eigen::Index>(interval_rule_.size());
    const Eigen::Index Q = nodes_.size();
    for (std::size_t d = 0; d < grid_.directions.size(); ++d) {
      const auto& dir = grid_.directions[d];
      const Eigen::Index lines = static_cast<Eigen::Index>(dir.lines.size());
      if (lines == 0) continue;
      const Eigen::VectorXd along = (lattice_.points.transpose() * dir.xi) * inv_h;
      Eigen::MatrixXcd L(count, Q);
      for (Eigen::Index q = 0; q < Q; ++q)
        for (Eigen::Index j = 0; j < count; ++j) L(j, q) = std::polar(1.0, nodes_[q] * along[j]);
      Eigen::MatrixXcd T(lines, count);
      for (Eigen::Index r = 0; r < lines; ++r) {
        const Eigen::VectorXd ph = (lattice_.points.transpose() * dir.lines[r].offset) * inv_h;
        for (Eigen::Index j = 0; j < count; ++j) T(r, j) = std::polar(1.0, ph[j]);
      }
      const Eigen::Index batch = kBatch;
      const Eigen::Index blocks = (draws + batch - 1) / batch;
      std::vector<std::vector<double>> results(static_cast<std::size_t>(blocks));
      parallel_for(static_cast<std::size_t>(blocks), threads, [&](std::size_t b) {
        const Eigen::Index first = static_cast<Eigen::Index>(b) * batch;
        const Eigen::Index width = std::min(batch, draws - first);
        Eigen::MatrixXcd rows(lines * width, count);
        for (Eigen::Index w = 0; w < width; ++w)
          rows.middleRows(w * lines, lines) = (T.array().rowwise() * coeffs.col(first + w).transpose().array().cast<cplx>()).matrix();
        const Eigen::MatrixXcd U = rows * L;
        auto& out = results[b];
        for (Eigen::Index w = 0; w < width; ++w)
          for (Eigen::Index r = 0; r < lines; ++r) {
            std::vector<double> prefix(2 * K + 1, 0.0);
            for (int k = 0; k < 2 * K; ++k) {
              double acc = 0.0;
              for (Eigen::Index q = 0; q < per; ++q) acc += weights_[k * per + q] * std::norm(U(w * lines + r, k * per + q));
              prefix[k + 1] = prefix[k] + acc;
            }
            for (int i : dir.lines[r].bases) out.push_back(prefix[i + K] - prefix[i]);
          }
      });
      for (Eigen::Index b = 0; b < blocks; ++b) {
        const Eigen::Index first = b * batch;
        const Eigen::Index width = std::min(batch, draws - first);
        std::size_t at = 0;
        for (Eigen::Index w = 0; w < width; ++w)
          for (Eigen::Index r = 0; r < lines; ++r)
            for (int i : dir.lines[r].bases) visit(first + w, d, static_cast<std::size_t>(r), i, results[b][at++]);
      }
    }
  }

  /// Largest |F - 1| over the grid, per column.
  std::vector<double> max_deviation(const Eigen::MatrixXd& coeffs, unsigned threads = 1) const {
    std::vector<double> worst(static_cast<std::size_t>(coeffs.cols()), 0.0);
    scan(coeffs, [&](Eigen::Index col, std::size_t, std::size_t, int, double f2) {
      auto& w = worst[static_cast<std::size_t>(col)];
      w = std::max(w, std::abs(std::sqrt(std::max(0.0, f2)) - 1.0));
    }, threads);
    return worst;
  }

 private:
  static constexpr Eigen::Index kBatch = 16;
  const MomentumLattice& lattice_;
  const XrayGrid& grid_;
  QuadratureRule interval_rule_;
  Eigen::VectorXd nodes_;
  Eigen::VectorXd weights_;
};

}  // namespace planckwave
