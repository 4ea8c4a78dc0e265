#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "planckwave/cutoff.hpp"
#include "planckwave/error.hpp"
#include "planckwave/field.hpp"
#include "planckwave/lattice.hpp"
#include "planckwave/parallel.hpp"
#include "planckwave/quadrature.hpp"

namespace planckwave {

// ---------------------------------------------------------------------------
// Localizer symbol
//
//   p(y, eta) = A h^{-n/2+alpha} mu^{-(n+1)/2}
//               chi(|<x-y, xi>| / L_long) chi(|(x-y)_perp| / L_trans)
//               chi(|eta|/4) chi(h^-alpha |eta/|eta| - xi|)
//
// with L_long = mu^2 h^{1-2 alpha} and L_trans = mu h^{1-alpha}. Acting on a
// plane wave of frequency xi_j the product symbol gives the exact image
//   psi_j(y) = prefactor * w(y) * chi(h^-alpha |xi_j/|xi_j| - xi|) e^{i<y,xi_j>/h}.
// ---------------------------------------------------------------------------

struct LocalizerSymbol {
  Eigen::VectorXd x;
  Eigen::VectorXd xi;
  ModelParams params;
  double A_norm = 0.0;
  SmoothCutoff chi;

  int dim() const { return params.n; }
  double long_scale() const { return params.mu * params.mu * std::pow(params.h, 1.0 - 2.0 * params.alpha); }
  double trans_scale() const { return params.mu * std::pow(params.h, 1.0 - params.alpha); }
  double prefactor() const {
    return A_norm * std::pow(params.h, -0.5 * params.n + params.alpha) * std::pow(params.mu, -0.5 * (params.n + 1));
  }

  double angular_argument(const Eigen::Ref<const Eigen::VectorXd>& eta) const {
    return std::pow(params.h, -params.alpha) * (eta.normalized() - xi).norm();
  }
  double angular_weight(const Eigen::Ref<const Eigen::VectorXd>& eta) const { return chi(angular_argument(eta)); }

  /// Spatial envelope w(y).
  double envelope(const Eigen::Ref<const Eigen::VectorXd>& y) const {
    const Eigen::VectorXd d = x - y;
    const double along = d.dot(xi);
    const double across = (d - along * xi).norm();
    return chi(std::abs(along) / long_scale()) * chi(across / trans_scale());
  }

  /// Full symbol value p(y, eta).
  double operator()(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& eta) const {
    const double radial = eta.norm();
    if (radial == 0.0) return 0.0;
    return prefactor() * envelope(y) * chi(radial / 4.0) * angular_weight(eta);
  }
};

namespace detail {

// Surface area of the unit sphere S^{d-1} in R^d.
inline double sphere_area(int d) { return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d); }

}  // namespace detail

/// Fourier transforms of the squared cutoff profile,
///   longitudinal(k) = int_R e^{iks} chi^2(|s|) ds,
///   transverse(k)   = int_{R^d} e^{i<r,kappa>} chi^2(|r|) dr, |kappa| = k,
/// evaluated by composite Gauss-Legendre on [0,1] u [1,2] with a
/// panel-doubling (Richardson) convergence check.
class EnvelopeTransform {
 public:
  explicit EnvelopeTransform(int transverse_dim, double tolerance = 1e-6)
      : dim_(transverse_dim), tolerance_(tolerance) {
    if (transverse_dim < 1) throw ConfigError("transverse dimension must be >= 1");
    long0_ = integrate([](double, double w) { return 2.0 * w; }, 8);
    trans0_ = dim_ == 1 ? long0_ : integrate([this](double r, double w) {
      return detail::sphere_area(dim_) * std::pow(r, dim_ - 1) * w;
    }, 8);
  }

  double longitudinal(double k) const {
    if (k == 0.0) return long0_;
    return converge([k](double s, double w) { return 2.0 * std::cos(k * s) * w; }, k, long0_);
  }

  double transverse(double k) const {
    if (k == 0.0) return trans0_;
    if (dim_ == 1) return longitudinal(k);
    if (dim_ == 2)
      return converge([k](double r, double w) { return 2.0 * std::numbers::pi * std::cyl_bessel_j(0.0, k * r) * r * w; },
                      k, trans0_);
    const double nu = 0.5 * dim_ - 1.0;
    const double scale = std::pow(2.0 * std::numbers::pi, 0.5 * dim_) * std::pow(k, 1.0 - 0.5 * dim_);
    return converge([=, this](double r, double w) { return scale * std::cyl_bessel_j(nu, k * r) * std::pow(r, 0.5 * dim_) * w; },
                    k, trans0_);
  }

  /// int_{R^{1+d}} chi^2(|y_1|) chi^2(|y'|) dy.
  double volume_constant() const { return long0_ * trans0_; }
  int transverse_dim() const { return dim_; }

 private:
  struct Table {
    std::vector<double> nodes, weights, profile;
  };

  const Table& table(std::size_t panels) const {
    auto it = tables_.find(panels);
    if (it != tables_.end()) return it->second;
    Table t;
    for (auto [a, b] : {std::pair{0.0, 1.0}, std::pair{1.0, 2.0}}) {
      const auto rule = composite_gauss_legendre<10>(a, b, panels);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        t.nodes.push_back(rule.nodes[q]);
        t.weights.push_back(rule.weights[q]);
        t.profile.push_back(chi_.squared(rule.nodes[q]));
      }
    }
    return tables_.emplace(panels, std::move(t)).first->second;
  }

  template <typename Integrand>
  double integrate(Integrand&& f, std::size_t panels) const {
    const Table& t = table(panels);
    double acc = 0.0;
    for (std::size_t q = 0; q < t.nodes.size(); ++q) acc += t.weights[q] * f(t.nodes[q], t.profile[q]);
    return acc;
  }

  template <typename Integrand>
  double converge(Integrand&& f, double k, double scale) const {
    std::size_t panels = 4;
    while (static_cast<double>(panels) < std::abs(k) / 2.0) panels *= 2;
    double coarse = integrate(f, panels);
    for (int attempt = 0; attempt < 6; ++attempt) {
      const double fine = integrate(f, 2 * panels);
      if (std::abs(fine - coarse) <= tolerance_ * scale) return fine;
      coarse = fine;
      panels *= 2;
    }
    throw NumericalError("envelope quadrature did not converge (Richardson disagreement above tolerance)");
  }

  int dim_;
  double tolerance_;
  SmoothCutoff chi_;
  double long0_ = 0.0;
  double trans0_ = 0.0;
  mutable std::map<std::size_t, Table> tables_;
};

/// Sum_j chi^2(h^-alpha |xi_j/|xi_j| - xi|) over the lattice.
inline double aperture_sum(const MomentumLattice& lattice, const Eigen::VectorXd& xi, double alpha) {
  const SmoothCutoff chi;
  const double scale = std::pow(lattice.params.h, -alpha);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < lattice.size(); ++j)
    acc += chi.squared(scale * (lattice.point(j).normalized() - xi).norm());
  return acc;
}

/// Prefactor A with E[G^2] = Tr(A) = 1 for the product-symbol action:
///   A^2 h^{1-n+(n-1)(1-alpha)} N^{-1} sum_j chi_j^2 int chi^2 chi^2 dy = 1.
inline double normalization_constant(const ModelParams& p, const MomentumLattice& lattice, const Eigen::VectorXd& xi,
                                     const EnvelopeTransform& transform) {
  const double modes = aperture_sum(lattice, xi, p.alpha);
  if (!(modes > 0.0)) throw NumericalError("no modes in aperture");
  const double scale = std::pow(p.h, 1.0 - p.n + (p.n - 1) * (1.0 - p.alpha)) / static_cast<double>(lattice.size());
  return 1.0 / std::sqrt(scale * modes * transform.volume_constant());
}

inline double normalization_constant(const ModelParams& p, const MomentumLattice& lattice, const Eigen::VectorXd& xi) {
  return normalization_constant(p, lattice, xi, EnvelopeTransform(p.n - 1));
}

inline LocalizerSymbol make_symbol(const ModelParams& p, const MomentumLattice& lattice, Eigen::VectorXd x,
                                   Eigen::VectorXd xi, const EnvelopeTransform& transform) {
  p.validate();
  if (x.size() != p.n || xi.size() != p.n) throw ConfigError("localizer center has the wrong dimension");
  if (std::abs(xi.norm() - 1.0) > 1e-12) throw ConfigError("localizer direction must be a unit vector");
  // chi(|eta|/4) == 1 on the whole lattice
  if (lattice.points.colwise().norm().maxCoeff() > 4.0) throw ConfigError("lattice momenta exceed the radial cutoff");
  const double a = normalization_constant(p, lattice, xi, transform);
  return LocalizerSymbol{std::move(x), std::move(xi), p, a, {}};
}

inline LocalizerSymbol make_symbol(const ModelParams& p, const MomentumLattice& lattice, Eigen::VectorXd x,
                                   Eigen::VectorXd xi) {
  return make_symbol(p, lattice, std::move(x), std::move(xi), EnvelopeTransform(p.n - 1));
}

/// psi_j = weight * w(y) * exp(i <y, frequency> / h).
struct PsiDescriptor {
  double weight = 0.0;
  Eigen::VectorXd frequency;

  bool is_zero() const { return weight == 0.0; }

  cplx operator()(const LocalizerSymbol& symbol, const Eigen::Ref<const Eigen::VectorXd>& y) const {
    if (is_zero()) return 0.0;
    return std::polar(weight * symbol.envelope(y), frequency.dot(y) / symbol.params.h);
  }
};

inline PsiDescriptor psi_j(const LocalizerSymbol& symbol, const Eigen::Ref<const Eigen::VectorXd>& xi_j) {
  return PsiDescriptor{symbol.prefactor() * symbol.angular_weight(xi_j), xi_j};
}

/// (A)_{jm} = N^{-1} int psi_j conj(psi_m) dy, factorized in the frame aligned
/// with xi into a longitudinal and a transverse transform of w^2.
inline cplx gram_entry(const LocalizerSymbol& symbol, const EnvelopeTransform& transform,
                       const Eigen::Ref<const Eigen::VectorXd>& xi_j, const Eigen::Ref<const Eigen::VectorXd>& xi_m,
                       Eigen::Index lattice_size) {
  const double wj = symbol.angular_weight(xi_j);
  const double wm = symbol.angular_weight(xi_m);
  if (wj == 0.0 || wm == 0.0) return 0.0;
  const double h = symbol.params.h;
  const Eigen::VectorXd eta = xi_j - xi_m;
  const double eta_long = eta.dot(symbol.xi);
  const double eta_trans = (eta - eta_long * symbol.xi).norm();
  const double L1 = symbol.long_scale();
  const double L2 = symbol.trans_scale();
  const double pre = symbol.prefactor();
  const double magnitude = pre * pre * wj * wm * L1 * transform.longitudinal(L1 * eta_long / h) *
                           std::pow(L2, symbol.dim() - 1) * transform.transverse(L2 * eta_trans / h) /
                           static_cast<double>(lattice_size);
  return std::polar(1.0, symbol.x.dot(eta) / h) * magnitude;
}

/// Active-set block of the localizer Gram matrix.
struct LocalizerGram {
  std::vector<Eigen::Index> active;
  Eigen::MatrixXcd A;
  ModelParams params;
  Eigen::Index lattice_size = 0;

  Eigen::Index active_size() const { return static_cast<Eigen::Index>(active.size()); }

  Eigen::MatrixXcd full() const {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(lattice_size, lattice_size);
    for (Eigen::Index a = 0; a < active_size(); ++a)
      for (Eigen::Index b = 0; b < active_size(); ++b) out(active[a], active[b]) = A(a, b);
    return out;
  }

  Eigen::VectorXd restrict(const Eigen::VectorXd& c) const {
    Eigen::VectorXd out(active_size());
    for (Eigen::Index a = 0; a < active_size(); ++a) out[a] = c[active[a]];
    return out;
  }
};

inline std::vector<Eigen::Index> active_set(const LocalizerSymbol& symbol, const MomentumLattice& lattice) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index j = 0; j < lattice.size(); ++j)
    if (symbol.angular_weight(lattice.point(j)) > 0.0) out.push_back(j);
  return out;
}

inline constexpr Eigen::Index kDefaultActiveBudget = 4096;

inline LocalizerGram build_gram(const LocalizerSymbol& symbol, const MomentumLattice& lattice,
                                const EnvelopeTransform& transform, Eigen::Index budget = kDefaultActiveBudget) {
  LocalizerGram g{active_set(symbol, lattice), {}, symbol.params, lattice.size()};
  if (g.active.empty()) throw NumericalError("no modes in aperture");
  if (g.active_size() > budget)
    throw ConfigError("active set of " + std::to_string(g.active_size()) + " modes exceeds the budget");
  const Eigen::Index m = g.active_size();
  g.A.resize(m, m);
  for (Eigen::Index b = 0; b < m; ++b)
    for (Eigen::Index a = b; a < m; ++a) {
      const cplx v = gram_entry(symbol, transform, lattice.point(g.active[a]), lattice.point(g.active[b]), lattice.size());
      g.A(a, b) = v;
      g.A(b, a) = std::conj(v);
    }
  for (Eigen::Index a = 0; a < m; ++a) g.A(a, a) = g.A(a, a).real();
  return g;
}

inline LocalizerGram build_gram(const LocalizerSymbol& symbol, const MomentumLattice& lattice,
                                Eigen::Index budget = kDefaultActiveBudget) {
  return build_gram(symbol, lattice, EnvelopeTransform(symbol.dim() - 1), budget);
}

/// Eigen-decomposition of a Hermitian PSD matrix, eigenvalues descending.
struct SpectralData {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXcd eigenvectors;
  double trace = 0.0;
  double trace_sq = 0.0;
  double lambda_max_ratio = 0.0;
};

inline constexpr double kPsdTolerance = 1e-9;

inline SpectralData spectral(const Eigen::MatrixXcd& matrix) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(matrix);
  if (solver.info() != Eigen::Success) throw NumericalError("eigen-decomposition failed");
  SpectralData out;
  out.trace = matrix.diagonal().real().sum();
  out.trace_sq = matrix.cwiseAbs2().sum();
  const Eigen::Index m = matrix.rows();
  out.eigenvalues.resize(m);
  out.eigenvectors.resize(m, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    double lambda = solver.eigenvalues()[m - 1 - k];
    if (lambda < 0.0) {
      if (lambda < -kPsdTolerance * std::abs(out.trace)) throw NumericalError("indefinite Gram matrix");
      lambda = 0.0;
    }
    out.eigenvalues[k] = lambda;
    out.eigenvectors.col(k) = solver.eigenvectors().col(m - 1 - k);
  }
  out.lambda_max_ratio = out.trace > 0.0 ? out.eigenvalues[0] / out.trace : 0.0;
  return out;
}

inline SpectralData spectral(const LocalizerGram& gram) { return spectral(gram.A); }

/// Spectrum of Re(A), the matrix of G^2 as a quadratic form in real
/// coefficients: G^2 = sum_k lambda_k y_k^2 with y_k i.i.d. standard normal.
inline SpectralData quadratic_form_spectral(const LocalizerGram& gram) {
  return spectral(Eigen::MatrixXcd(gram.A.real().cast<cplx>()));
}

/// G = sqrt(N c^T Re(A) c) over the active set.
inline double g_statistic(const LocalizerGram& gram, const Eigen::VectorXd& c) {
  if (c.size() != gram.lattice_size) throw ConfigError("coefficient vector does not match lattice size");
  const Eigen::VectorXd ca = gram.restrict(c);
  const double g2 = static_cast<double>(gram.lattice_size) * ca.dot(gram.A.real() * ca);
  return std::sqrt(std::max(0.0, g2));
}

/// G from the eigen-route: G^2 = sum_k lambda_k |v_k^* sqrt(N) c|^2.
inline double g_statistic_spectral(const LocalizerGram& gram, const SpectralData& spec, const Eigen::VectorXd& c) {
  const Eigen::VectorXcd y = spec.eigenvectors.adjoint() * (std::sqrt(static_cast<double>(gram.lattice_size)) * gram.restrict(c)).cast<cplx>();
  double g2 = 0.0;
  for (Eigen::Index k = 0; k < y.size(); ++k) g2 += spec.eigenvalues[k] * std::norm(y[k]);
  return std::sqrt(g2);
}

/// log E[(sum_j lambda_j y_j^2)^M] for i.i.d. standard normal y_j, via the
/// cumulants kappa_r = 2^{r-1}(r-1)! sum_j lambda_j^r and the
/// moment-from-cumulant recurrence, computed on the trace-normalized
/// spectrum so that large M cannot overflow.
inline double exact_log_moment(const SpectralData& spec, int M) {
  if (M < 0 || M > 64) throw ConfigError("moment order must lie in [0, 64]");
  if (M == 0) return 0.0;
  const double scale = spec.eigenvalues.sum();
  if (!(scale > 0.0)) return -std::numeric_limits<double>::infinity();
  const Eigen::ArrayXd lam = spec.eigenvalues.array() / scale;
  // kappa_r / (r-1)! = 2^{r-1} sum lambda^r
  std::vector<double> reduced(M + 1, 0.0);
  Eigen::ArrayXd power = lam;
  for (int r = 1; r <= M; ++r) {
    reduced[r] = std::pow(2.0, r - 1) * power.sum();
    power *= lam;
  }
  // m_k / k! recurrence: m_k = sum_{r=1}^{k} C(k-1, r-1) kappa_r m_{k-r}
  //   => m_k/(k-1)! = sum_r [kappa_r/(r-1)!] [m_{k-r}/(k-r)!]
  std::vector<double> scaled(M + 1, 0.0);  // m_k / k!
  scaled[0] = 1.0;
  for (int k = 1; k <= M; ++k) {
    double acc = 0.0;
    for (int r = 1; r <= k; ++r) acc += reduced[r] * scaled[k - r];
    scaled[k] = acc / k;
  }
  return std::log(scaled[M]) + std::lgamma(M + 1.0) + M * std::log(scale);
}

inline double exact_moments(const SpectralData& spec, int M) { return std::exp(exact_log_moment(spec, M)); }

/// One row of the trace sweep.
struct TraceRow {
  double h = 0.0;
  double beta = 0.0;
  double alpha = 0.0;
  double mu = 0.0;
  Eigen::Index n_active = 0;
  double trace = 0.0;
  double trace_sq = 0.0;
  double lambda_max_ratio = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd xi;
};

struct LocalizerCenter {
  Eigen::VectorXd x;
  Eigen::VectorXd xi;
};

inline std::vector<TraceRow> trace_report(const ModelParams& params, const MomentumLattice& lattice,
                                          const std::vector<LocalizerCenter>& centers, const std::vector<double>& mus,
                                          unsigned threads = 1) {
  std::vector<TraceRow> rows(centers.size() * mus.size());
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    const auto& center = centers[i / mus.size()];
    ModelParams p = params;
    p.mu = mus[i % mus.size()];
    const EnvelopeTransform transform(p.n - 1);
    const auto symbol = make_symbol(p, lattice, center.x, center.xi, transform);
    const auto gram = build_gram(symbol, lattice, transform);
    const auto spec = spectral(gram);
    rows[i] = TraceRow{p.h, p.beta, p.alpha, p.mu, gram.active_size(), spec.trace, spec.trace_sq,
                       spec.lambda_max_ratio, center.x, center.xi};
  });
  return rows;
}

// ---------------------------------------------------------------------------
// Sup-grid scan of G over (x, xi).
//
// For a fixed direction the Gram at center x is D_x R D_x^* with R the real
// Gram at x = 0 and D_x = diag(exp(i <x, xi_j>/h)). With R = sum_k lambda_k
// v_k v_k^T, G^2(x) = N sum_k lambda_k |sum_j v_kj c_j e^{i<x,xi_j>/h}|^2, so
// one eigen-decomposition per direction serves every x.
// ---------------------------------------------------------------------------

struct PhaseGrid {
  std::vector<Eigen::VectorXd> directions;
  std::vector<Eigen::VectorXd> centers;  // x points in B_1(0)
  double x_spacing = 0.0;
  double xi_spacing = 0.0;

  std::size_t count() const { return directions.size() * centers.size(); }
};

inline PhaseGrid phase_grid(const ModelParams& p, double x_spacing = 0.0, double xi_spacing = 0.0,
                            double budget = 1e7) {
  PhaseGrid grid;
  grid.x_spacing = x_spacing > 0.0 ? x_spacing : p.h;
  grid.xi_spacing = xi_spacing > 0.0 ? xi_spacing : std::pow(p.h, p.alpha);
  const int n = p.n;
  const int kmax = static_cast<int>(std::floor(1.0 / grid.x_spacing));
  const double estimate_x = std::pow(2.0 * kmax + 1.0, n);
  const double estimate_xi = n == 2 ? 2.0 * std::numbers::pi / grid.xi_spacing
                                    : 4.0 * std::numbers::pi / (grid.xi_spacing * grid.xi_spacing);
  if (estimate_x * estimate_xi > budget) throw ConfigError("phase-space grid exceeds the point budget");
  std::vector<int> idx(n, -kmax);
  for (;;) {
    Eigen::VectorXd v(n);
    for (int d = 0; d < n; ++d) v[d] = idx[d] * grid.x_spacing;
    if (v.norm() <= 1.0) grid.centers.push_back(v);
    int d = 0;
    while (d < n && ++idx[d] > kmax) idx[d++] = -kmax;
    if (d == n) break;
  }
  if (n == 2) {
    const int m = std::max(1, static_cast<int>(std::ceil(estimate_xi)));
    for (int k = 0; k < m; ++k) {
      const double t = 2.0 * std::numbers::pi * k / m;
      grid.directions.push_back((Eigen::VectorXd(2) << std::cos(t), std::sin(t)).finished());
    }
  } else {
    const Eigen::MatrixXd pts = detail::fibonacci_sphere(std::max(2L, static_cast<long>(std::ceil(estimate_xi))), 1.0);
    for (Eigen::Index i = 0; i < pts.cols(); ++i) grid.directions.push_back(pts.col(i));
  }
  return grid;
}

class PhaseSupScanner {
 public:
  /// Each direction keeps the leading eigenpairs until the dropped
  /// eigenvalue mass is at most `truncation * trace`.
  PhaseSupScanner(const ModelParams& params, const MomentumLattice& lattice, const PhaseGrid& grid,
                  double truncation = 1e-10, unsigned threads = 1)
      : params_(params), lattice_(lattice), grid_(grid) {
    directions_.resize(grid.directions.size());
    parallel_for(directions_.size(), threads, [&](std::size_t d) {
      const EnvelopeTransform transform(params.n - 1);
      const auto symbol = make_symbol(params, lattice, Eigen::VectorXd::Zero(params.n), grid.directions[d], transform);
      const auto gram = build_gram(symbol, lattice, transform);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram.A.real());
      if (solver.info() != Eigen::Success) throw NumericalError("eigen-decomposition failed");
      const Eigen::Index m = gram.active_size();
      const double trace = solver.eigenvalues().sum();
      if (solver.eigenvalues()[0] < -kPsdTolerance * trace) throw NumericalError("indefinite Gram matrix");
      Eigen::Index keep = m;
      double dropped = 0.0;
      while (keep > 1 && dropped + std::max(0.0, solver.eigenvalues()[m - keep]) <= truncation * trace)
        dropped += std::max(0.0, solver.eigenvalues()[m - keep--]);
      DirectionData data;
      data.active = gram.active;
      data.lambda = solver.eigenvalues().tail(keep).reverse();
      data.vectors = solver.eigenvectors().rightCols(keep).rowwise().reverse();
      directions_[d] = std::move(data);
    });
  }

  std::size_t rank(std::size_t direction) const { return static_cast<std::size_t>(directions_[direction].lambda.size()); }

  /// Calls visit(column, direction, center, G^2) for every grid point.
  template <typename Visitor>
  void scan(const Eigen::MatrixXd& coeffs, Visitor&& visit, unsigned threads = 1) const {
    const double inv_h = 1.0 / params_.h;
    const double big_n = static_cast<double>(lattice_.size());
    const auto X = static_cast<Eigen::Index>(grid_.centers.size());
    const Eigen::Index draws = coeffs.cols();
    for (std::size_t d = 0; d < directions_.size(); ++d) {
      const auto& data = directions_[d];
      const auto M = static_cast<Eigen::Index>(data.active.size());
      const Eigen::Index r = data.lambda.size();
      // W is real, so split E into real and imaginary parts: two real GEMMs
      Eigen::MatrixXd Ere(X, M), Eim(X, M);
      for (Eigen::Index a = 0; a < M; ++a) {
        const auto xi_j = lattice_.point(data.active[a]);
        for (Eigen::Index p = 0; p < X; ++p) {
          const double phase = grid_.centers[p].dot(xi_j) * inv_h;
          Ere(p, a) = std::cos(phase);
          Eim(p, a) = std::sin(phase);
        }
      }
      const Eigen::Index batch = kBatch;
      const Eigen::Index blocks = (draws + batch - 1) / batch;
      std::vector<Eigen::MatrixXd> results(static_cast<std::size_t>(blocks));
      parallel_for(static_cast<std::size_t>(blocks), threads, [&](std::size_t b) {
        const Eigen::Index first = static_cast<Eigen::Index>(b) * batch;
        const Eigen::Index width = std::min(batch, draws - first);
        Eigen::MatrixXd W(M, r * width);
        for (Eigen::Index w = 0; w < width; ++w) {
          Eigen::VectorXd ca(M);
          for (Eigen::Index a = 0; a < M; ++a) ca[a] = coeffs(data.active[a], first + w);
          W.middleCols(w * r, r) = (data.vectors.array().colwise() * ca.array()).matrix();
        }
        Eigen::MatrixXd Y = (Ere * W).cwiseAbs2();
        Y.noalias() += (Eim * W).cwiseAbs2();
        Eigen::MatrixXd g2(X, width);
        for (Eigen::Index w = 0; w < width; ++w) g2.col(w) = big_n * (Y.middleCols(w * r, r) * data.lambda);
        results[b] = std::move(g2);
      });
      for (Eigen::Index b = 0; b < blocks; ++b)
        for (Eigen::Index w = 0; w < results[b].cols(); ++w)
          for (Eigen::Index p = 0; p < X; ++p) visit(b * batch + w, d, static_cast<std::size_t>(p), results[b](p, w));
    }
  }

  /// Max of G over the grid, per column.
  std::vector<double> sup(const Eigen::MatrixXd& coeffs, unsigned threads = 1) const {
    std::vector<double> out(static_cast<std::size_t>(coeffs.cols()), 0.0);
    scan(coeffs, [&](Eigen::Index col, std::size_t, std::size_t, double g2) {
      auto& v = out[static_cast<std::size_t>(col)];
      v = std::max(v, std::sqrt(std::max(0.0, g2)));
    }, threads);
    return out;
  }

  /// (mean over the grid of G^p)^{1/p}: the L^p norm for the normalized
  /// measure on the grid.
  std::vector<double> lp_norm(const Eigen::MatrixXd& coeffs, double p, unsigned threads = 1) const {
    std::vector<double> acc(static_cast<std::size_t>(coeffs.cols()), 0.0);
    scan(coeffs, [&](Eigen::Index col, std::size_t, std::size_t, double g2) {
      acc[static_cast<std::size_t>(col)] += std::pow(std::max(0.0, g2), 0.5 * p);
    }, threads);
    for (auto& v : acc) v = std::pow(v / static_cast<double>(grid_.count()), 1.0 / p);
    return acc;
  }

 private:
  static constexpr Eigen::Index kBatch = 16;
  struct DirectionData {
    std::vector<Eigen::Index> active;
    Eigen::VectorXd lambda;
    Eigen::MatrixXd vectors;
  };
  ModelParams params_;
  const MomentumLattice& lattice_;
  const PhaseGrid& grid_;
  std::vector<DirectionData> directions_;
};

}  // namespace planckwave
