#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "planckwave/coefficients.hpp"
#include "planckwave/concentration.hpp"
#include "planckwave/error.hpp"
#include "planckwave/lattice.hpp"
#include "planckwave/parallel.hpp"
#include "planckwave/params.hpp"
#include "planckwave/phasespace.hpp"
#include "planckwave/stats.hpp"
#include "planckwave/xray.hpp"

namespace planckwave {

enum class ExperimentKind { XrayPoint, XrayUniform, PhasePoint, PhaseSup, Traces, Tails };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::XrayPoint: return "xray";
    case ExperimentKind::XrayUniform: return "xray-uniform";
    case ExperimentKind::PhasePoint: return "phase";
    case ExperimentKind::PhaseSup: return "phase-sup";
    case ExperimentKind::Traces: return "traces";
    case ExperimentKind::Tails: return "tails";
  }
  return "unknown";
}

struct ExperimentConfig {
  ModelParams params;
  ExperimentKind kind = ExperimentKind::XrayPoint;
  std::size_t samples = 2000;
  double grid_budget = kDefaultGridBudget;
  std::uint64_t seed = 1;
  std::vector<double> h_sweep;               // empty: params.h alone
  std::vector<double> m_offsets{0.05};       // m(h) = N^{-kappa(n) + offset}
  bool large_mu = false;                     // mu = h^{-epsilon}
  std::vector<double> mu_sweep{1.0, 2.0, 4.0, 8.0};
  std::vector<Segment> segments;             // empty: default_segments(n)
  std::vector<LocalizerCenter> centers;      // empty: default_centers(n)
  double x_spacing = 0.0;                    // phase-sup overrides, 0 = default
  double xi_spacing = 0.0;
  std::vector<int> moment_orders{1, 2, 3, 4};
  std::string tail_statistic = "F";          // F | G
  std::vector<double> phi_exponents{2.0};
  unsigned threads = 1;

  std::vector<double> sweep() const { return h_sweep.empty() ? std::vector<double>{params.h} : h_sweep; }

  /// Model parameters at one sweep point, with mu resolved.
  ModelParams at(double h) const {
    ModelParams p = params;
    p.h = h;
    if (large_mu) p.mu = p.large_mu();
    p.validate();
    return p;
  }

  void validate() const {
    params.validate();
    if (samples < 1) throw ConfigError("sample count must be >= 1");
    for (double h : sweep()) at(h);
    if (kind == ExperimentKind::XrayUniform) {
      if (m_offsets.empty()) throw ConfigError("xray-uniform needs at least one m offset");
      for (double e : m_offsets)
        if (!(e > 0.0)) throw ConfigError("m(h) must be at least N^{-kappa + e} with e > 0");
    }
    for (int M : moment_orders)
      if (M < 1 || M > 64) throw ConfigError("moment orders must lie in [1, 64]");
    for (double mu : mu_sweep)
      if (!(mu >= 1.0)) throw ConfigError("mu sweep values must be >= 1");
    if (tail_statistic != "F" && tail_statistic != "G") throw ConfigError("tail statistic must be F or G");
    if (!(grid_budget > 0.0)) throw ConfigError("grid budget must be positive");
  }
};

/// Default test segments: a diameter-centred chord, a slanted offset chord and
/// a chord near the boundary.
inline std::vector<Segment> default_segments(int n) {
  std::vector<Segment> out;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n), xi = Eigen::VectorXd::Zero(n);
  xi[0] = 1.0;
  x[0] = -0.5;
  out.push_back(make_segment(x, xi));
  xi.setZero();
  xi[0] = std::cos(0.7);
  xi[1] = std::sin(0.7);
  x = -0.5 * xi;
  x[0] += 0.2;
  x[1] -= 0.25;
  out.push_back(make_segment(x, xi));
  xi.setZero();
  xi[1] = 1.0;
  x.setZero();
  x[0] = 0.8;
  x[1] = -0.5;
  out.push_back(make_segment(x, xi));
  return out;
}

inline std::vector<LocalizerCenter> default_centers(int n) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n), xi = Eigen::VectorXd::Zero(n);
  xi[0] = 1.0;
  std::vector<LocalizerCenter> out{{x, xi}};
  x[0] = 0.3;
  x[1] = -0.2;
  xi[0] = std::cos(1.1);
  xi[1] = std::sin(1.1);
  out.push_back({x, xi});
  return out;
}

namespace detail {

inline std::uint64_t draw_stream(ExperimentKind kind, std::size_t sweep_index) {
  return (static_cast<std::uint64_t>(kind) << 32) | sweep_index;
}

/// Columns [first, first + count) of the ensemble, one seed per column.
inline Eigen::MatrixXd draw_block(Eigen::Index lattice_size, std::uint64_t master, std::uint64_t stream,
                                  std::size_t first, std::size_t count, std::vector<std::uint64_t>& seeds,
                                  unsigned threads) {
  Eigen::MatrixXd C(lattice_size, static_cast<Eigen::Index>(count));
  std::vector<std::uint64_t> block(count);
  parallel_for(count, threads, [&](std::size_t k) {
    block[k] = derive_seed(master, stream, first + k);
    C.col(static_cast<Eigen::Index>(k)) = sample_coefficients(lattice_size, block[k]).c;
  });
  seeds.insert(seeds.end(), block.begin(), block.end());
  return C;
}

inline constexpr std::size_t kDrawChunk = 512;

inline double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// X-ray at fixed segments
// ---------------------------------------------------------------------------

struct XrayPointResult {
  double h = 0.0;
  Eigen::Index N = 0;
  std::size_t segment_index = 0;
  Segment segment;
  EnsembleStats F;
  EnsembleStats F2;
  std::vector<double> samples;  // F per draw
  double kappa = 0.0;
  double deviation = 0.0;       // |mean(F) - 1|
  /// Control-variate estimate of E[F] - 1 using E[F^2] = 1:
  /// mean(F) + (1 - mean(F^2))/2 = 1 - mean((F-1)^2)/2.
  double cv_deviation = 0.0;
  double cv_se = 0.0;
  double scaled_deviation = 0.0;  // |cv_deviation| N^kappa
  double var_F2_theory = 0.0;     // 2 ||Re B||_F^2 / N^2
};

inline std::vector<XrayPointResult> run_xray_point(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<XrayPointResult> out;
  const auto sweep = cfg.sweep();
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    const ModelParams p = cfg.at(sweep[k]);
    const MomentumLattice lattice = build_lattice(p);
    const auto segments = cfg.segments.empty() ? default_segments(p.n) : cfg.segments;
    const double kappa = exponent_table(p.n, p.beta).kappa;
    std::vector<XRayQuadraticForm> forms;
    for (const auto& s : segments) forms.push_back(xray_quadratic_form(lattice, s));
    std::vector<std::vector<double>> F(segments.size());
    std::vector<std::uint64_t> seeds;
    for (std::size_t first = 0; first < cfg.samples; first += detail::kDrawChunk) {
      const std::size_t count = std::min(detail::kDrawChunk, cfg.samples - first);
      const Eigen::MatrixXd C =
          detail::draw_block(lattice.size(), cfg.seed, detail::draw_stream(cfg.kind, k), first, count, seeds, cfg.threads);
      for (std::size_t s = 0; s < segments.size(); ++s) {
        std::vector<Eigen::VectorXd> parts((count + 15) / 16);
        parallel_for(parts.size(), cfg.threads, [&](std::size_t b) {
          const Eigen::Index lo = static_cast<Eigen::Index>(16 * b);
          const Eigen::Index w = std::min<Eigen::Index>(16, static_cast<Eigen::Index>(count) - lo);
          parts[b] = forms[s].squared(C.middleCols(lo, w));
        });
        for (const auto& part : parts)
          for (Eigen::Index i = 0; i < part.size(); ++i) F[s].push_back(std::sqrt(std::max(0.0, part[i])));
      }
    }
    for (std::size_t s = 0; s < segments.size(); ++s) {
      XrayPointResult r;
      r.h = p.h;
      r.N = lattice.size();
      r.segment_index = s;
      r.segment = segments[s];
      r.kappa = kappa;
      std::vector<double> sq(F[s].size()), dev2(F[s].size());
      for (std::size_t i = 0; i < F[s].size(); ++i) {
        sq[i] = F[s][i] * F[s][i];
        dev2[i] = (F[s][i] - 1.0) * (F[s][i] - 1.0);
      }
      r.F = summarize(F[s], seeds);
      r.F2 = summarize(sq);
      const auto d2 = summarize(dev2);
      r.deviation = std::abs(r.F.mean - 1.0);
      r.cv_deviation = -0.5 * d2.mean;
      r.cv_se = 0.5 * d2.se;
      r.scaled_deviation = std::abs(r.cv_deviation) * std::pow(static_cast<double>(r.N), kappa);
      // real coefficients see only Re(B): Var(c^T Re(B) c) = 2 ||Re B||_F^2 / N^2
      const double nn = static_cast<double>(r.N);
      r.var_F2_theory = 2.0 * forms[s].real_gram().squaredNorm() / (nn * nn);
      r.samples = std::move(F[s]);
      out.push_back(std::move(r));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// X-ray uniform exception sets
// ---------------------------------------------------------------------------

struct XrayUniformRow {
  double h = 0.0;
  Eigen::Index N = 0;
  std::size_t grid_count = 0;
  double grid_spacing = 0.0;
  double offset = 0.0;
  double m = 0.0;
  std::size_t violations = 0;
  std::size_t draws = 0;
  double fraction = 0.0;
  Interval wilson;
  double bound = 0.0;  // exp(-N^{2 kappa} m^2)
};

struct XrayUniformDraw {
  double h = 0.0;
  std::size_t draw = 0;
  std::uint64_t seed = 0;
  double max_deviation = 0.0;
};

struct XrayUniformReport {
  std::vector<XrayUniformRow> rows;
  std::vector<XrayUniformDraw> draws;
};

inline XrayUniformReport run_xray_uniform(const ExperimentConfig& cfg) {
  cfg.validate();
  XrayUniformReport out;
  const auto sweep = cfg.sweep();
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    const ModelParams p = cfg.at(sweep[k]);
    const MomentumLattice lattice = build_lattice(p);
    const XrayGrid grid = uniform_grid(p, cfg.grid_budget);
    const XrayGridScanner scanner(lattice, grid);
    const double kappa = exponent_table(p.n, p.beta).kappa;
    std::vector<double> maxdev;
    std::vector<std::uint64_t> seeds;
    for (std::size_t first = 0; first < cfg.samples; first += detail::kDrawChunk) {
      const std::size_t count = std::min(detail::kDrawChunk, cfg.samples - first);
      const Eigen::MatrixXd C =
          detail::draw_block(lattice.size(), cfg.seed, detail::draw_stream(cfg.kind, k), first, count, seeds, cfg.threads);
      const auto block = scanner.max_deviation(C, cfg.threads);
      maxdev.insert(maxdev.end(), block.begin(), block.end());
    }
    for (std::size_t i = 0; i < maxdev.size(); ++i) out.draws.push_back({p.h, i, seeds[i], maxdev[i]});
    const double nn = static_cast<double>(lattice.size());
    for (double e : cfg.m_offsets) {
      XrayUniformRow r;
      r.h = p.h;
      r.N = lattice.size();
      r.grid_count = grid.count;
      r.grid_spacing = grid.spacing;
      r.offset = e;
      r.m = std::pow(nn, -kappa + e);
      r.draws = maxdev.size();
      r.violations = static_cast<std::size_t>(std::count_if(maxdev.begin(), maxdev.end(), [&](double d) { return d >= r.m; }));
      r.fraction = static_cast<double>(r.violations) / static_cast<double>(r.draws);
      r.wilson = wilson_interval(r.violations, r.draws);
      r.bound = std::exp(-std::pow(nn, 2.0 * kappa) * r.m * r.m);
      out.rows.push_back(r);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Phase-space statistic at fixed centers
// ---------------------------------------------------------------------------

struct MomentRow {
  int order = 0;
  double monte_carlo = 0.0;
  double se = 0.0;
  double exact = 0.0;
};

struct PhasePointResult {
  double h = 0.0;
  double mu = 0.0;
  Eigen::Index N = 0;
  std::size_t center_index = 0;
  LocalizerCenter center;
  Eigen::Index n_active = 0;
  double A_norm = 0.0;
  double trace = 0.0;
  double trace_sq = 0.0;
  double lambda_max_ratio = 0.0;
  EnsembleStats G;
  EnsembleStats G2;
  std::vector<double> samples;  // G per draw
  std::vector<MomentRow> moments;
};

/// Batched G^2 = N c_a^T Re(A) c_a.
inline std::vector<double> g_squared_batch(const LocalizerGram& gram, const Eigen::MatrixXd& C) {
  Eigen::MatrixXd Ca(gram.active_size(), C.cols());
  for (Eigen::Index a = 0; a < gram.active_size(); ++a) Ca.row(a) = C.row(gram.active[a]);
  const Eigen::MatrixXd RC = gram.A.real() * Ca;
  const Eigen::VectorXd q = (Ca.array() * RC.array()).colwise().sum().transpose();
  std::vector<double> out(static_cast<std::size_t>(q.size()));
  for (Eigen::Index i = 0; i < q.size(); ++i) out[i] = std::max(0.0, static_cast<double>(gram.lattice_size) * q[i]);
  return out;
}

inline std::vector<PhasePointResult> run_phase_point(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<PhasePointResult> out;
  const auto sweep = cfg.sweep();
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    const ModelParams p = cfg.at(sweep[k]);
    const MomentumLattice lattice = build_lattice(p);
    const auto centers = cfg.centers.empty() ? default_centers(p.n) : cfg.centers;
    const EnvelopeTransform transform(p.n - 1);
    std::vector<LocalizerGram> grams;
    std::vector<double> norms;
    for (const auto& c : centers) {
      const auto symbol = make_symbol(p, lattice, c.x, c.xi, transform);
      norms.push_back(symbol.A_norm);
      grams.push_back(build_gram(symbol, lattice, transform));
    }
    std::vector<std::vector<double>> g2(centers.size());
    std::vector<std::uint64_t> seeds;
    for (std::size_t first = 0; first < cfg.samples; first += detail::kDrawChunk) {
      const std::size_t count = std::min(detail::kDrawChunk, cfg.samples - first);
      const Eigen::MatrixXd C =
          detail::draw_block(lattice.size(), cfg.seed, detail::draw_stream(cfg.kind, k), first, count, seeds, cfg.threads);
      for (std::size_t c = 0; c < centers.size(); ++c) {
        const auto block = g_squared_batch(grams[c], C);
        g2[c].insert(g2[c].end(), block.begin(), block.end());
      }
    }
    for (std::size_t c = 0; c < centers.size(); ++c) {
      PhasePointResult r;
      r.h = p.h;
      r.mu = p.mu;
      r.N = lattice.size();
      r.center_index = c;
      r.center = centers[c];
      r.n_active = grams[c].active_size();
      r.A_norm = norms[c];
      const auto spec = spectral(grams[c]);
      r.trace = spec.trace;
      r.trace_sq = spec.trace_sq;
      r.lambda_max_ratio = spec.lambda_max_ratio;
      const auto qspec = quadratic_form_spectral(grams[c]);
      std::vector<double> g(g2[c].size());
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::sqrt(g2[c][i]);
      r.G = summarize(g, seeds);
      r.G2 = summarize(g2[c]);
      for (int M : cfg.moment_orders) {
        std::vector<double> pw(g2[c].size());
        for (std::size_t i = 0; i < pw.size(); ++i) pw[i] = std::pow(g2[c][i], M);
        const auto st = summarize(pw);
        r.moments.push_back({M, st.mean, st.se, exact_moments(qspec, M)});
      }
      r.samples = std::move(g);
      out.push_back(std::move(r));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Phase-space sup over a grid
// ---------------------------------------------------------------------------

struct PhaseSupResult {
  double h = 0.0;
  double mu = 0.0;
  Eigen::Index N = 0;
  std::size_t grid_count = 0;
  std::size_t directions = 0;
  EnsembleStats sup;
  EnsembleStats point;  // G at the first configured center, same draws
  double ratio = 0.0;   // mean(sup G) / sqrt(log(1/h))
  std::vector<double> sup_samples;
  std::vector<double> point_samples;
};

inline std::vector<PhaseSupResult> run_phase_sup(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<PhaseSupResult> out;
  const auto sweep = cfg.sweep();
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    const ModelParams p = cfg.at(sweep[k]);
    const MomentumLattice lattice = build_lattice(p);
    const PhaseGrid grid = phase_grid(p, cfg.x_spacing, cfg.xi_spacing, cfg.grid_budget);
    const PhaseSupScanner scanner(p, lattice, grid, 1e-10, cfg.threads);
    const auto center = (cfg.centers.empty() ? default_centers(p.n) : cfg.centers).front();
    const auto gram = build_gram(make_symbol(p, lattice, center.x, center.xi), lattice);
    std::vector<double> sup, point;
    std::vector<std::uint64_t> seeds;
    for (std::size_t first = 0; first < cfg.samples; first += detail::kDrawChunk) {
      const std::size_t count = std::min(detail::kDrawChunk, cfg.samples - first);
      const Eigen::MatrixXd C =
          detail::draw_block(lattice.size(), cfg.seed, detail::draw_stream(cfg.kind, k), first, count, seeds, cfg.threads);
      const auto s = scanner.sup(C, cfg.threads);
      sup.insert(sup.end(), s.begin(), s.end());
      for (double g2 : g_squared_batch(gram, C)) point.push_back(std::sqrt(g2));
    }
    PhaseSupResult r;
    r.h = p.h;
    r.mu = p.mu;
    r.N = lattice.size();
    r.grid_count = grid.count();
    r.directions = grid.directions.size();
    r.sup = summarize(sup, seeds);
    r.point = summarize(point);
    r.ratio = r.sup.mean / std::sqrt(std::log(1.0 / p.h));
    r.sup_samples = std::move(sup);
    r.point_samples = std::move(point);
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trace sweep
// ---------------------------------------------------------------------------

struct TraceSweep {
  std::vector<TraceRow> rows;
  struct Slope {
    double h = 0.0;
    std::size_t center_index = 0;
    LinearFit fit;  // log Tr(A^2) against log mu
  };
  std::vector<Slope> slopes;
};

inline TraceSweep run_traces(const ExperimentConfig& cfg) {
  cfg.validate();
  TraceSweep out;
  for (double h : cfg.sweep()) {
    ModelParams p = cfg.params;
    p.h = h;
    p.validate();
    const MomentumLattice lattice = build_lattice(p);
    const auto centers = cfg.centers.empty() ? default_centers(p.n) : cfg.centers;
    const auto rows = trace_report(p, lattice, centers, cfg.mu_sweep, cfg.threads);
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (cfg.mu_sweep.size() >= 2) {
        std::vector<double> mu, t2;
        for (std::size_t m = 0; m < cfg.mu_sweep.size(); ++m) {
          mu.push_back(rows[c * cfg.mu_sweep.size() + m].mu);
          t2.push_back(rows[c * cfg.mu_sweep.size() + m].trace_sq);
        }
        out.slopes.push_back({h, c, log_log_fit(mu, t2)});
      }
    }
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tails
// ---------------------------------------------------------------------------

struct TailResult {
  double h = 0.0;
  Eigen::Index N = 0;
  std::string statistic;
  double lipschitz = 0.0;  // constant used in the bound
  TailCurve curve;
  std::vector<double> bound;  // exp(-N t^2 / (2 L^2)) per threshold
  std::vector<std::pair<double, double>> phi_gaps;  // (q, gap)
  double variance = 0.0;
  double se = 0.0;
};

inline std::vector<TailResult> run_tails(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<TailResult> out;
  const auto sweep = cfg.sweep();
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    const ModelParams p = cfg.at(sweep[k]);
    const MomentumLattice lattice = build_lattice(p);
    TailResult r;
    r.h = p.h;
    r.N = lattice.size();
    r.statistic = cfg.tail_statistic;
    std::vector<double> samples;
    std::vector<std::uint64_t> seeds;
    if (cfg.tail_statistic == "F") {
      const auto segment = (cfg.segments.empty() ? default_segments(p.n) : cfg.segments).front();
      const auto form = xray_quadratic_form(lattice, segment);
      r.lipschitz = theoretical_lipschitz_F(p);
      for (std::size_t first = 0; first < cfg.samples; first += detail::kDrawChunk) {
        const std::size_t count = std::min(detail::kDrawChunk, cfg.samples - first);
        const Eigen::MatrixXd C =
            detail::draw_block(lattice.size(), cfg.seed, detail::draw_stream(cfg.kind, k), first, count, seeds, cfg.threads);
        const Eigen::VectorXd f2 = form.squared(C);
        for (Eigen::Index i = 0; i < f2.size(); ++i) samples.push_back(std::sqrt(std::max(0.0, f2[i])));
      }
    } else {
      const auto center = (cfg.centers.empty() ? default_centers(p.n) : cfg.centers).front();
      const auto gram = build_gram(make_symbol(p, lattice, center.x, center.xi), lattice);
      // exact Lipschitz constant of c -> G(c): sqrt(N lambda_max(Re A))
      r.lipschitz = std::sqrt(static_cast<double>(lattice.size()) * quadratic_form_spectral(gram).eigenvalues[0]);
      for (std::size_t first = 0; first < cfg.samples; first += detail::kDrawChunk) {
        const std::size_t count = std::min(detail::kDrawChunk, cfg.samples - first);
        const Eigen::MatrixXd C =
            detail::draw_block(lattice.size(), cfg.seed, detail::draw_stream(cfg.kind, k), first, count, seeds, cfg.threads);
        for (double g2 : g_squared_batch(gram, C)) samples.push_back(std::sqrt(g2));
      }
    }
    r.curve = empirical_median_tails(samples);
    const double nn = static_cast<double>(r.N);
    for (double t : r.curve.thresholds) r.bound.push_back(std::exp(-nn * t * t / (2.0 * r.lipschitz * r.lipschitz)));
    for (double q : cfg.phi_exponents) r.phi_gaps.emplace_back(q, phi_commute_gap(samples, power_map(q)));
    const auto st = summarize(samples);
    r.variance = st.variance;
    r.se = st.se;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace planckwave
