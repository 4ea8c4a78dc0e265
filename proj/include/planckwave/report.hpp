#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "planckwave/ensemble.hpp"
#include "planckwave/io.hpp"

namespace planckwave {

namespace detail {

inline void stats_header(std::vector<std::string>& h, const std::string& p) {
  for (const char* s : {"mean", "se", "variance", "median", "q01", "q05", "q25", "q50", "q75", "q95", "q99", "count"})
    h.push_back(p + "_" + s);
}

inline void stats_cells(std::vector<Cell>& row, const EnsembleStats& st) {
  row.insert(row.end(), {st.mean, st.se, st.variance, st.median});
  for (double q : st.quantiles) row.emplace_back(q);
  row.emplace_back(static_cast<std::uint64_t>(st.count));
}

inline void vector_header(std::vector<std::string>& h, const std::string& p, int n) {
  for (int d = 0; d < n; ++d) h.push_back(p + "_" + std::to_string(d + 1));
}

inline void vector_cells(std::vector<Cell>& row, const Eigen::VectorXd& v) {
  for (Eigen::Index d = 0; d < v.size(); ++d) row.emplace_back(v[d]);
}

inline std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

}  // namespace detail

struct ReportBundle {
  std::vector<std::pair<std::string, Table>> tables;
  std::vector<std::string> summary;  // one line per sweep point
};

inline ReportBundle report(const std::vector<XrayPointResult>& results) {
  ReportBundle b;
  const int n = results.empty() ? 2 : static_cast<int>(results.front().segment.x.size());
  Table draws, summary;
  draws.header = {"h", "N", "segment", "draw", "seed"};
  detail::vector_header(draws.header, "x", n);
  detail::vector_header(draws.header, "xi", n);
  draws.header.insert(draws.header.end(), {"F", "F2"});
  summary.header = {"h", "N", "segment"};
  detail::vector_header(summary.header, "x", n);
  detail::vector_header(summary.header, "xi", n);
  detail::stats_header(summary.header, "F");
  detail::stats_header(summary.header, "F2");
  summary.header.insert(summary.header.end(), {"var_F2_theory", "kappa", "deviation", "cv_deviation", "cv_se",
                                               "scaled_deviation"});
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
      std::vector<Cell> row{r.h, static_cast<std::int64_t>(r.N), static_cast<std::int64_t>(r.segment_index),
                            static_cast<std::int64_t>(i), r.F.seeds[i]};
      detail::vector_cells(row, r.segment.x);
      detail::vector_cells(row, r.segment.xi);
      row.insert(row.end(), {r.samples[i], r.samples[i] * r.samples[i]});
      draws.add(std::move(row));
    }
    std::vector<Cell> row{r.h, static_cast<std::int64_t>(r.N), static_cast<std::int64_t>(r.segment_index)};
    detail::vector_cells(row, r.segment.x);
    detail::vector_cells(row, r.segment.xi);
    detail::stats_cells(row, r.F);
    detail::stats_cells(row, r.F2);
    row.insert(row.end(), {r.var_F2_theory, r.kappa, r.deviation, r.cv_deviation, r.cv_se, r.scaled_deviation});
    summary.add(std::move(row));
    b.summary.push_back(detail::fmt("xray h=%.6g", r.h) + " segment=" + std::to_string(r.segment_index) +
                        detail::fmt(" mean(F^2)=%.6f +- %.2g", r.F2.mean, r.F2.se) +
                        detail::fmt(" E[F]-1=%.3e scaled=%.4f", r.cv_deviation, r.scaled_deviation));
  }
  b.tables.emplace_back("xray_draws.csv", std::move(draws));
  b.tables.emplace_back("xray.csv", std::move(summary));
  return b;
}

inline ReportBundle report(const XrayUniformReport& rep) {
  ReportBundle b;
  Table rows, draws;
  rows.header = {"h", "N", "grid_count", "grid_spacing", "offset", "m", "violations", "draws", "fraction",
                 "wilson_lo", "wilson_hi", "bound"};
  for (const auto& r : rep.rows) {
    rows.add({r.h, static_cast<std::int64_t>(r.N), static_cast<std::uint64_t>(r.grid_count), r.grid_spacing, r.offset,
              r.m, static_cast<std::uint64_t>(r.violations), static_cast<std::uint64_t>(r.draws), r.fraction,
              r.wilson.lo, r.wilson.hi, r.bound});
    b.summary.push_back(detail::fmt("xray-uniform h=%.6g m=%.4f", r.h, r.m) +
                        detail::fmt(" violation fraction=%.4f [%.4f, %.4f]", r.fraction, r.wilson.lo, r.wilson.hi) +
                        detail::fmt(" bound=%.4g", r.bound));
  }
  draws.header = {"h", "draw", "seed", "max_deviation"};
  for (const auto& d : rep.draws) draws.add({d.h, static_cast<std::int64_t>(d.draw), d.seed, d.max_deviation});
  b.tables.emplace_back("xray_uniform.csv", std::move(rows));
  b.tables.emplace_back("xray_uniform_draws.csv", std::move(draws));
  return b;
}

inline ReportBundle report(const std::vector<PhasePointResult>& results) {
  ReportBundle b;
  const int n = results.empty() ? 2 : static_cast<int>(results.front().center.x.size());
  Table summary, moments, draws;
  summary.header = {"h", "mu", "N", "center"};
  detail::vector_header(summary.header, "x", n);
  detail::vector_header(summary.header, "xi", n);
  summary.header.insert(summary.header.end(), {"N_active", "A_norm", "trace", "trace_sq", "lambda_max_ratio"});
  detail::stats_header(summary.header, "G");
  detail::stats_header(summary.header, "G2");
  moments.header = {"h", "mu", "center", "order", "monte_carlo", "se", "exact"};
  draws.header = {"h", "mu", "center", "draw", "seed", "G"};
  for (const auto& r : results) {
    std::vector<Cell> row{r.h, r.mu, static_cast<std::int64_t>(r.N), static_cast<std::int64_t>(r.center_index)};
    detail::vector_cells(row, r.center.x);
    detail::vector_cells(row, r.center.xi);
    row.insert(row.end(), {static_cast<std::int64_t>(r.n_active), r.A_norm, r.trace, r.trace_sq, r.lambda_max_ratio});
    detail::stats_cells(row, r.G);
    detail::stats_cells(row, r.G2);
    summary.add(std::move(row));
    for (const auto& m : r.moments)
      moments.add({r.h, r.mu, static_cast<std::int64_t>(r.center_index), static_cast<std::int64_t>(m.order),
                   m.monte_carlo, m.se, m.exact});
    for (std::size_t i = 0; i < r.samples.size(); ++i)
      draws.add({r.h, r.mu, static_cast<std::int64_t>(r.center_index), static_cast<std::int64_t>(i), r.G.seeds[i],
                 r.samples[i]});
    b.summary.push_back(detail::fmt("phase h=%.6g mu=%.4g", r.h, r.mu) + " center=" + std::to_string(r.center_index) +
                        detail::fmt(" mean(G)=%.5f +- %.2g Tr(A)=%.6f", r.G.mean, r.G.se, r.trace));
  }
  b.tables.emplace_back("phase.csv", std::move(summary));
  b.tables.emplace_back("phase_moments.csv", std::move(moments));
  b.tables.emplace_back("phase_draws.csv", std::move(draws));
  return b;
}

inline ReportBundle report(const std::vector<PhaseSupResult>& results) {
  ReportBundle b;
  Table summary, draws;
  summary.header = {"h", "mu", "N", "grid_count", "directions"};
  detail::stats_header(summary.header, "sup_G");
  detail::stats_header(summary.header, "point_G");
  summary.header.push_back("ratio_sqrt_log");
  draws.header = {"h", "mu", "draw", "seed", "sup_G", "point_G"};
  for (const auto& r : results) {
    std::vector<Cell> row{r.h, r.mu, static_cast<std::int64_t>(r.N), static_cast<std::uint64_t>(r.grid_count),
                          static_cast<std::uint64_t>(r.directions)};
    detail::stats_cells(row, r.sup);
    detail::stats_cells(row, r.point);
    row.emplace_back(r.ratio);
    summary.add(std::move(row));
    for (std::size_t i = 0; i < r.sup_samples.size(); ++i)
      draws.add({r.h, r.mu, static_cast<std::int64_t>(i), r.sup.seeds[i], r.sup_samples[i], r.point_samples[i]});
    b.summary.push_back(detail::fmt("phase-sup h=%.6g mu=%.4g", r.h, r.mu) +
                        detail::fmt(" mean(sup G)=%.5f mean(G)=%.5f ratio=%.5f", r.sup.mean, r.point.mean, r.ratio));
  }
  b.tables.emplace_back("phase_sup.csv", std::move(summary));
  b.tables.emplace_back("phase_sup_draws.csv", std::move(draws));
  return b;
}

inline ReportBundle report(const TraceSweep& sweep) {
  ReportBundle b;
  const int n = sweep.rows.empty() ? 2 : static_cast<int>(sweep.rows.front().x.size());
  Table rows, slopes;
  rows.header = {"h", "beta", "alpha", "mu", "N_active", "trace", "trace_sq", "lambda_max_ratio"};
  detail::vector_header(rows.header, "x", n);
  detail::vector_header(rows.header, "xi", n);
  for (const auto& r : sweep.rows) {
    std::vector<Cell> row{r.h, r.beta, r.alpha, r.mu, static_cast<std::int64_t>(r.n_active), r.trace, r.trace_sq,
                          r.lambda_max_ratio};
    detail::vector_cells(row, r.x);
    detail::vector_cells(row, r.xi);
    rows.add(std::move(row));
  }
  slopes.header = {"h", "center", "slope", "intercept", "r2"};
  for (const auto& s : sweep.slopes) {
    slopes.add({s.h, static_cast<std::int64_t>(s.center_index), s.fit.slope, s.fit.intercept, s.fit.r2});
    b.summary.push_back(detail::fmt("traces h=%.6g", s.h) + " center=" + std::to_string(s.center_index) +
                        detail::fmt(" slope log Tr(A^2) vs log mu = %.4f", s.fit.slope));
  }
  b.tables.emplace_back("traces.csv", std::move(rows));
  b.tables.emplace_back("traces_slopes.csv", std::move(slopes));
  return b;
}

inline ReportBundle report(const std::vector<TailResult>& results) {
  ReportBundle b;
  Table curve, fit, gaps;
  curve.header = {"h", "N", "statistic", "threshold", "exceedances", "frequency", "bound", "lipschitz"};
  fit.header = {"h", "N", "statistic", "median", "fit_c", "fit_intercept", "fit_lo", "fit_hi", "fit_residual",
                "fit_points", "variance", "se", "lipschitz"};
  gaps.header = {"h", "N", "statistic", "q", "gap", "variance", "se"};
  for (const auto& r : results) {
    for (std::size_t k = 0; k < r.curve.thresholds.size(); ++k)
      curve.add({r.h, static_cast<std::int64_t>(r.N), r.statistic, r.curve.thresholds[k],
                 static_cast<std::uint64_t>(r.curve.exceedances[k]), r.curve.frequencies[k], r.bound[k], r.lipschitz});
    fit.add({r.h, static_cast<std::int64_t>(r.N), r.statistic, r.curve.median, r.curve.fit_c, r.curve.fit_intercept,
             r.curve.fit_lo, r.curve.fit_hi, r.curve.fit_residual, static_cast<std::uint64_t>(r.curve.fit_points),
             r.variance, r.se, r.lipschitz});
    for (const auto& [q, g] : r.phi_gaps) gaps.add({r.h, static_cast<std::int64_t>(r.N), r.statistic, q, g, r.variance, r.se});
    b.summary.push_back(detail::fmt("tails h=%.6g", r.h) + " statistic=" + r.statistic +
                        detail::fmt(" c_hat=%.4f residual=%.4f", r.curve.fit_c, r.curve.fit_residual));
  }
  b.tables.emplace_back("tails.csv", std::move(curve));
  b.tables.emplace_back("tails_fit.csv", std::move(fit));
  b.tables.emplace_back("tails_phi.csv", std::move(gaps));
  return b;
}

}  // namespace planckwave
