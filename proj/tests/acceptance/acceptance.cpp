// Desk-scale acceptance suite: one PASS/FAIL line per criterion.
//
// Desk configuration: n = 2, beta = 1, alpha = 1/2, h in {2^-4, 2^-5, 2^-6}.
// Ensemble sizes are chosen so the whole suite runs in minutes on one core.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "planckwave/planckwave.hpp"

namespace pw = planckwave;

namespace {

const std::vector<double> kSweep{1.0 / 16, 1.0 / 32, 1.0 / 64};

struct Options {
  unsigned threads = 0;
  std::set<int> only;
  std::uint64_t seed = 20240601;
};

pw::ExperimentConfig desk(pw::ExperimentKind kind, std::size_t samples, const Options& opt) {
  pw::ExperimentConfig cfg;
  cfg.kind = kind;
  cfg.params.n = 2;
  cfg.params.beta = 1.0;
  cfg.params.alpha = 0.5;
  cfg.params.mu = 1.0;
  cfg.params.epsilon = 0.3;
  cfg.samples = samples;
  cfg.h_sweep = kSweep;
  cfg.seed = opt.seed;
  cfg.threads = pw::resolve_thread_count(opt.threads);
  return cfg;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Collects detail lines and the verdict of one criterion.
class Criterion {
 public:
  Criterion(int id, std::string title) : id_(id), title_(std::move(title)), start_(std::chrono::steady_clock::now()) {}

  void check(bool ok, const std::string& what) {
    ok_ = ok_ && ok;
    std::cout << "    " << (ok ? "ok   " : "FAIL ") << what << "\n";
  }
  void note(const std::string& what) { std::cout << "    note " << what << "\n"; }

  bool finish() const {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::cout << (ok_ ? "PASS" : "FAIL") << " criterion " << id_ << ": " << title_ << fmt(" (%.1f s)", secs) << "\n"
              << std::flush;
    return ok_;
  }

 private:
  int id_;
  std::string title_;
  bool ok_ = true;
  std::chrono::steady_clock::time_point start_;
};

std::string hlabel(double h) { return "h=2^" + std::to_string(static_cast<int>(std::lround(std::log2(h)))); }

// Shared by criteria 1 and 2.
const std::vector<pw::XrayPointResult>& xray_points(const Options& opt) {
  static const auto results = pw::run_xray_point(desk(pw::ExperimentKind::XrayPoint, 10000, opt));
  return results;
}

// ---------------------------------------------------------------------------

bool criterion1(const Options& opt) {
  Criterion c(1, "exact second moment E[F^2] = 1 and Gram-vs-quadrature agreement");
  for (const auto& r : xray_points(opt)) {
    const double z = std::abs(r.F2.mean - 1.0) / r.F2.se;
    c.check(z <= 5.0, hlabel(r.h) + " segment " + std::to_string(r.segment_index) + ": mean F^2 = " +
                          fmt("%.5f", r.F2.mean) + fmt(" (%.2f SE from 1)", z));
  }
  // 100 random (field, segment) instances at h = 2^-5
  pw::ModelParams p;
  p.h = 1.0 / 32;
  const auto lattice = std::make_shared<const pw::MomentumLattice>(pw::build_lattice(p));
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 100;) {
    const double t = 2 * std::numbers::pi * U(rng);
    Eigen::VectorXd xi(2), x(2);
    xi << std::cos(t), std::sin(t);
    x << 2 * U(rng) - 1, 2 * U(rng) - 1;
    if (x.norm() >= 0.999 || (x + xi).norm() >= 0.999) continue;
    const auto seg = pw::make_segment(x, xi);
    const auto field = pw::make_field(lattice, pw::sample_coefficients(*lattice, pw::derive_seed(opt.seed, 77, k)));
    const double gram = std::pow(pw::f_statistic(field, seg), 2);
    const double quad = std::pow(pw::f_statistic_quadrature(field, seg), 2);
    worst = std::max(worst, std::abs(gram - quad) / quad);
    ++k;
  }
  c.check(worst < 1e-7, "Gram vs quadrature over 100 instances at h=2^-5: max relative gap " + fmt("%.3g", worst));
  return c.finish();
}

bool criterion2(const Options& opt) {
  Criterion c(2, "mean(F) - 1 decays like N^-1/4 (scaled band and monotone decrease)");
  const auto& res = xray_points(opt);
  c.note("deviation estimated with the E[F^2] = 1 control variate: E[F] - 1 = -E[(F-1)^2]/2");
  std::map<std::size_t, std::vector<const pw::XrayPointResult*>> by_segment;
  for (const auto& r : res) by_segment[r.segment_index].push_back(&r);
  for (const auto& [s, rows] : by_segment) {
    double lo = 1e300, hi = 0.0;
    std::string line = "segment " + std::to_string(s) + ": |dev| N^1/4 =";
    for (const auto* r : rows) {
      lo = std::min(lo, r->scaled_deviation);
      hi = std::max(hi, r->scaled_deviation);
      line += fmt(" %.4f", r->scaled_deviation);
    }
    c.check(hi / lo <= 4.0, line + fmt(" (max/min %.3f <= 4)", hi / lo));
    for (std::size_t k = 1; k < rows.size(); ++k) {
      const double prev = std::abs(rows[k - 1]->cv_deviation), cur = std::abs(rows[k]->cv_deviation);
      const double slack = 2.0 * std::hypot(rows[k - 1]->cv_se, rows[k]->cv_se);
      c.check(cur < prev + slack, "segment " + std::to_string(s) + ": |dev| " + fmt("%.5f", prev) + " (N=" +
                                      std::to_string(rows[k - 1]->N) + ") -> " + fmt("%.5f", cur) + " (N=" +
                                      std::to_string(rows[k]->N) + ")" + fmt(", slack %.5f", slack));
    }
  }
  return c.finish();
}

bool criterion3(const Options& opt) {
  Criterion c(3, "exception-set fraction against exp(-N^{2 kappa} m^2), monotone in m");
  auto cfg = desk(pw::ExperimentKind::XrayUniform, 100, opt);
  cfg.m_offsets = {0.05, 0.1, 0.15, 0.2, 0.25};
  const auto rep = pw::run_xray_uniform(cfg);
  std::map<double, std::vector<pw::XrayUniformRow>> by_h;
  for (const auto& r : rep.rows) by_h[r.h].push_back(r);
  for (const auto& [h, rows] : by_h) {
    const auto& r = rows.front();  // offset 0.05
    const double limit = 3.0 * r.bound + (r.wilson.hi - r.fraction);
    c.check(r.fraction <= limit, hlabel(h) + ": " + std::to_string(r.grid_count) + " segments, m = " +
                                     fmt("%.4f", r.m) + ", fraction " + fmt("%.3f", r.fraction) + " vs 3*bound + slack " +
                                     fmt("%.3f", limit));
    bool mono = true;
    std::string seq;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      seq += " " + std::to_string(rows[k].violations);
      if (k && rows[k].violations > rows[k - 1].violations) mono = false;
    }
    c.check(mono, hlabel(h) + ": violations for m offsets 0.05..0.25:" + seq);
  }
  double worst = 0.0;
  for (const auto& d : rep.draws) worst = std::max(worst, d.max_deviation);
  c.note("largest grid sup |F - 1| over all draws: " + fmt("%.3f", worst));
  return c.finish();
}

bool criterion4(const Options& opt) {
  Criterion c(4, "F tails below 3 exp(-N t^2 / (2 L^2)) with L = theoretical_lipschitz_F");
  auto cfg = desk(pw::ExperimentKind::Tails, 10000, opt);
  cfg.tail_statistic = "F";
  for (const auto& r : pw::run_tails(cfg)) {
    std::size_t tested = 0, bad = 0;
    double worst_ratio = 0.0, worst_t = 0.0;
    for (std::size_t k = 0; k < r.curve.thresholds.size(); ++k) {
      if (r.curve.exceedances[k] < 30) continue;
      ++tested;
      const double ratio = r.curve.frequencies[k] / (3.0 * r.bound[k]);
      if (ratio > 1.0) ++bad;
      if (ratio > worst_ratio) {
        worst_ratio = ratio;
        worst_t = r.curve.thresholds[k];
      }
    }
    c.check(bad == 0, hlabel(r.h) + fmt(": L = %.4f, ", r.lipschitz) + std::to_string(bad) + " of " +
                          std::to_string(tested) + " thresholds above the bound (worst freq/bound " +
                          fmt("%.3g", worst_ratio) + fmt(" at t = %.3f)", worst_t));
    if (r.curve.fit_ok)
      c.note(hlabel(r.h) + ": fitted tail rate c = " + fmt("%.2f", r.curve.fit_c) + " vs N/(2L^2) = " +
             fmt("%.2f", static_cast<double>(r.N) / (2 * r.lipschitz * r.lipschitz)));
  }
  return c.finish();
}

bool criterion5(const Options& opt) {
  Criterion c(5, "localizer traces: Tr(A) stable, Tr(A^2) ~ mu^-3, lambda_max/Tr decreasing in mu");
  auto cfg = desk(pw::ExperimentKind::Traces, 1, opt);
  cfg.mu_sweep = {1.0, 2.0, 4.0, 8.0};
  const auto sw = pw::run_traces(cfg);
  std::map<std::size_t, std::vector<double>> traces;  // per center, mu = 1
  std::map<std::pair<double, std::size_t>, std::map<double, double>> lam;
  const std::size_t per_h = sw.rows.size() / kSweep.size();
  for (std::size_t i = 0; i < sw.rows.size(); ++i) {
    const auto& r = sw.rows[i];
    const std::size_t center = (i % per_h) / cfg.mu_sweep.size();
    if (r.mu == 1.0) traces[center].push_back(r.trace);
    lam[{r.h, center}][r.mu] = r.lambda_max_ratio;
  }
  for (const auto& [center, t] : traces) {
    const double ratio = *std::max_element(t.begin(), t.end()) / *std::min_element(t.begin(), t.end());
    c.check(ratio <= 2.0, "center " + std::to_string(center) + ": Tr(A) max/min over the sweep at mu=1 = " +
                              fmt("%.6f", ratio));
  }
  for (const auto& s : sw.slopes)
    c.check(std::abs(s.fit.slope + 3.0) <= 0.5, hlabel(s.h) + " center " + std::to_string(s.center_index) +
                                                    ": slope of log Tr(A^2) vs log mu = " + fmt("%.3f", s.fit.slope) +
                                                    " (target -3 +/- 0.5)");
  for (const auto& [key, m] : lam)
    c.check(m.at(1.0) > m.at(8.0), hlabel(key.first) + " center " + std::to_string(key.second) +
                                       ": lambda_max/Tr " + fmt("%.4f", m.at(1.0)) + " (mu=1) vs " +
                                       fmt("%.4f", m.at(8.0)) + " (mu=8)");
  for (const auto& r : sw.rows)
    if (r.h == kSweep.back() && r.x.norm() == 0.0)
      c.note(hlabel(r.h) + fmt(" mu=%g: ", r.mu) + "Tr(A^2) = " + fmt("%.4f", r.trace_sq) + ", active modes " +
             std::to_string(r.n_active) + fmt(", 1/M = %.4f", 1.0 / static_cast<double>(r.n_active)));
  return c.finish();
}

bool criterion6(const Options& opt) {
  Criterion c(6, "sup-grid G grows like sqrt(log 1/h) and exceeds pointwise G");
  std::vector<pw::PhaseSupResult> res;
  const std::vector<std::size_t> samples{400, 400, 200};
  for (std::size_t k = 0; k < kSweep.size(); ++k) {
    auto cfg = desk(pw::ExperimentKind::PhaseSup, samples[k], opt);
    cfg.h_sweep = {kSweep[k]};
    auto r = pw::run_phase_sup(cfg);
    res.push_back(std::move(r.front()));
  }
  double lo = 1e300, hi = 0.0;
  std::string line = "mean(sup G)/sqrt(log 1/h) =";
  for (const auto& r : res) {
    lo = std::min(lo, r.ratio);
    hi = std::max(hi, r.ratio);
    line += fmt(" %.4f", r.ratio);
  }
  c.check(hi / lo <= 2.0, line + fmt(" (max/min %.3f <= 2)", hi / lo));
  for (const auto& r : res) {
    const double se = std::hypot(r.sup.se, r.point.se);
    c.check(r.sup.mean > r.point.mean + 3.0 * se,
            hlabel(r.h) + ": " + std::to_string(r.grid_count) + " grid points, " + std::to_string(r.sup.count) +
                " draws, mean sup G " + fmt("%.4f", r.sup.mean) + " vs pointwise " + fmt("%.4f", r.point.mean) +
                fmt(" + 3 SE (%.4f)", 3.0 * se));
  }
  return c.finish();
}

bool criterion7(const Options& opt) {
  Criterion c(7, "mean G -> 1 at mu = h^-0.3");
  auto cfg = desk(pw::ExperimentKind::PhasePoint, 10000, opt);
  cfg.large_mu = true;
  cfg.moment_orders = {1};
  const auto res = pw::run_phase_point(cfg);
  std::map<std::size_t, std::vector<const pw::PhasePointResult*>> by_center;
  for (const auto& r : res) by_center[r.center_index].push_back(&r);
  for (const auto& [center, rows] : by_center) {
    for (const auto* r : rows) {
      const double dev = std::abs(r->G.mean - 1.0);
      const double limit = 5.0 * std::pow(r->h, 0.15) + 3.0 * r->G.se;
      c.check(dev <= limit, hlabel(r->h) + " center " + std::to_string(center) + fmt(": mu = %.3f, ", r->mu) +
                                "|mean G - 1| = " + fmt("%.5f", dev) + " <= " + fmt("%.4f", limit));
    }
    for (std::size_t k = 1; k < rows.size(); ++k) {
      const double prev = std::abs(rows[k - 1]->G.mean - 1.0), cur = std::abs(rows[k]->G.mean - 1.0);
      const double slack = 2.0 * std::hypot(rows[k - 1]->G.se, rows[k]->G.se);
      c.check(cur <= prev + slack, "center " + std::to_string(center) + ": |mean G - 1| " + fmt("%.5f", prev) +
                                       " -> " + fmt("%.5f", cur) + " as h halves" + fmt(", slack %.5f", slack));
    }
  }
  return c.finish();
}

bool criterion8(const Options& opt) {
  Criterion c(8, "Monte Carlo moments of G^2 match the exact spectral moments");
  struct Instance {
    double h;
    double mu;
    std::size_t center;
  };
  const std::vector<Instance> instances{{1.0 / 32, 1.0, 0}, {1.0 / 32, 2.0, 1}, {1.0 / 64, std::pow(64.0, 0.3), 0}};
  for (std::size_t i = 0; i < instances.size(); ++i) {
    auto cfg = desk(pw::ExperimentKind::PhasePoint, 10000, opt);
    cfg.h_sweep = {instances[i].h};
    cfg.params.mu = instances[i].mu;
    cfg.centers = {pw::default_centers(2)[instances[i].center]};
    cfg.moment_orders = {1, 2, 3, 4};
    cfg.seed = opt.seed + 100 + i;
    const auto r = pw::run_phase_point(cfg).front();
    for (const auto& m : r.moments) {
      const double z = std::abs(m.monte_carlo - m.exact) / m.se;
      c.check(z <= 5.0, "instance " + std::to_string(i) + " (" + hlabel(r.h) + fmt(", mu=%.3f", r.mu) + ", " +
                            std::to_string(r.n_active) + " modes) M=" + std::to_string(m.order) + ": MC " +
                            fmt("%.5g", m.monte_carlo) + " vs exact " + fmt("%.5g", m.exact) + fmt(" (%.2f SE)", z));
    }
  }
  return c.finish();
}

bool criterion9(const Options& opt) {
  Criterion c(9, "Lipschitz probes within the theoretical constants");
  const std::size_t pairs = 1000;
  for (double h : kSweep) {
    pw::ModelParams p;
    p.h = h;
    const auto lattice = pw::build_lattice(p);
    const auto form = pw::xray_quadratic_form(lattice, pw::default_segments(2).front());
    pw::BatchStatistic F = [&](const Eigen::MatrixXd& C) {
      const Eigen::VectorXd f2 = form.squared(C);
      std::vector<double> out(static_cast<std::size_t>(f2.size()));
      for (Eigen::Index i = 0; i < f2.size(); ++i) out[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, f2[i]));
      return out;
    };
    const double bound = pw::theoretical_lipschitz_F(p);
    const auto probe = pw::lipschitz_probe(F, lattice.size(), pairs, pw::derive_seed(opt.seed, 9, 0));
    c.check(probe.max_ratio <= bound, hlabel(h) + " F: max ratio " + fmt("%.4f", probe.max_ratio) + " <= " +
                                          fmt("%.4f", bound) + " over " + std::to_string(probe.pairs) + " pairs");
  }
  // G_2 and the fine-grid surrogate of G_inf; the sup grid at 2^-6 costs
  // about 0.6 s per draw on one core, so these probes stop at 2^-5
  for (double h : {1.0 / 16, 1.0 / 32}) {
    pw::ModelParams p;
    p.h = h;
    const auto lattice = pw::build_lattice(p);
    const auto grid = pw::phase_grid(p);
    const unsigned threads = pw::resolve_thread_count(opt.threads);
    const pw::PhaseSupScanner scanner(p, lattice, grid, 1e-10, threads);
    const auto [C, D] = pw::probe_pairs(lattice.size(), pairs, pw::derive_seed(opt.seed, 9, 1));
    auto both = [&](const Eigen::MatrixXd& M) {
      std::vector<double> sup(static_cast<std::size_t>(M.cols()), 0.0), mean(static_cast<std::size_t>(M.cols()), 0.0);
      scanner.scan(M, [&](Eigen::Index col, std::size_t, std::size_t, double g2) {
        const auto k = static_cast<std::size_t>(col);
        sup[k] = std::max(sup[k], g2);
        mean[k] += g2;
      }, threads);
      for (std::size_t k = 0; k < sup.size(); ++k) {
        sup[k] = std::sqrt(std::max(0.0, sup[k]));
        mean[k] = std::sqrt(std::max(0.0, mean[k] / static_cast<double>(grid.count())));
      }
      return std::pair{sup, mean};
    };
    const auto [sc, mc] = both(C);
    const auto [sd, md] = both(D);
    const double nn = static_cast<double>(lattice.size());
    const double b2 = 1.0;                                // N^0 mu^0
    const double binf = std::sqrt(nn) * std::pow(p.mu, -0.75);  // N^1/2 mu^-(n+1)/4
    const auto g2 = pw::lipschitz_probe(mc, md, C, D);
    const auto ginf = pw::lipschitz_probe(sc, sd, C, D);
    c.check(g2.max_ratio <= b2, hlabel(h) + " G_2: max ratio " + fmt("%.4f", g2.max_ratio) + " <= " + fmt("%.4f", b2) +
                                    " over " + std::to_string(g2.pairs) + " pairs");
    c.check(ginf.max_ratio <= binf, hlabel(h) + " G_inf (" + std::to_string(grid.count()) + "-point grid): max ratio " +
                                        fmt("%.4f", ginf.max_ratio) + " <= " + fmt("%.4f", binf));
  }
  return c.finish();
}

bool criterion10(const Options& opt) {
  Criterion c(10, "byte-identical CSV on re-run with identical config");
  const std::string ini =
      "[model]\nn = 2\nh = 2^-4\nbeta = 1\nalpha = 0.5\n"
      "[run]\nseed = " + std::to_string(opt.seed) + "\nsamples = 600\n"
      "[xray-uniform]\nsamples = 8\n"
      "[phase-sup]\nsamples = 8\n"
      "[traces]\nmu_sweep = 1 2 4\n"
      "[tails]\nsamples = 1200\n";
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / ("planckwave-acceptance-" + std::to_string(opt.seed));
  fs::remove_all(base);
  auto run_all = [&](const fs::path& dir, unsigned threads) {
    auto tree = pw::parse_config_text(ini);
    pw::set_config_value(tree, "run.threads", std::to_string(threads));
    pw::OutputDirectory out(dir, false);
    auto emit = [&](const pw::ReportBundle& b) {
      for (const auto& [name, table] : b.tables) out.write_csv(name, table);
    };
    using K = pw::ExperimentKind;
    emit(pw::report(pw::run_xray_point(pw::experiment_config(tree, K::XrayPoint))));
    emit(pw::report(pw::run_xray_uniform(pw::experiment_config(tree, K::XrayUniform))));
    emit(pw::report(pw::run_phase_point(pw::experiment_config(tree, K::PhasePoint))));
    emit(pw::report(pw::run_phase_sup(pw::experiment_config(tree, K::PhaseSup))));
    emit(pw::report(pw::run_traces(pw::experiment_config(tree, K::Traces))));
    emit(pw::report(pw::run_tails(pw::experiment_config(tree, K::Tails))));
    return out.files();
  };
  const auto a = run_all(base / "a", 1);
  const auto b = run_all(base / "b", 1);
  const auto t = run_all(base / "c", 2);
  for (const auto& [name, meta] : a) {
    const bool same = b.count(name) && b.at(name) == meta;
    const bool same_threads = t.count(name) && t.at(name) == meta;
    c.check(same && same_threads, name + " (" + meta["sha1"].get<std::string>().substr(0, 12) + ", " +
                                      std::to_string(meta["bytes"].get<std::size_t>()) + " bytes)" +
                                      (same_threads ? "" : " differs with 2 threads"));
  }
  c.check(a.size() == b.size() && a.size() >= 14, std::to_string(a.size()) + " CSV files compared");
  fs::remove_all(base);
  return c.finish();
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"planckwave desk-scale acceptance suite"};
  app.add_option("--threads", opt.threads, "worker threads (0 = all cores)");
  app.add_option("--only", opt.only, "run only these criteria")->check(CLI::Range(1, 10));
  app.add_option("--seed", opt.seed, "master seed");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<bool(const Options&)>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                                   criterion5, criterion6, criterion7, criterion8,
                                                                   criterion9, criterion10};
  std::cout << "planckwave acceptance: n=2 beta=1 alpha=1/2, h in {2^-4, 2^-5, 2^-6}, "
            << pw::resolve_thread_count(opt.threads) << " thread(s)\n";
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!opt.only.empty() && !opt.only.count(static_cast<int>(i + 1))) continue;
    try {
      if (!criteria[i](opt)) ++failed;
    } catch (const std::exception& e) {
      std::cout << "FAIL criterion " << i + 1 << ": exception: " << e.what() << "\n";
      ++failed;
    }
  }
  std::cout << (failed ? std::to_string(failed) + " criterion(s) failed" : std::string("all criteria passed")) << "\n";
  return failed ? 1 : 0;
}
