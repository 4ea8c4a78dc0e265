// planckwave command-line front end.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "planckwave/planckwave.hpp"

namespace pw = planckwave;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;

struct Options {
  std::string config;
  std::string out = "planckwave-out";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool force = false;
  bool verbose = false;
  std::vector<std::string> sets;
  std::map<std::string, std::string> mirrored;  // section.key -> value
};

const std::vector<std::string> kCommands = {"lattice", "raster", "xray", "xray-uniform", "phase",
                                            "phase-sup", "traces", "tails", "all"};

void log(const Options& o, const std::string& msg) {
  if (o.verbose) std::cerr << "[planckwave] " << msg << "\n";
}

pw::ConfigTree effective_config(const Options& o) {
  pw::ConfigTree tree;
  if (!o.config.empty()) {
    if (!std::filesystem::exists(o.config)) throw pw::ConfigError("config file not found: " + o.config);
    tree = pw::parse_config_text(pw::read_text_file(o.config));
  }
  for (const auto& [key, value] : o.mirrored) pw::set_config_value(tree, key, value);
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw pw::ConfigError("--set expects section.key=value, got " + s);
    pw::set_config_value(tree, s.substr(0, eq), s.substr(eq + 1));
  }
  if (o.seed) pw::set_config_value(tree, "run.seed", std::to_string(*o.seed));
  if (o.threads) pw::set_config_value(tree, "run.threads", std::to_string(*o.threads));
  return tree;
}

void emit(pw::OutputDirectory& dir, const pw::ReportBundle& bundle) {
  for (const auto& [name, table] : bundle.tables) dir.write_csv(name, table);
  for (const auto& line : bundle.summary) std::cout << line << "\n";
}

std::string suffixed(const std::string& stem, std::size_t k, std::size_t total, const std::string& ext) {
  return total > 1 ? stem + "_" + std::to_string(k) + ext : stem + ext;
}

void run_lattice(const pw::ConfigTree& tree, pw::OutputDirectory& dir) {
  const pw::ModelParams base = pw::model_params(tree);
  auto sweep = pw::sweep_for(tree, "lattice");
  if (sweep.empty()) sweep.push_back(base.h);
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    pw::ModelParams p = base;
    p.h = sweep[k];
    p.validate();
    const auto lattice = pw::build_lattice(p);
    dir.write_csv(suffixed("lattice", k, sweep.size(), ".csv"), pw::lattice_table(lattice));
    dir.write_json(suffixed("lattice", k, sweep.size(), ".json"), pw::lattice_metadata(lattice));
    std::printf("lattice h=%.6g N=%ld density=%.6f\n", p.h, static_cast<long>(lattice.size()),
                pw::lattice_density_constant(lattice));
  }
}

void run_raster(const pw::ConfigTree& tree, pw::OutputDirectory& dir) {
  const pw::ModelParams p = pw::model_params(tree);
  const int n = p.n;
  int resolution = n == 2 ? 256 : 64;
  std::uint64_t draw = 0;
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, -1.0), hi = Eigen::VectorXd::Constant(n, 1.0);
  auto vec = [&](const std::string& key, Eigen::VectorXd& target) {
    if (auto v = pw::detail::lookup(tree, "raster", key)) {
      const auto list = pw::detail::parse_list(*v, "raster." + key);
      if (static_cast<int>(list.size()) != n) throw pw::ConfigError("raster." + key + " needs n numbers");
      for (int d = 0; d < n; ++d) target[d] = list[d];
    }
  };
  vec("lo", lo);
  vec("hi", hi);
  if (auto v = pw::detail::lookup(tree, "raster", "resolution"))
    resolution = static_cast<int>(pw::detail::parse_unsigned(*v, "raster.resolution"));
  if (auto v = pw::detail::lookup(tree, "raster", "draw")) draw = pw::detail::parse_unsigned(*v, "raster.draw");
  auto lattice = std::make_shared<const pw::MomentumLattice>(pw::build_lattice(p));
  const std::uint64_t seed = pw::derive_seed(pw::config_seed(tree), 0xFFFF, draw);
  const auto field = pw::make_field(lattice, pw::sample_coefficients(*lattice, seed));
  const auto raster = pw::field_raster(field, lo, hi, resolution);
  dir.write_csv("raster.csv", pw::raster_table(raster));
  dir.write_json("raster.json", pw::raster_metadata(raster, field));
  double mean = 0.0;
  for (double v : raster.values) mean += v;
  std::printf("raster h=%.6g N=%ld resolution=%d mean|u|^2=%.5f\n", p.h, static_cast<long>(lattice->size()),
              resolution, mean / static_cast<double>(raster.values.size()));
}

void run_command(const std::string& cmd, const pw::ConfigTree& tree, pw::OutputDirectory& dir, const Options& o) {
  using K = pw::ExperimentKind;
  log(o, "running " + cmd);
  if (cmd == "lattice") return run_lattice(tree, dir);
  if (cmd == "raster") return run_raster(tree, dir);
  if (cmd == "xray") return emit(dir, pw::report(pw::run_xray_point(pw::experiment_config(tree, K::XrayPoint))));
  if (cmd == "xray-uniform")
    return emit(dir, pw::report(pw::run_xray_uniform(pw::experiment_config(tree, K::XrayUniform))));
  if (cmd == "phase") return emit(dir, pw::report(pw::run_phase_point(pw::experiment_config(tree, K::PhasePoint))));
  if (cmd == "phase-sup") return emit(dir, pw::report(pw::run_phase_sup(pw::experiment_config(tree, K::PhaseSup))));
  if (cmd == "traces") return emit(dir, pw::report(pw::run_traces(pw::experiment_config(tree, K::Traces))));
  if (cmd == "tails") return emit(dir, pw::report(pw::run_tails(pw::experiment_config(tree, K::Tails))));
  if (cmd == "all") {
    for (const auto& c : kCommands)
      if (c != "all") run_command(c, tree, dir, o);
    return;
  }
  throw pw::ConfigError("unknown subcommand " + cmd);
}

void add_common(CLI::App& app, Options& o) {
  app.add_option("-c,--config", o.config, "INI config file");
  app.add_option("-o,--out", o.out, "Output directory (created if missing)");
  app.add_option("--seed", o.seed, "Master seed (overrides run.seed)");
  app.add_option("--threads", o.threads, "Worker threads (overrides run.threads; env PLANCKWAVE_THREADS)");
  app.add_flag("-f,--force", o.force, "Overwrite existing output files");
  app.add_flag("-v,--verbose", o.verbose, "Progress messages on stderr");
  app.add_option("--set", o.sets, "Override any config key: section.key=value");
  for (const auto& [section, keys] : pw::config_schema())
    for (const auto& key : keys) {
      const std::string name = section + "." + key;
      if (name == "run.seed" || name == "run.threads") continue;
      app.add_option_function<std::string>("--" + name, [&o, name](const std::string& v) { o.mirrored[name] = v; },
                                            "Config key " + name)
          ->group("Config keys");
    }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"planckwave: Gaussian random plane-wave numerical lab"};
  app.require_subcommand(1);
  Options o;
  add_common(app, o);
  app.fallthrough();
  std::string chosen;
  for (const auto& c : kCommands) {
    const std::string about = c == "all" ? "Run every experiment in turn" : "Run the " + c + " experiment";
    auto* sub = app.add_subcommand(c, about);
    sub->callback([&chosen, c] { chosen = c; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    const auto tree = effective_config(o);
    pw::OutputDirectory dir(o.out, o.force);
    log(o, "output directory " + dir.root().string());
    run_command(chosen, tree, dir, o);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    dir.write_manifest(chosen, pw::config_to_text(tree), wall,
                       pw::Json{{"seed", pw::config_seed(tree)}, {"params", pw::params_json(pw::model_params(tree))}});
    log(o, "wrote manifest.json");
  } catch (const pw::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const pw::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
