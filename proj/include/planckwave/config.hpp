#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "planckwave/ensemble.hpp"
#include "planckwave/error.hpp"
#include "planckwave/params.hpp"

namespace planckwave {

using ConfigTree = boost::property_tree::ptree;

/// Every recognised `section.key`. Unknown keys are rejected so typos fail loudly.
inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema = {
      {"model", {"n", "h", "beta", "alpha", "mu", "epsilon"}},
      {"run", {"seed", "samples", "threads", "h_sweep", "grid_budget"}},
      {"lattice", {"h_sweep"}},
      {"raster", {"resolution", "lo", "hi", "draw"}},
      {"xray", {"samples", "h_sweep", "segments"}},
      {"xray-uniform", {"samples", "h_sweep", "grid_budget", "m_offsets"}},
      {"phase", {"samples", "h_sweep", "centers", "large_mu", "moments"}},
      {"phase-sup", {"samples", "h_sweep", "grid_budget", "centers", "large_mu", "x_spacing", "xi_spacing"}},
      {"traces", {"h_sweep", "centers", "mu_sweep"}},
      {"tails", {"samples", "h_sweep", "statistic", "segments", "centers", "large_mu", "phi_exponents"}},
  };
  return schema;
}

inline void check_schema(const ConfigTree& tree) {
  const auto& schema = config_schema();
  for (const auto& [section, body] : tree) {
    const auto it = schema.find(section);
    if (it == schema.end()) throw ConfigError("unknown config section [" + section + "]");
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw ConfigError("unknown config key " + section + "." + key);
  }
}

inline ConfigTree parse_config_text(const std::string& text) {
  ConfigTree tree;
  std::istringstream is(text);
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  check_schema(tree);
  return tree;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

/// Serialize back to INI text (used for hashing the effective config).
inline std::string config_to_text(const ConfigTree& tree) {
  std::ostringstream os;
  boost::property_tree::ini_parser::write_ini(os, tree);
  return os.str();
}

/// Sets section.key = value, validating against the schema.
inline void set_config_value(ConfigTree& tree, const std::string& dotted, const std::string& value) {
  const auto dot = dotted.find('.');
  if (dot == std::string::npos) throw ConfigError("config override must be section.key: " + dotted);
  const std::string section = dotted.substr(0, dot), key = dotted.substr(dot + 1);
  const auto& schema = config_schema();
  const auto it = schema.find(section);
  if (it == schema.end() || !it->second.count(key)) throw ConfigError("unknown config key " + dotted);
  tree.put(boost::property_tree::ptree::path_type(section + "/" + key, '/'), value);
}

namespace detail {

inline std::string trimmed(std::string s) {
  boost::algorithm::trim(s);
  return s;
}

/// Parses a real number, accepting "a^b" (e.g. 2^-6).
inline double parse_real(const std::string& raw, const std::string& what) {
  const std::string s = trimmed(raw);
  try {
    const auto caret = s.find('^');
    std::size_t used = 0;
    if (caret != std::string::npos) {
      const double base = std::stod(s.substr(0, caret), &used);
      if (used != caret) throw std::invalid_argument(s);
      const std::string e = s.substr(caret + 1);
      const double ex = std::stod(e, &used);
      if (used != e.size()) throw std::invalid_argument(s);
      return std::pow(base, ex);
    }
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse " + what + " value '" + s + "' as a number");
  }
}

inline std::vector<double> parse_list(const std::string& raw, const std::string& what) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, raw, boost::is_any_of(", \t"), boost::token_compress_on);
  std::vector<double> out;
  for (const auto& p : parts)
    if (!trimmed(p).empty()) out.push_back(parse_real(p, what));
  return out;
}

/// Groups separated by '|', each a whitespace/comma separated vector.
inline std::vector<std::vector<double>> parse_groups(const std::string& raw, const std::string& what) {
  std::vector<std::string> groups;
  boost::algorithm::split(groups, raw, boost::is_any_of("|"));
  std::vector<std::vector<double>> out;
  for (const auto& g : groups)
    if (!trimmed(g).empty()) out.push_back(parse_list(g, what));
  return out;
}

inline bool parse_bool(const std::string& raw, const std::string& what) {
  const std::string s = boost::algorithm::to_lower_copy(trimmed(raw));
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ConfigError("cannot parse " + what + " value '" + raw + "' as a boolean");
}

inline std::optional<std::string> lookup(const ConfigTree& tree, const std::string& section, const std::string& key) {
  const auto child = tree.get_child_optional(boost::property_tree::ptree::path_type(section + "/" + key, '/'));
  if (!child) return std::nullopt;
  return child->data();
}

inline std::uint64_t parse_unsigned(const std::string& raw, const std::string& what) {
  const double v = parse_real(raw, what);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1.8e19) throw ConfigError(what + " must be a non-negative integer");
  return static_cast<std::uint64_t>(v);
}

}  // namespace detail

inline ModelParams model_params(const ConfigTree& tree) {
  ModelParams p;
  using detail::lookup;
  using detail::parse_real;
  if (auto v = lookup(tree, "model", "n")) p.n = static_cast<int>(detail::parse_unsigned(*v, "model.n"));
  if (auto v = lookup(tree, "model", "h")) p.h = parse_real(*v, "model.h");
  if (auto v = lookup(tree, "model", "beta")) p.beta = parse_real(*v, "model.beta");
  if (auto v = lookup(tree, "model", "alpha")) p.alpha = parse_real(*v, "model.alpha");
  if (auto v = lookup(tree, "model", "mu")) p.mu = parse_real(*v, "model.mu");
  if (auto v = lookup(tree, "model", "epsilon")) p.epsilon = parse_real(*v, "model.epsilon");
  p.validate();
  return p;
}

inline std::vector<double> sweep_for(const ConfigTree& tree, const std::string& section) {
  if (auto v = detail::lookup(tree, section, "h_sweep")) return detail::parse_list(*v, section + ".h_sweep");
  if (auto v = detail::lookup(tree, "run", "h_sweep")) return detail::parse_list(*v, "run.h_sweep");
  return {};
}

inline std::uint64_t config_seed(const ConfigTree& tree) {
  if (auto v = detail::lookup(tree, "run", "seed")) return detail::parse_unsigned(*v, "run.seed");
  return 1;
}

inline unsigned config_threads(const ConfigTree& tree) {
  if (auto v = detail::lookup(tree, "run", "threads"))
    return static_cast<unsigned>(detail::parse_unsigned(*v, "run.threads"));
  return 0;
}

inline ExperimentConfig experiment_config(const ConfigTree& tree, ExperimentKind kind) {
  using detail::lookup;
  ExperimentConfig cfg;
  cfg.kind = kind;
  cfg.params = model_params(tree);
  const std::string section = to_string(kind);
  const int n = cfg.params.n;
  cfg.seed = config_seed(tree);
  cfg.threads = resolve_thread_count(config_threads(tree));
  cfg.h_sweep = sweep_for(tree, section);
  if (auto v = lookup(tree, "run", "samples")) cfg.samples = detail::parse_unsigned(*v, "run.samples");
  if (auto v = lookup(tree, section, "samples")) cfg.samples = detail::parse_unsigned(*v, section + ".samples");
  if (auto v = lookup(tree, "run", "grid_budget")) cfg.grid_budget = detail::parse_real(*v, "run.grid_budget");
  if (auto v = lookup(tree, section, "grid_budget")) cfg.grid_budget = detail::parse_real(*v, section + ".grid_budget");
  if (auto v = lookup(tree, section, "large_mu")) cfg.large_mu = detail::parse_bool(*v, section + ".large_mu");
  if (auto v = lookup(tree, section, "m_offsets")) cfg.m_offsets = detail::parse_list(*v, section + ".m_offsets");
  if (auto v = lookup(tree, section, "mu_sweep")) cfg.mu_sweep = detail::parse_list(*v, section + ".mu_sweep");
  if (auto v = lookup(tree, section, "x_spacing")) cfg.x_spacing = detail::parse_real(*v, section + ".x_spacing");
  if (auto v = lookup(tree, section, "xi_spacing")) cfg.xi_spacing = detail::parse_real(*v, section + ".xi_spacing");
  if (auto v = lookup(tree, section, "statistic")) cfg.tail_statistic = detail::trimmed(*v);
  if (auto v = lookup(tree, section, "phi_exponents"))
    cfg.phi_exponents = detail::parse_list(*v, section + ".phi_exponents");
  if (auto v = lookup(tree, section, "moments")) {
    cfg.moment_orders.clear();
    for (double m : detail::parse_list(*v, section + ".moments")) {
      if (m != std::floor(m)) throw ConfigError("moment orders must be integers");
      cfg.moment_orders.push_back(static_cast<int>(m));
    }
  }
  if (auto v = lookup(tree, section, "segments")) {
    for (const auto& g : detail::parse_groups(*v, section + ".segments")) {
      if (static_cast<int>(g.size()) != 2 * n) throw ConfigError("each segment needs 2n numbers: x then xi");
      Eigen::VectorXd x(n), xi(n);
      for (int d = 0; d < n; ++d) {
        x[d] = g[d];
        xi[d] = g[n + d];
      }
      cfg.segments.push_back(make_segment(x, xi.normalized()));
    }
  }
  if (auto v = lookup(tree, section, "centers")) {
    for (const auto& g : detail::parse_groups(*v, section + ".centers")) {
      if (static_cast<int>(g.size()) != 2 * n) throw ConfigError("each center needs 2n numbers: x then xi");
      LocalizerCenter c{Eigen::VectorXd(n), Eigen::VectorXd(n)};
      for (int d = 0; d < n; ++d) {
        c.x[d] = g[d];
        c.xi[d] = g[n + d];
      }
      if (!(c.xi.norm() > 0.0)) throw ConfigError("center direction must be nonzero");
      c.xi.normalize();
      cfg.centers.push_back(c);
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace planckwave
