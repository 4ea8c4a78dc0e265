#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include "planckwave/error.hpp"
#include "planckwave/field.hpp"
#include "planckwave/lattice.hpp"
#include "planckwave/params.hpp"

namespace planckwave {

using Json = nlohmann::json;  // std::map-backed objects, so keys come out sorted

/// One CSV cell.
using Cell = std::variant<double, std::int64_t, std::uint64_t, std::string>;

/// Shortest round-trip decimal.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string csv_field(const Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) return format_double(*d);
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  if (const auto* u = std::get_if<std::uint64_t>(&cell)) return std::to_string(*u);
  const auto& s = std::get<std::string>(cell);
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace detail

/// Header row plus data rows; serialized RFC 4180 style with CRLF endings.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    if (row.size() != header.size()) throw ConfigError("row width does not match the CSV header");
    rows.push_back(std::move(row));
  }

  std::string to_csv() const {
    std::string out;
    auto emit = [&](const auto& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += detail::csv_field(Cell(cells[i]));
      }
      out += "\r\n";
    };
    emit(header);
    for (const auto& r : rows) emit(r);
    return out;
  }
};

inline std::string to_csv(const Table& t) { return t.to_csv(); }

/// SHA-1 of `data`, hex encoded.
inline std::string sha1_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha1(), nullptr) != 1) throw NumericalError("SHA-1 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

/// Git-style content hash: sha1("blob <size>\0" + data).
inline std::string git_blob_hash(std::string_view data) {
  std::string blob = "blob " + std::to_string(data.size());
  blob.push_back('\0');
  blob.append(data);
  return sha1_hex(blob);
}

inline Json params_json(const ModelParams& p) {
  return Json{{"n", p.n}, {"h", p.h}, {"beta", p.beta}, {"alpha", p.alpha}, {"mu", p.mu}, {"epsilon", p.epsilon}};
}

inline Table lattice_table(const MomentumLattice& lattice) {
  Table t;
  t.header.push_back("index");
  for (int d = 0; d < lattice.dim(); ++d) t.header.push_back("xi_" + std::to_string(d + 1));
  t.header.push_back("radius");
  for (Eigen::Index j = 0; j < lattice.size(); ++j) {
    std::vector<Cell> row{static_cast<std::int64_t>(j)};
    for (int d = 0; d < lattice.dim(); ++d) row.emplace_back(lattice.points(d, j));
    row.emplace_back(lattice.point(j).norm());
    t.add(std::move(row));
  }
  return t;
}

inline Json lattice_metadata(const MomentumLattice& lattice) {
  return Json{{"params", params_json(lattice.params)},
              {"N", lattice.size()},
              {"density_constant", lattice_density_constant(lattice)},
              {"layout", lattice.dim() == 2 ? "equal-angle shells" : "fibonacci shells"}};
}

inline Table raster_table(const Raster& r) {
  Table t;
  for (int d = 0; d < r.dim(); ++d) t.header.push_back("x_" + std::to_string(d + 1));
  t.header.push_back("intensity");
  const int n = r.dim();
  std::vector<int> idx(n, 0);
  for (std::size_t k = 0; k < r.values.size(); ++k) {
    std::vector<Cell> row;
    for (int d = 0; d < n; ++d) row.emplace_back(r.coordinate(d, idx[d]));
    row.emplace_back(r.values[k]);
    t.add(std::move(row));
    for (int d = n - 1; d >= 0; --d) {
      if (++idx[d] < r.resolution) break;
      idx[d] = 0;
    }
  }
  return t;
}

inline Json raster_metadata(const Raster& r, const RandomWaveField& field) {
  Json lo = Json::array(), hi = Json::array();
  for (int d = 0; d < r.dim(); ++d) {
    lo.push_back(r.lo[d]);
    hi.push_back(r.hi[d]);
  }
  return Json{{"params", params_json(field.lattice->params)},
              {"seed", field.coeffs.seed},
              {"N", field.lattice->size()},
              {"lo", lo},
              {"hi", hi},
              {"resolution", r.resolution},
              {"order", "row-major, axis 1 slowest"}};
}

/// Writes artifacts into an output directory and tracks them for the
/// manifest. Existing files are refused unless `force` is set.
class OutputDirectory {
 public:
  OutputDirectory(std::filesystem::path root, bool force) : root_(std::move(root)), force_(force) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw ConfigError("cannot create output directory " + root_.string() + ": " + ec.message());
  }

  const std::filesystem::path& root() const { return root_; }

  void write(const std::string& name, const std::string& contents) {
    const auto path = root_ / name;
    if (std::filesystem::exists(path) && !force_)
      throw ConfigError("refusing to overwrite " + path.string() + " (use --force)");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot write " + path.string());
    os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!os) throw ConfigError("write failed for " + path.string());
    files_[name] = Json{{"sha1", git_blob_hash(contents)}, {"bytes", contents.size()}};
  }

  void write_csv(const std::string& name, const Table& table) { write(name, table.to_csv()); }
  void write_json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }

  const std::map<std::string, Json>& files() const { return files_; }

  /// manifest.json: config hash, per-file content hashes, wall time.
  void write_manifest(const std::string& command, const std::string& config_text, double wall_seconds,
                      Json extra = Json::object()) {
    Json files = Json::object();
    for (const auto& [k, v] : files_) files[k] = v;
    Json m = {{"command", command},
              {"config_hash", git_blob_hash(config_text)},
              {"files", files},
              {"wall_time_seconds", wall_seconds},
              {"generator", "planckwave"}};
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    const auto path = root_ / "manifest.json";
    if (std::filesystem::exists(path) && !force_)
      throw ConfigError("refusing to overwrite " + path.string() + " (use --force)");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os << m.dump(2) << "\n";
    if (!os) throw ConfigError("cannot write " + path.string());
  }

 private:
  std::filesystem::path root_;
  bool force_ = false;
  std::map<std::string, Json> files_;
};

}  // namespace planckwave
