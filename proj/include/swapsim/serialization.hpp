// serialization.hpp - JSON files for density matrices and count tables,
// plus a flat tab-separated dump of density-matrix real parts for plotting.
//
// Every file carries "format_version". Floats are written in shortest
// round-trip form, so export followed by import is lossless.

#pragma once

#include "swapsim/state_algebra.hpp"
#include "swapsim/tomography.hpp"

#include <json.hpp>

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>

namespace swapsim {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

/// Malformed input file; the message names the file and the line or field.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string format_double(double x) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

inline std::string basis_label(int index, int n_photons) {
  std::string s;
  for (int p = 0; p < n_photons; ++p) s += ((index >> (n_photons - 1 - p)) & 1) ? 'v' : 'h';
  return s;
}

// ----------------------------------------------------------------------------
// Field access with path context

namespace detail {

[[noreturn]] inline void field_error(const std::string& where, const std::string& what) {
  throw ParseError(where + ": " + what);
}

inline const Json& require(const Json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object()) field_error(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) field_error(where, "missing field '" + key + "'");
  return *it;
}

inline double as_number(const Json& v, const std::string& where) {
  if (!v.is_number()) field_error(where, "expected a number");
  return v.get<double>();
}

inline std::uint64_t as_count(const Json& v, const std::string& where) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    field_error(where, "expected a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

inline std::string as_string(const Json& v, const std::string& where) {
  if (!v.is_string()) field_error(where, "expected a string");
  return v.get<std::string>();
}

inline void check_header(const Json& doc, std::string_view kind, const std::string& where) {
  const Json& version = require(doc, "format_version", where);
  if (!version.is_number_integer() || version.get<int>() != kFormatVersion) {
    field_error(where + ".format_version", "unsupported format version (expected " + std::to_string(kFormatVersion) + ")");
  }
  const std::string k = as_string(require(doc, "kind", where), where + ".kind");
  if (k != kind) field_error(where + ".kind", "expected '" + std::string(kind) + "', found '" + k + "'");
}

inline void reject_unknown(const Json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (auto a : allowed) ok = ok || it.key() == a;
    if (!ok) field_error(where, "unknown field '" + it.key() + "'");
  }
}

}  // namespace detail

/// Parses JSON text; syntax errors report line and column.
inline Json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ----------------------------------------------------------------------------
// Density matrices

inline Json density_matrix_to_json(const DensityMatrix& rho) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "density_matrix";
  j["n_photons"] = rho.n_photons();
  Json basis = Json::array();
  for (Eigen::Index i = 0; i < rho.dim(); ++i) basis.push_back(basis_label(static_cast<int>(i), rho.n_photons()));
  j["basis"] = basis;
  Json entries = Json::array();
  Json grid = Json::array();
  for (Eigen::Index r = 0; r < rho.dim(); ++r) {
    Json row = Json::array();
    Json real_row = Json::array();
    for (Eigen::Index c = 0; c < rho.dim(); ++c) {
      row.push_back(Json::array({rho(r, c).real(), rho(r, c).imag()}));
      real_row.push_back(rho(r, c).real());
    }
    entries.push_back(row);
    grid.push_back(real_row);
  }
  j["entries"] = entries;
  j["real_part_grid"] = grid;
  return j;
}

inline DensityMatrix density_matrix_from_json(const Json& j, const std::string& where = "density_matrix") {
  detail::check_header(j, "density_matrix", where);
  const Json& nj = detail::require(j, "n_photons", where);
  if (!nj.is_number_integer() || nj.get<int>() < 1 || nj.get<int>() > 8) {
    detail::field_error(where + ".n_photons", "expected an integer in [1, 8]");
  }
  const int n = nj.get<int>();
  const auto dim = static_cast<std::size_t>(1) << n;
  const Json& entries = detail::require(j, "entries", where);
  if (!entries.is_array() || entries.size() != dim) {
    detail::field_error(where + ".entries", "expected " + std::to_string(dim) + " rows");
  }
  CMatrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < dim; ++r) {
    const std::string rw = where + ".entries[" + std::to_string(r) + "]";
    if (!entries[r].is_array() || entries[r].size() != dim) detail::field_error(rw, "expected " + std::to_string(dim) + " columns");
    for (std::size_t c = 0; c < dim; ++c) {
      const std::string cw = rw + "[" + std::to_string(c) + "]";
      const Json& e = entries[r][c];
      if (!e.is_array() || e.size() != 2) detail::field_error(cw, "expected [re, im]");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          Complex(detail::as_number(e[0], cw + "[0]"), detail::as_number(e[1], cw + "[1]"));
    }
  }
  try {
    return DensityMatrix::from_matrix(n, m);
  } catch (const std::invalid_argument& e) {
    throw ParseError(where + ".entries: " + e.what());
  }
}

/// Tab-separated real/imaginary parts, one matrix element per line.
inline std::string density_matrix_tsv(const DensityMatrix& rho) {
  std::string out = "row\tcol\tre\tim\n";
  for (Eigen::Index r = 0; r < rho.dim(); ++r) {
    for (Eigen::Index c = 0; c < rho.dim(); ++c) {
      out += basis_label(static_cast<int>(r), rho.n_photons()) + '\t' +
             basis_label(static_cast<int>(c), rho.n_photons()) + '\t' + format_double(rho(r, c).real()) + '\t' +
             format_double(rho(r, c).imag()) + '\n';
    }
  }
  return out;
}

// ----------------------------------------------------------------------------
// Count tables

inline Json count_table_to_json(const CountTable& t) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "count_table";
  j["conditioning"] = std::string(to_string(t.conditioning));
  j["flux_hz"] = t.flux_hz;
  j["integration_s"] = t.integration_s;
  j["seed"] = t.seed;
  Json settings = Json::array();
  for (const auto& s : tomography_settings()) {
    Json row;
    row["id"] = s.id;
    row["theta_a_deg"] = s.theta_a * 180.0 / std::numbers::pi;
    row["phi_deg"] = s.phi * 180.0 / std::numbers::pi;
    row["theta_b_deg"] = s.theta_b * 180.0 / std::numbers::pi;
    Json counts;
    for (int o = 0; o < 4; ++o) counts[std::string(outcome_label(o))] = t.at(s.id, o);
    row["counts"] = counts;
    settings.push_back(row);
  }
  j["settings"] = settings;
  return j;
}

inline CountTable count_table_from_json(const Json& j, const std::string& where = "count_table") {
  detail::check_header(j, "count_table", where);
  detail::reject_unknown(j, {"format_version", "kind", "conditioning", "flux_hz", "integration_s", "seed", "settings"},
                         where);
  CountTable t;
  const std::string cond = detail::as_string(detail::require(j, "conditioning", where), where + ".conditioning");
  try {
    t.conditioning = bell_kind_from_string(cond);
  } catch (const std::invalid_argument& e) {
    detail::field_error(where + ".conditioning", e.what());
  }
  t.flux_hz = detail::as_number(detail::require(j, "flux_hz", where), where + ".flux_hz");
  t.integration_s = detail::as_number(detail::require(j, "integration_s", where), where + ".integration_s");
  t.seed = detail::as_count(detail::require(j, "seed", where), where + ".seed");
  if (!(t.flux_hz > 0.0)) detail::field_error(where + ".flux_hz", "must be positive");
  if (!(t.integration_s > 0.0)) detail::field_error(where + ".integration_s", "must be positive");

  const Json& settings = detail::require(j, "settings", where);
  if (!settings.is_array()) detail::field_error(where + ".settings", "expected an array");
  std::array<bool, kSettingCount> seen{};
  for (std::size_t i = 0; i < settings.size(); ++i) {
    const std::string sw = where + ".settings[" + std::to_string(i) + "]";
    const Json& row = settings[i];
    const Json& idj = detail::require(row, "id", sw);
    if (!idj.is_number_integer() || idj.get<int>() < 1 || idj.get<int>() > kSettingCount) {
      detail::field_error(sw + ".id", "expected a setting id in 1..9");
    }
    const int id = idj.get<int>();
    if (seen[static_cast<std::size_t>(id - 1)]) detail::field_error(sw + ".id", "duplicate setting " + std::to_string(id));
    seen[static_cast<std::size_t>(id - 1)] = true;
    const Json& counts = detail::require(row, "counts", sw);
    for (int o = 0; o < 4; ++o) {
      const std::string key(outcome_label(o));
      t.at(id, o) = detail::as_count(detail::require(counts, key, sw + ".counts"), sw + ".counts." + key);
    }
  }
  for (int id = 1; id <= kSettingCount; ++id) {
    if (!seen[static_cast<std::size_t>(id - 1)]) {
      detail::field_error(where + ".settings", "setting " + std::to_string(id) + " is missing");
    }
  }
  return t;
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline CountTable import_count_table(const std::filesystem::path& path) {
  return count_table_from_json(parse_json_text(read_text_file(path), path.string()), path.string());
}

inline DensityMatrix import_density_matrix(const std::filesystem::path& path) {
  return density_matrix_from_json(parse_json_text(read_text_file(path), path.string()), path.string());
}

/// Writes via a temporary file and rename so a failed write leaves nothing behind.
inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out << content;
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("write to '" + tmp.string() + "' failed");
    }
  }
  std::filesystem::rename(tmp, path);
}

inline void export_density_matrix(const DensityMatrix& rho, const std::filesystem::path& path) {
  write_text_file(path, dump(density_matrix_to_json(rho)));
}

inline void export_count_table(const CountTable& t, const std::filesystem::path& path) {
  write_text_file(path, dump(count_table_to_json(t)));
}

}  // namespace swapsim
