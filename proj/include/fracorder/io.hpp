#pragma once

// CSV and JSON artifacts.  Numbers are printed with %.17g, which round-trips
// every double; files are written to a temporary name and renamed into place.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fracorder/asymptote.hpp"
#include "fracorder/config.hpp"
#include "fracorder/errors.hpp"
#include "fracorder/inversion.hpp"
#include "fracorder/solver.hpp"
#include "fracorder/spectral.hpp"

namespace fracorder {

inline constexpr const char* kVersion = "0.1.0";

inline void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::IoError, "write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, target, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot rename into '" + path + "': " + ec.message());
}

/// Header t,u_1,...,u_N; one row per time.
inline std::string field_to_csv(const SolutionField& f) {
  std::string out = "t";
  const int n = f.values.empty() ? 0 : static_cast<int>(f.values.front().size());
  for (int i = 1; i <= n; ++i) out += ",u_" + std::to_string(i);
  out += "\r\n";
  for (std::size_t k = 0; k < f.size(); ++k) {
    out += detail::format_double(f.times[k]);
    for (int i = 0; i < n; ++i) out += "," + detail::format_double(f.values[k](i));
    out += "\r\n";
  }
  return out;
}

/// Header t,value.
inline std::string series_to_csv(const ObservationSeries& s) {
  std::string out = "t,value\r\n";
  for (std::size_t k = 0; k < s.size(); ++k)
    out += detail::format_double(s.times[k]) + "," + detail::format_double(s.u_at_x0[k]) + "\r\n";
  return out;
}

namespace detail {

inline std::vector<std::vector<double>> parse_csv_numbers(const std::string& text, std::vector<std::string>& header) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  int lineno = 0;
  header.clear();
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (header.empty()) {
      header = cells;
      continue;
    }
    if (cells.size() != header.size())
      throw Error(ErrorKind::ConfigError, "CSV line " + std::to_string(lineno) + " has " +
                                              std::to_string(cells.size()) + " cells, header has " +
                                              std::to_string(header.size()));
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_double("CSV line " + std::to_string(lineno), c));
    rows.push_back(std::move(row));
  }
  if (header.empty() || rows.empty()) throw Error(ErrorKind::ConfigError, "CSV holds no data rows");
  if (header[0] != "t") throw Error(ErrorKind::ConfigError, "CSV first column must be 't'");
  return rows;
}

}  // namespace detail

/// Reads `t,value` (or the first value column of a wider file).
inline ObservationSeries series_from_csv(const std::string& text) {
  std::vector<std::string> header;
  const auto rows = detail::parse_csv_numbers(text, header);
  if (header.size() < 2) throw Error(ErrorKind::ConfigError, "CSV needs a value column after 't'");
  ObservationSeries s;
  s.x0 = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  for (const auto& r : rows) {
    if (!s.times.empty() && !(r[0] > s.times.back()))
      throw Error(ErrorKind::ConfigError, "CSV times must increase strictly");
    s.times.push_back(r[0]);
    s.u_at_x0.push_back(r[1]);
  }
  return s;
}

inline SolutionField field_from_csv(const std::string& text, const Grid& grid = {}) {
  std::vector<std::string> header;
  const auto rows = detail::parse_csv_numbers(text, header);
  SolutionField f;
  const int n = static_cast<int>(header.size()) - 1;
  f.grid = grid.n[0] > 0 ? grid : Grid::unit_interval(n);
  for (const auto& r : rows) {
    f.times.push_back(r[0]);
    f.values.push_back(Eigen::Map<const Eigen::VectorXd>(r.data() + 1, n));
  }
  return f;
}

namespace detail {

/// JSON cannot hold inf or nan; they become strings.
inline nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

inline nlohmann::json complex_json(Complex z) { return nlohmann::json::array({number(z.real()), number(z.imag())}); }

}  // namespace detail

inline nlohmann::json to_json(const ObservationSeries& s) {
  nlohmann::json j;
  j["x0"] = {detail::number(s.x0[0]), detail::number(s.x0[1])};
  j["t"] = s.times;
  j["value"] = s.u_at_x0;
  return j;
}

inline nlohmann::json to_json(const SolutionField& f) {
  nlohmann::json j;
  j["method"] = to_string(f.method);
  j["dim"] = f.grid.dim;
  j["n"] = f.grid.n;
  j["length"] = f.grid.length;
  j["t"] = f.times;
  nlohmann::json values = nlohmann::json::array();
  for (const auto& v : f.values) values.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  j["values"] = std::move(values);
  j["warnings"] = f.warnings;
  return j;
}

inline nlohmann::json to_json(const RecoveryResult& r) {
  nlohmann::json j;
  j["alpha_hat"] = detail::number(r.alpha_hat);
  j["leading_coeff_hat"] = detail::number(r.leading_coeff_hat);
  j["fit_window"] = {detail::number(r.fit_window[0]), detail::number(r.fit_window[1])};
  j["residual_norm"] = detail::number(r.residual_norm);
  j["boundary_estimate"] = r.boundary_estimate;
  j["method"] = r.method;
  const auto& d = r.diagnostics;
  j["diagnostics"] = {{"slope_stderr", detail::number(d.slope_stderr)},
                      {"window_sensitivity", detail::number(d.window_sensitivity)},
                      {"samples", d.samples},
                      {"c1", detail::number(d.c1)},
                      {"c2", detail::number(d.c2)},
                      {"loglog_alpha", detail::number(d.loglog_alpha)},
                      {"iterations", d.iterations},
                      {"auto_window", d.auto_window},
                      {"note", d.note}};
  return j;
}

/// Eigenvalues, cluster data and full projector matrices (real and imaginary parts, row-major).
inline nlohmann::json to_json(const SpectralDecomposition& dec, bool with_projectors = true) {
  nlohmann::json j;
  j["size"] = dec.size();
  j["norm_A"] = dec.norm_A;
  j["cluster_tol"] = dec.config.cluster_tol;
  j["cluster_ambiguity"] = dec.cluster_ambiguity;
  j["ambiguity_note"] = dec.ambiguity_note;
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto& c : dec.clusters) {
    nlohmann::json cj;
    cj["lambda"] = detail::complex_json(c.lambda);
    cj["dim"] = c.dim;
    cj["index"] = c.index;
    nlohmann::json ev = nlohmann::json::array();
    for (const auto& l : c.eigenvalues) ev.push_back(detail::complex_json(l));
    cj["eigenvalues"] = std::move(ev);
    if (with_projectors) {
      const CMatrix P = c.projector();
      std::vector<double> re;
      std::vector<double> im;
      for (Eigen::Index r = 0; r < P.rows(); ++r)
        for (Eigen::Index q = 0; q < P.cols(); ++q) {
          re.push_back(P(r, q).real());
          im.push_back(P(r, q).imag());
        }
      cj["projector_re"] = std::move(re);
      cj["projector_im"] = std::move(im);
    }
    clusters.push_back(std::move(cj));
  }
  j["clusters"] = std::move(clusters);
  return j;
}

inline nlohmann::json to_json(const ProjectorResiduals& r) {
  return {{"idempotence", r.idempotence},
          {"annihilation", r.annihilation},
          {"completeness", r.completeness},
          {"commutation", r.commutation},
          {"nilpotency", r.nilpotency}};
}

/// JSON text with a trailing newline.
inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace fracorder
