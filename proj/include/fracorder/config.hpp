#pragma once

// Run configuration.  The text form is one `section.key = value` per line,
// '#' starts a comment, blank lines are ignored:
//
//   problem.dim       = 1
//   problem.n_x       = 31
//   problem.b1        = 2 + x
//   problem.initial   = sin(pi*x)
//   solver.method     = spectral
//
// Expressions are written bare.  JSON input is the same key set, either flat
// ({"problem.alpha": 0.5}) or nested ({"problem": {"alpha": 0.5}}).  Every
// key has a default, unknown keys are errors.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fracorder/errors.hpp"
#include "fracorder/operator.hpp"

namespace fracorder {

struct RunConfig {
  struct Problem {
    int dim = 1;
    double length_x = 1.0;
    double length_y = 1.0;
    int n_x = 31;
    int n_y = 31;
    std::string a11 = "1";
    std::string a12 = "0";
    std::string a22 = "1";
    std::string b1 = "0";
    std::string b2 = "0";
    std::string c = "0";
    std::string initial = "sin(pi*x)";
    double x0_x = 0.5;
    double x0_y = 0.5;
    double alpha = 0.5;
  } problem;
  struct Solver {
    std::string method = "spectral";
    int n_steps = 2048;
    /// 0 selects max(1, (2 - alpha)/alpha).
    double grading = 0.0;
    double t_min = 1.0;
    double t_max = 10.0;
    int per_decade = 64;
  } solver;
  struct Recovery {
    /// 0 for either end selects the automatic window.
    double window_lo = 0.0;
    double window_hi = 0.0;
    std::string fit = "two-term";
    double noise = 0.0;
    int seeds = 1;
  } recovery;
  struct Output {
    std::string directory = "out";
    std::string formats = "csv,json";
  } output;
  std::uint64_t seed = 1;

  bool wants(const std::string& format) const {
    std::stringstream ss(output.formats);
    std::string item;
    while (std::getline(ss, item, ','))
      if (item == format) return true;
    return false;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] inline void config_fail(const std::string& key, const std::string& what) {
  throw Error(ErrorKind::ConfigError, "config key '" + key + "': " + what);
}

/// One accessor per key: parse from text, print canonically.
struct KeyBinding {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    config_fail(key, "expected a number, got '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(d)) config_fail(key, "expected a finite number, got '" + v + "'");
  return d;
}

inline long long parse_integer(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long i = 0;
  try {
    i = std::stoll(v, &used);
  } catch (const std::exception&) {
    config_fail(key, "expected an integer, got '" + v + "'");
  }
  if (used != v.size()) config_fail(key, "expected an integer, got '" + v + "'");
  return i;
}

template <class M>
KeyBinding real_key(std::string key, M member) {
  return {key, [key, member](RunConfig& c, const std::string& v) { member(c) = parse_double(key, v); },
          [member](const RunConfig& c) { return format_double(member(const_cast<RunConfig&>(c))); }};
}

template <class M>
KeyBinding int_key(std::string key, M member) {
  return {key,
          [key, member](RunConfig& c, const std::string& v) {
            using T = std::remove_reference_t<decltype(member(c))>;
            if constexpr (std::is_unsigned_v<T>) {
              T u = 0;
              const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), u);
              if (ec == std::errc::result_out_of_range) config_fail(key, "integer out of range");
              if (ec != std::errc() || end != v.data() + v.size())
                config_fail(key, v.rfind('-', 0) == 0 ? "must be non-negative" : "expected an integer, got '" + v + "'");
              member(c) = u;
            } else {
              const long long i = parse_integer(key, v);
              if (i < std::numeric_limits<T>::min() || i > std::numeric_limits<T>::max())
                config_fail(key, "integer out of range");
              member(c) = static_cast<T>(i);
            }
          },
          [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); }};
}

template <class M>
KeyBinding text_key(std::string key, M member) {
  return {key,
          [key, member](RunConfig& c, const std::string& v) {
            if (v.empty()) config_fail(key, "empty value");
            member(c) = v;
          },
          [member](const RunConfig& c) { return member(const_cast<RunConfig&>(c)); }};
}

inline const std::vector<KeyBinding>& key_bindings() {
  static const std::vector<KeyBinding> keys = {
      int_key("problem.dim", [](RunConfig& c) -> int& { return c.problem.dim; }),
      real_key("problem.length_x", [](RunConfig& c) -> double& { return c.problem.length_x; }),
      real_key("problem.length_y", [](RunConfig& c) -> double& { return c.problem.length_y; }),
      int_key("problem.n_x", [](RunConfig& c) -> int& { return c.problem.n_x; }),
      int_key("problem.n_y", [](RunConfig& c) -> int& { return c.problem.n_y; }),
      text_key("problem.a11", [](RunConfig& c) -> std::string& { return c.problem.a11; }),
      text_key("problem.a12", [](RunConfig& c) -> std::string& { return c.problem.a12; }),
      text_key("problem.a22", [](RunConfig& c) -> std::string& { return c.problem.a22; }),
      text_key("problem.b1", [](RunConfig& c) -> std::string& { return c.problem.b1; }),
      text_key("problem.b2", [](RunConfig& c) -> std::string& { return c.problem.b2; }),
      text_key("problem.c", [](RunConfig& c) -> std::string& { return c.problem.c; }),
      text_key("problem.initial", [](RunConfig& c) -> std::string& { return c.problem.initial; }),
      real_key("problem.x0_x", [](RunConfig& c) -> double& { return c.problem.x0_x; }),
      real_key("problem.x0_y", [](RunConfig& c) -> double& { return c.problem.x0_y; }),
      real_key("problem.alpha", [](RunConfig& c) -> double& { return c.problem.alpha; }),
      text_key("solver.method", [](RunConfig& c) -> std::string& { return c.solver.method; }),
      int_key("solver.n_steps", [](RunConfig& c) -> int& { return c.solver.n_steps; }),
      real_key("solver.grading", [](RunConfig& c) -> double& { return c.solver.grading; }),
      real_key("solver.t_min", [](RunConfig& c) -> double& { return c.solver.t_min; }),
      real_key("solver.t_max", [](RunConfig& c) -> double& { return c.solver.t_max; }),
      int_key("solver.per_decade", [](RunConfig& c) -> int& { return c.solver.per_decade; }),
      real_key("recovery.window_lo", [](RunConfig& c) -> double& { return c.recovery.window_lo; }),
      real_key("recovery.window_hi", [](RunConfig& c) -> double& { return c.recovery.window_hi; }),
      text_key("recovery.fit", [](RunConfig& c) -> std::string& { return c.recovery.fit; }),
      real_key("recovery.noise", [](RunConfig& c) -> double& { return c.recovery.noise; }),
      int_key("recovery.seeds", [](RunConfig& c) -> int& { return c.recovery.seeds; }),
      text_key("output.directory", [](RunConfig& c) -> std::string& { return c.output.directory; }),
      text_key("output.formats", [](RunConfig& c) -> std::string& { return c.output.formats; }),
      int_key("seed", [](RunConfig& c) -> std::uint64_t& { return c.seed; }),
  };
  return keys;
}

inline const KeyBinding& binding(const std::string& key) {
  for (const auto& b : key_bindings())
    if (b.key == key) return b;
  config_fail(key, "unknown key");
}

}  // namespace detail

/// Checks ranges and that every expression parses; all before any compute.
inline void validate(const RunConfig& c) {
  using detail::config_fail;
  if (c.problem.dim != 1 && c.problem.dim != 2) config_fail("problem.dim", "must be 1 or 2");
  if (!(c.problem.alpha > 0.0 && c.problem.alpha < 1.0)) config_fail("problem.alpha", "must lie in (0, 1)");
  if (c.solver.method != "spectral" && c.solver.method != "l1")
    config_fail("solver.method", "must be 'spectral' or 'l1'");
  if (c.solver.n_steps < 4) config_fail("solver.n_steps", "must be >= 4");
  if (c.solver.grading != 0.0 && !(c.solver.grading >= 1.0)) config_fail("solver.grading", "must be 0 (auto) or >= 1");
  if (!(c.solver.t_min > 0.0)) config_fail("solver.t_min", "must be positive");
  if (!(c.solver.t_max > c.solver.t_min)) config_fail("solver.t_max", "must exceed solver.t_min");
  if (c.solver.per_decade < 1) config_fail("solver.per_decade", "must be >= 1");
  const bool auto_lo = c.recovery.window_lo == 0.0;
  const bool auto_hi = c.recovery.window_hi == 0.0;
  if (auto_lo != auto_hi) config_fail("recovery.window_lo", "set both window ends or neither");
  if (!auto_lo && !(c.recovery.window_lo > 0.0 && c.recovery.window_hi > c.recovery.window_lo))
    config_fail("recovery.window_hi", "window needs 0 < window_lo < window_hi");
  if (c.recovery.fit != "loglog" && c.recovery.fit != "two-term")
    config_fail("recovery.fit", "must be 'loglog' or 'two-term'");
  if (!(c.recovery.noise >= 0.0)) config_fail("recovery.noise", "must be >= 0");
  if (c.recovery.seeds < 1) config_fail("recovery.seeds", "must be >= 1");
  for (const char* key : {"problem.a11", "problem.a12", "problem.a22", "problem.b1", "problem.b2", "problem.c",
                          "problem.initial"}) {
    try {
      Expression::parse(detail::binding(key).get(c));
    } catch (const Error& e) {
      throw Error(ErrorKind::SpecError, std::string("config key '") + key + "': " + e.what());
    }
  }
}

/// Canonical text: every key, fixed order, doubles at 17 digits.
inline std::string serialize(const RunConfig& c) {
  std::string out;
  for (const auto& b : detail::key_bindings()) out += b.key + " = " + b.get(c) + "\n";
  return out;
}

inline RunConfig parse_config_text(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::ConfigError, "config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (seen.count(key))
      detail::config_fail(key, "repeated on lines " + std::to_string(seen[key]) + " and " + std::to_string(lineno));
    seen[key] = lineno;
    detail::binding(key).set(c, value);
  }
  validate(c);
  return c;
}

namespace detail {

inline void flatten(const nlohmann::json& j, const std::string& prefix, std::map<std::string, std::string>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(*it, prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    return;
  }
  if (j.is_string()) out[prefix] = j.get<std::string>();
  else if (j.is_number_integer() || j.is_number_unsigned()) out[prefix] = j.dump();
  else if (j.is_number_float()) out[prefix] = format_double(j.get<double>());
  else config_fail(prefix, "expected a number or a string");
}

}  // namespace detail

inline RunConfig parse_config_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ConfigError, std::string("config JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::ConfigError, "config JSON must be an object");
  std::map<std::string, std::string> flat;
  detail::flatten(j, "", flat);
  RunConfig c;
  for (const auto& [k, v] : flat) detail::binding(k).set(c, v);
  validate(c);
  return c;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// JSON when the first non-blank character is '{', key = value otherwise.
inline RunConfig load_config(const std::string& path) {
  const std::string text = read_text_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return parse_config_json(text);
  return parse_config_text(text);
}

/// 64-bit FNV-1a of the canonical text, as 16 hex digits.
inline std::string config_hash(const RunConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline ProblemSpec to_problem(const RunConfig& c) {
  ProblemSpec s;
  s.dim = c.problem.dim;
  s.length = {c.problem.length_x, c.problem.length_y};
  s.n = {c.problem.n_x, c.problem.dim == 1 ? 1 : c.problem.n_y};
  s.a[0][0] = Field::parse(c.problem.a11);
  s.a[0][1] = s.a[1][0] = Field::parse(c.problem.a12);
  s.a[1][1] = Field::parse(c.problem.a22);
  s.b = {Field::parse(c.problem.b1), Field::parse(c.problem.b2)};
  s.c = Field::parse(c.problem.c);
  s.initial = Field::parse(c.problem.initial);
  s.x0 = {c.problem.x0_x, c.problem.dim == 1 ? 0.5 : c.problem.x0_y};
  s.alpha = c.problem.alpha;
  return s;
}

}  // namespace fracorder
