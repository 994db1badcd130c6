#pragma once

// Flat `key = value` scenario configuration. One pair per line, `#` starts a
// comment, lists are comma separated. Parsing collects every problem with
// its line number instead of stopping at the first.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rqa/core.hpp"
#include "rqa/io.hpp"

namespace rqa {

enum class Scenario { GeometryReport, ActionEval, KgSpectrum, KgEvolve, EinsteinFit };
enum class Units { Natural, SI };

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::GeometryReport: return "geometry-report";
    case Scenario::ActionEval: return "action-eval";
    case Scenario::KgSpectrum: return "kg-spectrum";
    case Scenario::KgEvolve: return "kg-evolve";
    case Scenario::EinsteinFit: return "einstein-fit";
  }
  return "?";
}

inline std::optional<Scenario> scenario_from_string(std::string_view s) {
  for (Scenario v : {Scenario::GeometryReport, Scenario::ActionEval, Scenario::KgSpectrum, Scenario::KgEvolve,
                     Scenario::EinsteinFit}) {
    if (s == to_string(v)) return v;
  }
  return std::nullopt;
}

struct ScenarioConfig {
  Scenario scenario = Scenario::GeometryReport;
  Units units = Units::Natural;
  double m = 1.0;
  double c = 1.0;
  double hbar = 1.0;
  double gamma = 1.0;
  std::vector<double> energy;  // empty: scenario default

  std::string chart = "minkowski-identity";
  double chart_a = 1.0;
  std::string chart_table;
  std::string chart_signature = "minkowski";
  std::vector<double> point;

  double h_metric = 1e-4;
  double h_christoffel = 1e-3;
  double h_residual = 1e-3;

  int grid_dims = 1;
  std::vector<long> grid_n;
  std::vector<double> grid_l{1.0};
  int grid_nt = 3;
  double grid_t = 1.0;

  int eigen_count = 1;
  double eigen_tol = 1e-10;
  int eigen_max_restarts = 400;
  long eigen_dense_limit = 2048;

  double dt = 0.0;
  long steps = 0;
  long snapshot_stride = 1;
  std::string initial = "mode";
  int initial_mode = 1;
  std::vector<double> gaussian_center{0.5, 0.5, 0.5};
  double gaussian_width = 0.1;

  std::string field = "standing-wave";
  std::string field_path;
  std::string field_meta;

  std::string target = "diag-warp";
  double target_a = 1.1;
  std::string target_path;
  int fit_samples = 5;
  int fit_residual_samples = 5;
  int fit_nodes = 2;
  double fit_box_lo = 0.0;
  double fit_box_hi = 1.0;
  double fit_time = 0.0;
  double mu0 = 1e-2;
  double mu_factor = 10.0;
  int mu_every = 100;
  int max_iter = 500;
  bool pin_boundary = false;
  std::string time_coordinate = "ct";
  double fd_step = 1e-6;
  double grad_tol = 1e-9;

  bool operator==(const ScenarioConfig&) const = default;
};

struct ConfigIssue {
  int line = 0;  // 0 when the problem is not tied to a line
  std::string message;

  std::string format() const {
    return line > 0 ? "line " + std::to_string(line) + ": " + message : message;
  }
};

struct ConfigParse {
  ScenarioConfig config;
  std::vector<ConfigIssue> issues;
  bool ok() const { return issues.empty(); }
};

namespace config_detail {

inline std::vector<std::string> split_list(std::string_view v) {
  auto parts = io::split_csv(v);
  if (parts.size() == 1 && parts[0].empty()) parts.clear();
  return parts;
}

inline bool parse_bool(std::string_view v) {
  const std::string s(io::trim(v));
  if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
  if (s == "false" || s == "no" || s == "0" || s == "off") return false;
  throw std::invalid_argument("not a boolean: " + s);
}

inline std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
  return out;
}

inline std::string choice(std::string_view v, std::initializer_list<const char*> allowed) {
  const std::string s(io::trim(v));
  for (const char* a : allowed) {
    if (s == a) return s;
  }
  std::vector<std::string> names(allowed.begin(), allowed.end());
  throw std::invalid_argument("'" + s + "' is not one of " + join(names));
}

struct Key {
  std::string name;
  std::function<void(ScenarioConfig&, std::string_view)> parse;
  std::function<std::string(const ScenarioConfig&)> echo;  // empty string: omit
};

inline Key real(const char* name, double ScenarioConfig::*field) {
  return {name, [field](ScenarioConfig& c, std::string_view v) { c.*field = io::parse_double(v); },
          [field](const ScenarioConfig& c) { return io::format_double(c.*field); }};
}

template <class Int>
Key integer(const char* name, Int ScenarioConfig::*field) {
  return {name, [field](ScenarioConfig& c, std::string_view v) { c.*field = static_cast<Int>(io::parse_long(v)); },
          [field](const ScenarioConfig& c) { return std::to_string(c.*field); }};
}

inline Key text(const char* name, std::string ScenarioConfig::*field) {
  return {name, [field](ScenarioConfig& c, std::string_view v) { c.*field = std::string(io::trim(v)); },
          [field](const ScenarioConfig& c) { return c.*field; }};
}

inline Key pick(const char* name, std::string ScenarioConfig::*field, std::initializer_list<const char*> allowed) {
  std::vector<std::string> names(allowed.begin(), allowed.end());
  return {name,
          [field, names](ScenarioConfig& c, std::string_view v) {
            const std::string s(io::trim(v));
            if (std::find(names.begin(), names.end(), s) == names.end()) {
              throw std::invalid_argument("'" + s + "' is not one of " + join(names));
            }
            c.*field = s;
          },
          [field](const ScenarioConfig& c) { return c.*field; }};
}

inline Key reals(const char* name, std::vector<double> ScenarioConfig::*field) {
  return {name,
          [field](ScenarioConfig& c, std::string_view v) {
            std::vector<double> out;
            for (const auto& p : split_list(v)) out.push_back(io::parse_double(p));
            if (out.empty()) throw std::invalid_argument("empty list");
            c.*field = out;
          },
          [field](const ScenarioConfig& c) {
            std::vector<std::string> parts;
            for (double x : c.*field) parts.push_back(io::format_double(x));
            return join(parts);
          }};
}

inline Key integers(const char* name, std::vector<long> ScenarioConfig::*field) {
  return {name,
          [field](ScenarioConfig& c, std::string_view v) {
            std::vector<long> out;
            for (const auto& p : split_list(v)) out.push_back(io::parse_long(p));
            if (out.empty()) throw std::invalid_argument("empty list");
            c.*field = out;
          },
          [field](const ScenarioConfig& c) {
            std::vector<std::string> parts;
            for (long x : c.*field) parts.push_back(std::to_string(x));
            return join(parts);
          }};
}

inline const std::vector<Key>& keys() {
  using C = ScenarioConfig;
  static const std::vector<Key> table = {
      {"scenario",
       [](C& c, std::string_view v) {
         const auto s = scenario_from_string(io::trim(v));
         if (!s) {
           throw std::invalid_argument("unknown scenario '" + std::string(io::trim(v)) +
                                       "' (geometry-report, action-eval, kg-spectrum, kg-evolve, einstein-fit)");
         }
         c.scenario = *s;
       },
       [](const C& c) { return std::string(to_string(c.scenario)); }},
      {"units",
       [](C& c, std::string_view v) {
         c.units = choice(v, {"natural", "si"}) == "si" ? Units::SI : Units::Natural;
       },
       [](const C& c) { return std::string(c.units == Units::SI ? "si" : "natural"); }},
      real("m", &C::m),
      real("c", &C::c),
      real("hbar", &C::hbar),
      real("gamma", &C::gamma),
      reals("energy", &C::energy),
      pick("chart", &C::chart, {"minkowski-identity", "diag-warp", "polar-plane", "unit-sphere", "tabulated"}),
      real("chart_a", &C::chart_a),
      text("chart_table", &C::chart_table),
      pick("chart_signature", &C::chart_signature, {"minkowski", "euclidean"}),
      reals("point", &C::point),
      real("h_metric", &C::h_metric),
      real("h_christoffel", &C::h_christoffel),
      real("h_residual", &C::h_residual),
      integer("grid_dims", &C::grid_dims),
      integers("grid_n", &C::grid_n),
      reals("grid_l", &C::grid_l),
      integer("grid_nt", &C::grid_nt),
      real("grid_t", &C::grid_t),
      integer("eigen_count", &C::eigen_count),
      real("eigen_tol", &C::eigen_tol),
      integer("eigen_max_restarts", &C::eigen_max_restarts),
      integer("eigen_dense_limit", &C::eigen_dense_limit),
      real("dt", &C::dt),
      integer("steps", &C::steps),
      integer("snapshot_stride", &C::snapshot_stride),
      pick("initial", &C::initial, {"mode", "gaussian", "zero"}),
      integer("initial_mode", &C::initial_mode),
      reals("gaussian_center", &C::gaussian_center),
      real("gaussian_width", &C::gaussian_width),
      pick("field", &C::field, {"standing-wave", "zero", "csv"}),
      text("field_path", &C::field_path),
      text("field_meta", &C::field_meta),
      pick("target", &C::target, {"diag-warp", "identity", "csv"}),
      real("target_a", &C::target_a),
      text("target_path", &C::target_path),
      integer("fit_samples", &C::fit_samples),
      integer("fit_residual_samples", &C::fit_residual_samples),
      integer("fit_nodes", &C::fit_nodes),
      real("fit_box_lo", &C::fit_box_lo),
      real("fit_box_hi", &C::fit_box_hi),
      real("fit_time", &C::fit_time),
      real("mu0", &C::mu0),
      real("mu_factor", &C::mu_factor),
      integer("mu_every", &C::mu_every),
      integer("max_iter", &C::max_iter),
      {"pin_boundary", [](C& c, std::string_view v) { c.pin_boundary = parse_bool(v); },
       [](const C& c) { return std::string(c.pin_boundary ? "true" : "false"); }},
      pick("time_coordinate", &C::time_coordinate, {"ct", "t"}),
      real("fd_step", &C::fd_step),
      real("grad_tol", &C::grad_tol),
  };
  return table;
}

inline std::vector<std::string> required_keys(Scenario s) {
  switch (s) {
    case Scenario::GeometryReport: return {"chart", "point"};
    case Scenario::ActionEval: return {"grid_n", "grid_l", "grid_nt", "grid_t"};
    case Scenario::KgSpectrum: return {"grid_n", "grid_l"};
    case Scenario::KgEvolve: return {"grid_n", "grid_l", "dt", "steps"};
    case Scenario::EinsteinFit: return {"target"};
  }
  return {};
}

}  // namespace config_detail

inline ConfigParse parse_config(std::string_view text) {
  ConfigParse out;
  ScenarioConfig& cfg = out.config;
  std::map<std::string, int> seen;  // key -> line
  const auto& table = config_detail::keys();

  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = io::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      out.issues.push_back({lineno, "expected 'key = value', got '" + std::string(line) + "'"});
      continue;
    }
    const std::string key(io::trim(line.substr(0, eq)));
    const std::string_view value = io::trim(line.substr(eq + 1));
    const auto it = std::find_if(table.begin(), table.end(), [&](const auto& k) { return k.name == key; });
    if (it == table.end()) {
      out.issues.push_back({lineno, "unknown key '" + key + "'"});
      continue;
    }
    if (const auto prev = seen.find(key); prev != seen.end()) {
      out.issues.push_back({lineno, "duplicate key '" + key + "' (first set on line " +
                                        std::to_string(prev->second) + ")"});
      continue;
    }
    seen[key] = lineno;
    try {
      it->parse(cfg, value);
    } catch (const std::invalid_argument& e) {
      out.issues.push_back({lineno, "invalid value for '" + key + "': " + e.what()});
    }
  }

  auto line_of = [&](const char* key) {
    const auto it = seen.find(key);
    return it == seen.end() ? 0 : it->second;
  };
  auto given = [&](const char* key) { return seen.count(key) > 0; };

  if (!given("scenario")) {
    out.issues.push_back({0, "missing required key 'scenario' (one of geometry-report, action-eval, kg-spectrum, "
                             "kg-evolve, einstein-fit)"});
    return out;
  }
  for (const auto& key : config_detail::required_keys(cfg.scenario)) {
    if (!seen.count(key)) {
      out.issues.push_back({0, "missing required key '" + key + "' for scenario " + to_string(cfg.scenario) +
                                   " (declared on line " + std::to_string(line_of("scenario")) + ")"});
    }
  }

  if (cfg.units == Units::SI) {
    if (!given("m")) cfg.m = 9.1093837015e-31;
    if (!given("c")) cfg.c = 299792458.0;
    if (!given("hbar")) cfg.hbar = 1.054571817e-34;
  }
  if (!given("gamma") && cfg.m > 0.0) cfg.gamma = cfg.hbar * cfg.hbar / cfg.m;

  auto check = [&](bool ok, const char* key, const std::string& what) {
    if (!ok) out.issues.push_back({line_of(key), "'" + std::string(key) + "' " + what});
  };
  check(cfg.m > 0.0, "m", "must be positive");
  check(cfg.c > 0.0, "c", "must be positive");
  check(cfg.hbar > 0.0, "hbar", "must be positive");
  check(cfg.gamma > 0.0, "gamma", "must be positive");
  for (double e : cfg.energy) check(std::isfinite(e), "energy", "samples must be finite");
  check(cfg.chart_a > 0.0, "chart_a", "must be positive");
  check(cfg.chart != "tabulated" || !cfg.chart_table.empty(), "chart_table", "is required for a tabulated chart");
  check(cfg.point.size() <= 4, "point", "has more than 4 coordinates");
  check(cfg.h_metric > 0.0, "h_metric", "must be positive");
  check(cfg.h_christoffel > 0.0, "h_christoffel", "must be positive");
  check(cfg.h_residual > 0.0, "h_residual", "must be positive");
  check(cfg.grid_dims >= 1 && cfg.grid_dims <= 3, "grid_dims", "must be 1, 2 or 3");
  for (long n : cfg.grid_n) check(n >= 3, "grid_n", "entries must be >= 3");
  for (double l : cfg.grid_l) check(l > 0.0, "grid_l", "entries must be positive");
  const std::size_t axes = cfg.scenario == Scenario::ActionEval ? 3 : static_cast<std::size_t>(cfg.grid_dims);
  check(cfg.grid_n.size() <= 1 || cfg.grid_n.size() == axes, "grid_n", "needs one value or one per axis");
  check(cfg.grid_l.size() == 1 || cfg.grid_l.size() == axes, "grid_l", "needs one value or one per axis");
  check(cfg.grid_nt >= 3, "grid_nt", "must be >= 3");
  check(cfg.grid_t > 0.0, "grid_t", "must be positive");
  check(cfg.eigen_count >= 1, "eigen_count", "must be >= 1");
  check(cfg.eigen_tol > 0.0, "eigen_tol", "must be positive");
  check(cfg.eigen_max_restarts >= 1, "eigen_max_restarts", "must be >= 1");
  check(cfg.eigen_dense_limit >= 0, "eigen_dense_limit", "must be >= 0");
  check(cfg.scenario != Scenario::KgEvolve || cfg.dt > 0.0, "dt", "must be positive");
  check(cfg.steps >= (cfg.scenario == Scenario::KgEvolve ? 1 : 0), "steps",
        cfg.scenario == Scenario::KgEvolve ? "must be >= 1" : "must be >= 0");
  check(cfg.snapshot_stride >= 1, "snapshot_stride", "must be >= 1");
  check(cfg.initial_mode >= 1, "initial_mode", "must be >= 1");
  check(cfg.gaussian_center.size() == 1 || cfg.gaussian_center.size() >= axes, "gaussian_center",
        "needs one value or one per axis");
  check(cfg.gaussian_width > 0.0, "gaussian_width", "must be positive");
  check(cfg.field != "csv" || (!cfg.field_path.empty() && !cfg.field_meta.empty()), "field_path",
        "and field_meta are required for field = csv");
  check(cfg.target_a > 0.0, "target_a", "must be positive");
  check(cfg.target != "csv" || !cfg.target_path.empty(), "target_path", "is required for target = csv");
  check(cfg.fit_samples >= 2, "fit_samples", "must be >= 2");
  check(cfg.fit_residual_samples >= 2, "fit_residual_samples", "must be >= 2");
  check(cfg.fit_nodes >= 2, "fit_nodes", "must be >= 2");
  check(cfg.fit_box_hi > cfg.fit_box_lo, "fit_box_hi", "must exceed fit_box_lo");
  check(cfg.mu0 >= 0.0, "mu0", "must be >= 0");
  check(cfg.mu_factor >= 1.0, "mu_factor", "must be >= 1");
  check(cfg.mu_every >= 1, "mu_every", "must be >= 1");
  check(cfg.max_iter >= 0, "max_iter", "must be >= 0");
  check(cfg.fd_step > 0.0, "fd_step", "must be positive");
  check(cfg.grad_tol >= 0.0, "grad_tol", "must be >= 0");
  return out;
}

// Every key with its effective value; parse_config(echo_config(c)) == c.
inline std::vector<std::pair<std::string, std::string>> echo_pairs(const ScenarioConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : config_detail::keys()) {
    std::string v = k.echo(cfg);
    if (!v.empty()) out.emplace_back(k.name, std::move(v));
  }
  return out;
}

inline std::string echo_config(const ScenarioConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : echo_pairs(cfg)) out += k + " = " + v + "\n";
  return out;
}

}  // namespace rqa
