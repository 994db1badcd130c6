#pragma once

// Scenario runner behind the command-line tool. Each scenario returns the
// `result` section of report.json and may drop CSV files next to it.

#include <filesystem>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "rqa/action.hpp"
#include "rqa/charts.hpp"
#include "rqa/config.hpp"
#include "rqa/einstein.hpp"
#include "rqa/kleingordon.hpp"

#ifndef RQA_VERSION
#define RQA_VERSION "0.1.0"
#endif

namespace rqa {

using json = nlohmann::json;

struct RunOptions {
  std::filesystem::path out_dir = ".";
  bool dump_integrands = false;
};

struct RunOutcome {
  int exit_code = 0;
  json report;
};

inline std::string compiler_id() {
#if defined(__clang__)
  return "clang " __clang_version__;
#elif defined(__GNUC__)
  return "gcc " __VERSION__;
#else
  return "unknown";
#endif
}

namespace scenario_detail {

inline json mat_json(const Mat4& m, int dim) {
  json out = json::array();
  for (int i = 0; i < dim; ++i) {
    json row = json::array();
    for (int j = 0; j < dim; ++j) row.push_back(m[i][j]);
    out.push_back(row);
  }
  return out;
}

inline json constants_json(const ScenarioConfig& cfg) {
  return {{"m", cfg.m}, {"c", cfg.c}, {"hbar", cfg.hbar}, {"gamma", cfg.gamma},
          {"units", cfg.units == Units::SI ? "si" : "natural"}};
}

inline GeometryOptions geometry_options(const ScenarioConfig& cfg) { return {cfg.h_metric, cfg.h_christoffel}; }

inline Chart make_chart(const ScenarioConfig& cfg) {
  charts::ChartRequest req;
  req.name = cfg.chart;
  req.warp = cfg.chart_a;
  req.table_path = cfg.chart_table;
  req.table_signature = cfg.chart_signature == "euclidean" ? Signature::Euclidean : Signature::Minkowski;
  return charts::chart_by_name(req);
}

template <class T>
T axis_value(const std::vector<T>& v, int axis) {
  return v.size() == 1 ? v[0] : v[static_cast<std::size_t>(axis)];
}

inline Box make_box(const ScenarioConfig& cfg) {
  Box b;
  b.dims = cfg.grid_dims;
  for (int a = 0; a < cfg.grid_dims; ++a) {
    b.count[a] = static_cast<int>(axis_value(cfg.grid_n, a));
    b.length[a] = axis_value(cfg.grid_l, a);
  }
  b.validate();
  return b;
}

inline json box_json(const Box& b) {
  json len = json::array(), cnt = json::array(), h = json::array();
  for (int a = 0; a < b.dims; ++a) {
    len.push_back(b.length[a]);
    cnt.push_back(b.count[a]);
    h.push_back(b.spacing(a));
  }
  return {{"dims", b.dims}, {"length", len}, {"count", cnt}, {"spacing", h}, {"interior_nodes", b.interior_size()}};
}

inline EigenOptions eigen_options(const ScenarioConfig& cfg) {
  EigenOptions o;
  o.tolerance = cfg.eigen_tol;
  o.max_restarts = cfg.eigen_max_restarts;
  o.dense_limit = static_cast<std::size_t>(cfg.eigen_dense_limit);
  return o;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + p.string() + "'");
  out << s;
  if (!out) throw Error(ErrorKind::Io, "write to '" + p.string() + "' failed");
}

// ---------------------------------------------------------------------------

inline json geometry_report(const ScenarioConfig& cfg) {
  const Chart chart = make_chart(cfg);
  chart.validate();
  const int m = chart.dim_param;
  if (static_cast<int>(cfg.point.size()) != m) {
    throw Error(ErrorKind::Config, "point has " + std::to_string(cfg.point.size()) + " coordinates, chart '" +
                                       chart.name + "' needs " + std::to_string(m));
  }
  Vec4 u{};
  for (int i = 0; i < m; ++i) u[i] = cfg.point[i];
  const GeometryPoint gp = geometry_point(chart, u, geometry_options(cfg));
  const EinsteinPoint ep = einstein_tensor_at(chart, u, cfg.gamma, geometry_options(cfg));

  json christoffel = json::array(), riemann = json::array();
  for (int i = 0; i < m; ++i) christoffel.push_back(mat_json(gp.christoffel[i], m));
  for (int l = 0; l < m; ++l) {
    json block = json::array();
    for (int i = 0; i < m; ++i) block.push_back(mat_json(gp.riemann[l][i], m));
    riemann.push_back(block);
  }
  json point = json::array();
  for (int i = 0; i < m; ++i) point.push_back(u[i]);
  return {{"chart", chart.name},
          {"dim_param", m},
          {"dim_ambient", chart.dim_ambient},
          {"signature", chart.signature == Signature::Minkowski ? "minkowski" : "euclidean"},
          {"point", point},
          {"metric", mat_json(gp.metric, m)},
          {"inverse_metric", mat_json(gp.inverse_metric, m)},
          {"det_g", gp.det_g},
          {"measure", gp.measure},
          {"christoffel", christoffel},
          {"riemann", riemann},
          {"ricci", mat_json(gp.ricci, m)},
          {"ricci_contraction_scalar", gp.scalar},
          {"scalar_curvature", gp.conventional_scalar()},
          {"einstein", mat_json(ep.einstein, m)},
          {"multiplier", mat_json(ep.multiplier, m)},
          {"steps", {{"metric", cfg.h_metric}, {"christoffel", cfg.h_christoffel}}}};
}

// ---------------------------------------------------------------------------

inline SpaceTimeGrid make_spacetime_grid(const ScenarioConfig& cfg) {
  SpaceTimeGrid g;
  for (int a = 0; a < 3; ++a) {
    g.count[a] = static_cast<int>(axis_value(cfg.grid_n, a));
    g.length[a] = axis_value(cfg.grid_l, a);
  }
  g.time_count = cfg.grid_nt;
  g.duration = cfg.grid_t;
  g.validate();
  return g;
}

// Lowest continuum Dirichlet mode of the box with its energy-relation energy.
inline double standing_wave_energy(const ScenarioConfig& cfg, const SpaceTimeGrid& g) {
  double lambda = 0.0;
  for (int a = 0; a < 3; ++a) lambda += std::numbers::pi * std::numbers::pi / (g.length[a] * g.length[a]);
  return solve_energy_relation(-0.5 * cfg.gamma * lambda, cfg.m, cfg.c, cfg.hbar, cfg.gamma);
}

inline json action_eval(const ScenarioConfig& cfg, const RunOptions& run) {
  const Chart chart = make_chart(cfg);
  chart.validate();
  require_spacetime_chart(chart);

  WaveField phi;
  SpaceTimeGrid grid;
  if (cfg.field == "csv") {
    FieldFile f = read_field(cfg.field_path, cfg.field_meta);
    phi = std::move(f.field);
    grid = phi.grid;
  } else {
    grid = make_spacetime_grid(cfg);
    if (cfg.field == "zero") {
      phi = WaveField::from_function(grid, cfg.m, [](const auto&, double) { return Complex{}; }, true);
    } else {
      const double e = cfg.energy.empty() ? standing_wave_energy(cfg, grid) : cfg.energy.front();
      const double amp = std::sqrt(8.0 / (grid.length[0] * grid.length[1] * grid.length[2]));
      const double omega = e / cfg.hbar;
      phi = WaveField::from_function(
          grid, cfg.m,
          [&](const std::array<double, 3>& x, double t) {
            double s = amp;
            for (int a = 0; a < 3; ++a) s *= std::sin(std::numbers::pi * x[a] / grid.length[a]);
            return s * std::exp(Complex(0.0, -omega * t));
          },
          true);
    }
  }
  const DeformationMap map = DeformationMap::identity(grid, cfg.c);
  MultiplierSchedule schedule(cfg.energy.empty()
                                  ? std::vector<double>{cfg.field == "standing-wave" ? standing_wave_energy(cfg, grid)
                                                                                     : 0.0}
                                  : cfg.energy);
  const ActionBreakdown ab = total_action(phi, chart, map, schedule, cfg.gamma, geometry_options(cfg));

  if (run.dump_integrands) {
    write_integrand_csv((run.out_dir / "kinetic_integrand.csv").string(), ab.kinetic_integrand);
    write_integrand_csv((run.out_dir / "curvature_integrand.csv").string(), ab.curvature_integrand);
    write_integrand_csv((run.out_dir / "norm_integrand.csv").string(), ab.norm_integrand);
  }
  const auto& ex = ab.expansion;
  return {{"chart", chart.name},
          {"field", cfg.field},
          {"grid",
           {{"length", grid.length}, {"count", grid.count}, {"duration", grid.duration},
            {"time_count", grid.time_count}}},
          {"constants", constants_json(cfg)},
          {"multiplier", schedule.samples()},
          {"e_c", ab.e_c},
          {"e_q", ab.e_q},
          {"constraint_term", ab.constraint_term},
          {"total_j", ab.total_j},
          {"slice_residuals", ab.slice_residuals},
          {"expansion",
           {{"kinetic", ex.kinetic}, {"gradient", ex.gradient}, {"cross", ex.cross}, {"curvature", ex.curvature},
            {"constraint", ex.constraint}, {"total", ex.total}, {"relative_mismatch", ab.expansion_mismatch}}}};
}

// ---------------------------------------------------------------------------

inline json kg_spectrum(const ScenarioConfig& cfg, const RunOptions& run) {
  const Box box = make_box(cfg);
  const DirichletLaplacian op(box);
  ModeSet modes = solve_modes(op, cfg.eigen_count, cfg.gamma, eigen_options(cfg));
  attach_energies(modes, cfg.m, cfg.c, cfg.hbar, cfg.gamma);

  json energies = json::array();
  for (const auto& e : modes.energies) energies.push_back(e ? json(*e) : json(nullptr));
  if (run.dump_integrands) {
    std::ostringstream csv;
    csv << "index,x1,x2,x3";
    for (std::size_t k = 0; k < modes.modes.size(); ++k) csv << ",mode_" << k + 1;
    csv << '\n';
    for (std::size_t i = 0; i < op.size(); ++i) {
      const auto x = op.position(i);
      csv << i << ',' << io::format_double(x[0]) << ',' << io::format_double(x[1]) << ',' << io::format_double(x[2]);
      for (const auto& v : modes.modes) csv << ',' << io::format_double(v[i]);
      csv << '\n';
    }
    write_text(run.out_dir / "modes.csv", csv.str());
  }
  return {{"grid", box_json(box)},
          {"constants", constants_json(cfg)},
          {"eigenvalues", modes.eigenvalues},
          {"e1", modes.e1},
          {"energies", energies},
          {"solver", modes.dense ? "dense" : "krylov"},
          {"restarts", modes.restarts}};
}

// ---------------------------------------------------------------------------

inline json kg_evolve(const ScenarioConfig& cfg, const RunOptions& run) {
  const Box box = make_box(cfg);
  const DirichletLaplacian op(box);
  const std::size_t n = op.size();
  std::vector<Complex> phi0(n), dphi0(n);
  std::vector<double> reference;  // |φ₂| for a separable start
  std::optional<double> mode_energy;

  if (cfg.initial == "mode") {
    const ModeSet modes = solve_modes(op, cfg.initial_mode, cfg.gamma, eigen_options(cfg));
    const double lambda = modes.eigenvalues.back();
    const double e = cfg.energy.empty()
                         ? solve_energy_relation(-0.5 * cfg.gamma * lambda, cfg.m, cfg.c, cfg.hbar, cfg.gamma)
                         : cfg.energy.front();
    mode_energy = e;
    reference = modes.modes.back();
    for (std::size_t i = 0; i < n; ++i) {
      phi0[i] = reference[i];
      dphi0[i] = Complex(0.0, -e / cfg.hbar) * reference[i];
    }
  } else if (cfg.initial == "gaussian") {
    const double w2 = cfg.gaussian_width * cfg.gaussian_width;
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = op.position(i);
      double r2 = 0.0;
      for (int a = 0; a < box.dims; ++a) {
        const double d = x[a] - axis_value(cfg.gaussian_center, a);
        r2 += d * d;
      }
      phi0[i] = std::exp(-0.5 * r2 / w2);
    }
  }

  KgConstants k;
  k.gamma = cfg.gamma;
  k.mass = cfg.m;
  k.c = cfg.c;
  k.hbar = cfg.hbar;
  k.energy = MultiplierSchedule(cfg.energy.empty() ? std::vector<double>{mode_energy.value_or(0.0)} : cfg.energy);
  k.schedule_duration = std::max(1, static_cast<int>(cfg.steps)) * cfg.dt;

  const double bound = stability_bound(op, k);
  EvolutionState state = start_evolution(op, phi0, dphi0, cfg.dt, k);
  const long remaining = std::max(0L, cfg.steps - 1);
  EvolutionResult res = evolve_kg(op, std::move(state), remaining, cfg.snapshot_stride, k);

  std::ostringstream snaps;
  snaps << "step,time,x1,x2,x3,re,im\n";
  for (const auto& s : res.snapshots) {
    const auto full = op.expand(s.values);
    const int cy = box.dims > 1 ? box.count[1] : 1;
    const int cz = box.dims > 2 ? box.count[2] : 1;
    for (std::size_t f = 0; f < full.size(); ++f) {
      const int kk = static_cast<int>(f % cz);
      const int jj = static_cast<int>((f / cz) % cy);
      const int ii = static_cast<int>(f / (static_cast<std::size_t>(cz) * cy));
      snaps << s.step << ',' << io::format_double(s.time) << ',' << io::format_double(ii * box.spacing(0)) << ','
            << io::format_double(box.dims > 1 ? jj * box.spacing(1) : 0.0) << ','
            << io::format_double(box.dims > 2 ? kk * box.spacing(2) : 0.0) << ','
            << io::format_double(full[f].real()) << ',' << io::format_double(full[f].imag()) << '\n';
    }
  }
  write_text(run.out_dir / "snapshots.csv", snaps.str());

  std::ostringstream energy_csv;
  energy_csv << "half_step,energy\n";
  for (std::size_t i = 0; i < res.energy.size(); ++i) {
    energy_csv << io::format_double(static_cast<double>(i) + 0.5) << ',' << io::format_double(res.energy[i]) << '\n';
  }
  write_text(run.out_dir / "energy.csv", energy_csv.str());

  double drift = 0.0;
  const double w0 = res.energy.front();
  for (double w : res.energy) drift = std::max(drift, std::abs(w - w0) / std::max(std::abs(w0), 1e-300));

  json out = {{"grid", box_json(box)},
              {"constants", constants_json(cfg)},
              {"initial", cfg.initial},
              {"dt", cfg.dt},
              {"steps", res.state.step},
              {"stability_bound", bound},
              {"multiplier", k.energy.samples()},
              {"snapshots", res.snapshots.size()},
              {"energy_initial", w0},
              {"energy_final", res.energy.back()},
              {"energy_relative_drift", drift}};
  if (!reference.empty()) {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(std::abs(res.state.current[i]) - std::abs(reference[i])));
    }
    out["mode_energy"] = *mode_energy;
    out["period"] = 2.0 * std::numbers::pi * cfg.hbar / std::abs(*mode_energy);
    out["modulus_error_final"] = worst;
  }
  return out;
}

// ---------------------------------------------------------------------------

inline json einstein_fit(const ScenarioConfig& cfg, const RunOptions& run, bool& stalled) {
  const TimeCoordinate tc = cfg.time_coordinate == "t" ? TimeCoordinate::T : TimeCoordinate::CT;
  const LagrangeChartFamily family(cfg.fit_box_lo, cfg.fit_box_hi, cfg.fit_nodes, cfg.c, tc);
  const ParamSamples samples = uniform_samples(cfg.fit_time, cfg.fit_box_lo, cfg.fit_box_hi, cfg.fit_samples);
  const double g00 = -family.time_scale() * family.time_scale();
  MetricSamples target;
  if (cfg.target == "csv") {
    target = load_metric_samples(cfg.target_path);
  } else {
    target = diag_warp_target(samples, cfg.target == "identity" ? 1.0 : cfg.target_a, g00);
  }
  const ParamSamples residual_points =
      uniform_samples(cfg.fit_time, cfg.fit_box_lo, cfg.fit_box_hi, cfg.fit_residual_samples);

  FitOptions opts;
  opts.mu0 = cfg.mu0;
  opts.mu_factor = cfg.mu_factor;
  opts.mu_every = cfg.mu_every;
  opts.max_iter = cfg.max_iter;
  opts.fd_step = cfg.fd_step;
  opts.grad_tol = cfg.grad_tol;
  opts.pin_boundary = cfg.pin_boundary;
  opts.residual.geometry = geometry_options(cfg);
  opts.residual.step = cfg.h_residual;

  const FitReport rep = fit_chart_to_metric(family, target, residual_points, family.identity_dofs(), opts);
  stalled = rep.stalled;
  const Chart fitted = family.chart(rep.dofs);
  const FieldResidual fr = field_equation_residual(fitted, residual_points, opts.residual);

  json history = json::array();
  for (const auto& h : rep.history) {
    history.push_back({{"iteration", h.iteration}, {"j1", h.j1}, {"penalty", h.penalty}, {"mu", h.mu},
                       {"merit_before", h.merit_before}, {"merit_after", h.merit_after}, {"step", h.step},
                       {"gradient_norm", h.gradient_norm}, {"rejected_steps", h.rejected_steps}});
  }
  if (run.dump_integrands) {
    std::ostringstream csv;
    csv << "u0,u1,u2,u3,r1,r2,r3\n";
    for (std::size_t i = 0; i < fr.points.size(); ++i) {
      for (int a = 0; a < 4; ++a) csv << io::format_double(fr.points[i][a]) << ',';
      csv << io::format_double(fr.values[i][0]) << ',' << io::format_double(fr.values[i][1]) << ','
          << io::format_double(fr.values[i][2]) << '\n';
    }
    write_text(run.out_dir / "field_residual.csv", csv.str());
  }
  return {{"target", cfg.target},
          {"target_samples", target.metric.size()},
          {"nodes_per_axis", cfg.fit_nodes},
          {"time_coordinate", cfg.time_coordinate},
          {"status", rep.status},
          {"converged", rep.converged},
          {"stalled", rep.stalled},
          {"iterations", rep.iterations},
          {"j1", rep.j1},
          {"penalty", rep.penalty},
          {"mu", rep.mu},
          {"recovered_scale", rep.recovered_scale},
          {"dofs", rep.dofs},
          {"field_residual_max", fr.max_abs},
          {"history", history}};
}

inline json base_report(const ScenarioConfig* cfg) {
  json r;
  r["version"] = RQA_VERSION;
  r["compiler"] = compiler_id();
  if (cfg) {
    json echo = json::object();
    for (const auto& [k, v] : echo_pairs(*cfg)) echo[k] = v;
    r["scenario"] = to_string(cfg->scenario);
    r["units"] = cfg->units == Units::SI ? "si" : "natural";
    r["config"] = echo;
  }
  return r;
}

}  // namespace scenario_detail

inline json error_report(const ScenarioConfig* cfg, const std::string& kind, const std::string& message,
                         int exit_code, const std::vector<ConfigIssue>& issues = {}) {
  json r = scenario_detail::base_report(cfg);
  r["status"] = "error";
  r["exit_code"] = exit_code;
  r["error"] = {{"kind", kind}, {"message", message}};
  if (!issues.empty()) {
    json list = json::array();
    for (const auto& i : issues) list.push_back({{"line", i.line}, {"message", i.message}});
    r["error"]["issues"] = list;
  }
  return r;
}

// Runs a validated config. Numerical failures give exit code 1, config and
// I/O failures 2; the report is filled either way.
inline RunOutcome run_scenario(const ScenarioConfig& cfg, const RunOptions& run = {}) {
  using namespace scenario_detail;
  RunOutcome out;
  try {
    bool stalled = false;
    json result;
    switch (cfg.scenario) {
      case Scenario::GeometryReport: result = geometry_report(cfg); break;
      case Scenario::ActionEval: result = action_eval(cfg, run); break;
      case Scenario::KgSpectrum: result = kg_spectrum(cfg, run); break;
      case Scenario::KgEvolve: result = kg_evolve(cfg, run); break;
      case Scenario::EinsteinFit: result = einstein_fit(cfg, run, stalled); break;
    }
    out.report = base_report(&cfg);
    out.exit_code = stalled ? 1 : 0;
    out.report["status"] = stalled ? "stalled" : "ok";
    out.report["exit_code"] = out.exit_code;
    out.report["result"] = std::move(result);
  } catch (const Error& e) {
    out.exit_code = e.is_numerical() ? 1 : 2;
    out.report = error_report(&cfg, to_string(e.kind()), e.what(), out.exit_code);
  } catch (const std::exception& e) {
    out.exit_code = 2;
    out.report = error_report(&cfg, "internal", e.what(), out.exit_code);
  }
  return out;
}

inline void write_report(const std::filesystem::path& path, const json& report) {
  scenario_detail::write_text(path, report.dump(2) + "\n");
}

}  // namespace rqa
