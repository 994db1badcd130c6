// Acceptance run: one [PASS]/[FAIL] line per criterion, nonzero exit on any failure.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "rqa/action.hpp"
#include "rqa/charts.hpp"
#include "rqa/config.hpp"
#include "rqa/einstein.hpp"
#include "rqa/kleingordon.hpp"
#include "support.hpp"

using namespace rqa;
using namespace testing_support;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "FAILED " << what << "; ";
    }
  }
  template <class T>
  void note(const std::string& key, T value) {
    detail << key << '=' << value << "; ";
  }
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Sampled {
  Chart chart;
  std::array<std::pair<double, double>, 4> box;
};

std::vector<Sampled> property_charts() {
  return {
      {charts::unit_sphere(), {{{0.5, 2.6}, {-3.0, 3.0}, {0, 0}, {0, 0}}}},
      {charts::polar_plane(), {{{0.5, 3.0}, {-3.0, 3.0}, {0, 0}, {0, 0}}}},
      {curvilinear_minkowski(), {{{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}}}},
  };
}

std::vector<Vec4> random_points(const Sampled& s, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Vec4> pts;
  for (int n = 0; n < count; ++n) {
    Vec4 u{};
    for (int i = 0; i < s.chart.dim_param; ++i) u[i] = std::uniform_real_distribution<double>(s.box[i].first, s.box[i].second)(rng);
    pts.push_back(u);
  }
  return pts;
}

Box line(int n) { return Box{1, {1.0, 1.0, 1.0}, {n, 3, 3}}; }
Box square(int n) { return Box{2, {1.0, 1.0, 1.0}, {n, n, 3}}; }
Box cube(int n) { return Box{3, {1.0, 1.0, 1.0}, {n, n, n}}; }

std::vector<Complex> to_complex(const std::vector<double>& v, Complex scale = 1.0) {
  std::vector<Complex> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = scale * v[i];
  return out;
}

double order(double coarse, double fine) { return std::log2(coarse / fine); }

// ---------------------------------------------------------------------------

Check flat_chart_suite() {
  Check c;
  const Chart flat = charts::minkowski_identity();
  const auto s = uniform_samples(0.3, -0.5, 0.5, 3);
  double gmax = 0, rmax = 0, emax = 0;
  for (const Vec4& u : s.points) {
    const GeometryPoint gp = geometry_point(flat, u);
    const auto ep = einstein_tensor_at(flat, u, 1.0);
    for (int l = 0; l < 4; ++l)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          gmax = std::max(gmax, std::abs(gp.christoffel[l][i][j]));
          emax = std::max(emax, std::abs(ep.einstein[i][j]));
          for (int k = 0; k < 4; ++k) rmax = std::max(rmax, std::abs(gp.riemann[l][i][j][k]));
        }
  }
  const double res = field_equation_residual(flat, s).max_norm;
  c.note("max|Gamma|", sci(gmax));
  c.note("max|R|", sci(rmax));
  c.note("max|G|", sci(emax));
  c.note("residual", sci(res));
  c.require(gmax < 1e-10, "Christoffel");
  c.require(rmax < 1e-8, "Riemann");
  c.require(emax == 0.0, "Einstein tensor");
  c.require(res < 1e-8, "field residual");
  return c;
}

Check curvature_oracle() {
  Check c;
  const double r = geometry_point(charts::unit_sphere(), {pi / 3, 0.3, 0, 0}, {1e-4, 1e-3}).conventional_scalar();
  double polar = 0.0;
  for (const Vec4& u : {Vec4{1.3, 0.6, 0, 0}, Vec4{0.7, -2.0, 0, 0}, Vec4{2.5, 1.0, 0, 0}})
    polar = std::max(polar, std::abs(geometry_point(charts::polar_plane(), u, {1e-4, 1e-4}).scalar));
  c.note("sphere R", r);
  c.note("polar |R| (h=1e-4)", sci(polar));
  c.require(std::abs(r - 2.0) < 1e-4, "sphere scalar curvature");
  c.require(polar < 1e-6, "polar scalar curvature");
  return c;
}

Check connection_axioms() {
  Check c;
  std::mt19937_64 rng(2024);
  double ax = 0, lie = 0, compat = 0, anti = 0, bianchi = 0;
  for (const auto& s : property_charts()) {
    const int m = s.chart.dim_param;
    const RandomField fx(rng, m), fy(rng, m), fz(rng, m);
    const RandomScalar f(rng), g(rng);
    const VectorFieldSpec X{fx}, Y{fy}, Z{fz};
    const VectorFieldSpec fXgY{[&](const Vec4& u) {
      Vec4 v{};
      const Vec4 a = fx(u), b = fy(u);
      for (int i = 0; i < 4; ++i) v[i] = f(u) * a[i] + g(u) * b[i];
      return v;
    }};
    const VectorFieldSpec YplusZ{[&](const Vec4& u) {
      Vec4 v{};
      const Vec4 a = fy(u), b = fz(u);
      for (int i = 0; i < 4; ++i) v[i] = a[i] + b[i];
      return v;
    }};
    const VectorFieldSpec fY{[&](const Vec4& u) {
      Vec4 v = fy(u);
      for (double& x : v) x *= f(u);
      return v;
    }};
    for (const Vec4& u : random_points(s, 10, 15)) {
      const Vec4 xz = covariant_derivative(s.chart, X, Z, u);
      const Vec4 yz = covariant_derivative(s.chart, Y, Z, u);
      const Vec4 xy = covariant_derivative(s.chart, X, Y, u);
      const Vec4 a1 = covariant_derivative(s.chart, fXgY, Z, u);
      const Vec4 a2 = covariant_derivative(s.chart, X, YplusZ, u);
      const Vec4 a3 = covariant_derivative(s.chart, X, fY, u);
      const double xf = directional_derivative(ScalarMap(f), X, u, m);
      const Vec4 yu = fy(u);
      const Vec4 b1 = lie_bracket_at(X, Y, u, m), b2 = lie_bracket_at(Y, X, u, m);
      for (int i = 0; i < m; ++i) {
        ax = std::max({ax, std::abs(a1[i] - f(u) * xz[i] - g(u) * yz[i]), std::abs(a2[i] - xy[i] - xz[i]),
                       std::abs(a3[i] - xf * yu[i] - f(u) * xy[i])});
        lie = std::max(lie, std::abs(b1[i] + b2[i]));
      }

      const GeometryPoint gp = geometry_point(s.chart, u);
      const auto& r = gp.riemann;
      for (int l = 0; l < m; ++l)
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k) {
              anti = std::max(anti, std::abs(r[l][i][j][k] + r[l][j][i][k]));
              bianchi = std::max(bianchi, std::abs(r[l][i][j][k] + r[l][j][k][i] + r[l][k][i][j]));
            }
      // ∂_i g_jk against a five-point stencil.
      for (int i = 0; i < m; ++i) {
        const double e = 1e-3;
        auto at = [&](double t) {
          Vec4 p = u;
          p[i] += t;
          return metric_at(s.chart, p).metric;
        };
        const Mat4 g2m = at(-2 * e), g1m = at(-e), g1p = at(e), g2p = at(2 * e);
        for (int j = 0; j < m; ++j)
          for (int k = 0; k < m; ++k) {
            double v = (g2m[j][k] - 8 * g1m[j][k] + 8 * g1p[j][k] - g2p[j][k]) / (12 * e);
            for (int p = 0; p < m; ++p) v -= gp.christoffel[p][i][j] * gp.metric[p][k] + gp.christoffel[p][i][k] * gp.metric[p][j];
            compat = std::max(compat, std::abs(v));
          }
      }
    }
  }
  c.note("axioms", sci(ax));
  c.note("lie antisymmetry", sci(lie));
  c.note("metric compatibility", sci(compat));
  c.note("riemann antisymmetry", sci(anti));
  c.note("bianchi", sci(bianchi));
  c.require(ax < 1e-6, "connection axioms");
  c.require(lie < 1e-12, "Lie bracket antisymmetry");
  c.require(compat < 1e-6, "metric compatibility");
  c.require(anti < 1e-12, "Riemann antisymmetry");
  c.require(bianchi < 1e-9, "first Bianchi identity");
  return c;
}

Check coupled_tensor() {
  Check c;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.4, 2.7);
  double unit = 0.0;
  for (const Chart& chart : {charts::unit_sphere(), three_sphere()}) {
    for (int n = 0; n < 10; ++n) {
      const GeometryPoint gp = geometry_point(chart, {U(rng), U(rng), U(rng), 0.0});
      const auto t = coupled_riemann_at({gp.dim, 1.0, {}, &gp.christoffel, &gp.riemann});
      for (int l = 0; l < gp.dim; ++l)
        for (int i = 0; i < gp.dim; ++i)
          for (int j = 0; j < gp.dim; ++j)
            for (int k = 0; k < gp.dim; ++k) unit = std::max(unit, std::abs(t[l][i][j][k] - gp.riemann[l][i][j][k]));
    }
  }

  SpaceTimeGrid g;
  g.length = {1.0, 0.8, 1.2};
  g.count = {7, 7, 7};
  g.duration = 0.5;
  g.time_count = 6;
  const WaveField packet = WaveField::from_function(g, 1.0, [](const std::array<double, 3>& x, double t) {
    const double env = std::exp(-2.0 * ((x[0] - 0.5) * (x[0] - 0.5) + x[1] * x[2])) * (1.0 + 0.3 * t);
    return env * std::exp(Complex(0.0, 3.0 * x[0] - 5.0 * t));
  });
  double flat_rel = 0.0;
  for (double cc : {1.0, 3.0}) {
    const double eq = curvature_energy(packet, charts::minkowski_identity(), DeformationMap::identity(g, cc), 0.5).value;
    const double oracle = flat_dirichlet_form(packet, cc, 0.5);
    flat_rel = std::max(flat_rel, std::abs(eq - oracle) / std::abs(oracle));
  }

  double expansion = 0.0;
  SpaceTimeGrid h;
  h.count = {5, 5, 5};
  h.time_count = 4;
  const WaveField wavy = WaveField::from_function(h, 1.3, [](const std::array<double, 3>& x, double t) {
    const double env = std::sin(pi * x[0]) * (1.0 + x[1] - 0.5 * x[2] * x[2]) * std::cos(t);
    return env * std::exp(Complex(0.0, 2.0 * x[1] - 3.0 * t));
  });
  for (const Chart& chart : {charts::minkowski_identity(), curvilinear_minkowski()}) {
    const double gamma = 0.8;
    const auto a = total_action(wavy, chart, DeformationMap::identity(h, 1.0), MultiplierSchedule(0.3), gamma);
    const auto& ex = a.expansion;
    const double four = 0.5 * gamma * ex.gradient + 0.25 * gamma * ex.cross + 0.5 * gamma * ex.curvature;
    const double scale = std::abs(0.5 * gamma * ex.gradient) + std::abs(0.25 * gamma * ex.cross) +
                         std::abs(0.5 * gamma * ex.curvature);
    expansion = std::max(expansion, std::abs(four - a.e_q) / scale);
  }
  c.note("unit field", sci(unit));
  c.note("flat E_q rel", sci(flat_rel));
  c.note("expansion rel", sci(expansion));
  c.require(unit < 1e-12, "unit-field reduction");
  c.require(flat_rel < 1e-10, "flat-limit Dirichlet form");
  c.require(expansion < 1e-8, "four-term expansion");
  return c;
}

Check kg_spectrum() {
  Check c;
  const double s = std::sin(pi / 8);
  const double l1 = solve_modes(assemble_dirichlet_laplacian(line(5)), 1).eigenvalues[0];
  c.note("1D lambda1 err", sci(std::abs(l1 - 64 * s * s)));
  c.require(std::abs(l1 - 64 * s * s) < 1e-10, "1D discrete eigenvalue");
  std::vector<double> err;
  for (int n : {5, 9, 17, 33}) err.push_back(std::abs(solve_modes(assemble_dirichlet_laplacian(cube(n)), 1).eigenvalues[0] - 3 * pi * pi));
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double p = order(err[i - 1], err[i]);
    c.note("order", sci(p));
    c.require(std::abs(p - 2.0) <= 0.2, "continuum order");
  }
  return c;
}

Check energy_relation() {
  Check c;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(0.2, 3.0);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const double m = U(rng), cc = U(rng), hbar = U(rng), gamma = U(rng), e1 = -10.0 * U(rng);
    const double e = solve_energy_relation(e1, m, cc, hbar, gamma);
    worst = std::max(worst, std::abs(energy_relation_e1(e, m, cc, hbar, gamma) - e1) /
                                std::max({std::abs(e1), std::abs(e), m * cc * cc}));
  }
  const double limit = std::abs(solve_energy_relation(-0.5, 1, 1, 1, 1e-12) - 1.5);
  const double worked = std::abs(solve_energy_relation(-0.5, 1, 1, 1, 1) - 1.0);
  c.note("root residual", sci(worst));
  c.note("limit err", sci(limit));
  c.note("worked err", sci(worked));
  c.require(worst < 1e-12, "root residual");
  c.require(limit < 1e-6, "nonrelativistic limit");
  c.require(worked < 1e-12, "worked value");
  return c;
}

Check evolution() {
  Check c;
  {
    const auto op = assemble_dirichlet_laplacian(square(21));
    const ModeSet ms = solve_modes(op, 1);
    const double e = solve_energy_relation(ms.e1[0], 1, 1, 1, 1);
    KgConstants k;
    k.energy = MultiplierSchedule(e);
    const long steps = 2000;
    const double dt = 2.0 * pi / e / steps;
    const auto phi0 = to_complex(ms.modes[0]);
    const auto res = evolve_kg(op, start_evolution(op, phi0, to_complex(ms.modes[0], Complex(0.0, -e)), dt, k),
                               steps - 1, steps, k);
    double worst = 0.0;
    for (std::size_t i = 0; i < phi0.size(); ++i)
      worst = std::max(worst, std::abs(std::abs(res.state.current[i]) - std::abs(phi0[i])));
    c.note("modulus err", sci(worst));
    c.require(worst < 1e-3, "separable modulus");
  }
  {
    KgConstants k;
    const double e = solve_energy_relation(-0.5 * pi * pi, 1, 1, 1, 1);
    std::vector<double> r;
    for (int n : {9, 17, 33, 65}) {
      const auto op = assemble_dirichlet_laplacian(line(n));
      const double dt = op.box().spacing(0);
      std::vector<std::vector<Complex>> levels;
      for (int t = 0; t < 5; ++t) {
        std::vector<Complex> lvl(op.size());
        for (std::size_t i = 0; i < lvl.size(); ++i)
          lvl[i] = std::exp(Complex(0.0, -e * t * dt)) * std::sqrt(2.0) * std::sin(pi * op.position(i)[0]);
        levels.push_back(std::move(lvl));
      }
      r.push_back(skg_residual(op, levels, dt, k));
    }
    for (std::size_t i = 1; i < r.size(); ++i) {
      c.note("skg order", sci(order(r[i - 1], r[i])));
      c.require(std::abs(order(r[i - 1], r[i]) - 2.0) <= 0.2, "skg residual order");
    }
  }
  {
    const auto op = assemble_dirichlet_laplacian(line(41));
    std::vector<Complex> phi0(op.size()), dphi0(op.size());
    for (std::size_t i = 0; i < phi0.size(); ++i) {
      const double x = op.position(i)[0];
      phi0[i] = std::exp(-80.0 * (x - 0.4) * (x - 0.4)) * std::exp(Complex(0.0, 10.0 * x));
      dphi0[i] = Complex(0.3, -1.0) * phi0[i];
    }
    KgConstants k;
    k.energy = MultiplierSchedule(0.5);
    const auto res = evolve_kg(op, start_evolution(op, phi0, dphi0, 0.5 * stability_bound(op, k), k), 1000, 1000, k);
    double drift = 0.0;
    for (double e : res.energy) drift = std::max(drift, std::abs(e - res.energy.front()) / std::abs(res.energy.front()));
    c.note("energy drift", sci(drift));
    c.require(drift < 1e-3, "energy drift");
  }
  return c;
}

Check einstein_fit() {
  Check c;
  const LagrangeChartFamily fam(0.0, 1.0, 2);
  const auto samples = uniform_samples(0.0, 0.0, 1.0, 5);
  const auto rep = fit_chart_to_metric(fam, diag_warp_target(samples, 1.1), samples, fam.identity_dofs());
  bool monotone = true;
  for (std::size_t i = 0; i < rep.history.size(); ++i) {
    const auto& r = rep.history[i];
    monotone = monotone && r.merit_after <= r.merit_before;
    if (i + 1 < rep.history.size() && rep.history[i + 1].mu == r.mu)
      monotone = monotone && rep.history[i + 1].merit_before <= r.merit_after;
  }
  c.note("a", rep.recovered_scale);
  c.note("iterations", rep.iterations);
  c.note("status", rep.status);
  c.require(std::abs(rep.recovered_scale - 1.1) < 1e-2, "warp recovery");
  c.require(rep.iterations <= 500, "iteration budget");
  c.require(monotone, "monotone merit");
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Check determinism() {
  Check c;
  int compared = 0;
  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(RQA_CONFIG_DIR))
    if (e.path().extension() == ".cfg") configs.push_back(e.path());
  std::sort(configs.begin(), configs.end());
  for (const auto& cfg : configs) {
    const auto parsed = parse_config(slurp(cfg));
    if (!parsed.ok()) {
      c.require(false, cfg.filename().string() + " parses");
      continue;
    }
    std::string reports[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path out = scratch_dir("acceptance-" + cfg.stem().string() + "-" + std::to_string(run));
      const std::string cmd = std::string("'") + RQA_CLI_PATH + "' " + to_string(parsed.config.scenario) +
                              " --config '" + cfg.string() + "' --out '" + out.string() + "' > /dev/null 2>&1";
      const int status = std::system(cmd.c_str());
      c.require(WIFEXITED(status), cfg.filename().string() + " exits");
      reports[run] = slurp(out / "report.json");
    }
    c.require(!reports[0].empty() && reports[0] == reports[1], cfg.filename().string() + " byte-identical");
    ++compared;
  }
  c.note("scenarios", compared);
  return c;
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* title;
    std::function<Check()> run;
    double time_limit;  // seconds, 0 for none
  };
  const std::vector<Criterion> criteria = {
      {"AC1", "flat-chart suite", flat_chart_suite, 1.0},
      {"AC2", "curvature oracle", curvature_oracle, 1.0},
      {"AC3", "connection-axiom properties", connection_axioms, 0.0},
      {"AC4", "coupled-tensor reduction", coupled_tensor, 0.0},
      {"AC5", "Klein-Gordon spectrum", kg_spectrum, 30.0},
      {"AC6", "energy relation", energy_relation, 0.0},
      {"AC7", "evolution", evolution, 0.0},
      {"AC8", "Einstein fit", einstein_fit, 120.0},
      {"AC9", "determinism", determinism, 0.0},
  };
  int failures = 0;
  for (const auto& cr : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Check c;
    try {
      c = cr.run();
    } catch (const std::exception& e) {
      c.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (cr.time_limit > 0.0) c.require(secs < cr.time_limit, "runtime under " + sci(cr.time_limit) + " s");
    if (!c.pass) ++failures;
    std::printf("[%s] %s %s: %s(%.2f s)\n", c.pass ? "PASS" : "FAIL", cr.id, cr.title, c.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
