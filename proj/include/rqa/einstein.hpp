#pragma once

// Hilbert-Einstein objects on a spacetime chart r(u) = (u0, X_1, X_2, X_3):
//   G_jk  = R_jk − ½ g_jk R,    λ_jk = γ G_jk √(−g)
//   s1:   ∂²X_l/∂u_j∂u_k T_jk + ∂X_l/∂u_j ∂T_jk/∂u_k = 0,   T_jk = G_jk √(−g)
// and the control problem min Σ ‖g_jk − g⁰_jk‖² subject to s1, solved with a
// quadratic penalty.

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rqa/coupling.hpp"

namespace rqa {

struct EinsteinPoint {
  Vec4 u{};
  int dim = 0;
  Mat4 metric{};
  Mat4 inverse_metric{};
  Mat4 ricci{};
  double scalar = 0.0;
  double measure = 0.0;
  Mat4 einstein{};
  Mat4 multiplier{};
};

using WaveFunction = std::function<Complex(const Vec4&)>;

// Optional φ-coupled Ricci in place of the plain one.
struct CoupledSource {
  WaveFunction phi;
  double step = 1e-5;
};

namespace detail {

inline Mat4 coupled_ricci(const GeometryPoint& gp, const Chart& chart, const CoupledSource& src) {
  ComplexVec4 dphi{};
  for (int a = 0; a < gp.dim; ++a) dphi[a] = partial(src.phi, gp.u, a, src.step, chart.domain[a]);
  const CouplingInputs in{gp.dim, src.phi(gp.u), dphi, &gp.christoffel, &gp.riemann};
  return coupled_ricci_at(coupled_riemann_at(in), gp.inverse_metric, gp.dim).ricci;
}

}  // namespace detail

inline EinsteinPoint einstein_tensor_at(const Chart& chart, const Vec4& u, double gamma,
                                        const GeometryOptions& opts = {}, const CoupledSource* coupled = nullptr) {
  const GeometryPoint gp = geometry_point(chart, u, opts);
  EinsteinPoint ep;
  ep.u = u;
  ep.dim = gp.dim;
  ep.metric = gp.metric;
  ep.inverse_metric = gp.inverse_metric;
  ep.measure = gp.measure;
  ep.ricci = coupled ? detail::coupled_ricci(gp, chart, *coupled) : gp.ricci;
  ep.scalar = trace_with(gp.inverse_metric, ep.ricci, gp.dim);
  for (int j = 0; j < gp.dim; ++j) {
    for (int k = 0; k < gp.dim; ++k) {
      ep.einstein[j][k] = ep.ricci[j][k] - 0.5 * gp.metric[j][k] * ep.scalar;
      ep.multiplier[j][k] = gamma * ep.einstein[j][k] * gp.measure;
    }
  }
  return ep;
}

// ---------------------------------------------------------------------------
// Sample sets in parameter space.

struct ParamSamples {
  std::vector<Vec4> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
};

// n³ points on [lo, hi]³ in (u1, u2, u3) at fixed u0, trapezoid weights.
inline ParamSamples uniform_samples(double u0, double lo, double hi, int n) {
  if (n < 2) throw Error(ErrorKind::Shape, "sample grid needs at least 2 points per axis");
  if (!(hi > lo)) throw Error(ErrorKind::Shape, "sample box needs hi > lo");
  const double h = (hi - lo) / (n - 1);
  ParamSamples s;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        s.points.push_back({u0, lo + i * h, lo + j * h, lo + k * h});
        s.weights.push_back(trapezoid_weight(i, n, h) * trapezoid_weight(j, n, h) * trapezoid_weight(k, n, h));
      }
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Field-equation residual.

struct ResidualOptions {
  GeometryOptions geometry{};
  double step = 1e-3;  // differences of T and of ∂X
  const CoupledSource* coupled = nullptr;
};

struct FieldResidual {
  std::vector<Vec4> points;
  std::vector<std::array<double, 3>> values;  // residual_l, l = 1..3
  std::array<double, 3> max_abs{};
  std::array<double, 3> l2{};  // √(Σ w r²)
  double max_norm = 0.0;
};

inline void require_spacetime_embedding(const Chart& chart) {
  if (chart.dim_param != 4 || chart.dim_ambient != 4) {
    throw Error(ErrorKind::Shape, "field equations need a chart with m = n = 4, '" + chart.name + "' has m=" +
                                      std::to_string(chart.dim_param) + ", n=" + std::to_string(chart.dim_ambient));
  }
}

// T_jk = G_jk √(−g).
inline Mat4 einstein_density_at(const Chart& chart, const Vec4& u, const ResidualOptions& opts) {
  const EinsteinPoint ep = einstein_tensor_at(chart, u, 1.0, opts.geometry, opts.coupled);
  return ep.multiplier;
}

inline std::array<double, 3> field_residual_at(const Chart& chart, const Vec4& u, const ResidualOptions& opts) {
  require_spacetime_embedding(chart);
  const Mat4 basis = tangent_basis(chart, u);
  const Mat4 t = einstein_density_at(chart, u, opts);
  std::array<double, 3> out{};
  for (int k = 0; k < 4; ++k) {
    // ∂/∂u_k of (∂X/∂u_j) and of T_jk.
    const Mat4 d2x = partial([&](const Vec4& p) { return tangent_basis(chart, p); }, u, k, opts.step, chart.domain[k]);
    const Mat4 dt = partial([&](const Vec4& p) { return einstein_density_at(chart, p, opts); }, u, k, opts.step,
                            chart.domain[k]);
    for (int l = 1; l < 4; ++l) {
      for (int j = 0; j < 4; ++j) out[l - 1] += d2x[j][l] * t[j][k] + basis[j][l] * dt[j][k];
    }
  }
  return out;
}

inline FieldResidual field_equation_residual(const Chart& chart, const ParamSamples& samples,
                                             const ResidualOptions& opts = {}) {
  require_spacetime_embedding(chart);
  if (samples.weights.size() != samples.points.size()) {
    throw Error(ErrorKind::Shape, "sample weights and points differ in length");
  }
  FieldResidual out;
  out.points = samples.points;
  out.values.reserve(samples.size());
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const auto r = field_residual_at(chart, samples.points[n], opts);
    for (int l = 0; l < 3; ++l) {
      if (!std::isfinite(r[l])) {
        throw Error(ErrorKind::NonFinite, "field residual is not finite at " + format_point(samples.points[n], 4));
      }
      out.max_abs[l] = std::max(out.max_abs[l], std::abs(r[l]));
      out.l2[l] += samples.weights[n] * r[l] * r[l];
    }
    out.values.push_back(r);
  }
  for (int l = 0; l < 3; ++l) {
    out.l2[l] = std::sqrt(out.l2[l]);
    out.max_norm = std::max(out.max_norm, out.max_abs[l]);
  }
  return out;
}

// Roundoff carried through three nested central differences (g → Γ → R → ∂T):
// ε·(1 + max|g_jk|) / (h_metric · h_christoffel · h_residual).
inline double differencing_noise_floor(const Chart& chart, const ParamSamples& samples,
                                       const ResidualOptions& opts = {}) {
  double scale = 0.0;
  for (const Vec4& u : samples.points) {
    const Mat4 g = metric_at(chart, u).metric;
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) scale = std::max(scale, std::abs(g[j][k]));
  }
  return std::numeric_limits<double>::epsilon() * (1.0 + scale) /
         (opts.geometry.metric_step * opts.geometry.christoffel_step * opts.step);
}

inline double penalty_of(const FieldResidual& r) {
  return r.l2[0] * r.l2[0] + r.l2[1] * r.l2[1] + r.l2[2] * r.l2[2];
}

// ---------------------------------------------------------------------------
// Target metric and the control objective.

struct MetricSamples {
  ParamSamples samples;
  std::vector<Mat4> metric;
};

inline MetricSamples diag_warp_target(const ParamSamples& samples, double a, double g00 = -1.0) {
  MetricSamples t;
  t.samples = samples;
  Mat4 g{};
  g[0][0] = g00;
  for (int i = 1; i < 4; ++i) g[i][i] = a * a;
  t.metric.assign(samples.size(), g);
  return t;
}

// CSV columns u0..u3, g00 g01 g02 g03 g11 g12 g13 g22 g23 g33, optional w.
inline MetricSamples load_metric_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read target metric '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Io, "target metric '" + path + "' is empty");
  const auto header = io::split_csv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  static const char* required[] = {"u0", "u1", "u2", "u3", "g00", "g01", "g02", "g03",
                                   "g11", "g12", "g13", "g22", "g23", "g33"};
  for (const char* name : required) {
    if (!col.count(name)) throw Error(ErrorKind::Io, "target metric '" + path + "' lacks column " + name);
  }
  const bool has_w = col.count("w") > 0;
  MetricSamples t;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (io::trim(line).empty()) continue;
    const auto cells = io::split_csv(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::Io, path + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(header.size()) + " columns");
    }
    auto get = [&](const std::string& name) {
      try {
        return io::parse_double(cells[col.at(name)]);
      } catch (const std::invalid_argument& e) {
        throw Error(ErrorKind::Io, path + ":" + std::to_string(lineno) + ": " + e.what());
      }
    };
    t.samples.points.push_back({get("u0"), get("u1"), get("u2"), get("u3")});
    t.samples.weights.push_back(has_w ? get("w") : 1.0);
    Mat4 g{};
    for (int j = 0; j < 4; ++j) {
      for (int k = j; k < 4; ++k) g[j][k] = g[k][j] = get("g" + std::to_string(j) + std::to_string(k));
    }
    t.metric.push_back(g);
  }
  if (t.metric.empty()) throw Error(ErrorKind::Io, "target metric '" + path + "' has no samples");
  return t;
}

// J₁ = Σ_jk Σ_n w_n (g_jk(n) − g⁰_jk(n))².
inline double control_objective(const std::vector<Mat4>& candidate, const MetricSamples& target) {
  if (candidate.size() != target.metric.size() || target.samples.weights.size() != target.metric.size()) {
    throw Error(ErrorKind::Shape, "candidate has " + std::to_string(candidate.size()) + " metric samples, target " +
                                      std::to_string(target.metric.size()));
  }
  double j1 = 0.0;
  for (std::size_t n = 0; n < candidate.size(); ++n) {
    double s = 0.0;
    for (int j = 0; j < 4; ++j) {
      for (int k = 0; k < 4; ++k) {
        const double d = candidate[n][j][k] - target.metric[n][j][k];
        s += d * d;
      }
    }
    j1 += target.samples.weights[n] * s;
  }
  return j1;
}

inline std::vector<Mat4> sample_metric(const Chart& chart, const ParamSamples& samples) {
  std::vector<Mat4> g;
  g.reserve(samples.size());
  for (const auto& u : samples.points) g.push_back(metric_at(chart, u).metric);
  return g;
}

inline double control_objective(const Chart& chart, const MetricSamples& target) {
  return control_objective(sample_metric(chart, target.samples), target);
}

// ---------------------------------------------------------------------------
// Chart family: X_l(u1, u2, u3) as tensor-product Lagrange interpolants of
// nodal values on [lo, hi]³; two nodes per axis is plain trilinear.

enum class TimeCoordinate { CT, T };

class LagrangeChartFamily {
 public:
  LagrangeChartFamily(double lo, double hi, int nodes, double c = 1.0, TimeCoordinate time = TimeCoordinate::CT)
      : lo_(lo), hi_(hi), n_(nodes), time_scale_(time == TimeCoordinate::CT ? 1.0 : c) {
    if (nodes < 2) throw Error(ErrorKind::Shape, "chart family needs at least 2 nodes per axis");
    if (!(hi > lo)) throw Error(ErrorKind::Shape, "chart family box needs hi > lo");
    for (int i = 0; i < n_; ++i) x_.push_back(lo + (hi - lo) * i / (n_ - 1));
  }

  int nodes() const { return n_; }
  std::size_t dof_count() const { return static_cast<std::size_t>(n_) * n_ * n_ * 3; }
  std::size_t dof_index(int i, int j, int k, int l) const {
    return ((static_cast<std::size_t>(i) * n_ + j) * n_ + k) * 3 + static_cast<std::size_t>(l);
  }
  double node_coordinate(int i) const { return x_[i]; }
  double time_scale() const { return time_scale_; }

  // X_l(node) = node coordinate.
  std::vector<double> identity_dofs() const {
    std::vector<double> d(dof_count());
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k) {
          d[dof_index(i, j, k, 0)] = x_[i];
          d[dof_index(i, j, k, 1)] = x_[j];
          d[dof_index(i, j, k, 2)] = x_[k];
        }
    return d;
  }

  std::vector<bool> boundary_mask() const {
    std::vector<bool> m(dof_count(), false);
    auto edge = [&](int i) { return i == 0 || i == n_ - 1; };
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k)
          if (edge(i) || edge(j) || edge(k))
            for (int l = 0; l < 3; ++l) m[dof_index(i, j, k, l)] = true;
    return m;
  }

  Chart chart(const std::vector<double>& dofs) const {
    if (dofs.size() != dof_count()) {
      throw Error(ErrorKind::Shape, "chart family expects " + std::to_string(dof_count()) + " DOFs, got " +
                                        std::to_string(dofs.size()));
    }
    Chart c;
    c.name = "lagrange-chart";
    c.dim_param = 4;
    c.dim_ambient = 4;
    c.signature = Signature::Minkowski;
    auto self = *this;
    c.embedding = [self, dofs](const Vec4& u) {
      Vec4 r{};
      Mat4 unused{};
      self.evaluate(dofs, u, r, unused, false);
      return r;
    };
    c.jacobian = [self, dofs](const Vec4& u) {
      Vec4 unused{};
      Mat4 j{};
      self.evaluate(dofs, u, unused, j, true);
      return j;
    };
    return c;
  }

 private:
  void basis(double x, std::vector<double>& value, std::vector<double>& slope) const {
    value.assign(n_, 0.0);
    slope.assign(n_, 0.0);
    for (int i = 0; i < n_; ++i) {
      double v = 1.0;
      double d = 0.0;
      for (int m = 0; m < n_; ++m) {
        if (m == i) continue;
        const double inv = 1.0 / (x_[i] - x_[m]);
        d = d * (x - x_[m]) * inv + v * inv;
        v *= (x - x_[m]) * inv;
      }
      value[i] = v;
      slope[i] = d;
    }
  }

  void evaluate(const std::vector<double>& dofs, const Vec4& u, Vec4& r, Mat4& jac, bool want_jacobian) const {
    std::array<std::vector<double>, 3> v, s;
    for (int a = 0; a < 3; ++a) basis(u[a + 1], v[a], s[a]);
    r = {time_scale_ * u[0], 0.0, 0.0, 0.0};
    jac = Mat4{};
    jac[0][0] = time_scale_;
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        for (int k = 0; k < n_; ++k) {
          const double w = v[0][i] * v[1][j] * v[2][k];
          const double w1 = s[0][i] * v[1][j] * v[2][k];
          const double w2 = v[0][i] * s[1][j] * v[2][k];
          const double w3 = v[0][i] * v[1][j] * s[2][k];
          for (int l = 0; l < 3; ++l) {
            const double x = dofs[dof_index(i, j, k, l)];
            r[l + 1] += w * x;
            if (want_jacobian) {
              jac[1][l + 1] += w1 * x;
              jac[2][l + 1] += w2 * x;
              jac[3][l + 1] += w3 * x;
            }
          }
        }
      }
    }
  }

  double lo_, hi_;
  int n_;
  double time_scale_;
  std::vector<double> x_;
};

// ---------------------------------------------------------------------------
// Penalty-method fit.

struct FitOptions {
  double mu0 = 1e-2;
  double mu_factor = 10.0;
  int mu_every = 100;
  int max_iter = 500;
  double fd_step = 1e-6;
  double grad_tol = 1e-9;
  double merit_tol = 1e-14;  // merit at or below this is already optimal
  double armijo = 1e-4;
  int max_backtracks = 40;
  bool pin_boundary = false;
  ResidualOptions residual{};
};

struct FitIteration {
  int iteration = 0;
  double j1 = 0.0;
  double penalty = 0.0;
  double mu = 0.0;
  double merit_before = 0.0;
  double merit_after = 0.0;
  double step = 0.0;
  double gradient_norm = 0.0;
  int rejected_steps = 0;
};

struct FitReport {
  std::vector<double> dofs;
  std::vector<FitIteration> history;
  int iterations = 0;
  bool converged = false;
  bool stalled = false;
  std::string status;
  double j1 = 0.0;
  double penalty = 0.0;
  double mu = 0.0;
  double recovered_scale = 0.0;  // mean of ∂X_l/∂u_l over the samples
};

struct MeritValue {
  double j1 = 0.0;
  double penalty = 0.0;
  double merit(double mu) const { return j1 + mu * penalty; }
};

inline MeritValue fit_merit(const LagrangeChartFamily& family, const std::vector<double>& dofs,
                            const MetricSamples& target, const ParamSamples& residual_points,
                            const ResidualOptions& ropts, bool with_penalty) {
  const Chart chart = family.chart(dofs);
  MeritValue v;
  v.j1 = control_objective(chart, target);
  if (with_penalty) v.penalty = penalty_of(field_equation_residual(chart, residual_points, ropts));
  return v;
}

inline double mean_diagonal_scale(const Chart& chart, const ParamSamples& samples) {
  double s = 0.0;
  for (const auto& u : samples.points) {
    const Mat4 b = tangent_basis(chart, u);
    s += (b[1][1] + b[2][2] + b[3][3]) / 3.0;
  }
  return s / static_cast<double>(samples.size());
}

inline FitReport fit_chart_to_metric(const LagrangeChartFamily& family, const MetricSamples& target,
                                     const ParamSamples& residual_points, std::vector<double> dofs,
                                     const FitOptions& opts = {}) {
  if (dofs.size() != family.dof_count()) {
    throw Error(ErrorKind::Shape, "initial DOFs do not match the chart family");
  }
  std::vector<bool> frozen(dofs.size(), false);
  if (opts.pin_boundary) frozen = family.boundary_mask();
  const bool use_penalty = opts.mu0 > 0.0;

  FitReport rep;
  double mu = opts.mu0;
  auto merit_at = [&](const std::vector<double>& d) {
    return fit_merit(family, d, target, residual_points, opts.residual, use_penalty);
  };
  MeritValue current = merit_at(dofs);
  double step = 1.0;
  rep.status = "iteration budget exhausted";

  for (int it = 0; it < opts.max_iter; ++it) {
    if (it > 0 && opts.mu_every > 0 && it % opts.mu_every == 0) mu *= opts.mu_factor;
    const double m0 = current.merit(mu);
    if (m0 <= opts.merit_tol) {
      rep.converged = true;
      rep.status = "merit at tolerance";
      break;
    }

    std::vector<double> grad(dofs.size(), 0.0);
    double gnorm2 = 0.0;
    for (std::size_t i = 0; i < dofs.size(); ++i) {
      if (frozen[i]) continue;
      auto d = dofs;
      d[i] = dofs[i] + opts.fd_step;
      const double up = merit_at(d).merit(mu);
      d[i] = dofs[i] - opts.fd_step;
      const double down = merit_at(d).merit(mu);
      grad[i] = (up - down) / (2.0 * opts.fd_step);
      gnorm2 += grad[i] * grad[i];
    }
    const double gnorm = std::sqrt(gnorm2);
    if (gnorm <= opts.grad_tol) {
      rep.converged = true;
      rep.status = "gradient at tolerance";
      break;
    }

    FitIteration rec;
    rec.iteration = it + 1;
    rec.mu = mu;
    rec.merit_before = m0;
    rec.gradient_norm = gnorm;
    bool accepted = false;
    std::vector<double> trial(dofs.size());
    MeritValue tv;
    step = std::min(2.0 * step, 1e6);
    for (int bt = 0; bt <= opts.max_backtracks; ++bt, step *= 0.5) {
      for (std::size_t i = 0; i < dofs.size(); ++i) trial[i] = dofs[i] - step * grad[i];
      try {
        tv = merit_at(trial);
      } catch (const Error& e) {
        if (!e.is_numerical()) throw;
        ++rec.rejected_steps;
        continue;
      }
      if (tv.merit(mu) <= m0 - opts.armijo * step * gnorm2) {
        accepted = true;
        break;
      }
      ++rec.rejected_steps;
    }
    if (!accepted) {
      rep.stalled = true;
      rep.status = "line search stalled after " + std::to_string(opts.max_backtracks) + " backtracks";
      break;
    }
    dofs = trial;
    current = tv;
    rec.j1 = tv.j1;
    rec.penalty = tv.penalty;
    rec.merit_after = tv.merit(mu);
    rec.step = step;
    rep.history.push_back(rec);
  }

  rep.iterations = static_cast<int>(rep.history.size());
  rep.j1 = current.j1;
  rep.penalty = current.penalty;
  rep.mu = mu;
  rep.dofs = dofs;
  rep.recovered_scale = mean_diagonal_scale(family.chart(dofs), target.samples);
  return rep;
}

}  // namespace rqa
