#pragma once

// Kinetic energy, constraint term and the assembled action
//   J = −E_c + E_q − ∫ E(t) (∫ |φ|² √(−g) |det û'| dx / c − 1) c dt
// with E_c signed negative for a resting normalized field.

#include <algorithm>
#include <optional>

#include "rqa/coupling.hpp"

namespace rqa {

class MultiplierSchedule {
 public:
  MultiplierSchedule() = default;
  explicit MultiplierSchedule(double constant) : samples_{constant} {}
  // Samples spaced uniformly over [0, T], linearly interpolated.
  explicit MultiplierSchedule(std::vector<double> samples) : samples_(std::move(samples)) {
    if (samples_.empty()) throw Error(ErrorKind::Config, "multiplier schedule needs at least one sample");
    for (double s : samples_) {
      if (!std::isfinite(s)) throw Error(ErrorKind::NonFinite, "multiplier schedule sample is not finite");
    }
  }

  bool is_constant() const { return samples_.size() == 1; }
  const std::vector<double>& samples() const { return samples_; }

  double value_at(double t, double duration) const {
    if (samples_.size() == 1) return samples_[0];
    const double pos = std::clamp(t / duration, 0.0, 1.0) * static_cast<double>(samples_.size() - 1);
    const auto lo = std::min(static_cast<std::size_t>(pos), samples_.size() - 2);
    const double frac = pos - static_cast<double>(lo);
    return (1.0 - frac) * samples_[lo] + frac * samples_[lo + 1];
  }

  double max_value() const { return *std::max_element(samples_.begin(), samples_.end()); }
  double min_value() const { return *std::min_element(samples_.begin(), samples_.end()); }

 private:
  std::vector<double> samples_{0.0};
};

// m c √(−g_ij u̇_i u̇_j) |φ|² √(−g) |det û'|
inline double kinetic_density_from(const WaveField& phi, const Mat4& metric, double measure,
                                   const DeformationMap& map, const Node& node) {
  const double amp = std::norm(phi.at(node));
  if (amp == 0.0) return 0.0;
  const Mat4& j = map.jacobian_at(node);
  double quad = 0.0;
  double scale = 0.0;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      quad += metric[a][b] * j[a][3] * j[b][3];
      scale += std::abs(metric[a][b] * j[a][3] * j[b][3]);
    }
  }
  double radicand = -quad;
  if (radicand < 0.0) {
    if (radicand < -1e-12 * scale) {
      throw Error(ErrorKind::Superluminal, "−g_ij u̇_i u̇_j = " + io::format_double(radicand) + " < 0 at " +
                                               format_node(node));
    }
    radicand = 0.0;
  }
  return phi.mass * map.c * std::sqrt(radicand) * amp * measure * map.abs_det(node);
}

inline double kinetic_density_at(const Chart& chart, const DeformationMap& map, const WaveField& phi,
                                 const Node& node) {
  require_same_grid(phi, map);
  require_spacetime_chart(chart);
  const MetricData md = metric_at(chart, map.at(node));
  return kinetic_density_from(phi, md.metric, md.measure, map, node);
}

inline double kinetic_energy(const Chart& chart, const DeformationMap& map, const WaveField& phi) {
  require_same_grid(phi, map);
  require_spacetime_chart(chart);
  const auto& g = phi.grid;
  double sum = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const Node node = g.node(n);
    sum += spacetime_weight(g, node) * kinetic_density_at(chart, map, phi, node);
  }
  return -sum;
}

// The same action written as the four explicit integrals (kinetic, gradient,
// Γ cross term, |φ|² curvature) minus the constraint.
struct ActionExpansion {
  double kinetic = 0.0;    // +∫∫ m c √(…) |φ|² √(−g) |det û'|
  double gradient = 0.0;   // ∫∫ g^{jk} ∂_jφ ∂_kφ* √(−g) |det û'|
  double cross = 0.0;      // ∫∫ g^{jk} (φ* ∂_lφ + φ ∂_lφ*) Γ^l_jk √(−g) |det û'|
  double curvature = 0.0;  // ∫∫ |φ|² g^{jk} (∂_jΓ^l_lk − ∂_lΓ^l_jk + Γ^p_lk Γ^l_jp − Γ^p_jk Γ^l_lp) …
  double constraint = 0.0;
  double total = 0.0;      // kinetic + γ/2 gradient + γ/4 cross + γ/2 curvature − constraint
};

struct ActionBreakdown {
  double e_c = 0.0;
  double e_q = 0.0;
  double constraint_term = 0.0;
  double total_j = 0.0;
  std::vector<double> slice_residuals;  // norm constraint per time node
  ActionExpansion expansion;
  double expansion_mismatch = 0.0;  // relative
  // Per-node integrands in grid order.
  std::vector<double> kinetic_integrand;
  std::vector<double> curvature_integrand;
  std::vector<double> norm_integrand;
};

inline ActionBreakdown total_action(const WaveField& phi, const Chart& chart, const DeformationMap& map,
                                    const MultiplierSchedule& multiplier, double gamma,
                                    const GeometryOptions& opts = {}) {
  require_same_grid(phi, map);
  require_spacetime_chart(chart);
  const auto& g = phi.grid;
  ActionBreakdown out;
  out.kinetic_integrand.assign(g.size(), 0.0);
  out.curvature_integrand.assign(g.size(), 0.0);
  out.norm_integrand.assign(g.size(), 0.0);
  out.slice_residuals.assign(g.time_count, 0.0);

  double kinetic = 0.0, eq_sum = 0.0, grad_sum = 0.0, cross_sum = 0.0, curv_sum = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const Node node = g.node(n);
    with_node_context(node, [&] {
      const GeometryPoint gp = geometry_point(chart, map.at(node), opts);
      const double volume = gp.measure * map.abs_det(node);
      const double w = spacetime_weight(g, node);
      const Complex phi_n = phi.values[n];
      const double amp = std::norm(phi_n);

      out.kinetic_integrand[n] = kinetic_density_from(phi, gp.metric, gp.measure, map, node);
      out.norm_integrand[n] = amp * volume;
      out.slice_residuals[node.t] += spatial_weight(g, node) * out.norm_integrand[n];

      const ComplexVec4 dphi = grad_field(phi, map, node);
      const CouplingInputs in{4, phi_n, dphi, &gp.christoffel, &gp.riemann};
      const CoupledCurvature cc = coupled_ricci_at(coupled_riemann_at(in), gp.inverse_metric, 4);
      out.curvature_integrand[n] = cc.scalar * volume;

      double grad = 0.0, cross = 0.0, curv = 0.0;
      const auto& ginv = gp.inverse_metric;
      const auto& G = gp.christoffel;
      const auto& dG = gp.christoffel_gradient;
      for (int j = 0; j < 4; ++j) {
        for (int k = 0; k < 4; ++k) {
          grad += ginv[j][k] * (dphi[j] * std::conj(dphi[k])).real();
          double ricci_like = 0.0;
          for (int l = 0; l < 4; ++l) {
            cross += ginv[j][k] * (std::conj(phi_n) * dphi[l] + phi_n * std::conj(dphi[l])).real() * G[l][j][k];
            ricci_like += dG[j][l][l][k] - dG[l][l][j][k];
            for (int p = 0; p < 4; ++p) ricci_like += G[p][l][k] * G[l][j][p] - G[p][j][k] * G[l][l][p];
          }
          curv += amp * ginv[j][k] * ricci_like;
        }
      }
      kinetic += w * out.kinetic_integrand[n];
      eq_sum += w * out.curvature_integrand[n];
      grad_sum += w * grad * volume;
      cross_sum += w * cross * volume;
      curv_sum += w * curv * volume;
      return 0;
    });
  }

  double constraint = 0.0;
  for (int t = 0; t < g.time_count; ++t) {
    out.slice_residuals[t] = out.slice_residuals[t] / map.c - 1.0;
    const double time = t * g.time_step();
    constraint += trapezoid_weight(t, g.time_count, g.time_step()) * multiplier.value_at(time, g.duration) *
                  out.slice_residuals[t] * map.c;
  }

  out.e_c = -kinetic;
  out.e_q = 0.5 * gamma * eq_sum;
  out.constraint_term = constraint;
  out.total_j = -out.e_c + out.e_q - out.constraint_term;

  auto& ex = out.expansion;
  ex.kinetic = kinetic;
  ex.gradient = grad_sum;
  ex.cross = cross_sum;
  ex.curvature = curv_sum;
  ex.constraint = constraint;
  ex.total = ex.kinetic + 0.5 * gamma * ex.gradient + 0.25 * gamma * ex.cross + 0.5 * gamma * ex.curvature -
             ex.constraint;
  const double scale = std::abs(ex.kinetic) + std::abs(0.5 * gamma * ex.gradient) +
                       std::abs(0.25 * gamma * ex.cross) + std::abs(0.5 * gamma * ex.curvature) +
                       std::abs(ex.constraint);
  out.expansion_mismatch = scale > 0.0 ? std::abs(ex.total - out.total_j) / scale : 0.0;
  if (out.expansion_mismatch > 1e-8) {
    throw Error(ErrorKind::Consistency,
                "four-term action expansion disagrees with the assembled action (relative " +
                    io::format_double(out.expansion_mismatch) + ")");
  }
  return out;
}

}  // namespace rqa
