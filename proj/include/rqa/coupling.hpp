#pragma once

// Wave-function-coupled curvature:
//   R^l_ijk(φ) = |φ|² R^l_ijk + (∂_j φ)(∂_i φ*) δ_kl + (∂_j φ) φ* Γ^l_ik
//   R_jk       = Re[R^i_jik(φ)],   R = g^{jk} R_jk
// and the curvature energy E_q = (γ/2) ∫∫ R √(−g) |det û'| dx dt.

#include <fstream>
#include <vector>

#include "rqa/fields.hpp"

namespace rqa {

struct CouplingInputs {
  int dim = 4;
  Complex phi{};
  ComplexVec4 dphi{};  // ∂φ/∂u_j
  const Christoffel* christoffel = nullptr;
  const Riemann* riemann = nullptr;
};

struct CoupledCurvature {
  ComplexRiemann tensor{};
  Mat4 ricci{};
  double scalar = 0.0;
};

inline ComplexRiemann coupled_riemann_at(const CouplingInputs& in) {
  const int m = in.dim;
  const Christoffel& gamma = *in.christoffel;
  const Riemann& r = *in.riemann;
  const double amp = std::norm(in.phi);
  const Complex phi_conj = std::conj(in.phi);
  ComplexRiemann out{};
  for (int l = 0; l < m; ++l) {
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        for (int k = 0; k < m; ++k) {
          Complex v = amp * r[l][i][j][k] + in.dphi[j] * phi_conj * gamma[l][i][k];
          if (k == l) v += in.dphi[j] * std::conj(in.dphi[i]);
          out[l][i][j][k] = v;
        }
      }
    }
  }
  return out;
}

// Contract the upper index with the middle lower slot, keep the real part,
// then trace with g^{jk}.
inline CoupledCurvature coupled_ricci_at(const ComplexRiemann& tensor, const Mat4& inverse_metric, int dim) {
  CoupledCurvature out;
  out.tensor = tensor;
  for (int j = 0; j < dim; ++j) {
    for (int k = 0; k < dim; ++k) {
      Complex s{};
      for (int i = 0; i < dim; ++i) s += tensor[i][j][i][k];
      out.ricci[j][k] = s.real();
    }
  }
  out.scalar = trace_with(inverse_metric, out.ricci, dim);
  return out;
}

struct CurvatureEnergy {
  double value = 0.0;
  // R √(−g) |det û'| per grid node, grid order.
  std::vector<double> integrand;
};

template <class F>
auto with_node_context(const Node& n, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(e.what()) + " [node " + format_node(n) + "]");
  }
}

inline CurvatureEnergy curvature_energy(const WaveField& phi, const Chart& chart, const DeformationMap& map,
                                        double gamma, const GeometryOptions& opts = {}) {
  require_same_grid(phi, map);
  require_spacetime_chart(chart);
  const auto& g = phi.grid;
  CurvatureEnergy out;
  out.integrand.assign(g.size(), 0.0);
  double sum = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const Node node = g.node(n);
    out.integrand[n] = with_node_context(node, [&] {
      const GeometryPoint gp = geometry_point(chart, map.at(node), opts);
      const CouplingInputs in{4, phi.values[n], grad_field(phi, map, node), &gp.christoffel, &gp.riemann};
      const CoupledCurvature cc = coupled_ricci_at(coupled_riemann_at(in), gp.inverse_metric, 4);
      return cc.scalar * gp.measure * map.abs_det(node);
    });
    sum += spacetime_weight(g, node) * out.integrand[n];
  }
  out.value = 0.5 * gamma * sum;
  return out;
}

inline void write_integrand_csv(const std::string& path, const std::vector<double>& integrand) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  out << "node,integrand\n";
  for (std::size_t n = 0; n < integrand.size(); ++n) out << n << ',' << io::format_double(integrand[n]) << '\n';
}

}  // namespace rqa
