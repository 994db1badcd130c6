#pragma once

// Charts r(u) into Euclidean or Minkowski ambient space, their metric,
// Levi-Civita connection and curvature tensors, plus the vector-field
// operations (directional derivative, covariant derivative, Lie bracket).
//
// Index conventions follow the formulas as printed:
//   Γ^i_jk      = ½ g^{il} (∂_j g_kl + ∂_k g_jl − ∂_l g_jk)
//   R^l_ijk     = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^p_jk Γ^l_ip − Γ^p_ik Γ^l_jp
//   R_jk        = R^l_jlk   (upper index against the middle lower slot)
//   R           = g^{jk} R_jk
// With this contraction a round sphere has R < 0; conventional_scalar()
// returns the textbook sign.

#include <Eigen/Dense>

#include <functional>
#include <string>

#include "rqa/core.hpp"

namespace rqa {

enum class Signature { Euclidean, Minkowski };
enum class JacobianMode { Analytic, CentralDifference };

using Embedding = std::function<Vec4(const Vec4&)>;
// Row i holds the tangent vector ∂r/∂u_i.
using EmbeddingJacobian = std::function<Mat4(const Vec4&)>;

struct Chart {
  std::string name;
  int dim_param = 4;
  int dim_ambient = 4;
  Signature signature = Signature::Minkowski;
  Embedding embedding;
  EmbeddingJacobian jacobian;
  JacobianMode jacobian_mode = JacobianMode::Analytic;
  double jacobian_step = 1e-5;
  std::array<Interval, kMaxDim> domain{};

  void validate() const {
    if (dim_param < 1 || dim_ambient > kMaxDim || dim_param > dim_ambient) {
      throw Error(ErrorKind::Shape, "chart '" + name + "' needs 1 <= m <= n <= 4, got m=" +
                                        std::to_string(dim_param) + ", n=" + std::to_string(dim_ambient));
    }
    if (!embedding) throw Error(ErrorKind::Shape, "chart '" + name + "' has no embedding");
    if (jacobian_mode == JacobianMode::Analytic && !jacobian) {
      throw Error(ErrorKind::Shape, "chart '" + name + "' is analytic but has no jacobian");
    }
  }

  bool contains(const Vec4& u) const {
    for (int i = 0; i < dim_param; ++i) {
      if (!domain[i].contains(u[i])) return false;
    }
    return true;
  }
};

struct GeometryOptions {
  double metric_step = 1e-4;       // differences of g_ij
  double christoffel_step = 1e-3;  // differences of Γ inside the curvature
};

inline double ambient_dot(Signature sig, int n, const Vec4& a, const Vec4& b) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  if (sig == Signature::Minkowski) s -= 2.0 * a[0] * b[0];
  return s;
}

inline Vec4 eval_chart(const Chart& chart, const Vec4& u) {
  if (!chart.contains(u)) {
    throw Error(ErrorKind::Domain,
                "point " + format_point(u, chart.dim_param) + " outside domain of chart '" + chart.name + "'");
  }
  return chart.embedding(u);
}

// Rows 0..m-1 are g_i = ∂r/∂u_i.
inline Mat4 tangent_basis(const Chart& chart, const Vec4& u) {
  const int m = chart.dim_param;
  const int n = chart.dim_ambient;
  Mat4 basis{};
  if (chart.jacobian_mode == JacobianMode::Analytic) {
    if (!chart.contains(u)) {
      throw Error(ErrorKind::Domain,
                  "point " + format_point(u, m) + " outside domain of chart '" + chart.name + "'");
    }
    basis = chart.jacobian(u);
  } else {
    for (int i = 0; i < m; ++i) {
      basis[i] = partial([&](const Vec4& p) { return eval_chart(chart, p); }, u, i, chart.jacobian_step,
                         chart.domain[i]);
    }
  }
  // Linear independence via the Euclidean Gram matrix, normalized by the
  // vector lengths (Hadamard ratio), independent of the ambient signature.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim> gram(m, m);
  double length_product = 1.0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) gram(i, j) = ambient_dot(Signature::Euclidean, n, basis[i], basis[j]);
    length_product *= gram(i, i);
  }
  const double ratio = length_product > 0.0 ? gram.determinant() / length_product : 0.0;
  if (!(ratio > 1e-12)) {
    throw Error(ErrorKind::DegenerateChart,
                "tangent basis of '" + chart.name + "' is dependent at " + format_point(u, m));
  }
  return basis;
}

struct MetricData {
  int dim = 0;
  Signature signature = Signature::Minkowski;
  Mat4 metric{};
  Mat4 inverse{};
  double det = 0.0;
  // √(−g) on Lorentzian charts, √g on Euclidean ones.
  double measure = 0.0;
};

// Assemble g, g^{-1}, det g and the volume factor from a metric matrix.
inline MetricData finish_metric(const Mat4& g, int m, Signature sig, const Vec4& u, const std::string& name) {
  MetricData out;
  out.dim = m;
  out.signature = sig;
  out.metric = g;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim> mat(m, m);
  double scale = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) mat(i, j) = g[i][j];
    scale = std::max(scale, std::abs(g[i][i]));
  }
  out.det = mat.determinant();
  if (!(std::abs(out.det) >= 1e-12 * std::pow(std::max(scale, 1e-300), m))) {
    throw Error(ErrorKind::DegenerateMetric,
                "det g = " + std::to_string(out.det) + " at " + format_point(u, m) + " on '" + name + "'");
  }
  if (sig == Signature::Minkowski) {
    if (!(out.det < 0.0)) {
      throw Error(ErrorKind::Signature,
                  "Minkowski chart '" + name + "' has det g >= 0 at " + format_point(u, m));
    }
    out.measure = std::sqrt(-out.det);
  } else {
    out.measure = std::sqrt(std::abs(out.det));
  }
  const auto inv = mat.inverse().eval();
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) out.inverse[i][j] = 0.5 * (inv(i, j) + inv(j, i));
  }
  return out;
}

inline MetricData metric_from_basis(const Chart& chart, const Mat4& basis, const Vec4& u) {
  const int m = chart.dim_param;
  Mat4 g{};
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) g[i][j] = ambient_dot(chart.signature, chart.dim_ambient, basis[i], basis[j]);
  }
  return finish_metric(g, m, chart.signature, u, chart.name);
}

inline MetricData metric_at(const Chart& chart, const Vec4& u) {
  return metric_from_basis(chart, tangent_basis(chart, u), u);
}

inline Christoffel christoffel_from(const Mat4& inverse, const std::array<Mat4, kMaxDim>& dg, int m) {
  Christoffel gamma{};
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      for (int k = j; k < m; ++k) {
        double s = 0.0;
        for (int l = 0; l < m; ++l) s += inverse[i][l] * (dg[j][k][l] + dg[k][j][l] - dg[l][j][k]);
        gamma[i][j][k] = 0.5 * s;
        gamma[i][k][j] = 0.5 * s;
      }
    }
  }
  return gamma;
}

// ∂g_jk/∂u_a as dg[a][j][k].
inline std::array<Mat4, kMaxDim> metric_gradient(const Chart& chart, const Vec4& u, double h) {
  std::array<Mat4, kMaxDim> dg{};
  for (int a = 0; a < chart.dim_param; ++a) {
    dg[a] = partial([&](const Vec4& p) { return metric_at(chart, p).metric; }, u, a, h, chart.domain[a]);
  }
  return dg;
}

inline Christoffel christoffel_at(const Chart& chart, const Vec4& u, const GeometryOptions& opts = {}) {
  const MetricData md = metric_at(chart, u);
  return christoffel_from(md.inverse, metric_gradient(chart, u, opts.metric_step), chart.dim_param);
}

inline ChristoffelGradient christoffel_gradient(const Chart& chart, const Vec4& u, const GeometryOptions& opts = {}) {
  ChristoffelGradient dgamma{};
  for (int a = 0; a < chart.dim_param; ++a) {
    dgamma[a] = partial([&](const Vec4& p) { return christoffel_at(chart, p, opts); }, u, a,
                        opts.christoffel_step, chart.domain[a]);
  }
  return dgamma;
}

inline Riemann riemann_from(const Christoffel& gamma, const ChristoffelGradient& dgamma, int m) {
  Riemann r{};
  for (int l = 0; l < m; ++l) {
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        for (int k = 0; k < m; ++k) {
          double quad = 0.0;
          for (int p = 0; p < m; ++p) quad += gamma[p][j][k] * gamma[l][i][p] - gamma[p][i][k] * gamma[l][j][p];
          r[l][i][j][k] = (dgamma[i][l][j][k] - dgamma[j][l][i][k]) + quad;
        }
      }
    }
  }
  return r;
}

inline Mat4 ricci_from(const Riemann& r, int m) {
  Mat4 ricci{};
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < m; ++k) {
      double s = 0.0;
      for (int l = 0; l < m; ++l) s += r[l][j][l][k];
      ricci[j][k] = s;
    }
  }
  return ricci;
}

inline double trace_with(const Mat4& inverse, const Mat4& t, int m) {
  double s = 0.0;
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < m; ++k) s += inverse[j][k] * t[j][k];
  }
  return s;
}

struct GeometryPoint {
  Vec4 u{};
  int dim = 0;
  Signature signature = Signature::Minkowski;
  Mat4 basis{};
  Mat4 metric{};
  Mat4 inverse_metric{};
  double det_g = 0.0;
  double measure = 0.0;  // √(−g) or √g depending on signature
  Christoffel christoffel{};
  ChristoffelGradient christoffel_gradient{};
  Riemann riemann{};
  Mat4 ricci{};
  double scalar = 0.0;

  // Scalar curvature in the sign convention where round spheres are positive.
  double conventional_scalar() const { return -scalar; }
};

struct CurvatureData {
  Riemann riemann{};
  Mat4 ricci{};
  double scalar = 0.0;
};

inline GeometryPoint geometry_point(const Chart& chart, const Vec4& u, const GeometryOptions& opts = {}) {
  chart.validate();
  GeometryPoint gp;
  gp.u = u;
  gp.dim = chart.dim_param;
  gp.signature = chart.signature;
  gp.basis = tangent_basis(chart, u);
  const MetricData md = metric_from_basis(chart, gp.basis, u);
  gp.metric = md.metric;
  gp.inverse_metric = md.inverse;
  gp.det_g = md.det;
  gp.measure = md.measure;
  gp.christoffel = christoffel_from(md.inverse, metric_gradient(chart, u, opts.metric_step), gp.dim);
  gp.christoffel_gradient = christoffel_gradient(chart, u, opts);
  gp.riemann = riemann_from(gp.christoffel, gp.christoffel_gradient, gp.dim);
  gp.ricci = ricci_from(gp.riemann, gp.dim);
  gp.scalar = trace_with(gp.inverse_metric, gp.ricci, gp.dim);
  return gp;
}

inline CurvatureData riemann_at(const Chart& chart, const Vec4& u, const GeometryOptions& opts = {}) {
  const GeometryPoint gp = geometry_point(chart, u, opts);
  return {gp.riemann, gp.ricci, gp.scalar};
}

// ---------------------------------------------------------------------------
// Vector fields in chart components: X = X_i ∂r/∂u_i.

using ScalarMap = std::function<double(const Vec4&)>;

struct VectorFieldSpec {
  std::function<Vec4(const Vec4&)> components;
  double step = 1e-5;
};

inline double directional_derivative(const ScalarMap& f, const VectorFieldSpec& x, const Vec4& u, int dim) {
  const Vec4 xu = x.components(u);
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += partial(f, u, i, x.step) * xu[i];
  return s;
}

// (X·Y_i) for every component i of Y.
inline Vec4 directional_derivative(const VectorFieldSpec& y, const VectorFieldSpec& x, const Vec4& u, int dim) {
  const Vec4 xu = x.components(u);
  Vec4 out{};
  for (int j = 0; j < dim; ++j) {
    const Vec4 dy = partial(y.components, u, j, y.step);
    for (int i = 0; i < dim; ++i) out[i] += dy[i] * xu[j];
  }
  return out;
}

inline Vec4 covariant_derivative(const Chart& chart, const VectorFieldSpec& x, const VectorFieldSpec& y,
                                 const Vec4& u, const GeometryOptions& opts = {}) {
  const int m = chart.dim_param;
  const Christoffel gamma = christoffel_at(chart, u, opts);
  const Vec4 xu = x.components(u);
  const Vec4 yu = y.components(u);
  Vec4 out = directional_derivative(y, x, u, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      for (int k = 0; k < m; ++k) out[i] += gamma[i][j][k] * xu[j] * yu[k];
    }
  }
  return out;
}

inline Vec4 lie_bracket_at(const VectorFieldSpec& x, const VectorFieldSpec& y, const Vec4& u, int dim) {
  const Vec4 xy = directional_derivative(y, x, u, dim);
  const Vec4 yx = directional_derivative(x, y, u, dim);
  Vec4 out{};
  for (int i = 0; i < dim; ++i) out[i] = xy[i] - yx[i];
  return out;
}

}  // namespace rqa
