#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "rqa/fields.hpp"

namespace testing_support {

using rqa::Chart;
using rqa::Mat4;
using rqa::Vec4;

// A bent reparametrization of Minkowski space, differentiated numerically.
inline Chart curvilinear_minkowski() {
  Chart c;
  c.name = "curvilinear";
  c.dim_param = 4;
  c.dim_ambient = 4;
  c.signature = rqa::Signature::Minkowski;
  c.jacobian_mode = rqa::JacobianMode::CentralDifference;
  c.jacobian_step = 1e-5;
  c.embedding = [](const Vec4& u) {
    return Vec4{u[0] + 0.1 * std::sin(u[1]), u[1] + 0.05 * u[2] * u[2], u[2] + 0.1 * std::sin(u[0]) * u[3],
                u[3] + 0.05 * u[1] * u[2]};
  };
  return c;
}

// Unit 3-sphere in Euclidean R⁴ with hyperspherical angles (χ, θ, φ).
inline Chart three_sphere() {
  Chart c;
  c.name = "three-sphere";
  c.dim_param = 3;
  c.dim_ambient = 4;
  c.signature = rqa::Signature::Euclidean;
  c.embedding = [](const Vec4& u) {
    const double sc = std::sin(u[0]), st = std::sin(u[1]);
    return Vec4{std::cos(u[0]), sc * std::cos(u[1]), sc * st * std::cos(u[2]), sc * st * std::sin(u[2])};
  };
  c.jacobian = [](const Vec4& u) {
    const double sc = std::sin(u[0]), cc = std::cos(u[0]);
    const double st = std::sin(u[1]), ct = std::cos(u[1]);
    const double sp = std::sin(u[2]), cp = std::cos(u[2]);
    Mat4 j{};
    j[0] = {-sc, cc * ct, cc * st * cp, cc * st * sp};
    j[1] = {0.0, -sc * st, sc * ct * cp, sc * ct * sp};
    j[2] = {0.0, 0.0, -sc * st * sp, sc * st * cp};
    return j;
  };
  return c;
}

// X_i(u) = a_i + Σ_j b_ij sin(w_ij u_j + s_ij), smooth with O(1) derivatives.
struct RandomField {
  std::array<double, 4> a{};
  std::array<std::array<double, 4>, 4> b{}, w{}, s{};

  RandomField(std::mt19937_64& rng, int m) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int i = 0; i < m; ++i) {
      a[i] = U(rng);
      for (int j = 0; j < m; ++j) {
        b[i][j] = 0.5 * U(rng);
        w[i][j] = 1.0 + 0.5 * U(rng);
        s[i][j] = U(rng);
      }
    }
  }

  Vec4 operator()(const Vec4& u) const {
    Vec4 out{};
    for (int i = 0; i < 4; ++i) {
      out[i] = a[i];
      for (int j = 0; j < 4; ++j) out[i] += b[i][j] * std::sin(w[i][j] * u[j] + s[i][j]);
    }
    return out;
  }
};

struct RandomScalar {
  double a = 0.0;
  std::array<double, 4> b{}, w{}, s{};

  explicit RandomScalar(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    a = 1.0 + 0.5 * U(rng);
    for (int j = 0; j < 4; ++j) {
      b[j] = 0.5 * U(rng);
      w[j] = 1.0 + 0.5 * U(rng);
      s[j] = U(rng);
    }
  }

  double operator()(const Vec4& u) const {
    double v = a;
    for (int j = 0; j < 4; ++j) v += b[j] * std::cos(w[j] * u[j] + s[j]);
    return v;
  }
};

// Second-order grid difference written out independently of the library.
inline rqa::Complex grid_diff(const std::vector<rqa::Complex>& v, const rqa::SpaceTimeGrid& g, const rqa::Node& n, int axis) {
  auto at = [&](int s) {
    rqa::Node m = n;
    (axis == 0 ? m.i : axis == 1 ? m.j : axis == 2 ? m.k : m.t) = s;
    return v[g.index(m)];
  };
  const int idx = axis == 0 ? n.i : axis == 1 ? n.j : axis == 2 ? n.k : n.t;
  const int count = axis < 3 ? g.count[axis] : g.time_count;
  const double h = axis < 3 ? g.spacing(axis) : g.time_step();
  if (idx == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
  if (idx == count - 1) return (3.0 * at(idx) - 4.0 * at(idx - 1) + at(idx - 2)) / (2.0 * h);
  return (at(idx + 1) - at(idx - 1)) / (2.0 * h);
}

inline double node_volume(const rqa::SpaceTimeGrid& g, const rqa::Node& n) {
  double w = 1.0;
  w *= (n.i == 0 || n.i == g.count[0] - 1 ? 0.5 : 1.0) * g.spacing(0);
  w *= (n.j == 0 || n.j == g.count[1] - 1 ? 0.5 : 1.0) * g.spacing(1);
  w *= (n.k == 0 || n.k == g.count[2] - 1 ? 0.5 : 1.0) * g.spacing(2);
  return w;
}

inline double node_duration(const rqa::SpaceTimeGrid& g, const rqa::Node& n) {
  return (n.t == 0 || n.t == g.time_count - 1 ? 0.5 : 1.0) * g.time_step();
}

// c (γ/2) ∫∫ (−|φ_t|²/c² + Σ|∂_kφ|²) dx dt with trapezoidal weights.
inline double flat_dirichlet_form(const rqa::WaveField& phi, double c, double gamma) {
  const auto& g = phi.grid;
  double sum = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const rqa::Node node = g.node(n);
    const double w = node_volume(g, node) * node_duration(g, node);
    double v = -std::norm(grid_diff(phi.values, g, node, 3)) / (c * c);
    for (int a = 0; a < 3; ++a) v += std::norm(grid_diff(phi.values, g, node, a));
    sum += w * v;
  }
  return c * 0.5 * gamma * sum;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("rqa_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support
