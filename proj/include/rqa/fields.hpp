#pragma once

// Structured space-time grids, the complex wave field φ, the deformation map
// û(x,t) = (ct, u(x,t)) and the quantities built directly on them: pulled-back
// gradients, mass density, the mass differential and the per-slice
// normalization residual.

#include <fstream>
#include <functional>
#include <vector>

#include <json.hpp>

#include "rqa/geometry.hpp"
#include "rqa/io.hpp"

namespace rqa {

struct Node {
  int t = 0;
  int i = 0;
  int j = 0;
  int k = 0;
};

inline std::string format_node(const Node& n) {
  return "(t=" + std::to_string(n.t) + ", x=" + std::to_string(n.i) + "," + std::to_string(n.j) + "," +
         std::to_string(n.k) + ")";
}

// Ω = [0,L1]×[0,L2]×[0,L3], time [0,T]; node counts include both ends.
struct SpaceTimeGrid {
  std::array<double, 3> length{1.0, 1.0, 1.0};
  std::array<int, 3> count{3, 3, 3};
  double duration = 1.0;
  int time_count = 3;

  void validate() const {
    for (int a = 0; a < 3; ++a) {
      if (count[a] < 3) throw Error(ErrorKind::Shape, "grid needs N_i >= 3 on every spatial axis");
      if (!(length[a] > 0.0)) throw Error(ErrorKind::Shape, "grid lengths must be positive");
    }
    if (time_count < 3) throw Error(ErrorKind::Shape, "grid needs N_t >= 3");
    if (!(duration > 0.0)) throw Error(ErrorKind::Shape, "grid duration must be positive");
  }

  double spacing(int axis) const { return length[axis] / (count[axis] - 1); }
  double time_step() const { return duration / (time_count - 1); }
  std::size_t spatial_size() const { return static_cast<std::size_t>(count[0]) * count[1] * count[2]; }
  std::size_t size() const { return spatial_size() * static_cast<std::size_t>(time_count); }

  std::size_t index(const Node& n) const {
    return ((static_cast<std::size_t>(n.t) * count[0] + n.i) * count[1] + n.j) * count[2] + n.k;
  }
  Node node(std::size_t flat) const {
    Node n;
    n.k = static_cast<int>(flat % count[2]);
    flat /= count[2];
    n.j = static_cast<int>(flat % count[1]);
    flat /= count[1];
    n.i = static_cast<int>(flat % count[0]);
    n.t = static_cast<int>(flat / count[0]);
    return n;
  }
  std::array<double, 3> position(const Node& n) const {
    return {n.i * spacing(0), n.j * spacing(1), n.k * spacing(2)};
  }
  double time(const Node& n) const { return n.t * time_step(); }
  bool on_spatial_boundary(const Node& n) const {
    return n.i == 0 || n.j == 0 || n.k == 0 || n.i == count[0] - 1 || n.j == count[1] - 1 || n.k == count[2] - 1;
  }

  bool operator==(const SpaceTimeGrid&) const = default;
};

// Composite trapezoidal weight of node `i` among `n` nodes of spacing h.
inline double trapezoid_weight(int i, int n, double h) { return (i == 0 || i == n - 1) ? 0.5 * h : h; }

inline double spatial_weight(const SpaceTimeGrid& g, const Node& n) {
  return trapezoid_weight(n.i, g.count[0], g.spacing(0)) * trapezoid_weight(n.j, g.count[1], g.spacing(1)) *
         trapezoid_weight(n.k, g.count[2], g.spacing(2));
}

inline double spacetime_weight(const SpaceTimeGrid& g, const Node& n) {
  return spatial_weight(g, n) * trapezoid_weight(n.t, g.time_count, g.time_step());
}

// Derivative along one grid axis of sampled data: central inside, second
// order one-sided at the two ends.
template <class Get>
auto grid_derivative(Get&& get, int idx, int count, double h) {
  using T = std::decay_t<decltype(get(0))>;
  T acc{};
  if (idx > 0 && idx < count - 1) {
    add_scaled(acc, -0.5 / h, get(idx - 1));
    add_scaled(acc, 0.5 / h, get(idx + 1));
  } else if (idx == 0) {
    add_scaled(acc, -1.5 / h, get(0));
    add_scaled(acc, 2.0 / h, get(1));
    add_scaled(acc, -0.5 / h, get(2));
  } else {
    add_scaled(acc, 1.5 / h, get(idx));
    add_scaled(acc, -2.0 / h, get(idx - 1));
    add_scaled(acc, 0.5 / h, get(idx - 2));
  }
  return acc;
}

// Partials along (x1, x2, x3, t) of per-node data stored in grid order.
template <class T>
std::array<T, 4> grid_gradient(const SpaceTimeGrid& g, const std::vector<T>& data, const Node& n) {
  std::array<T, 4> out{};
  out[0] = grid_derivative([&](int v) { return data[g.index({n.t, v, n.j, n.k})]; }, n.i, g.count[0], g.spacing(0));
  out[1] = grid_derivative([&](int v) { return data[g.index({n.t, n.i, v, n.k})]; }, n.j, g.count[1], g.spacing(1));
  out[2] = grid_derivative([&](int v) { return data[g.index({n.t, n.i, n.j, v})]; }, n.k, g.count[2], g.spacing(2));
  out[3] = grid_derivative([&](int v) { return data[g.index({v, n.i, n.j, n.k})]; }, n.t, g.time_count, g.time_step());
  return out;
}

struct WaveField {
  SpaceTimeGrid grid;
  std::vector<Complex> values;
  double mass = 1.0;
  bool dirichlet = false;

  using Profile = std::function<Complex(const std::array<double, 3>&, double)>;

  static WaveField from_function(const SpaceTimeGrid& grid, double mass, const Profile& f, bool dirichlet = false) {
    grid.validate();
    WaveField w{grid, std::vector<Complex>(grid.size()), mass, dirichlet};
    for (std::size_t n = 0; n < w.values.size(); ++n) {
      const Node node = grid.node(n);
      w.values[n] = f(grid.position(node), grid.time(node));
    }
    if (dirichlet) w.apply_dirichlet();
    w.validate();
    return w;
  }

  const Complex& at(const Node& n) const { return values[grid.index(n)]; }
  Complex& at(const Node& n) { return values[grid.index(n)]; }

  void apply_dirichlet() {
    for (std::size_t n = 0; n < values.size(); ++n) {
      if (grid.on_spatial_boundary(grid.node(n))) values[n] = 0.0;
    }
  }

  void validate() const {
    grid.validate();
    if (values.size() != grid.size()) throw Error(ErrorKind::Shape, "wave field size does not match its grid");
    if (!(mass > 0.0)) throw Error(ErrorKind::Shape, "wave field mass must be positive");
    for (std::size_t n = 0; n < values.size(); ++n) {
      if (!all_finite(values[n])) throw Error(ErrorKind::NonFinite, "wave field value at " + format_node(grid.node(n)));
      if (dirichlet && grid.on_spatial_boundary(grid.node(n)) && values[n] != Complex{}) {
        throw Error(ErrorKind::Shape, "Dirichlet wave field is nonzero on the boundary at " + format_node(grid.node(n)));
      }
    }
  }
};

// û(x,t) per node together with its Jacobian ∂(u0,u1,u2,u3)/∂(x1,x2,x3,t).
struct DeformationMap {
  SpaceTimeGrid grid;
  double c = 1.0;
  std::vector<Vec4> values;
  std::vector<Mat4> jacobian;

  using SpatialMap = std::function<std::array<double, 3>(const std::array<double, 3>&, double)>;

  static DeformationMap identity(const SpaceTimeGrid& grid, double c) {
    return from_function(grid, c, [](const std::array<double, 3>& x, double) { return x; });
  }

  // u0 = ct is imposed; the spatial part comes from `f`. Jacobians are
  // differenced on the grid.
  static DeformationMap from_function(const SpaceTimeGrid& grid, double c, const SpatialMap& f) {
    grid.validate();
    if (!(c > 0.0)) throw Error(ErrorKind::Shape, "speed of light must be positive");
    DeformationMap d{grid, c, std::vector<Vec4>(grid.size()), std::vector<Mat4>(grid.size())};
    for (std::size_t n = 0; n < grid.size(); ++n) {
      const Node node = grid.node(n);
      const double t = grid.time(node);
      const auto x = f(grid.position(node), t);
      d.values[n] = {c * t, x[0], x[1], x[2]};
    }
    for (std::size_t n = 0; n < grid.size(); ++n) {
      const auto cols = grid_gradient(grid, d.values, grid.node(n));
      Mat4 j{};
      for (int row = 0; row < 4; ++row) {
        for (int col = 0; col < 4; ++col) j[row][col] = cols[col][row];
      }
      j[0] = {0.0, 0.0, 0.0, c};
      d.jacobian[n] = j;
    }
    return d;
  }

  const Vec4& at(const Node& n) const { return values[grid.index(n)]; }
  const Mat4& jacobian_at(const Node& n) const { return jacobian[grid.index(n)]; }

  double abs_det(const Node& n) const {
    const Mat4& j = jacobian_at(n);
    Eigen::Matrix4d m;
    for (int r = 0; r < 4; ++r)
      for (int col = 0; col < 4; ++col) m(r, col) = j[r][col];
    return std::abs(m.determinant());
  }
};

inline void require_same_grid(const WaveField& phi, const DeformationMap& map) {
  if (!(phi.grid == map.grid)) throw Error(ErrorKind::Shape, "wave field and deformation map use different grids");
}

// ∂φ/∂u_j, j = 0..3, from (x,t) differences pulled back through û'.
inline ComplexVec4 grad_field(const WaveField& phi, const DeformationMap& map, const Node& node) {
  require_same_grid(phi, map);
  const auto dy = grid_gradient(phi.grid, phi.values, node);
  const Mat4& j = map.jacobian_at(node);
  // ∂φ/∂y_a = Σ_j ∂φ/∂u_j ∂u_j/∂y_a  ⇒  Jᵀ ∇_u φ = ∇_y φ.
  Eigen::Matrix4d jt;
  for (int r = 0; r < 4; ++r)
    for (int col = 0; col < 4; ++col) jt(r, col) = j[col][r];
  Eigen::FullPivLU<Eigen::Matrix4d> lu(jt);
  double scale = jt.cwiseAbs().maxCoeff();
  if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-12 * std::pow(scale, 4)) {
    throw Error(ErrorKind::Pullback, "singular deformation Jacobian at " + format_node(node));
  }
  Eigen::Vector4cd rhs;
  for (int a = 0; a < 4; ++a) rhs(a) = dy[a];
  const Eigen::Matrix4d inv = lu.inverse();
  const Eigen::Vector4cd sol = inv.cast<Complex>() * rhs;
  return {sol(0), sol(1), sol(2), sol(3)};
}

inline double density_at(const WaveField& phi, const Node& node) { return phi.mass * std::norm(phi.at(node)); }

inline void require_spacetime_chart(const Chart& chart) {
  chart.validate();
  if (chart.dim_param != 4) {
    throw Error(ErrorKind::Shape, "chart '" + chart.name + "' must have 4 parameters for space-time fields");
  }
}

// ∫_Ω |φ|² √(−g) |det û'| dx / c − 1 on time slice `t_index`.
inline double norm_constraint(const WaveField& phi, const Chart& chart, const DeformationMap& map, int t_index) {
  require_same_grid(phi, map);
  require_spacetime_chart(chart);
  const auto& g = phi.grid;
  if (t_index < 0 || t_index >= g.time_count) throw Error(ErrorKind::Shape, "time slice out of range");
  double sum = 0.0;
  for (int i = 0; i < g.count[0]; ++i) {
    for (int j = 0; j < g.count[1]; ++j) {
      for (int k = 0; k < g.count[2]; ++k) {
        const Node n{t_index, i, j, k};
        const double amp = std::norm(phi.at(n));
        if (amp == 0.0) continue;
        const MetricData md = metric_at(chart, map.at(n));
        sum += spatial_weight(g, n) * amp * md.measure * map.abs_det(n);
      }
    }
  }
  return sum / map.c - 1.0;
}

// dm / dx = m |φ|² / √(1 − v²/c²) · √(−g) · |det û'|
inline double mass_differential_at(const WaveField& phi, const Chart& chart, const DeformationMap& map,
                                   const Node& node, double speed) {
  require_same_grid(phi, map);
  require_spacetime_chart(chart);
  const double c = map.c;
  if (!(std::abs(speed) < c)) {
    throw Error(ErrorKind::Superluminal, "speed " + std::to_string(speed) + " >= c at " + format_node(node));
  }
  const double amp = std::norm(phi.at(node));
  if (amp == 0.0) return 0.0;
  const MetricData md = metric_at(chart, map.at(node));
  return phi.mass * amp / std::sqrt(1.0 - speed * speed / (c * c)) * md.measure * map.abs_det(node);
}

// ---------------------------------------------------------------------------
// Field I/O: CSV of (node, x1, x2, x3, t, Re φ, Im φ) plus a JSON sidecar.

inline void write_field(const WaveField& phi, double c, const std::string& csv_path, const std::string& json_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw Error(ErrorKind::Io, "cannot write '" + csv_path + "'");
  csv << "node,x1,x2,x3,t,re,im\n";
  const auto& g = phi.grid;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const Node node = g.node(n);
    const auto x = g.position(node);
    csv << n << ',' << io::format_double(x[0]) << ',' << io::format_double(x[1]) << ',' << io::format_double(x[2])
        << ',' << io::format_double(g.time(node)) << ',' << io::format_double(phi.values[n].real()) << ','
        << io::format_double(phi.values[n].imag()) << '\n';
  }
  nlohmann::json meta;
  meta["grid"] = {{"length", g.length}, {"count", g.count}, {"duration", g.duration}, {"time_count", g.time_count}};
  meta["spacing"] = {g.spacing(0), g.spacing(1), g.spacing(2)};
  meta["time_step"] = g.time_step();
  meta["mass"] = phi.mass;
  meta["c"] = c;
  meta["dirichlet"] = phi.dirichlet;
  std::ofstream js(json_path);
  if (!js) throw Error(ErrorKind::Io, "cannot write '" + json_path + "'");
  js << meta.dump(2) << '\n';
}

struct FieldFile {
  WaveField field;
  double c = 1.0;
};

inline FieldFile read_field(const std::string& csv_path, const std::string& json_path) {
  std::ifstream js(json_path);
  if (!js) throw Error(ErrorKind::Io, "cannot open '" + json_path + "'");
  nlohmann::json meta;
  try {
    js >> meta;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Io, json_path + ": " + e.what());
  }
  FieldFile out;
  try {
    auto& g = out.field.grid;
    g.length = meta.at("grid").at("length").get<std::array<double, 3>>();
    g.count = meta.at("grid").at("count").get<std::array<int, 3>>();
    g.duration = meta.at("grid").at("duration").get<double>();
    g.time_count = meta.at("grid").at("time_count").get<int>();
    out.field.mass = meta.at("mass").get<double>();
    out.field.dirichlet = meta.value("dirichlet", false);
    out.c = meta.at("c").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Io, json_path + ": " + e.what());
  }
  out.field.grid.validate();
  out.field.values.assign(out.field.grid.size(), Complex{});
  std::vector<char> seen(out.field.values.size(), 0);

  std::ifstream csv(csv_path);
  if (!csv) throw Error(ErrorKind::Io, "cannot open '" + csv_path + "'");
  std::string line;
  std::getline(csv, line);
  int line_no = 1;
  while (std::getline(csv, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = io::split_csv(line);
    try {
      if (cells.size() != 7) throw std::invalid_argument("expected 7 columns");
      const long node = io::parse_long(cells[0]);
      if (node < 0 || static_cast<std::size_t>(node) >= seen.size()) throw std::invalid_argument("node out of range");
      out.field.values[node] = {io::parse_double(cells[5]), io::parse_double(cells[6])};
      seen[node] = 1;
    } catch (const std::exception& e) {
      throw Error(ErrorKind::Io, csv_path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (char s : seen) {
    if (!s) throw Error(ErrorKind::Io, csv_path + ": missing nodes");
  }
  out.field.validate();
  return out;
}

}  // namespace rqa
