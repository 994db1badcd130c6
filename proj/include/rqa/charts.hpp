#pragma once

// Built-in chart catalog and the tabulated-chart loader.

#include <algorithm>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <vector>

#include "rqa/geometry.hpp"
#include "rqa/io.hpp"

namespace rqa::charts {

inline Chart minkowski_identity() {
  Chart c;
  c.name = "minkowski-identity";
  c.dim_param = 4;
  c.dim_ambient = 4;
  c.signature = Signature::Minkowski;
  c.embedding = [](const Vec4& u) { return u; };
  c.jacobian = [](const Vec4&) {
    Mat4 j{};
    for (int i = 0; i < 4; ++i) j[i][i] = 1.0;
    return j;
  };
  return c;
}

// r(u) = (u0, a·u1, a·u2, a·u3) with u0 = ct.
inline Chart diag_warp(double a) {
  if (!(a > 0.0)) throw Error(ErrorKind::Config, "diag-warp needs a > 0");
  Chart c = minkowski_identity();
  c.name = "diag-warp";
  c.embedding = [a](const Vec4& u) { return Vec4{u[0], a * u[1], a * u[2], a * u[3]}; };
  c.jacobian = [a](const Vec4&) {
    Mat4 j{};
    j[0][0] = 1.0;
    for (int i = 1; i < 4; ++i) j[i][i] = a;
    return j;
  };
  return c;
}

inline Chart polar_plane() {
  Chart c;
  c.name = "polar-plane";
  c.dim_param = 2;
  c.dim_ambient = 2;
  c.signature = Signature::Euclidean;
  c.domain[0] = {0.0, std::numeric_limits<double>::infinity()};
  c.embedding = [](const Vec4& u) { return Vec4{u[0] * std::cos(u[1]), u[0] * std::sin(u[1]), 0.0, 0.0}; };
  c.jacobian = [](const Vec4& u) {
    Mat4 j{};
    j[0] = {std::cos(u[1]), std::sin(u[1]), 0.0, 0.0};
    j[1] = {-u[0] * std::sin(u[1]), u[0] * std::cos(u[1]), 0.0, 0.0};
    return j;
  };
  return c;
}

// (θ, φ) ↦ (sinθ cosφ, sinθ sinφ, cosθ)
inline Chart unit_sphere() {
  Chart c;
  c.name = "unit-sphere";
  c.dim_param = 2;
  c.dim_ambient = 3;
  c.signature = Signature::Euclidean;
  c.domain[0] = {0.0, std::numbers::pi};
  c.embedding = [](const Vec4& u) {
    return Vec4{std::sin(u[0]) * std::cos(u[1]), std::sin(u[0]) * std::sin(u[1]), std::cos(u[0]), 0.0};
  };
  c.jacobian = [](const Vec4& u) {
    Mat4 j{};
    j[0] = {std::cos(u[0]) * std::cos(u[1]), std::cos(u[0]) * std::sin(u[1]), -std::sin(u[0]), 0.0};
    j[1] = {-std::sin(u[0]) * std::sin(u[1]), std::sin(u[0]) * std::cos(u[1]), 0.0, 0.0};
    return j;
  };
  return c;
}

// Samples of r on a tensor grid in u, interpolated per axis with local
// four-point Lagrange polynomials (fewer when an axis has < 4 nodes).
class TabulatedEmbedding {
 public:
  TabulatedEmbedding(std::vector<std::vector<double>> axes, std::vector<Vec4> values, int dim_ambient)
      : axes_(std::move(axes)), values_(std::move(values)), n_(dim_ambient) {}

  Vec4 operator()(const Vec4& u) const {
    const int m = static_cast<int>(axes_.size());
    std::array<int, kMaxDim> first{};
    std::array<int, kMaxDim> width{};
    std::array<std::array<double, 4>, kMaxDim> weight{};
    for (int a = 0; a < m; ++a) {
      const auto& ax = axes_[a];
      const int count = static_cast<int>(ax.size());
      width[a] = std::min(count, 4);
      const auto it = std::upper_bound(ax.begin(), ax.end(), u[a]);
      int cell = static_cast<int>(it - ax.begin()) - 1;
      cell = std::clamp(cell, 0, count - 2);
      first[a] = std::clamp(cell - 1, 0, count - width[a]);
      for (int p = 0; p < width[a]; ++p) {
        double w = 1.0;
        for (int q = 0; q < width[a]; ++q) {
          if (q != p) w *= (u[a] - ax[first[a] + q]) / (ax[first[a] + p] - ax[first[a] + q]);
        }
        weight[a][p] = w;
      }
    }
    Vec4 out{};
    std::array<int, kMaxDim> k{};
    while (true) {
      double w = 1.0;
      std::size_t flat = 0;
      for (int a = 0; a < m; ++a) {
        w *= weight[a][k[a]];
        flat = flat * axes_[a].size() + static_cast<std::size_t>(first[a] + k[a]);
      }
      for (int i = 0; i < n_; ++i) out[i] += w * values_[flat][i];
      int a = m - 1;
      while (a >= 0 && ++k[a] == width[a]) k[a--] = 0;
      if (a < 0) break;
    }
    return out;
  }

 private:
  std::vector<std::vector<double>> axes_;
  std::vector<Vec4> values_;  // row-major, last axis fastest
  int n_;
};

// CSV with a header naming u0..u{m-1} and r0..r{n-1}; one row per grid node.
inline Chart load_tabulated_chart(const std::string& path, Signature signature) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open tabulated chart '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Io, "empty tabulated chart '" + path + "'");
  const auto header = io::split_csv(line);
  std::vector<int> ucol, rcol;
  for (int m = 0; m < kMaxDim; ++m) {
    const auto it = std::find(header.begin(), header.end(), "u" + std::to_string(m));
    if (it == header.end()) break;
    ucol.push_back(static_cast<int>(it - header.begin()));
  }
  for (int n = 0; n < kMaxDim; ++n) {
    const auto it = std::find(header.begin(), header.end(), "r" + std::to_string(n));
    if (it == header.end()) break;
    rcol.push_back(static_cast<int>(it - header.begin()));
  }
  const int m = static_cast<int>(ucol.size());
  const int n = static_cast<int>(rcol.size());
  if (m == 0 || n == 0 || m > n) {
    throw Error(ErrorKind::Io, "tabulated chart header must name u0.. and r0.. columns with m <= n");
  }
  std::vector<std::pair<Vec4, Vec4>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = io::split_csv(line);
    Vec4 u{}, r{};
    try {
      for (int a = 0; a < m; ++a) u[a] = io::parse_double(cells.at(ucol[a]));
      for (int i = 0; i < n; ++i) r[i] = io::parse_double(cells.at(rcol[i]));
    } catch (const std::exception&) {
      throw Error(ErrorKind::Io, path + ":" + std::to_string(line_no) + ": malformed row");
    }
    rows.emplace_back(u, r);
  }
  std::vector<std::vector<double>> axes(m);
  for (int a = 0; a < m; ++a) {
    for (const auto& row : rows) axes[a].push_back(row.first[a]);
    std::sort(axes[a].begin(), axes[a].end());
    axes[a].erase(std::unique(axes[a].begin(), axes[a].end()), axes[a].end());
    if (axes[a].size() < 2) throw Error(ErrorKind::Io, "tabulated chart axis u" + std::to_string(a) + " has < 2 nodes");
  }
  std::size_t total = 1;
  for (const auto& ax : axes) total *= ax.size();
  if (total != rows.size()) {
    throw Error(ErrorKind::Io, "tabulated chart rows do not form a full tensor grid (" +
                                   std::to_string(rows.size()) + " rows, " + std::to_string(total) + " nodes)");
  }
  std::vector<Vec4> values(total);
  std::vector<char> seen(total, 0);
  for (const auto& [u, r] : rows) {
    std::size_t flat = 0;
    for (int a = 0; a < m; ++a) {
      const auto it = std::lower_bound(axes[a].begin(), axes[a].end(), u[a]);
      flat = flat * axes[a].size() + static_cast<std::size_t>(it - axes[a].begin());
    }
    if (seen[flat]) throw Error(ErrorKind::Io, "tabulated chart repeats node " + format_point(u, m));
    seen[flat] = 1;
    values[flat] = r;
  }

  Chart c;
  c.name = "tabulated";
  c.dim_param = m;
  c.dim_ambient = n;
  c.signature = signature;
  c.jacobian_mode = JacobianMode::CentralDifference;
  double min_spacing = std::numeric_limits<double>::infinity();
  for (int a = 0; a < m; ++a) {
    c.domain[a] = {axes[a].front(), axes[a].back()};
    for (std::size_t i = 1; i < axes[a].size(); ++i) min_spacing = std::min(min_spacing, axes[a][i] - axes[a][i - 1]);
  }
  c.jacobian_step = 1e-3 * min_spacing;
  c.embedding = TabulatedEmbedding(std::move(axes), std::move(values), n);
  return c;
}

struct ChartRequest {
  std::string name;
  double warp = 1.0;           // diag-warp parameter a
  std::string table_path;      // tabulated
  Signature table_signature = Signature::Minkowski;
};

inline Chart chart_by_name(const ChartRequest& req) {
  if (req.name == "minkowski-identity") return minkowski_identity();
  if (req.name == "polar-plane") return polar_plane();
  if (req.name == "unit-sphere") return unit_sphere();
  if (req.name == "diag-warp") return diag_warp(req.warp);
  if (req.name == "tabulated") return load_tabulated_chart(req.table_path, req.table_signature);
  throw Error(ErrorKind::Config, "unknown chart '" + req.name + "'");
}

}  // namespace rqa::charts
