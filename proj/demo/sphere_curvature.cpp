// Curvature of the unit sphere and of the flat polar plane at a few points.
#include <cstdio>
#include <numbers>

#include "rqa/charts.hpp"

int main() {
  const rqa::Chart sphere = rqa::charts::unit_sphere();
  const rqa::Chart polar = rqa::charts::polar_plane();
  std::printf("%-14s %-10s %-12s %s\n", "chart", "u0", "scalar", "contracted");
  for (double theta : {std::numbers::pi / 6, std::numbers::pi / 3, std::numbers::pi / 2}) {
    const auto gp = rqa::geometry_point(sphere, {theta, 0.4, 0.0, 0.0});
    std::printf("%-14s %-10.6f %-12.8f %.8f\n", "unit-sphere", theta, gp.conventional_scalar(), gp.scalar);
  }
  for (double r : {0.5, 1.0, 2.0}) {
    const auto gp = rqa::geometry_point(polar, {r, 1.0, 0.0, 0.0});
    std::printf("%-14s %-10.6f %-12.3e %.3e\n", "polar-plane", r, gp.conventional_scalar(), gp.scalar);
  }
}
