// Lowest Dirichlet modes of the unit cube and their energies, then one
// period of the separable solution built from the first mode.
#include <cmath>
#include <cstdio>
#include <numbers>

#include "rqa/kleingordon.hpp"

int main() {
  const rqa::Box box{3, {1.0, 1.0, 1.0}, {17, 17, 17}};
  const rqa::DirichletLaplacian op(box);
  rqa::ModeSet modes = rqa::solve_modes(op, 4);
  rqa::attach_energies(modes, 1.0, 1.0, 1.0, 1.0);
  for (std::size_t k = 0; k < modes.eigenvalues.size(); ++k) {
    std::printf("mode %zu  lambda %.10f  E1 %.10f  E %.10f\n", k + 1, modes.eigenvalues[k], modes.e1[k],
                *modes.energies[k]);
  }

  const double e = *modes.energies[0];
  const auto& phi2 = modes.modes[0];
  std::vector<rqa::Complex> phi0(phi2.begin(), phi2.end()), dphi0(phi2.size());
  for (std::size_t i = 0; i < phi2.size(); ++i) dphi0[i] = rqa::Complex(0.0, -e) * phi2[i];

  rqa::KgConstants k;
  k.energy = rqa::MultiplierSchedule(e);
  const double period = 2.0 * std::numbers::pi / e;
  const long steps = 2000;
  const double dt = period / steps;
  auto state = rqa::start_evolution(op, phi0, dphi0, dt, k);
  const auto run = rqa::evolve_kg(op, state, steps - 1, steps, k);
  double worst = 0.0;
  for (std::size_t i = 0; i < phi2.size(); ++i) {
    worst = std::max(worst, std::abs(std::abs(run.state.current[i]) - std::abs(phi2[i])));
  }
  std::printf("one period (%ld steps, dt %.3e): max | |phi| - |phi2| | = %.3e\n", steps, dt, worst);
}
