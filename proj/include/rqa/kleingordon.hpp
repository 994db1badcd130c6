#pragma once

// Flat-limit solvers. With γ, m, c, ℏ fixed and a multiplier E(t):
//   (γ/2)(φ_tt/c² − Δφ) + (mc² − E(t)) φ = 0          Klein-Gordon
//   (γ/2)(φ_tt/c² − Δφ) + mc² φ = iℏ φ_t              Schrödinger-Klein-Gordon
// Separable solutions e^{−iEt/ℏ} φ₂(x) lead to −(γ/2)Δφ₂ + E₁ φ₂ = 0 with
// E₁ = −γE²/(2c²ℏ²) + mc² − E.

#include <Eigen/Dense>

#include <algorithm>
#include <concepts>
#include <numbers>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "rqa/action.hpp"

namespace rqa {

// Spatial box [0,L_1]×…×[0,L_d], d = 1..3, node counts include the boundary.
struct Box {
  int dims = 1;
  std::array<double, 3> length{1.0, 1.0, 1.0};
  std::array<int, 3> count{3, 3, 3};

  void validate() const {
    if (dims < 1 || dims > 3) throw Error(ErrorKind::Shape, "box dimension must be 1, 2 or 3");
    for (int a = 0; a < dims; ++a) {
      if (count[a] < 3) throw Error(ErrorKind::Shape, "box needs N_i >= 3");
      if (!(length[a] > 0.0)) throw Error(ErrorKind::Shape, "box lengths must be positive");
    }
  }

  double spacing(int a) const { return length[a] / (count[a] - 1); }
  int interior(int a) const { return a < dims ? count[a] - 2 : 1; }
  std::size_t interior_size() const {
    std::size_t n = 1;
    for (int a = 0; a < dims; ++a) n *= static_cast<std::size_t>(count[a] - 2);
    return n;
  }
  std::size_t full_size() const {
    std::size_t n = 1;
    for (int a = 0; a < dims; ++a) n *= static_cast<std::size_t>(count[a]);
    return n;
  }
  // Quadrature weight of an interior node (boundary values are zero).
  double cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dims; ++a) v *= spacing(a);
    return v;
  }

  static Box from_grid(const SpaceTimeGrid& g) { return Box{3, g.length, g.count}; }

  bool operator==(const Box&) const = default;
};

// A = −Δ_h on interior nodes with Dirichlet rows eliminated; SPD.
class DirichletLaplacian {
 public:
  explicit DirichletLaplacian(Box box) : box_(box) {
    box_.validate();
    for (int a = 0; a < 3; ++a) {
      n_[a] = box_.interior(a);
      inv_h2_[a] = a < box_.dims ? 1.0 / (box_.spacing(a) * box_.spacing(a)) : 0.0;
    }
  }

  const Box& box() const { return box_; }
  std::size_t size() const { return box_.interior_size(); }
  double cell_volume() const { return box_.cell_volume(); }

  template <class T>
  void apply(std::span<const T> in, std::span<T> out) const {
    const int nx = n_[0], ny = n_[1], nz = n_[2];
    double diag = 0.0;
    for (int a = 0; a < 3; ++a) diag += 2.0 * inv_h2_[a];
    std::size_t idx = 0;
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        for (int k = 0; k < nz; ++k, ++idx) {
          T acc = diag * in[idx];
          if (i > 0) acc -= inv_h2_[0] * in[idx - static_cast<std::size_t>(ny) * nz];
          if (i < nx - 1) acc -= inv_h2_[0] * in[idx + static_cast<std::size_t>(ny) * nz];
          if (box_.dims > 1) {
            if (j > 0) acc -= inv_h2_[1] * in[idx - nz];
            if (j < ny - 1) acc -= inv_h2_[1] * in[idx + nz];
          }
          if (box_.dims > 2) {
            if (k > 0) acc -= inv_h2_[2] * in[idx - 1];
            if (k < nz - 1) acc -= inv_h2_[2] * in[idx + 1];
          }
          out[idx] = acc;
        }
      }
    }
  }

  template <class T>
  std::vector<T> apply(const std::vector<T>& in) const {
    std::vector<T> out(in.size());
    apply<T>(std::span<const T>(in), std::span<T>(out));
    return out;
  }

  // −Δ_h at interior nodes of a full grid vector, boundary values taken as
  // given; boundary entries of the result are zero.
  std::vector<double> apply_grid(const std::vector<double>& full) const {
    std::vector<double> out(full.size(), 0.0);
    const int cx = box_.count[0];
    const int cy = box_.dims > 1 ? box_.count[1] : 1;
    const int cz = box_.dims > 2 ? box_.count[2] : 1;
    auto at = [&](int i, int j, int k) { return full[(static_cast<std::size_t>(i) * cy + j) * cz + k]; };
    for (int i = 1; i < cx - 1; ++i) {
      for (int j = (cy > 1 ? 1 : 0); j < (cy > 1 ? cy - 1 : 1); ++j) {
        for (int k = (cz > 1 ? 1 : 0); k < (cz > 1 ? cz - 1 : 1); ++k) {
          double acc = inv_h2_[0] * (2.0 * at(i, j, k) - at(i - 1, j, k) - at(i + 1, j, k));
          if (cy > 1) acc += inv_h2_[1] * (2.0 * at(i, j, k) - at(i, j - 1, k) - at(i, j + 1, k));
          if (cz > 1) acc += inv_h2_[2] * (2.0 * at(i, j, k) - at(i, j, k - 1) - at(i, j, k + 1));
          out[(static_cast<std::size_t>(i) * cy + j) * cz + k] = acc;
        }
      }
    }
    return out;
  }

  Eigen::MatrixXd dense() const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::MatrixXd a(n, n);
    std::vector<double> e(size(), 0.0), col(size());
    for (Eigen::Index c = 0; c < n; ++c) {
      e[c] = 1.0;
      apply<double>(e, col);
      for (Eigen::Index r = 0; r < n; ++r) a(r, c) = col[r];
      e[c] = 0.0;
    }
    return a;
  }

  // Largest eigenvalue of the box stencil: Σ_a (4/h_a²) sin²(n_a π / (2(n_a+1))).
  double max_eigenvalue() const {
    double s = 0.0;
    for (int a = 0; a < box_.dims; ++a) {
      const double t = std::sin(n_[a] * std::numbers::pi / (2.0 * (n_[a] + 1)));
      s += 4.0 * inv_h2_[a] * t * t;
    }
    return s;
  }

  template <class T>
  std::vector<T> expand(const std::vector<T>& interior) const {
    std::vector<T> full(box_.full_size(), T{});
    const int cy = box_.dims > 1 ? box_.count[1] : 1;
    const int cz = box_.dims > 2 ? box_.count[2] : 1;
    const int oy = box_.dims > 1 ? 1 : 0;
    const int oz = box_.dims > 2 ? 1 : 0;
    std::size_t idx = 0;
    for (int i = 0; i < n_[0]; ++i)
      for (int j = 0; j < n_[1]; ++j)
        for (int k = 0; k < n_[2]; ++k, ++idx)
          full[(static_cast<std::size_t>(i + 1) * cy + (j + oy)) * cz + (k + oz)] = interior[idx];
    return full;
  }

  // Coordinates of interior node `idx`.
  std::array<double, 3> position(std::size_t idx) const {
    const int k = static_cast<int>(idx % n_[2]);
    idx /= n_[2];
    const int j = static_cast<int>(idx % n_[1]);
    const int i = static_cast<int>(idx / n_[1]);
    std::array<double, 3> x{};
    x[0] = (i + 1) * box_.spacing(0);
    if (box_.dims > 1) x[1] = (j + 1) * box_.spacing(1);
    if (box_.dims > 2) x[2] = (k + 1) * box_.spacing(2);
    return x;
  }

 private:
  Box box_;
  std::array<int, 3> n_{};
  std::array<double, 3> inv_h2_{};
};

inline DirichletLaplacian assemble_dirichlet_laplacian(const Box& box) { return DirichletLaplacian(box); }

// ---------------------------------------------------------------------------
// Eigenpairs.

struct EigenOptions {
  double tolerance = 1e-10;      // residual ‖Ay − θy‖ relative to θ
  std::size_t dense_limit = 2048;  // interior nodes solved densely
  int max_basis = 120;             // cap on the projection space
  int max_restarts = 400;
  double cg_tolerance = 1e-12;     // inner solves, relative residual
  std::uint64_t seed = 0x5eed;
};

struct ModeSet {
  Box box;
  std::vector<double> eigenvalues;                  // ascending, Δφ = −λφ
  std::vector<std::vector<double>> modes;           // interior values, ∫|φ₂|² = 1
  std::vector<double> e1;                           // −γλ/2
  std::vector<std::optional<double>> energies;      // E solving the energy relation
  int restarts = 0;
  bool dense = false;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
  return v;
}

// x ≈ A⁻¹b by conjugate gradients with matrix-free products.
inline std::vector<double> cg_solve(const DirichletLaplacian& op, const std::vector<double>& b, double tol) {
  std::vector<double> x(b.size(), 0.0), r = b, p = b;
  const double stop = tol * tol * dot(b, b);
  double rr = dot(r, r);
  for (std::size_t it = 0; it < 4 * b.size() && rr > stop; ++it) {
    const auto ap = op.apply(p);
    const double alpha = rr / dot(p, ap);
    axpy(alpha, p, x);
    axpy(-alpha, ap, r);
    const double next = dot(r, r);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + next / rr * p[i];
    rr = next;
  }
  return x;
}

// Deterministic sign: the largest-magnitude entry (first on ties) is positive.
inline void fix_sign(std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best]) * (1.0 + 1e-12)) best = i;
  }
  if (v[best] < 0.0) {
    for (auto& x : v) x = -x;
  }
}

}  // namespace detail

// k smallest eigenpairs of −Δ_h. Small problems are diagonalized densely;
// larger ones use a restarted block Krylov space in A⁻¹ (inner conjugate
// gradient solves) with Rayleigh-Ritz extraction against A itself and full
// reorthogonalization.
inline ModeSet solve_modes(const DirichletLaplacian& op, int k, double gamma = 1.0, const EigenOptions& opts = {}) {
  const std::size_t n = op.size();
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw Error(ErrorKind::Shape, "requested " + std::to_string(k) + " modes from " + std::to_string(n) +
                                      " interior nodes");
  }
  ModeSet out;
  out.box = op.box();
  const double norm_scale = 1.0 / std::sqrt(op.cell_volume());

  if (n <= opts.dense_limit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.dense());
    if (es.info() != Eigen::Success) throw Error(ErrorKind::Convergence, "dense eigensolver failed");
    for (int i = 0; i < k; ++i) {
      out.eigenvalues.push_back(es.eigenvalues()(i));
      std::vector<double> v(n);
      for (std::size_t r = 0; r < n; ++r) v[r] = es.eigenvectors()(static_cast<Eigen::Index>(r), i) * norm_scale;
      detail::fix_sign(v);
      out.modes.push_back(std::move(v));
    }
    out.dense = true;
  } else {
    std::mt19937_64 rng(opts.seed);
    const std::size_t keep = std::min<std::size_t>(n, static_cast<std::size_t>(k) + 4);
    const std::size_t max_basis =
        std::min<std::size_t>(n, std::max<std::size_t>(keep + 1, std::min<std::size_t>(opts.max_basis, 4 * keep)));
    std::vector<std::vector<double>> q, aq;

    auto orthonormalize = [&](std::vector<double>& v) {
      const double start = std::sqrt(detail::dot(v, v));
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& b : q) detail::axpy(-detail::dot(b, v), b, v);
      }
      const double norm = std::sqrt(detail::dot(v, v));
      if (!(norm > 1e-10 * start)) return false;
      for (auto& x : v) x /= norm;
      return true;
    };
    auto add = [&](std::vector<double> v) {
      for (int attempt = 0; !orthonormalize(v); ++attempt) {
        if (attempt > 8) throw Error(ErrorKind::Convergence, "Krylov basis cannot be extended");
        v = detail::random_vector(n, rng);
      }
      aq.push_back(op.apply(v));
      q.push_back(std::move(v));
    };

    for (std::size_t i = 0; i < keep; ++i) add(detail::random_vector(n, rng));

    for (int restart = 0;; ++restart) {
      for (std::size_t cursor = 0; q.size() < max_basis; ++cursor) {
        add(detail::cg_solve(op, q[cursor], opts.cg_tolerance));
      }
      const auto m = static_cast<Eigen::Index>(q.size());
      Eigen::MatrixXd h(m, m);
      for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i; j < m; ++j) h(i, j) = h(j, i) = 0.5 * (detail::dot(q[i], aq[j]) + detail::dot(q[j], aq[i]));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
      if (es.info() != Eigen::Success) throw Error(ErrorKind::Convergence, "projected eigenproblem failed");

      std::vector<std::vector<double>> y(keep, std::vector<double>(n, 0.0)), ay(keep, std::vector<double>(n, 0.0));
      bool converged = true;
      for (std::size_t i = 0; i < keep; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
          const double s = es.eigenvectors()(j, static_cast<Eigen::Index>(i));
          detail::axpy(s, q[j], y[i]);
          detail::axpy(s, aq[j], ay[i]);
        }
        if (i < static_cast<std::size_t>(k)) {
          const double theta = es.eigenvalues()(static_cast<Eigen::Index>(i));
          double r2 = 0.0;
          for (std::size_t t = 0; t < n; ++t) {
            const double d = ay[i][t] - theta * y[i][t];
            r2 += d * d;
          }
          if (std::sqrt(r2) > opts.tolerance * std::abs(theta)) converged = false;
        }
      }
      if (converged || q.size() == n) {
        for (int i = 0; i < k; ++i) {
          out.eigenvalues.push_back(es.eigenvalues()(i));
          std::vector<double> v = y[i];
          for (auto& x : v) x *= norm_scale;
          detail::fix_sign(v);
          out.modes.push_back(std::move(v));
        }
        out.restarts = restart;
        break;
      }
      if (restart >= opts.max_restarts) {
        throw Error(ErrorKind::Convergence, "Krylov eigensolver did not converge after " +
                                                std::to_string(restart) + " restarts (projection basis " +
                                                std::to_string(max_basis) + ")");
      }
      q = std::move(y);
      aq = std::move(ay);
    }
  }

  for (double lam : out.eigenvalues) out.e1.push_back(-0.5 * gamma * lam);
  out.energies.assign(out.eigenvalues.size(), std::nullopt);
  return out;
}

// Root of γE²/(2c²ℏ²) + E − mc² + E₁ = 0 on the branch continuous with
// E = mc² − E₁ as γ → 0.
inline double solve_energy_relation(double e1, double mass, double c, double hbar, double gamma) {
  const double rest = mass * c * c - e1;
  const double disc = 1.0 + 2.0 * gamma * rest / (c * c * hbar * hbar);
  if (disc < 0.0) {
    throw Error(ErrorKind::NoRealRoot, "energy relation has negative discriminant " + io::format_double(disc) +
                                           " for E1 = " + io::format_double(e1));
  }
  return 2.0 * rest / (1.0 + std::sqrt(disc));
}

// E₁ from E, the defining relation.
inline double energy_relation_e1(double energy, double mass, double c, double hbar, double gamma) {
  return -gamma * energy * energy / (2.0 * c * c * hbar * hbar) + mass * c * c - energy;
}

inline void attach_energies(ModeSet& modes, double mass, double c, double hbar, double gamma) {
  for (std::size_t i = 0; i < modes.e1.size(); ++i) {
    try {
      modes.energies[i] = solve_energy_relation(modes.e1[i], mass, c, hbar, gamma);
    } catch (const Error&) {
      modes.energies[i] = std::nullopt;
    }
  }
}

// ---------------------------------------------------------------------------
// Time evolution.

struct KgConstants {
  double gamma = 1.0;
  double mass = 1.0;
  double c = 1.0;
  double hbar = 1.0;
  MultiplierSchedule energy{0.0};
  double schedule_duration = 1.0;  // time span the E(t) samples cover

  double kappa(double t) const { return 2.0 / gamma * (mass * c * c - energy.value_at(t, schedule_duration)); }
  double max_kappa() const { return 2.0 / gamma * (mass * c * c - energy.min_value()); }
};

template <class Op>
concept SpatialOperator = requires(const Op& op, std::span<const Complex> in, std::span<Complex> out) {
  { op.size() } -> std::convertible_to<std::size_t>;
  op.apply(in, out);
  { op.max_eigenvalue() } -> std::convertible_to<double>;
  { op.cell_volume() } -> std::convertible_to<double>;
};

// Leapfrog is stable for Δt ≤ 2 / (c √(λ_max + max(κ, 0))), κ = (2/γ)(mc² − E).
template <SpatialOperator Op>
double stability_bound(const Op& op, const KgConstants& k) {
  return 2.0 / (k.c * std::sqrt(op.max_eigenvalue() + std::max(k.max_kappa(), 0.0)));
}

struct EvolutionState {
  std::vector<Complex> previous;  // level step-1
  std::vector<Complex> current;   // level step
  double dt = 0.0;
  long step = 0;
};

struct Snapshot {
  long step = 0;
  double time = 0.0;
  std::vector<Complex> values;  // interior nodes
};

struct EvolutionResult {
  EvolutionState state;
  std::vector<Snapshot> snapshots;
  std::vector<double> energy;  // discrete energy at every half step, starting at 1/2
};

namespace detail {

template <SpatialOperator Op>
std::vector<Complex> shifted_apply(const Op& op, const std::vector<Complex>& v, double kappa) {
  std::vector<Complex> out(v.size());
  op.apply(std::span<const Complex>(v), std::span<Complex>(out));
  for (std::size_t i = 0; i < v.size(); ++i) out[i] += kappa * v[i];
  return out;
}

template <SpatialOperator Op>
void check_stability(const Op& op, const KgConstants& k, double dt) {
  const double bound = stability_bound(op, k);
  if (!(dt > 0.0) || dt > bound) {
    throw Error(ErrorKind::Stability, "leapfrog time step dt = " + io::format_double(dt) +
                                          " exceeds the stability bound dt <= " + io::format_double(bound));
  }
}

}  // namespace detail

// (γ/2)[ (1/c²) ‖(φ^{n+1} − φ^n)/Δt‖² + Re⟨(A + κ) φ^{n+1}, φ^n⟩ ] · cell volume;
// conserved exactly by the leapfrog update when κ is constant.
template <SpatialOperator Op>
double kg_discrete_energy(const Op& op, const std::vector<Complex>& prev, const std::vector<Complex>& next,
                          double dt, double kappa, const KgConstants& k) {
  const auto bn = detail::shifted_apply(op, next, kappa);
  double kinetic = 0.0, potential = 0.0;
  for (std::size_t i = 0; i < prev.size(); ++i) {
    kinetic += std::norm((next[i] - prev[i]) / dt);
    potential += (bn[i] * std::conj(prev[i])).real();
  }
  return 0.5 * k.gamma * op.cell_volume() * (kinetic / (k.c * k.c) + potential);
}

// Bootstrap the first step with a second-order Taylor expansion.
template <SpatialOperator Op>
EvolutionState start_evolution(const Op& op, std::vector<Complex> phi0, const std::vector<Complex>& dphi0, double dt,
                               const KgConstants& k) {
  if (phi0.size() != op.size() || dphi0.size() != op.size()) {
    throw Error(ErrorKind::Shape, "initial data size does not match the operator");
  }
  detail::check_stability(op, k, dt);
  const auto b0 = detail::shifted_apply(op, phi0, k.kappa(0.0));
  EvolutionState s;
  s.dt = dt;
  s.step = 1;
  s.current.resize(phi0.size());
  for (std::size_t i = 0; i < phi0.size(); ++i) {
    s.current[i] = phi0[i] + dt * dphi0[i] - 0.5 * dt * dt * k.c * k.c * b0[i];
  }
  s.previous = std::move(phi0);
  return s;
}

template <SpatialOperator Op>
EvolutionResult evolve_kg(const Op& op, EvolutionState state, long steps, long stride, const KgConstants& k) {
  detail::check_stability(op, k, state.dt);
  if (stride < 1) throw Error(ErrorKind::Config, "snapshot stride must be >= 1");
  EvolutionResult out;
  const double dt = state.dt;
  const double c2dt2 = k.c * k.c * dt * dt;
  if (state.step == 1) out.snapshots.push_back({0, 0.0, state.previous});
  if (state.step % stride == 0) out.snapshots.push_back({state.step, state.step * dt, state.current});
  out.energy.push_back(kg_discrete_energy(op, state.previous, state.current, dt, k.kappa((state.step - 0.5) * dt), k));

  std::vector<Complex> next(state.current.size());
  for (long s = 0; s < steps; ++s) {
    const double t = state.step * dt;
    const auto b = detail::shifted_apply(op, state.current, k.kappa(t));
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] = 2.0 * state.current[i] - state.previous[i] - c2dt2 * b[i];
      if (!all_finite(next[i])) {
        throw Error(ErrorKind::NonFinite, "leapfrog produced a non-finite value at step " +
                                              std::to_string(state.step + 1));
      }
    }
    std::swap(state.previous, state.current);
    std::swap(state.current, next);
    ++state.step;
    out.energy.push_back(
        kg_discrete_energy(op, state.previous, state.current, dt, k.kappa((state.step - 0.5) * dt), k));
    if (state.step % stride == 0) out.snapshots.push_back({state.step, state.step * dt, state.current});
  }
  out.state = std::move(state);
  return out;
}

// max over interior nodes and interior time levels of
// |(γ/2)(φ_tt/c² − Δφ) + mc²φ − iℏφ_t|, all derivatives central.
template <SpatialOperator Op>
double skg_residual(const Op& op, const std::vector<std::vector<Complex>>& levels, double dt, const KgConstants& k) {
  if (levels.size() < 3) throw Error(ErrorKind::Shape, "residual needs at least three time levels");
  const Complex i_hbar(0.0, k.hbar);
  double worst = 0.0;
  std::vector<Complex> lap(op.size());
  for (std::size_t t = 1; t + 1 < levels.size(); ++t) {
    const auto& prev = levels[t - 1];
    const auto& cur = levels[t];
    const auto& next = levels[t + 1];
    op.apply(std::span<const Complex>(cur), std::span<Complex>(lap));
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const Complex tt = (next[i] - 2.0 * cur[i] + prev[i]) / (dt * dt);
      const Complex first = (next[i] - prev[i]) / (2.0 * dt);
      const Complex r = 0.5 * k.gamma * (tt / (k.c * k.c) + lap[i]) + k.mass * k.c * k.c * cur[i] - i_hbar * first;
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

}  // namespace rqa
