#pragma once

// Shared vocabulary for the toolkit: error type, small fixed-capacity tensors
// and the finite-difference stencils every module differentiates with.

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace rqa {

inline constexpr int kMaxDim = 4;

using Complex = std::complex<double>;
using Vec4 = std::array<double, kMaxDim>;
using Mat4 = std::array<Vec4, kMaxDim>;
// gamma[i][j][k] = Γ^i_jk
using Christoffel = std::array<Mat4, kMaxDim>;
// riemann[l][i][j][k] = R^l_ijk
using Riemann = std::array<Christoffel, kMaxDim>;
// dgamma[a][i][j][k] = ∂Γ^i_jk / ∂u_a
using ChristoffelGradient = std::array<Christoffel, kMaxDim>;
using ComplexVec4 = std::array<Complex, kMaxDim>;
using ComplexRiemann = std::array<std::array<std::array<std::array<Complex, kMaxDim>, kMaxDim>, kMaxDim>, kMaxDim>;

enum class ErrorKind {
  Domain,
  DegenerateChart,
  DegenerateMetric,
  Signature,
  Pullback,
  Superluminal,
  NoRealRoot,
  Convergence,
  Stability,
  NonFinite,
  Shape,
  Config,
  Io,
  Consistency,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::DegenerateChart: return "degenerate-chart";
    case ErrorKind::DegenerateMetric: return "degenerate-metric";
    case ErrorKind::Signature: return "signature";
    case ErrorKind::Pullback: return "pullback";
    case ErrorKind::Superluminal: return "superluminal";
    case ErrorKind::NoRealRoot: return "no-real-root";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::Stability: return "stability";
    case ErrorKind::NonFinite: return "non-finite";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
    case ErrorKind::Consistency: return "consistency";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Numerical failures map to exit code 1, input problems to 2.
  bool is_numerical() const noexcept {
    return kind_ != ErrorKind::Config && kind_ != ErrorKind::Io && kind_ != ErrorKind::Shape;
  }

 private:
  ErrorKind kind_;
};

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const { return x >= lo && x <= hi; }
};

inline std::string format_point(const Vec4& u, int dim) {
  std::string out = "(";
  for (int i = 0; i < dim; ++i) {
    if (i) out += ", ";
    out += std::to_string(u[i]);
  }
  return out + ")";
}

// acc += w * v, element-wise through nested std::array.
template <class T>
void add_scaled(T& acc, double w, const T& v) {
  if constexpr (std::is_arithmetic_v<T> || std::is_same_v<T, Complex>) {
    acc += w * v;
  } else {
    for (std::size_t i = 0; i < acc.size(); ++i) add_scaled(acc[i], w, v[i]);
  }
}

// First-derivative stencil for a point x inside `range`: central when both
// neighbours fit, otherwise the second-order one-sided three-point rule.
struct Stencil {
  int size = 0;
  std::array<double, 3> offset{};
  std::array<double, 3> weight{};
};

inline Stencil first_derivative_stencil(double x, double h, const Interval& range) {
  if (x - h >= range.lo && x + h <= range.hi) {
    return {2, {-h, h, 0.0}, {-0.5 / h, 0.5 / h, 0.0}};
  }
  if (x + 2.0 * h <= range.hi) {
    return {3, {0.0, h, 2.0 * h}, {-1.5 / h, 2.0 / h, -0.5 / h}};
  }
  if (x - 2.0 * h >= range.lo) {
    return {3, {0.0, -h, -2.0 * h}, {1.5 / h, -2.0 / h, 0.5 / h}};
  }
  throw Error(ErrorKind::Domain, "interval [" + std::to_string(range.lo) + ", " +
                                     std::to_string(range.hi) + "] too narrow for step " +
                                     std::to_string(h));
}

// ∂f/∂u_axis at u. f maps Vec4 to any value type add_scaled understands.
template <class F>
auto partial(F&& f, const Vec4& u, int axis, double h, const Interval& range = {}) {
  using T = std::decay_t<decltype(f(u))>;
  const Stencil s = first_derivative_stencil(u[axis], h, range);
  T acc{};
  for (int n = 0; n < s.size; ++n) {
    Vec4 p = u;
    p[axis] += s.offset[n];
    add_scaled(acc, s.weight[n], f(p));
  }
  return acc;
}

inline bool all_finite(double x) { return std::isfinite(x); }
inline bool all_finite(const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace rqa
