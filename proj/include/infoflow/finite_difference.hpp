#pragma once

// Central-difference derivatives with optional Richardson extrapolation.
//
// Steps are relative: delta_j = rel * max(1, |x_j|). The default rel = 6e-6
// is the cube-root-of-epsilon rule for a plain central difference. When a
// derivative is itself differentiated again (Jacobians of flows that already
// contain first derivatives) a larger step near eps^(1/5) suits the
// extrapolated O(h^4) formula better, so every routine takes the step as an
// argument.

#include <cmath>
#include <type_traits>
#include <utility>

#include "infoflow/numeric.hpp"

namespace infoflow::fd {

inline constexpr double kDefaultRelStep = 6e-6;

/// Step for coordinate value x, adjusted so that x + h is exactly
/// representable and the difference quotient uses the true spacing.
inline double step_for(double x, double rel) noexcept {
  double h = rel * std::max(1.0, std::abs(x));
  volatile double t = x + h;
  h = t - x;
  return h;
}

namespace detail {

template <class F>
auto central(F& f, const Vector& x, Eigen::Index j, double h) {
  Vector xp = x;
  Vector xm = x;
  xp[j] += h;
  xm[j] -= h;
  // Materialise the result: with Eigen return types an `auto` expression
  // would reference the two temporaries below.
  const auto fp = f(xp);
  const auto fm = f(xm);
  using Result = std::remove_cv_t<decltype(fp)>;
  return Result((fp - fm) / (2.0 * h));
}

}  // namespace detail

/// Gradient of a scalar function by plain central differences.
template <class F>
Vector central_gradient(F&& f, const Vector& x, double rel = kDefaultRelStep) {
  Vector g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    g[j] = detail::central(f, x, j, step_for(x[j], rel));
  }
  return g;
}

/// Gradient of a scalar function with one Richardson step: (4 D(h/2) - D(h)) / 3.
template <class F>
Vector richardson_gradient(F&& f, const Vector& x, double rel = kDefaultRelStep) {
  Vector g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = step_for(x[j], rel);
    const double coarse = detail::central(f, x, j, h);
    const double fine = detail::central(f, x, j, 0.5 * h);
    g[j] = (4.0 * fine - coarse) / 3.0;
  }
  return g;
}

/// Jacobian J_ij = d f_i / d x_j of a vector function, Richardson-extrapolated.
template <class F>
Matrix richardson_jacobian(F&& f, const Vector& x, double rel) {
  Matrix jac;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = step_for(x[j], rel);
    const Vector coarse = detail::central(f, x, j, h);
    const Vector fine = detail::central(f, x, j, 0.5 * h);
    if (j == 0) jac.resize(coarse.size(), x.size());
    jac.col(j) = (4.0 * fine - coarse) / 3.0;
  }
  return jac;
}

/// Plain central-difference Jacobian (no extrapolation).
template <class F>
Matrix central_jacobian(F&& f, const Vector& x, double rel) {
  Matrix jac;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const Vector col = detail::central(f, x, j, step_for(x[j], rel));
    if (j == 0) jac.resize(col.size(), x.size());
    jac.col(j) = col;
  }
  return jac;
}

/// Richardson-extrapolated derivative of a scalar function of one variable.
template <class F>
double richardson_derivative(F&& f, double x, double rel) {
  const double h = step_for(x, rel);
  const double coarse = (f(x + h) - f(x - h)) / (2.0 * h);
  const double fine = (f(x + 0.5 * h) - f(x - 0.5 * h)) / h;
  return (4.0 * fine - coarse) / 3.0;
}

}  // namespace infoflow::fd
