#pragma once

// Zero-mean bivariate Gaussian over (x, p) with precision
//   K = [[theta_xx, theta_xp], [theta_xp, theta_pp]],
// written as an exponential family with T = (-x^2/2, -p^2/2, -x p).
// Every quantity is a function of D = det K and its derivatives, and the
// third derivative of D vanishes, so all closed forms below are exact.

#include <cmath>
#include <numbers>

#include "infoflow/errors.hpp"
#include "infoflow/expfam.hpp"
#include "infoflow/numeric.hpp"

namespace infoflow {

class GaussianOscillatorModel {
public:
  [[nodiscard]] std::size_t dimension() const noexcept { return 3; }
  [[nodiscard]] std::size_t variable_count() const noexcept { return 2; }

  void check_domain(const Vector& theta) const {
    const double xx = theta[0];
    const double pp = theta[1];
    const double xp = theta[2];
    if (!(xx > 0.0 && pp > 0.0 && xx * pp - xp * xp > 0.0)) {
      throw InvalidStateError("precision matrix is not positive definite");
    }
  }

  [[nodiscard]] static double determinant(const Vector& theta) noexcept {
    return theta[0] * theta[1] - theta[2] * theta[2];
  }

  /// grad D = (theta_pp, theta_xx, -2 theta_xp).
  [[nodiscard]] static Vector determinant_gradient(const Vector& theta) {
    Vector g(3);
    g << theta[1], theta[0], -2.0 * theta[2];
    return g;
  }

  /// Constant Hessian of D.
  [[nodiscard]] static Matrix determinant_hessian() {
    Matrix h = Matrix::Zero(3, 3);
    h(0, 1) = h(1, 0) = 1.0;
    h(2, 2) = -2.0;
    return h;
  }

  /// psi = log 2 pi - 1/2 log D.
  [[nodiscard]] double log_partition(const Vector& theta) const {
    return std::log(2.0 * std::numbers::pi) - 0.5 * std::log(determinant(theta));
  }

  [[nodiscard]] Vector mean_parameters(const Vector& theta) const {
    return -0.5 * determinant_gradient(theta) / determinant(theta);
  }

  [[nodiscard]] Matrix fisher_information(const Vector& theta) const {
    const double d = determinant(theta);
    const Vector g = determinant_gradient(theta);
    return -0.5 * (determinant_hessian() / d - g * g.transpose() / (d * d));
  }

  /// sum_k psi_ijk v_k with
  /// psi_ijk = 1/2 [(H_ij g_k + H_ik g_j + H_jk g_i) / D^2 - 2 g_i g_j g_k / D^3].
  [[nodiscard]] Matrix third_cumulant_contraction(const Vector& theta, const Vector& v) const {
    const double d = determinant(theta);
    const Vector g = determinant_gradient(theta);
    const Matrix h = determinant_hessian();
    const double gv = g.dot(v);
    const Vector hv = h * v;
    const Matrix sym = h * gv + hv * g.transpose() + g * hv.transpose();
    return 0.5 * (sym / (d * d) - 2.0 * gv * g * g.transpose() / (d * d * d));
  }

  /// Sigma = K^{-1} from the 2x2 inverse.
  [[nodiscard]] static Matrix covariance(const Vector& theta) {
    const double d = determinant(theta);
    Matrix s(2, 2);
    s << theta[1] / d, -theta[2] / d, -theta[2] / d, theta[0] / d;
    return s;
  }

  /// h_i = 1/2 log(2 pi e sigma_i^2).
  [[nodiscard]] Vector marginal_entropies(const Vector& theta) const {
    const Matrix s = covariance(theta);
    const double c = std::log(2.0 * std::numbers::pi * std::numbers::e);
    Vector h(2);
    h << 0.5 * (c + std::log(s(0, 0))), 0.5 * (c + std::log(s(1, 1)));
    return h;
  }

  /// h_x + h_p = log(2 pi e) + 1/2 log theta_pp + 1/2 log theta_xx - log D.
  [[nodiscard]] Vector constraint_gradient(const Vector& theta) const {
    const double d = determinant(theta);
    Vector a(3);
    a << 0.5 / theta[0], 0.5 / theta[1], 0.0;
    return a - determinant_gradient(theta) / d;
  }

  [[nodiscard]] Matrix constraint_hessian(const Vector& theta) const {
    const double d = determinant(theta);
    const Vector g = determinant_gradient(theta);
    Matrix h = Matrix::Zero(3, 3);
    h(0, 0) = -0.5 / (theta[0] * theta[0]);
    h(1, 1) = -0.5 / (theta[1] * theta[1]);
    return h - (determinant_hessian() / d - g * g.transpose() / (d * d));
  }
};

static_assert(ExponentialFamily<GaussianOscillatorModel>);
static_assert(HasAnalyticConstraintGradient<GaussianOscillatorModel>);
static_assert(HasAnalyticConstraintHessian<GaussianOscillatorModel>);

struct GaussianClosedForms {
  double psi = 0.0;
  Matrix fisher;
  double joint_entropy = 0.0;
  double h_x = 0.0;
  double h_p = 0.0;
  Vector constraint_gradient;
};

inline GaussianClosedForms gauss_closed_forms(const GaussianOscillatorModel& model, const Vector& theta) {
  validate(model, theta);
  GaussianClosedForms out;
  out.psi = model.log_partition(theta);
  out.fisher = model.fisher_information(theta);
  const double c = std::log(2.0 * std::numbers::pi * std::numbers::e);
  // H = 1/2 log((2 pi e)^2 det Sigma) and det Sigma = 1 / D.
  out.joint_entropy = c - 0.5 * std::log(GaussianOscillatorModel::determinant(theta));
  const Vector h = model.marginal_entropies(theta);
  out.h_x = h[0];
  out.h_p = h[1];
  out.constraint_gradient = model.constraint_gradient(theta);
  return out;
}

}  // namespace infoflow
