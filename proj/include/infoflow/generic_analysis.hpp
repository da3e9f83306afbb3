#pragma once

// Linearisation of the constrained flow and its split M = S + A into a
// symmetric (dissipative) and an antisymmetric (conservative) part.

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "infoflow/dynamics.hpp"
#include "infoflow/errors.hpp"
#include "infoflow/expfam.hpp"
#include "infoflow/finite_difference.hpp"
#include "infoflow/numeric.hpp"
#include "infoflow/parallel.hpp"

namespace infoflow {

enum class JacobianMethod { fd, analytic };

inline std::string_view to_string(JacobianMethod m) noexcept { return m == JacobianMethod::fd ? "fd" : "analytic"; }

inline JacobianMethod parse_jacobian_method(std::string_view s) {
  if (s == "fd") return JacobianMethod::fd;
  if (s == "analytic") return JacobianMethod::analytic;
  throw ConfigError("unknown Jacobian method '" + std::string(s) + "'");
}

/// Relative step for the Richardson Jacobian of the flow. The flow already
/// contains first derivatives, so this sits near eps^(1/5) rather than at the
/// cube-root rule used for first derivatives.
inline constexpr double kJacobianRelStep = 1e-3;

/// Below this ||a|| the multiplier is guarded and the Jacobian is not defined.
inline constexpr double kJacobianFlatNorm = 1e-8;

/// Ratio is reported only when ||S||_F exceeds this.
inline constexpr double kRatioNormFloor = 1e-14;

template <class M>
constexpr bool supports_analytic_jacobian() {
  return HasAnalyticConstraintGradient<M> && HasAnalyticConstraintHessian<M>;
}

/// Closed-form Jacobian M = -G - (grad G)[theta] + nu Hess(C) + a (grad nu)^T with
/// grad nu = (G a + (grad G)[theta] a + Hess(C) G theta - 2 nu Hess(C) a) / ||a||^2.
template <ExponentialFamily M>
Matrix analytic_flow_jacobian(const M& model, const Vector& theta) {
  validate(model, theta);
  const Vector a = constraint_gradient(model, theta);
  const double aa = a.squaredNorm();
  if (std::sqrt(aa) < kJacobianFlatNorm) throw NumericalError("Jacobian undefined at constraint-flat point");
  const Matrix g = model.fisher_information(theta);
  const Matrix dg = model.third_cumulant_contraction(theta, theta);
  const Matrix hc = constraint_hessian(model, theta);
  const Vector g_theta = g * theta;
  const double nu = a.dot(g_theta) / aa;
  const Vector grad_nu = (g * a + dg.transpose() * a + hc * g_theta - 2.0 * nu * (hc * a)) / aa;
  Matrix jac = -g - dg + nu * hc + a * grad_nu.transpose();
  if (!jac.allFinite()) throw NumericalError("analytic Jacobian: non-finite entries");
  return jac;
}

template <ExponentialFamily M>
Matrix flow_jacobian(const M& model, const Vector& theta, JacobianMethod method, double rel_step = kJacobianRelStep) {
  validate(model, theta);
  if (constraint_gradient(model, theta).norm() < kJacobianFlatNorm) {
    throw NumericalError("Jacobian undefined at constraint-flat point");
  }
  if (method == JacobianMethod::analytic) {
    if constexpr (supports_analytic_jacobian<M>()) {
      return analytic_flow_jacobian(model, theta);
    } else {
      throw InvalidStateError("analytic Jacobian needs closed-form constraint gradient and Hessian");
    }
  }
  Matrix jac = fd::richardson_jacobian(
      [&](const Vector& t) { return flow_field(model, t, FlowMode::constrained); }, theta, rel_step);
  if (!jac.allFinite()) throw NumericalError("finite-difference Jacobian: non-finite entries");
  return jac;
}

struct GenericDecomposition {
  Matrix M;
  Matrix S;
  Matrix A;
  double norm_S = 0.0;
  double norm_A = 0.0;
  std::optional<double> ratio;  // empty when ||S|| is below kRatioNormFloor
  double residual_Sa = 0.0;
  double residual_AgradH = 0.0;
  double nu = 0.0;
};

inline GenericDecomposition sa_decompose(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("sa_decompose needs a square matrix");
  GenericDecomposition d;
  d.M = m;
  d.S = symmetric_part(m);
  // S is exactly symmetric and A exactly antisymmetric; S + A reproduces M
  // up to one rounding per entry.
  d.A = antisymmetric_part(m);
  d.norm_S = d.S.norm();
  d.norm_A = d.A.norm();
  if (d.norm_S >= kRatioNormFloor) d.ratio = d.norm_A / d.norm_S;
  return d;
}

struct DegeneracyResiduals {
  double residual_Sa = 0.0;
  double residual_AgradH = 0.0;
};

/// ||S a|| / (||S||_F ||a||) and ||A grad H|| / (||A||_F ||grad H||).
template <ExponentialFamily M>
DegeneracyResiduals degeneracy_residuals(const M& model, const Vector& theta, const Matrix& s, const Matrix& a_part) {
  constexpr double guard = 1e-300;
  const Vector a = constraint_gradient(model, theta);
  const Vector grad_h = entropy_gradient(model, theta);
  DegeneracyResiduals r;
  r.residual_Sa = (s * a).norm() / (s.norm() * a.norm() + guard);
  r.residual_AgradH = (a_part * grad_h).norm() / (a_part.norm() * grad_h.norm() + guard);
  return r;
}

/// Jacobian, split, multiplier and degeneracy residuals at theta.
template <ExponentialFamily M>
GenericDecomposition decompose(const M& model, const Vector& theta, JacobianMethod method,
                               double rel_step = kJacobianRelStep) {
  GenericDecomposition d = sa_decompose(flow_jacobian(model, theta, method, rel_step));
  const auto r = degeneracy_residuals(model, theta, d.S, d.A);
  d.residual_Sa = r.residual_Sa;
  d.residual_AgradH = r.residual_AgradH;
  d.nu = lagrange_multiplier(model, theta);
  return d;
}

using Triplet = std::array<int, 3>;

struct JacobiReport {
  std::map<Triplet, double> violations;  // all d^3 ordered triplets
  double max_abs = 0.0;
  std::optional<double> normalized_max;   // max_abs / ||A||_F^2, empty if A ~ 0
  std::size_t nonzero_triplets = 0;       // |J_ijk| > threshold
  double noise_floor = 0.0;               // max change under step halving
  double threshold = 0.0;
  double norm_A = 0.0;
};

struct JacobiOptions {
  JacobianMethod method = JacobianMethod::fd;
  double jacobian_step = kJacobianRelStep;  // for fd A-fields
  double derivative_step = 1e-3;            // for d A / d theta
  double noise_multiple = 10.0;
  double roundoff_floor = 1e-14;            // lower bound on the noise floor
};

namespace detail {

/// J_ijk = sum_l A_il dA_jk/dtheta_l + A_jl dA_ki/dtheta_l + A_kl dA_ij/dtheta_l
/// for all ordered triplets. dA[l] is the derivative of A along theta_l.
inline std::vector<double> jacobiator(const Matrix& a, const std::vector<Matrix>& da) {
  const auto d = a.rows();
  std::vector<double> out(static_cast<std::size_t>(d * d * d), 0.0);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index k = 0; k < d; ++k) {
        CompensatedSum acc;
        for (Eigen::Index l = 0; l < d; ++l) {
          const Matrix& dl = da[static_cast<std::size_t>(l)];
          acc += a(i, l) * dl(j, k);
          acc += a(j, l) * dl(k, i);
          acc += a(k, l) * dl(i, j);
        }
        out[static_cast<std::size_t>((i * d + j) * d + k)] = acc.value();
      }
  return out;
}

}  // namespace detail

/// Numerical Jacobi identity test for the bracket {f, g} = grad f^T A grad g
/// on coordinate functions. Derivatives of the A-field are Richardson central
/// differences; the reported values use step h/2 and the noise floor is the
/// largest change between steps h and h/2.
template <ExponentialFamily M>
JacobiReport jacobi_violation(const M& model, const Vector& theta, const JacobiOptions& opts = {}) {
  validate(model, theta);
  auto a_field = [&](const Vector& t) -> Matrix {
    return antisymmetric_part(flow_jacobian(model, t, opts.method, opts.jacobian_step));
  };
  const Matrix a = a_field(theta);
  const auto d = theta.size();

  auto derivatives = [&](double rel) {
    std::vector<Matrix> da;
    da.reserve(static_cast<std::size_t>(d));
    for (Eigen::Index l = 0; l < d; ++l) {
      const double h = fd::step_for(theta[l], rel);
      auto central = [&](double step) {
        Vector tp = theta;
        Vector tm = theta;
        tp[l] += step;
        tm[l] -= step;
        return Matrix((a_field(tp) - a_field(tm)) / (2.0 * step));
      };
      da.push_back((4.0 * central(0.5 * h) - central(h)) / 3.0);
    }
    return da;
  };

  const auto coarse = detail::jacobiator(a, derivatives(opts.derivative_step));
  const auto fine = detail::jacobiator(a, derivatives(0.5 * opts.derivative_step));

  JacobiReport r;
  r.norm_A = a.norm();
  for (std::size_t idx = 0; idx < fine.size(); ++idx) {
    r.noise_floor = std::max(r.noise_floor, std::abs(fine[idx] - coarse[idx]));
  }
  r.threshold = opts.noise_multiple * std::max(r.noise_floor, opts.roundoff_floor);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index k = 0; k < d; ++k) {
        const double v = fine[static_cast<std::size_t>((i * d + j) * d + k)];
        r.violations[{static_cast<int>(i), static_cast<int>(j), static_cast<int>(k)}] = v;
        r.max_abs = std::max(r.max_abs, std::abs(v));
        if (std::abs(v) > r.threshold) ++r.nonzero_triplets;
      }
  const double a2 = r.norm_A * r.norm_A;
  if (a2 > 1e-20) r.normalized_max = r.max_abs / a2;
  return r;
}

/// How the inverse temperature enters the parameters of a sweep point.
/// inverse: theta = theta_base / beta; direct: theta = beta * theta_base.
enum class ColdnessScaling { inverse, direct };

inline std::string_view to_string(ColdnessScaling s) noexcept {
  return s == ColdnessScaling::inverse ? "inverse" : "direct";
}

inline ColdnessScaling parse_coldness_scaling(std::string_view s) {
  if (s == "inverse") return ColdnessScaling::inverse;
  if (s == "direct") return ColdnessScaling::direct;
  throw ConfigError("unknown coldness scaling '" + std::string(s) + "'");
}

inline Vector scale_by_coldness(const Vector& base, double beta, ColdnessScaling scaling) {
  return scaling == ColdnessScaling::inverse ? Vector(base / beta) : Vector(beta * base);
}

struct SweepPoint {
  double beta = 0.0;
  std::optional<GenericDecomposition> decomposition;
  std::string error;  // set when the point failed
};

struct SweepResult {
  std::vector<SweepPoint> points;  // grid order
  std::optional<std::size_t> argmax_ratio;
};

/// n log-spaced values from 10^lo to 10^hi inclusive.
inline std::vector<double> log_grid(double log10_lo, double log10_hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    out[i] = std::pow(10.0, log10_lo + t * (log10_hi - log10_lo));
  }
  return out;
}

template <ExponentialFamily M>
SweepResult coldness_sweep(const M& model, const Vector& base_theta, const std::vector<double>& betas,
                           ColdnessScaling scaling, JacobianMethod method = JacobianMethod::fd,
                           std::size_t threads = 1) {
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] > 0.0)) throw InvalidStateError("coldness_sweep: betas must be positive");
    if (i > 0 && !(betas[i] > betas[i - 1])) throw InvalidStateError("coldness_sweep: betas must be sorted");
  }
  SweepResult result;
  result.points = parallel_map(betas.size(), threads, [&](std::size_t i) {
    SweepPoint p;
    p.beta = betas[i];
    try {
      p.decomposition = decompose(model, scale_by_coldness(base_theta, betas[i], scaling), method);
    } catch (const Error& e) {
      p.error = e.what();
    }
    return p;
  });
  double best = -1.0;
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    const auto& dec = result.points[i].decomposition;
    if (dec && dec->ratio && *dec->ratio > best) {
      best = *dec->ratio;
      result.argmax_ratio = i;
    }
  }
  return result;
}

}  // namespace infoflow
