#pragma once

// Model-agnostic exponential-family quantities.
//
// A model provides the cumulant structure of p(x) = exp(theta^T T(x) - psi(theta))
// and the per-variable marginal entropies; everything else (joint entropy,
// entropy gradient, constraint value and gradient, multi-information) is
// assembled here. Every function validates theta before calling the model.

#include <concepts>
#include <cstddef>
#include <string>

#include "infoflow/errors.hpp"
#include "infoflow/finite_difference.hpp"
#include "infoflow/numeric.hpp"

namespace infoflow {

template <class M>
concept ExponentialFamily = requires(const M& m, const Vector& theta, const Vector& v) {
  { m.dimension() } -> std::convertible_to<std::size_t>;
  { m.variable_count() } -> std::convertible_to<std::size_t>;
  // Throws InvalidStateError for parameters outside the natural domain.
  { m.check_domain(theta) };
  { m.log_partition(theta) } -> std::convertible_to<double>;
  { m.mean_parameters(theta) } -> std::convertible_to<Vector>;
  { m.fisher_information(theta) } -> std::convertible_to<Matrix>;
  { m.third_cumulant_contraction(theta, v) } -> std::convertible_to<Matrix>;
  { m.marginal_entropies(theta) } -> std::convertible_to<Vector>;
};

/// Models that know the gradient of the marginal-entropy sum in closed form.
template <class M>
concept HasAnalyticConstraintGradient = requires(const M& m, const Vector& theta) {
  { m.constraint_gradient(theta) } -> std::convertible_to<Vector>;
};

/// Models that know the Hessian of the marginal-entropy sum in closed form.
template <class M>
concept HasAnalyticConstraintHessian = requires(const M& m, const Vector& theta) {
  { m.constraint_hessian(theta) } -> std::convertible_to<Matrix>;
};

class NaturalParams {
public:
  NaturalParams() = default;
  explicit NaturalParams(Vector values) : values_(std::move(values)) {
    if (!values_.allFinite()) throw InvalidStateError("natural parameters must be finite");
  }

  [[nodiscard]] const Vector& values() const noexcept { return values_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return values_.size(); }
  double operator[](Eigen::Index i) const { return values_[i]; }

private:
  Vector values_;
};

struct EntropyReport {
  double joint = 0.0;
  Vector marginals;
  double multi_information = 0.0;
  double constraint_value = 0.0;
};

inline constexpr double kMultiInfoClamp = 1e-10;

template <ExponentialFamily M>
void validate(const M& model, const Vector& theta) {
  if (static_cast<std::size_t>(theta.size()) != model.dimension()) {
    throw DimensionError("expected " + std::to_string(model.dimension()) + " natural parameters, got " +
                         std::to_string(theta.size()));
  }
  if (!theta.allFinite()) throw InvalidStateError("natural parameters must be finite");
  model.check_domain(theta);
}

template <ExponentialFamily M>
double log_partition(const M& model, const Vector& theta) {
  validate(model, theta);
  return model.log_partition(theta);
}

template <ExponentialFamily M>
Vector mean_parameters(const M& model, const Vector& theta) {
  validate(model, theta);
  return model.mean_parameters(theta);
}

template <ExponentialFamily M>
Matrix fisher_information(const M& model, const Vector& theta) {
  validate(model, theta);
  return model.fisher_information(theta);
}

/// Matrix with entries sum_k (dG_ik / dtheta_j) v_k, i.e. the third cumulant
/// tensor contracted once with v.
template <ExponentialFamily M>
Matrix third_cumulant_contraction(const M& model, const Vector& theta, const Vector& v) {
  validate(model, theta);
  if (v.size() != theta.size()) throw DimensionError("contraction vector has wrong dimension");
  return model.third_cumulant_contraction(theta, v);
}

/// H = psi - theta^T mu, in nats.
template <ExponentialFamily M>
double joint_entropy(const M& model, const Vector& theta) {
  validate(model, theta);
  const Vector mu = model.mean_parameters(theta);
  CompensatedSum acc;
  acc += model.log_partition(theta);
  for (Eigen::Index i = 0; i < theta.size(); ++i) acc -= theta[i] * mu[i];
  return acc.value();
}

/// grad H = -G theta.
template <ExponentialFamily M>
Vector entropy_gradient(const M& model, const Vector& theta) {
  return -(fisher_information(model, theta) * theta);
}

template <ExponentialFamily M>
Vector marginal_entropies(const M& model, const Vector& theta) {
  validate(model, theta);
  return model.marginal_entropies(theta);
}

/// Sum of marginal entropies, the conserved quantity C.
template <ExponentialFamily M>
double constraint_value(const M& model, const Vector& theta) {
  return compensated_sum(marginal_entropies(model, theta));
}

/// Richardson-extrapolated finite-difference gradient of the constraint value,
/// irrespective of any analytic override the model offers.
template <ExponentialFamily M>
Vector constraint_gradient_fd(const M& model, const Vector& theta, double rel = fd::kDefaultRelStep) {
  validate(model, theta);
  Vector a = fd::richardson_gradient(
      [&](const Vector& t) { return compensated_sum(model.marginal_entropies(t)); }, theta, rel);
  require_finite(a, "constraint_gradient");
  return a;
}

/// a(theta) = grad sum_i h_i. Uses the model's closed form when available.
template <ExponentialFamily M>
Vector constraint_gradient(const M& model, const Vector& theta) {
  if constexpr (HasAnalyticConstraintGradient<M>) {
    validate(model, theta);
    Vector a = model.constraint_gradient(theta);
    require_finite(a, "constraint_gradient");
    return a;
  } else {
    return constraint_gradient_fd(model, theta);
  }
}

/// Hessian of the constraint value: closed form when the model has one,
/// otherwise a Richardson Jacobian of constraint_gradient.
template <ExponentialFamily M>
Matrix constraint_hessian(const M& model, const Vector& theta, double rel = 1e-3) {
  if constexpr (HasAnalyticConstraintHessian<M>) {
    validate(model, theta);
    return model.constraint_hessian(theta);
  } else {
    Matrix h = fd::richardson_jacobian([&](const Vector& t) { return constraint_gradient(model, t); }, theta, rel);
    return symmetric_part(h);
  }
}

/// I = sum_i h_i - H. Tiny negatives from cancellation are clamped to zero;
/// anything below -kMultiInfoClamp is returned as is so callers can see it.
template <ExponentialFamily M>
double multi_information(const M& model, const Vector& theta) {
  const Vector h = marginal_entropies(model, theta);
  CompensatedSum acc;
  for (double hi : h) acc += hi;
  acc -= joint_entropy(model, theta);
  const double value = acc.value();
  if (value < 0.0 && value >= -kMultiInfoClamp) return 0.0;
  return value;
}

template <ExponentialFamily M>
EntropyReport entropy_report(const M& model, const Vector& theta) {
  EntropyReport r;
  r.marginals = marginal_entropies(model, theta);
  r.joint = joint_entropy(model, theta);
  r.constraint_value = compensated_sum(r.marginals);
  r.multi_information = r.constraint_value - r.joint;
  if (r.multi_information < 0.0 && r.multi_information >= -kMultiInfoClamp) r.multi_information = 0.0;
  return r;
}

}  // namespace infoflow
