#pragma once

// Curie-Weiss ferromagnet of n +/-1 spins,
//   E(x) = -(J / 2n) (sum_i x_i)^2 - h sum_i x_i,
// evaluated as a sum over the attainable total magnetizations
// M in {-n, -n+2, ..., n}, each weighted by Omega(M) = C(n, (n+M)/2).
//
// Two views are offered. CurieWeissModel holds (n, J, h, beta) and provides
// the thermodynamic observables. CurieWeissFamily is the same distribution as
// a two-parameter exponential family with T(x) = (M, M^2 / 2n) and
// theta = (beta h, beta J), so that the generic flow machinery applies.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "infoflow/errors.hpp"
#include "infoflow/expfam.hpp"
#include "infoflow/finite_difference.hpp"
#include "infoflow/numeric.hpp"

namespace infoflow {

namespace detail {

/// log C(n, k) for k = 0..n by cumulative products, mirrored so that the
/// table is exactly symmetric. (std::lgamma writes the global signgam and is
/// not safe to call from concurrent sweeps.)
inline std::vector<double> log_binomial_row(std::size_t n) {
  std::vector<double> row(n + 1, 0.0);
  CompensatedSum acc;
  for (std::size_t k = 1; 2 * k <= n; ++k) {
    acc += std::log(static_cast<double>(n - k + 1)) - std::log(static_cast<double>(k));
    row[k] = acc.value();
  }
  for (std::size_t k = 0; 2 * k < n; ++k) row[n - k] = row[k];
  return row;
}

/// Probabilities of the magnetization levels M_k = 2k - n, k = 0..n, for
/// log-weight log Omega(M) + field * M + coupling * M^2 / (2n).
struct MagnetizationDistribution {
  std::vector<double> magnetization;
  std::vector<double> prob;
  double log_partition = 0.0;
};

inline MagnetizationDistribution magnetization_distribution(std::size_t n, double field, double coupling) {
  MagnetizationDistribution d;
  d.magnetization.resize(n + 1);
  std::vector<double> logw(n + 1);
  const std::vector<double> log_omega = log_binomial_row(n);
  const double two_n = 2.0 * static_cast<double>(n);
  for (std::size_t k = 0; k <= n; ++k) {
    const double m = 2.0 * static_cast<double>(k) - static_cast<double>(n);
    d.magnetization[k] = m;
    logw[k] = log_omega[k] + field * m + coupling * m * m / two_n;
  }
  d.log_partition = log_sum_exp(logw);
  d.prob.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) d.prob[k] = std::exp(logw[k] - d.log_partition);
  return d;
}

}  // namespace detail

class CurieWeissModel {
public:
  CurieWeissModel(std::size_t n, double coupling, double field, double beta)
      : n_(n), coupling_(coupling), field_(field), beta_(beta) {
    if (n < 1) throw InvalidStateError("Curie-Weiss model needs n >= 1");
    if (!std::isfinite(coupling) || !std::isfinite(field) || !std::isfinite(beta)) {
      throw InvalidStateError("Curie-Weiss parameters must be finite");
    }
    if (beta <= 0.0) throw InvalidStateError("Curie-Weiss beta must be positive");
    if (coupling < 0.0) throw InvalidStateError("Curie-Weiss coupling must be non-negative");
  }

  [[nodiscard]] std::size_t n() const noexcept { return n_; }
  [[nodiscard]] double coupling() const noexcept { return coupling_; }
  [[nodiscard]] double field() const noexcept { return field_; }
  [[nodiscard]] double beta() const noexcept { return beta_; }
  /// Critical coldness 1/J (infinite for J = 0).
  [[nodiscard]] double critical_beta() const noexcept {
    return coupling_ > 0.0 ? 1.0 / coupling_ : std::numeric_limits<double>::infinity();
  }

  [[nodiscard]] CurieWeissModel with_field(double h) const { return {n_, coupling_, h, beta_}; }
  [[nodiscard]] CurieWeissModel with_beta(double b) const { return {n_, coupling_, field_, b}; }

  /// Energy of a configuration with total magnetization m.
  [[nodiscard]] double energy(double m) const noexcept {
    return -coupling_ * m * m / (2.0 * static_cast<double>(n_)) - field_ * m;
  }

  [[nodiscard]] detail::MagnetizationDistribution distribution() const {
    return detail::magnetization_distribution(n_, beta_ * field_, beta_ * coupling_);
  }

private:
  std::size_t n_;
  double coupling_;
  double field_;
  double beta_;
};

/// psi = log sum_M Omega(M) exp(-beta E(M)), summed in log domain.
inline double cw_log_partition(const CurieWeissModel& model) { return model.distribution().log_partition; }

struct CurieWeissObservables {
  double m_intensive = 0.0;    // <sum_i x_i> / n
  double mean_energy = 0.0;    // <E>
  double joint_entropy = 0.0;  // H = psi + beta <E>
  double sum_marginals = 0.0;  // n * h_b((1 + m) / 2)
  double multi_information = 0.0;
};

/// Observables from exact moments of the magnetization distribution. These
/// coincide with (1/beta n) dpsi/dh and -dpsi/dbeta.
inline CurieWeissObservables cw_observables(const CurieWeissModel& model) {
  const auto d = model.distribution();
  CompensatedSum mag;
  CompensatedSum energy;
  for (std::size_t k = 0; k < d.prob.size(); ++k) {
    mag += d.prob[k] * d.magnetization[k];
    energy += d.prob[k] * model.energy(d.magnetization[k]);
  }
  const double n = static_cast<double>(model.n());
  CurieWeissObservables o;
  o.m_intensive = mag.value() / n;
  o.mean_energy = energy.value();
  CompensatedSum h;
  h += d.log_partition;
  h += model.beta() * o.mean_energy;
  o.joint_entropy = h.value();
  o.sum_marginals = n * binary_entropy(0.5 * (1.0 + o.m_intensive));
  CompensatedSum info;
  info += o.sum_marginals;
  info -= d.log_partition;
  info -= model.beta() * o.mean_energy;
  o.multi_information = info.value();
  require_finite(o.multi_information, "cw_observables");
  require_finite(o.m_intensive, "cw_observables");
  return o;
}

struct OrderGradients {
  double dI_dm = 0.0;
  double dH_dm = 0.0;
  double dSum_dm = 0.0;
};

/// Gradients along the order parameter at fixed beta, dQ/dm = (dQ/dh)/(dm/dh),
/// with central differences in h (step 1e-6 max(1, |h|)).
inline OrderGradients cw_order_gradients(const CurieWeissModel& model, double rel_step = 1e-6) {
  const double h0 = model.field();
  const double dh = fd::step_for(h0, rel_step);
  const auto up = cw_observables(model.with_field(h0 + dh));
  const auto down = cw_observables(model.with_field(h0 - dh));
  const double dm = (up.m_intensive - down.m_intensive) / (2.0 * dh);
  if (!std::isfinite(dm) || std::abs(dm) < 1e-14) {
    throw NumericalError("cw_order_gradients: magnetization does not respond to the field (degenerate direction)");
  }
  OrderGradients g;
  g.dI_dm = (up.multi_information - down.multi_information) / (2.0 * dh) / dm;
  g.dH_dm = (up.joint_entropy - down.joint_entropy) / (2.0 * dh) / dm;
  g.dSum_dm = (up.sum_marginals - down.sum_marginals) / (2.0 * dh) / dm;
  return g;
}

/// Scalar mean-field magnetization: fixed point of m = tanh(beta (J m + h)),
/// iterated from m = sign(h) (or 1 for h = 0).
inline double mean_field_magnetization(double coupling, double field, double beta, int iterations = 10000) {
  double m = field < 0.0 ? -1.0 : 1.0;
  for (int i = 0; i < iterations; ++i) {
    const double next = std::tanh(beta * (coupling * m + field));
    if (std::abs(next - m) < 1e-15) return next;
    m = next;
  }
  return m;
}

/// The same spin system as an exponential family over theta = (beta h, beta J)
/// with sufficient statistics T(x) = (M, M^2 / 2n); every spin has the same
/// marginal so marginal_entropies returns n equal entries.
class CurieWeissFamily {
public:
  explicit CurieWeissFamily(std::size_t n) : n_(n) {
    if (n < 1) throw InvalidStateError("Curie-Weiss family needs n >= 1");
  }

  [[nodiscard]] std::size_t dimension() const noexcept { return 2; }
  [[nodiscard]] std::size_t variable_count() const noexcept { return n_; }
  void check_domain(const Vector&) const noexcept {}

  [[nodiscard]] static Vector natural_params(const CurieWeissModel& m) {
    Vector theta(2);
    theta << m.beta() * m.field(), m.beta() * m.coupling();
    return theta;
  }

  [[nodiscard]] double log_partition(const Vector& theta) const {
    return detail::magnetization_distribution(n_, theta[0], theta[1]).log_partition;
  }

  [[nodiscard]] Vector mean_parameters(const Vector& theta) const {
    const auto d = detail::magnetization_distribution(n_, theta[0], theta[1]);
    Vector mu = Vector::Zero(2);
    for (std::size_t k = 0; k < d.prob.size(); ++k) mu += d.prob[k] * stats(d.magnetization[k]);
    return mu;
  }

  [[nodiscard]] Matrix fisher_information(const Vector& theta) const {
    const auto d = detail::magnetization_distribution(n_, theta[0], theta[1]);
    const Vector mu = mean(d);
    Matrix g = Matrix::Zero(2, 2);
    for (std::size_t k = 0; k < d.prob.size(); ++k) {
      const Vector t = stats(d.magnetization[k]) - mu;
      g += d.prob[k] * t * t.transpose();
    }
    return symmetric_part(g);
  }

  [[nodiscard]] Matrix third_cumulant_contraction(const Vector& theta, const Vector& v) const {
    const auto d = detail::magnetization_distribution(n_, theta[0], theta[1]);
    const Vector mu = mean(d);
    Matrix out = Matrix::Zero(2, 2);
    for (std::size_t k = 0; k < d.prob.size(); ++k) {
      const Vector t = stats(d.magnetization[k]) - mu;
      out += (d.prob[k] * t.dot(v)) * t * t.transpose();
    }
    return symmetric_part(out);
  }

  [[nodiscard]] Vector marginal_entropies(const Vector& theta) const {
    const Vector mu = mean_parameters(theta);
    const double m = mu[0] / static_cast<double>(n_);
    return Vector::Constant(static_cast<Eigen::Index>(n_), binary_entropy(0.5 * (1.0 + m)));
  }

  /// d(n h_b)/dtheta = -n atanh(m) dm/dtheta, with dm/dtheta = Cov[M, T] / n.
  [[nodiscard]] Vector constraint_gradient(const Vector& theta) const {
    const Matrix g = fisher_information(theta);
    const double m = mean_parameters(theta)[0] / static_cast<double>(n_);
    if (std::abs(m) >= 1.0) throw NumericalError("constraint_gradient: saturated magnetization");
    return -std::atanh(m) * g.row(0).transpose();
  }

private:
  [[nodiscard]] Vector stats(double magnetization) const {
    Vector t(2);
    t << magnetization, magnetization * magnetization / (2.0 * static_cast<double>(n_));
    return t;
  }

  [[nodiscard]] Vector mean(const detail::MagnetizationDistribution& d) const {
    Vector mu = Vector::Zero(2);
    for (std::size_t k = 0; k < d.prob.size(); ++k) mu += d.prob[k] * stats(d.magnetization[k]);
    return mu;
  }

  std::size_t n_;
};

static_assert(ExponentialFamily<CurieWeissFamily>);

}  // namespace infoflow
