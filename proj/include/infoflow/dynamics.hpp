#pragma once

// Constrained maximum-entropy-production flow
//   dtheta/dtau = -G theta + nu a,   nu = a^T G theta / ||a||^2,
// which keeps sum_i h_i fixed, and its unconstrained counterpart -G theta.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "infoflow/errors.hpp"
#include "infoflow/expfam.hpp"
#include "infoflow/numeric.hpp"

namespace infoflow {

enum class FlowMode { constrained, unconstrained };

inline std::string_view to_string(FlowMode m) noexcept {
  return m == FlowMode::constrained ? "constrained" : "unconstrained";
}

/// Below this constraint-gradient norm the constraint is locally flat and the
/// constraint force is dropped (nu = 0).
inline constexpr double kFlatConstraintNorm = 1e-10;

template <ExponentialFamily M>
double lagrange_multiplier(const M& model, const Vector& theta) {
  const Vector a = constraint_gradient(model, theta);
  const double aa = a.squaredNorm();
  if (std::sqrt(aa) < kFlatConstraintNorm) return 0.0;
  const Matrix g = fisher_information(model, theta);
  const double nu = a.dot(g * theta) / aa;
  require_finite(nu, "lagrange_multiplier");
  return nu;
}

/// Flow vector and the multiplier that produced it.
struct FlowEvaluation {
  Vector velocity;
  double nu = 0.0;
};

template <ExponentialFamily M>
FlowEvaluation evaluate_flow(const M& model, const Vector& theta, FlowMode mode) {
  const Matrix g = fisher_information(model, theta);
  FlowEvaluation out;
  out.velocity = -(g * theta);
  if (mode == FlowMode::constrained) {
    const Vector a = constraint_gradient(model, theta);
    const double aa = a.squaredNorm();
    if (std::sqrt(aa) >= kFlatConstraintNorm) {
      out.nu = a.dot(g * theta) / aa;
      out.velocity += out.nu * a;
    }
  }
  require_finite(out.velocity, "flow_field");
  return out;
}

template <ExponentialFamily M>
Vector flow_field(const M& model, const Vector& theta, FlowMode mode) {
  return evaluate_flow(model, theta, mode).velocity;
}

/// -Pi G theta with the Euclidean tangent projector Pi = I - a a^T / ||a||^2.
/// Algebraically identical to the constrained flow_field.
template <ExponentialFamily M>
Vector projected_flow(const M& model, const Vector& theta) {
  const Matrix g = fisher_information(model, theta);
  const Vector a = constraint_gradient(model, theta);
  const auto d = theta.size();
  Matrix projector = Matrix::Identity(d, d);
  if (a.norm() >= kFlatConstraintNorm) projector -= a * a.transpose() / a.squaredNorm();
  return -(projector * (g * theta));
}

struct ProjectionOptions {
  double tolerance = 1e-10;
  int max_iterations = 20;
};

/// Moves theta along a/||a|| until sum_i h_i = target, by a safeguarded
/// Newton iteration on the step length (backtracking whenever the residual
/// fails to shrink).
template <ExponentialFamily M>
NaturalParams project_to_constraint(const M& model, const Vector& theta, double target,
                                    const ProjectionOptions& opts = {}) {
  double residual = constraint_value(model, theta) - target;
  if (!std::isfinite(residual)) throw NumericalError("project_to_constraint: non-finite residual");
  if (std::abs(residual) <= opts.tolerance) return NaturalParams(theta);

  const Vector a0 = constraint_gradient(model, theta);
  const double norm = a0.norm();
  if (norm < kFlatConstraintNorm) throw NumericalError("project_to_constraint: no repair direction (||a|| ~ 0)");
  const Vector dir = a0 / norm;

  double s = 0.0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const Vector current = theta + s * dir;
    const double slope = constraint_gradient(model, current).dot(dir);
    if (!std::isfinite(slope) || std::abs(slope) < 1e-300) {
      throw NumericalError("project_to_constraint: vanishing slope along repair direction");
    }
    double step = -residual / slope;
    bool improved = false;
    for (int halving = 0; halving < 30; ++halving) {
      const Vector trial = theta + (s + step) * dir;
      double r = 0.0;
      try {
        r = constraint_value(model, trial) - target;
      } catch (const InvalidStateError&) {
        step *= 0.5;
        continue;
      }
      if (std::isfinite(r) && std::abs(r) < std::abs(residual)) {
        s += step;
        residual = r;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
    if (std::abs(residual) <= opts.tolerance) return NaturalParams(theta + s * dir);
  }
  throw NumericalError("project_to_constraint: Newton iteration did not reach the tolerance");
}

struct TrajectoryRecord {
  double tau = 0.0;
  NaturalParams theta;
  double joint_entropy = 0.0;
  double sum_marginals = 0.0;
  double multi_information = 0.0;
  double nu = 0.0;
};

enum class Termination { converged, max_steps, aborted };

inline std::string_view to_string(Termination t) noexcept {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_steps: return "max_steps";
    case Termination::aborted: return "aborted";
  }
  return "unknown";
}

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  FlowMode mode = FlowMode::constrained;
  Termination termination = Termination::max_steps;
  double target_constraint = 0.0;  // C fixed at the initial state
  std::size_t steps = 0;
  std::size_t step_halvings = 0;
  std::size_t projections = 0;
  double max_drift = 0.0;  // max |sum h - C| over accepted steps
  std::string diagnostic;
};

struct IntegratorOptions {
  double dt = 1e-2;
  std::size_t max_steps = 100000;
  FlowMode mode = FlowMode::constrained;
  std::size_t record_every = 1;
  double convergence_tolerance = 1e-8;  // stop when ||flow|| falls below
  double drift_trigger = 1e-9;          // project when |sum h - C| exceeds
  double drift_accept = 1e-8;           // halve dt when the repaired drift exceeds
  int max_halvings = 10;
};

template <ExponentialFamily M>
TrajectoryRecord make_record(const M& model, double tau, const Vector& theta, double nu) {
  const EntropyReport e = entropy_report(model, theta);
  return TrajectoryRecord{tau, NaturalParams(theta), e.joint, e.constraint_value, e.multi_information, nu};
}

namespace detail {

template <ExponentialFamily M>
Vector rk4_step(const M& model, const Vector& theta, double h, FlowMode mode) {
  const Vector k1 = flow_field(model, theta, mode);
  const Vector k2 = flow_field(model, theta + 0.5 * h * k1, mode);
  const Vector k3 = flow_field(model, theta + 0.5 * h * k2, mode);
  const Vector k4 = flow_field(model, theta + h * k3, mode);
  return theta + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

/// Fixed-step classical RK4 on flow_field. In constrained mode the constraint
/// target is C = sum_i h_i(theta0); drift above opts.drift_trigger is
/// repaired by project_to_constraint, and a step whose repaired drift still
/// exceeds opts.drift_accept is retried with half the step.
template <ExponentialFamily M>
Trajectory integrate(const M& model, const Vector& theta0, const IntegratorOptions& opts) {
  if (!(opts.dt > 0.0)) throw InvalidStateError("integrate: dt must be positive");
  if (opts.record_every == 0) throw InvalidStateError("integrate: record_every must be positive");
  validate(model, theta0);

  Trajectory traj;
  traj.mode = opts.mode;
  traj.target_constraint = constraint_value(model, theta0);
  const bool constrained = opts.mode == FlowMode::constrained;

  Vector theta = theta0;
  double tau = 0.0;
  FlowEvaluation flow = evaluate_flow(model, theta, opts.mode);
  traj.records.push_back(make_record(model, tau, theta, flow.nu));

  auto abort = [&](const std::string& why) {
    traj.termination = Termination::aborted;
    traj.diagnostic = why;
    if (traj.records.back().tau != tau) traj.records.push_back(make_record(model, tau, theta, flow.nu));
    return traj;
  };

  while (true) {
    if (flow.velocity.norm() < opts.convergence_tolerance) {
      traj.termination = Termination::converged;
      break;
    }
    if (traj.steps >= opts.max_steps) {
      traj.termination = Termination::max_steps;
      break;
    }

    double h = opts.dt;
    std::optional<Vector> accepted;
    std::string failure;
    for (int attempt = 0; attempt <= opts.max_halvings; ++attempt) {
      try {
        Vector next = detail::rk4_step(model, theta, h, opts.mode);
        if (!next.allFinite()) throw NumericalError("RK4 step produced non-finite parameters");
        if (constrained) {
          double drift = std::abs(constraint_value(model, next) - traj.target_constraint);
          if (drift > opts.drift_trigger) {
            next = project_to_constraint(model, next, traj.target_constraint).values();
            ++traj.projections;
            drift = std::abs(constraint_value(model, next) - traj.target_constraint);
          }
          if (drift > opts.drift_accept) throw NumericalError("constraint drift not repaired");
          traj.max_drift = std::max(traj.max_drift, drift);
        }
        accepted = std::move(next);
        break;
      } catch (const Error& e) {
        failure = e.what();
        h *= 0.5;
        ++traj.step_halvings;
      }
    }
    if (!accepted) return abort("step failed after " + std::to_string(opts.max_halvings) + " halvings: " + failure);

    theta = std::move(*accepted);
    tau += h;
    ++traj.steps;
    try {
      flow = evaluate_flow(model, theta, opts.mode);
    } catch (const Error& e) {
      return abort(e.what());
    }
    if (traj.steps % opts.record_every == 0) traj.records.push_back(make_record(model, tau, theta, flow.nu));
  }
  if (traj.records.back().tau != tau) traj.records.push_back(make_record(model, tau, theta, flow.nu));
  return traj;
}

}  // namespace infoflow
