#pragma once

// The individual experiments behind the CLI. Each takes a validated Config and
// returns a ResultTable, a metadata block and the invariant checks it ran.

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "infoflow/config.hpp"
#include "infoflow/dynamics.hpp"
#include "infoflow/errors.hpp"
#include "infoflow/generic_analysis.hpp"
#include "infoflow/models/curie_weiss.hpp"
#include "infoflow/models/gaussian_oscillator.hpp"
#include "infoflow/models/pairwise_binary.hpp"
#include "infoflow/parallel.hpp"
#include "infoflow/result_table.hpp"

namespace infoflow {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitFailure = 3 };

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ExperimentOutcome {
  explicit ExperimentOutcome(ResultTable t) : table(std::move(t)) {}

  ResultTable table;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
  std::vector<Check> checks;

  [[nodiscard]] bool ok() const {
    return table.row_count() > 0 &&
           std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"n3-decomposition", "n3-sweep",          "n3-trajectories",
                                                 "cw-magnetization", "cw-scaling",        "oscillator-jacobi",
                                                 "verify"};
  return names;
}

/// Values quoted for the frustrated three-variable system.
struct FrustratedReference {
  static constexpr double norm_S = 0.093;
  static constexpr double norm_S_tol = 0.005;
  static constexpr double norm_A = 0.015;
  static constexpr double norm_A_tol = 0.002;
  static constexpr double ratio = 0.160;
  static constexpr double ratio_tol = 0.02;

  static bool matches(const GenericDecomposition& d) {
    return std::abs(d.norm_S - norm_S) <= norm_S_tol && std::abs(d.norm_A - norm_A) <= norm_A_tol && d.ratio &&
           std::abs(*d.ratio - ratio) <= ratio_tol;
  }
};

namespace detail {

inline const std::set<std::string> kCommonKeys = {"experiment", "output.dir", "output.format", "threads"};

inline std::set<std::string> with_common(std::set<std::string> keys) {
  keys.insert(kCommonKeys.begin(), kCommonKeys.end());
  return keys;
}

inline Vector to_vector(const std::vector<double>& v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline Vector triangle_theta(const Config& cfg) {
  const Vector base = frustrated_triangle_theta();
  const Vector theta = to_vector(cfg.get_doubles("model.theta", to_std(base)));
  if (theta.size() != 6) throw ConfigError("model.theta needs 6 values (3 biases, then pairs 12, 13, 23)");
  return theta;
}

inline std::size_t thread_count(const Config& cfg) {
  const std::size_t t = cfg.get_size("threads", 1);
  if (t == 0) throw ConfigError("threads must be at least 1");
  return t;
}

inline nlohmann::ordered_json base_metadata(const Config& cfg, const std::string& experiment) {
  nlohmann::ordered_json meta;
  meta["experiment"] = experiment;
  meta["tool_version"] = std::string(kToolVersion);
  meta["config_hash"] = "fnv1a64:" + cfg.hash_hex();
  nlohmann::ordered_json echo = nlohmann::ordered_json::object();
  for (const auto& [k, v] : cfg.entries()) echo[k] = v;
  meta["config"] = std::move(echo);
  return meta;
}

inline Cell opt_cell(const std::optional<double>& v) { return v ? Cell(*v) : Cell(); }

inline void require_positive(double x, const std::string& key) {
  if (!(x > 0.0)) throw ConfigError(key + " must be positive");
}

/// Largest entry change of the FD Jacobian when its step is halved.
template <ExponentialFamily M>
double jacobian_noise_floor(const M& model, const Vector& theta, double rel) {
  const Matrix coarse = flow_jacobian(model, theta, JacobianMethod::fd, rel);
  const Matrix fine = flow_jacobian(model, theta, JacobianMethod::fd, 0.5 * rel);
  return (coarse - fine).cwiseAbs().maxCoeff();
}

}  // namespace detail

inline ExperimentOutcome run_n3_decomposition(const Config& cfg) {
  cfg.require_known(detail::with_common(
      {"model.theta", "model.convention", "model.beta", "model.scaling", "jacobian.method", "jacobian.step"}));
  const Vector base = detail::triangle_theta(cfg);
  const std::string conv_key = cfg.get_string("model.convention", "both");
  std::vector<SpinConvention> conventions;
  if (conv_key == "both") {
    conventions = {SpinConvention::plus_minus, SpinConvention::zero_one};
  } else {
    conventions = {parse_convention(conv_key)};
  }
  const double beta = cfg.get_double("model.beta", 1.0);
  detail::require_positive(beta, "model.beta");
  const auto scaling = parse_coldness_scaling(cfg.get_string("model.scaling", "inverse"));
  const auto method = parse_jacobian_method(cfg.get_string("jacobian.method", "fd"));
  const double step = cfg.get_double("jacobian.step", kJacobianRelStep);
  detail::require_positive(step, "jacobian.step");
  const Vector theta = scale_by_coldness(base, beta, scaling);

  ExperimentOutcome out{ResultTable("n3-decomposition")};
  out.metadata = detail::base_metadata(cfg, "n3-decomposition");
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  nlohmann::ordered_json floors = nlohmann::ordered_json::object();
  std::string matched = "none";
  std::size_t evaluated = 0;
  for (const auto conv : conventions) {
    const std::string name(to_string(conv));
    const PairwiseBinaryModel model(3, conv);
    nlohmann::ordered_json info;
    try {
      const GenericDecomposition d = decompose(model, theta, method, step);
      out.table.add_row({name, beta, d.norm_S, d.norm_A, detail::opt_cell(d.ratio), d.residual_Sa, d.residual_AgradH});
      info["status"] = "ok";
      info["nu"] = d.nu;
      info["matches_reference"] = FrustratedReference::matches(d);
      if (method == JacobianMethod::fd) floors[name + ".jacobian_step_halving"] = detail::jacobian_noise_floor(model, theta, step);
      if (matched == "none" && FrustratedReference::matches(d)) matched = name;
      ++evaluated;
    } catch (const Error& e) {
      out.table.add_row({name, beta, Cell(), Cell(), Cell(), Cell(), Cell()});
      info["status"] = "failed";
      info["error"] = e.what();
    }
    per[name] = std::move(info);
  }
  out.metadata["convention"] = conv_key;
  out.metadata["matched_convention"] = matched;
  out.metadata["reference"] = {{"norm_S", FrustratedReference::norm_S},
                               {"norm_A", FrustratedReference::norm_A},
                               {"ratio", FrustratedReference::ratio}};
  out.metadata["conventions"] = std::move(per);
  out.metadata["noise_floors"] = std::move(floors);
  out.checks.push_back({"at_least_one_convention_evaluated", evaluated > 0, std::to_string(evaluated) + " evaluated"});
  return out;
}

inline ExperimentOutcome run_n3_sweep(const Config& cfg) {
  cfg.require_known(detail::with_common({"model.theta", "model.convention", "sweep.log10_min", "sweep.log10_max",
                                         "sweep.points", "sweep.scaling", "jacobian.method"}));
  const Vector base = detail::triangle_theta(cfg);
  const auto conv = parse_convention(cfg.get_string("model.convention", "zero_one"));
  const double lo = cfg.get_double("sweep.log10_min", -1.5);
  const double hi = cfg.get_double("sweep.log10_max", 1.5);
  const std::size_t points = cfg.get_size("sweep.points", 61);
  if (points == 0) throw ConfigError("sweep.points must be at least 1");
  if (points > 1 && !(hi > lo)) throw ConfigError("sweep.log10_max must exceed sweep.log10_min");
  const auto scaling = parse_coldness_scaling(cfg.get_string("sweep.scaling", "inverse"));
  const auto method = parse_jacobian_method(cfg.get_string("jacobian.method", "fd"));
  const PairwiseBinaryModel model(3, conv);

  const SweepResult sweep = coldness_sweep(model, base, log_grid(lo, hi, points), scaling, method,
                                           detail::thread_count(cfg));
  ExperimentOutcome out{ResultTable("n3-sweep")};
  out.metadata = detail::base_metadata(cfg, "n3-sweep");
  out.metadata["convention"] = std::string(to_string(conv));
  out.metadata["scaling"] = std::string(to_string(scaling));
  nlohmann::ordered_json failures = nlohmann::ordered_json::array();
  for (const auto& p : sweep.points) {
    if (p.decomposition) {
      const auto& d = *p.decomposition;
      out.table.add_row({p.beta, d.norm_S, d.norm_A, detail::opt_cell(d.ratio)});
    } else {
      failures.push_back({{"beta", p.beta}, {"error", p.error}});
    }
  }
  if (sweep.argmax_ratio) {
    const auto& p = sweep.points[*sweep.argmax_ratio];
    out.metadata["argmax_beta"] = p.beta;
    out.metadata["peak_ratio"] = *p.decomposition->ratio;
    out.metadata["argmax_index"] = *sweep.argmax_ratio;
  }
  out.metadata["failed_points"] = std::move(failures);
  return out;
}

inline ExperimentOutcome run_n3_trajectories(const Config& cfg) {
  cfg.require_known(detail::with_common({"model.theta", "model.convention", "integrator.dt", "integrator.max_steps",
                                         "integrator.record_every", "integrator.mode"}));
  const Vector theta0 = detail::triangle_theta(cfg);
  const auto conv = parse_convention(cfg.get_string("model.convention", "zero_one"));
  IntegratorOptions base;
  base.dt = cfg.get_double("integrator.dt", 1e-2);
  detail::require_positive(base.dt, "integrator.dt");
  base.max_steps = cfg.get_size("integrator.max_steps", 100000);
  base.record_every = cfg.get_size("integrator.record_every", 100);
  if (base.record_every == 0) throw ConfigError("integrator.record_every must be at least 1");
  const std::string mode_key = cfg.get_string("integrator.mode", "both");
  std::vector<FlowMode> modes;
  if (mode_key == "both") {
    modes = {FlowMode::constrained, FlowMode::unconstrained};
  } else if (mode_key == "constrained") {
    modes = {FlowMode::constrained};
  } else if (mode_key == "unconstrained") {
    modes = {FlowMode::unconstrained};
  } else {
    throw ConfigError("integrator.mode must be constrained, unconstrained or both");
  }
  const PairwiseBinaryModel model(3, conv);
  validate(model, theta0);

  std::vector<Trajectory> runs = parallel_map(modes.size(), detail::thread_count(cfg), [&](std::size_t i) {
    IntegratorOptions o = base;
    o.mode = modes[i];
    return integrate(model, theta0, o);
  });

  ExperimentOutcome out{ResultTable("n3-trajectories")};
  out.metadata = detail::base_metadata(cfg, "n3-trajectories");
  out.metadata["convention"] = std::string(to_string(conv));
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  for (const Trajectory& t : runs) {
    const std::string mode(to_string(t.mode));
    double worst_decrease = 0.0;
    double worst_drift = 0.0;
    for (std::size_t r = 0; r < t.records.size(); ++r) {
      const auto& rec = t.records[r];
      std::vector<Cell> row{rec.tau};
      for (Eigen::Index k = 0; k < 6; ++k) row.emplace_back(rec.theta[k]);
      row.insert(row.end(), {rec.joint_entropy, rec.sum_marginals, rec.multi_information, rec.nu, mode});
      out.table.add_row(std::move(row));
      if (r > 0) worst_decrease = std::max(worst_decrease, t.records[r - 1].joint_entropy - rec.joint_entropy);
      worst_drift = std::max(worst_drift, std::abs(rec.sum_marginals - t.target_constraint));
    }
    const auto& last = t.records.back();
    nlohmann::ordered_json s;
    s["termination"] = std::string(to_string(t.termination));
    s["steps"] = t.steps;
    s["step_halvings"] = t.step_halvings;
    s["projections"] = t.projections;
    s["target_constraint"] = t.target_constraint;
    s["max_drift"] = std::max(t.max_drift, worst_drift);
    s["final_tau"] = last.tau;
    s["final_theta"] = detail::to_std(last.theta.values());
    s["final_H"] = last.joint_entropy;
    s["final_interaction_norm"] = last.theta.values().tail(3).norm();
    if (!t.diagnostic.empty()) s["diagnostic"] = t.diagnostic;
    summary[mode] = std::move(s);

    out.checks.push_back({mode + ".not_aborted", t.termination != Termination::aborted, t.diagnostic});
    out.checks.push_back({mode + ".entropy_non_decreasing", worst_decrease <= 1e-10,
                          "largest decrease " + format_double(worst_decrease)});
    if (t.mode == FlowMode::constrained) {
      const double drift = std::max(t.max_drift, worst_drift);
      out.checks.push_back({mode + ".constraint_drift", drift <= 1e-6, "max drift " + format_double(drift)});
    }
  }
  out.metadata["runs"] = std::move(summary);
  out.metadata["integrator"] = {{"dt", base.dt},
                                {"max_steps", base.max_steps},
                                {"record_every", base.record_every},
                                {"convergence_tolerance", base.convergence_tolerance},
                                {"drift_trigger", base.drift_trigger}};
  return out;
}

inline ExperimentOutcome run_cw_magnetization(const Config& cfg) {
  cfg.require_known(detail::with_common(
      {"model.n", "model.J", "model.h", "sweep.beta_min", "sweep.beta_max", "sweep.points", "sweep.spacing"}));
  const std::size_t n = cfg.get_size("model.n", 400);
  const double coupling = cfg.get_double("model.J", 1.0);
  const double field = cfg.get_double("model.h", 0.01);
  const double lo = cfg.get_double("sweep.beta_min", 0.25);
  const double hi = cfg.get_double("sweep.beta_max", 2.5);
  const std::size_t points = cfg.get_size("sweep.points", 46);
  const std::string spacing = cfg.get_string("sweep.spacing", "linear");
  detail::require_positive(lo, "sweep.beta_min");
  if (!(coupling >= 0.0)) throw ConfigError("model.J must be non-negative");
  if (n < 1) throw ConfigError("model.n must be at least 1");
  if (points == 0) throw ConfigError("sweep.points must be at least 1");
  if (points > 1 && !(hi > lo)) throw ConfigError("sweep.beta_max must exceed sweep.beta_min");
  std::vector<double> betas;
  if (spacing == "log") {
    betas = log_grid(std::log10(lo), std::log10(hi), points);
  } else if (spacing == "linear") {
    for (std::size_t i = 0; i < points; ++i) {
      betas.push_back(points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1));
    }
  } else {
    throw ConfigError("sweep.spacing must be linear or log");
  }
  const CurieWeissModel base(n, coupling, field, 1.0);

  const auto values = parallel_map(betas.size(), detail::thread_count(cfg),
                                   [&](std::size_t i) { return cw_observables(base.with_beta(betas[i])).m_intensive; });
  ExperimentOutcome out{ResultTable("cw-magnetization")};
  out.metadata = detail::base_metadata(cfg, "cw-magnetization");
  out.metadata["convention"] = "plus_minus";
  out.metadata["beta_c"] = base.critical_beta();
  for (std::size_t i = 0; i < betas.size(); ++i) out.table.add_row({betas[i], std::abs(values[i])});
  return out;
}

inline ExperimentOutcome run_cw_scaling(const Config& cfg) {
  cfg.require_known(detail::with_common({"model.sizes", "model.J", "model.h", "scaling.beta_ratios", "fd.step"}));
  const auto sizes = cfg.get_sizes("model.sizes", {200, 400});
  const double coupling = cfg.get_double("model.J", 1.0);
  const double field = cfg.get_double("model.h", 0.01);
  const auto ratios = cfg.get_doubles("scaling.beta_ratios", {0.5, 2.0});
  const double step = cfg.get_double("fd.step", 1e-6);
  detail::require_positive(coupling, "model.J");
  detail::require_positive(step, "fd.step");
  for (double r : ratios) detail::require_positive(r, "scaling.beta_ratios");
  for (auto n : sizes)
    if (n < 1) throw ConfigError("model.sizes entries must be at least 1");

  struct Job {
    std::size_t n;
    double ratio;
  };
  std::vector<Job> jobs;
  for (double r : ratios)
    for (auto n : sizes) jobs.push_back({n, r});
  const double beta_c = 1.0 / coupling;
  const auto grads = parallel_map(jobs.size(), detail::thread_count(cfg), [&](std::size_t i) {
    return cw_order_gradients(CurieWeissModel(jobs[i].n, coupling, field, jobs[i].ratio * beta_c), step);
  });

  ExperimentOutcome out{ResultTable("cw-scaling")};
  out.metadata = detail::base_metadata(cfg, "cw-scaling");
  out.metadata["convention"] = "plus_minus";
  out.metadata["beta_c"] = beta_c;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    out.table.add_row({static_cast<double>(jobs[i].n), jobs[i].ratio, grads[i].dI_dm, grads[i].dH_dm, grads[i].dSum_dm});
  }
  return out;
}

inline ExperimentOutcome run_oscillator_jacobi(const Config& cfg) {
  cfg.require_known(detail::with_common(
      {"oscillator.points", "jacobian.method", "jacobi.derivative_step", "jacobi.noise_multiple"}));
  const auto points = cfg.get_points("oscillator.points", 3, {{1.0, 1.0, 0.0}, {1.0, 1.0, 0.3}, {1.0, 0.7, 0.2}});
  JacobiOptions opts;
  opts.method = parse_jacobian_method(cfg.get_string("jacobian.method", "analytic"));
  opts.derivative_step = cfg.get_double("jacobi.derivative_step", 1e-3);
  opts.noise_multiple = cfg.get_double("jacobi.noise_multiple", 10.0);
  detail::require_positive(opts.derivative_step, "jacobi.derivative_step");
  detail::require_positive(opts.noise_multiple, "jacobi.noise_multiple");
  const GaussianOscillatorModel model;
  for (const auto& p : points) {
    try {
      validate(model, detail::to_vector(p));
    } catch (const InvalidStateError& e) {
      throw ConfigError(std::string("oscillator.points: ") + e.what());
    }
  }

  const auto reports = parallel_map(points.size(), detail::thread_count(cfg), [&](std::size_t i) {
    return jacobi_violation(model, detail::to_vector(points[i]), opts);
  });
  ExperimentOutcome out{ResultTable("oscillator-jacobi")};
  out.metadata = detail::base_metadata(cfg, "oscillator-jacobi");
  out.metadata["convention"] = "gaussian";
  out.metadata["jacobian_method"] = std::string(to_string(opts.method));
  nlohmann::ordered_json floors = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& r = reports[i];
    out.table.add_row({points[i][0], points[i][1], points[i][2], r.max_abs, detail::opt_cell(r.normalized_max),
                       static_cast<double>(r.nonzero_triplets)});
    nlohmann::ordered_json above = nlohmann::ordered_json::array();
    for (const auto& [t, v] : r.violations)
      if (std::abs(v) > r.threshold) above.push_back({t[0] + 1, t[1] + 1, t[2] + 1});
    floors.push_back({{"point", points[i]},
                      {"noise_floor", r.noise_floor},
                      {"threshold", r.threshold},
                      {"norm_A", r.norm_A},
                      {"triplets_above_threshold", std::move(above)}});
  }
  out.metadata["noise_floors"] = std::move(floors);
  return out;
}

/// Dispatches every experiment except verify.
inline ExperimentOutcome run_non_verify(const Config& cfg) {
  const std::string name = cfg.require_string("experiment");
  if (name == "n3-decomposition") return run_n3_decomposition(cfg);
  if (name == "n3-sweep") return run_n3_sweep(cfg);
  if (name == "n3-trajectories") return run_n3_trajectories(cfg);
  if (name == "cw-magnetization") return run_cw_magnetization(cfg);
  if (name == "cw-scaling") return run_cw_scaling(cfg);
  if (name == "oscillator-jacobi") return run_oscillator_jacobi(cfg);
  throw ConfigError("unknown experiment '" + name + "'");
}

}  // namespace infoflow
