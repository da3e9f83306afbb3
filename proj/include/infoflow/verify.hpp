#pragma once

// The invariant suite: every module property checked at fixed seeds and
// grids, reported as one pass/fail item each.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "json.hpp"

#include "infoflow/dynamics.hpp"
#include "infoflow/experiments.hpp"
#include "infoflow/generic_analysis.hpp"
#include "infoflow/models/curie_weiss.hpp"
#include "infoflow/models/gaussian_oscillator.hpp"
#include "infoflow/models/pairwise_binary.hpp"
#include "infoflow/reference.hpp"

namespace infoflow {

struct VerifyItem {
  std::string name;
  std::string module;
  bool passed = false;
  double value = 0.0;  // worst observed quantity
  double limit = 0.0;  // what it was compared against
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyItem> items;
  nlohmann::ordered_json noise_floors = nlohmann::ordered_json::object();
  double seconds = 0.0;

  [[nodiscard]] bool ok() const {
    return std::all_of(items.begin(), items.end(), [](const VerifyItem& i) { return i.passed; });
  }
  [[nodiscard]] const VerifyItem* find(const std::string& name) const {
    for (const auto& i : items)
      if (i.name == name) return &i;
    return nullptr;
  }
};

namespace verify_detail {

inline constexpr std::uint64_t kSeed = 20240611;

inline double rel_error(const Matrix& got, const Matrix& ref) {
  const double scale = ref.norm();
  return (got - ref).norm() / (scale > 0.0 ? scale : 1.0);
}

inline std::string fmt(double x) { return format_double(x); }

struct PairwiseSample {
  PairwiseBinaryModel model;
  Vector theta;
};

inline std::vector<PairwiseSample> pairwise_samples(std::size_t max_n, std::size_t per_n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<PairwiseSample> out;
  for (std::size_t n = 2; n <= max_n; ++n)
    for (auto conv : {SpinConvention::plus_minus, SpinConvention::zero_one})
      for (std::size_t k = 0; k < per_n; ++k) {
        PairwiseBinaryModel m(n, conv);
        Vector t(static_cast<Eigen::Index>(m.dimension()));
        for (auto& x : t) x = u(rng);
        out.push_back({m, t});
      }
  return out;
}

inline std::vector<Vector> gaussian_samples(std::size_t count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> diag(0.5, 2.0);
  std::uniform_real_distribution<double> corr(-0.8, 0.8);
  std::vector<Vector> out;
  for (std::size_t k = 0; k < count; ++k) {
    const double xx = diag(rng);
    const double pp = diag(rng);
    Vector t(3);
    t << xx, pp, corr(rng) * std::sqrt(xx * pp);
    out.push_back(t);
  }
  return out;
}

struct CwSample {
  CurieWeissFamily family;
  Vector theta;
};

inline std::vector<CwSample> cw_samples() {
  std::vector<CwSample> out;
  for (std::size_t n : {3, 6, 10})
    for (double beta : {0.4, 1.3}) {
      Vector t(2);
      t << beta * 0.05, beta * 1.0;
      out.push_back({CurieWeissFamily(n), t});
    }
  return out;
}

/// Checks of first- and second-level derivatives of psi and H against
/// Richardson differences, for one model and point.
template <ExponentialFamily M>
void derivative_errors(const M& model, const Vector& theta, double& psi_err, double& h_err) {
  const Vector mu = mean_parameters(model, theta);
  const Matrix g = fisher_information(model, theta);
  const Vector mu_fd = fd::richardson_gradient([&](const Vector& t) { return model.log_partition(t); }, theta);
  const Matrix g_fd = fd::richardson_jacobian([&](const Vector& t) { return model.mean_parameters(t); }, theta,
                                              fd::kDefaultRelStep);
  psi_err = std::max({psi_err, rel_error(mu, mu_fd), rel_error(g, g_fd)});
  const Vector grad_h = entropy_gradient(model, theta);
  const Vector grad_h_fd = fd::richardson_gradient([&](const Vector& t) { return joint_entropy(model, t); }, theta);
  h_err = std::max(h_err, rel_error(grad_h, grad_h_fd));
}

template <ExponentialFamily M>
double fisher_shape_error(const M& model, const Vector& theta, double& min_eig_ratio) {
  const Matrix g = fisher_information(model, theta);
  const double asym = (g - g.transpose()).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric_part(g), Eigen::EigenvaluesOnly);
  min_eig_ratio = std::min(min_eig_ratio, es.eigenvalues().minCoeff() / std::max(g.norm(), 1e-300));
  return asym;
}

/// Largest per-step decrease of H and largest constraint drift over all records.
inline void trajectory_stats(const Trajectory& t, double& decrease, double& drift) {
  for (std::size_t r = 0; r < t.records.size(); ++r) {
    if (r > 0) decrease = std::max(decrease, t.records[r - 1].joint_entropy - t.records[r].joint_entropy);
    if (t.mode == FlowMode::constrained) {
      drift = std::max(drift, std::abs(t.records[r].sum_marginals - t.target_constraint));
    }
  }
}

/// Random unit-scale tangent vector q (a^T q = 0) of length `length`.
inline Vector random_tangent(const Vector& a, double length, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Vector q(a.size());
  for (auto& x : q) x = z(rng);
  q -= a * (a.dot(q) / a.squaredNorm());
  return length * q / q.norm();
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Metadata text with the timestamp line removed.
inline std::string strip_timestamp(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string out;
  while (std::getline(in, line)) {
    if (line.find("\"timestamp\"") != std::string::npos) continue;
    out += line + "\n";
  }
  return out;
}

}  // namespace verify_detail

/// Small configurations, one per experiment, used for the artifact checks.
inline std::vector<Config> verify_artifact_configs() {
  std::vector<std::string> texts = {
      "experiment = n3-decomposition\n",
      "experiment = n3-sweep\nsweep.points = 7\nthreads = 2\n",
      "experiment = n3-trajectories\nintegrator.max_steps = 2000\nintegrator.record_every = 50\n",
      "experiment = cw-magnetization\nmodel.n = 100\nsweep.points = 5\n",
      "experiment = cw-scaling\nmodel.sizes = 50, 100\n",
      "experiment = oscillator-jacobi\n",
  };
  std::vector<Config> out;
  for (const auto& t : texts) out.push_back(Config::parse(t, "verify"));
  return out;
}

inline VerifyReport verify_suite() {
  using namespace verify_detail;
  const auto start = std::chrono::steady_clock::now();
  VerifyReport report;
  std::mt19937_64 rng(kSeed);

  auto item = [&](const std::string& name, const std::string& module, const std::function<VerifyItem()>& body) {
    VerifyItem it;
    try {
      it = body();
    } catch (const std::exception& e) {
      it.passed = false;
      it.detail = std::string("exception: ") + e.what();
    }
    it.name = name;
    it.module = module;
    report.items.push_back(std::move(it));
  };

  const auto pairwise_small = pairwise_samples(5, 2, rng);
  const auto gauss = gaussian_samples(6, rng);
  const auto cw = cw_samples();
  const GaussianOscillatorModel osc;

  // ---- expfam_core
  item("fisher_symmetric_psd", "expfam_core", [&] {
    double asym = 0.0;
    double min_ratio = INFINITY;
    for (const auto& s : pairwise_small) asym = std::max(asym, fisher_shape_error(s.model, s.theta, min_ratio));
    for (const auto& t : gauss) asym = std::max(asym, fisher_shape_error(osc, t, min_ratio));
    for (const auto& s : cw) asym = std::max(asym, fisher_shape_error(s.family, s.theta, min_ratio));
    VerifyItem r;
    r.value = asym;
    r.limit = 1e-12;
    r.passed = asym <= 1e-12 && min_ratio >= -1e-10;
    r.detail = "max |G - G^T| " + fmt(asym) + ", min eigenvalue / ||G|| " + fmt(min_ratio);
    return r;
  });

  item("fisher_equals_enumerated_covariance", "expfam_core", [&] {
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    double worst = 0.0;
    for (std::size_t n = 2; n <= 12; ++n) {
      for (auto conv : {SpinConvention::plus_minus, SpinConvention::zero_one}) {
        PairwiseBinaryModel m(n, conv);
        Vector t(static_cast<Eigen::Index>(m.dimension()));
        for (auto& x : t) x = u(rng) / std::sqrt(static_cast<double>(n));
        const auto e = conv == SpinConvention::plus_minus ? reference::pairwise_states(n, -1, 1)
                                                          : reference::pairwise_states(n, 0, 1);
        const auto ref = reference::moments(e, t);
        worst = std::max(worst, (fisher_information(m, t) - ref.covariance).cwiseAbs().maxCoeff());
      }
      CurieWeissFamily f(n);
      Vector t(2);
      t << 0.03, 0.9;
      const auto ref = reference::moments(reference::curie_weiss_states(n), t);
      worst = std::max(worst, (fisher_information(f, t) - ref.covariance).cwiseAbs().maxCoeff());
    }
    return VerifyItem{"", "", worst <= 1e-10, worst, 1e-10, "pairwise n=2..12 (both conventions), Curie-Weiss n=2..12"};
  });

  item("moments_match_fd_of_psi", "expfam_core", [&] {
    double psi_err = 0.0;
    double h_err = 0.0;
    for (const auto& s : pairwise_small) derivative_errors(s.model, s.theta, psi_err, h_err);
    for (const auto& t : gauss) derivative_errors(osc, t, psi_err, h_err);
    for (const auto& s : cw) derivative_errors(s.family, s.theta, psi_err, h_err);
    return VerifyItem{"", "", psi_err <= 1e-6, psi_err, 1e-6, "relative error of grad psi and Hess psi"};
  });

  item("entropy_identity_and_gradient", "expfam_core", [&] {
    double psi_err = 0.0;
    double h_err = 0.0;
    double identity = 0.0;
    for (const auto& s : pairwise_small) {
      derivative_errors(s.model, s.theta, psi_err, h_err);
      const auto e = s.model.convention() == SpinConvention::plus_minus
                         ? reference::pairwise_states(s.model.variable_count(), -1, 1)
                         : reference::pairwise_states(s.model.variable_count(), 0, 1);
      identity = std::max(identity, std::abs(joint_entropy(s.model, s.theta) - reference::moments(e, s.theta).entropy));
    }
    for (const auto& t : gauss) {
      derivative_errors(osc, t, psi_err, h_err);
      identity = std::max(identity, std::abs(joint_entropy(osc, t) - gauss_closed_forms(osc, t).joint_entropy));
    }
    for (const auto& s : cw) derivative_errors(s.family, s.theta, psi_err, h_err);
    VerifyItem r;
    r.value = h_err;
    r.limit = 1e-6;
    r.passed = h_err <= 1e-6 && identity <= 1e-10;
    r.detail = "grad H = -G theta vs FD of H: " + fmt(h_err) + "; |psi - theta^T mu - (-sum p log p)| " + fmt(identity);
    return r;
  });

  item("multi_information_nonnegative", "expfam_core", [&] {
    double most_negative = 0.0;
    double independent = 0.0;
    for (const auto& s : pairwise_small) {
      most_negative = std::min(most_negative, multi_information(s.model, s.theta));
      Vector t = s.theta;
      t.tail(static_cast<Eigen::Index>(s.model.pairs().size())).setZero();
      independent = std::max(independent, std::abs(multi_information(s.model, t)));
    }
    for (const auto& t : gauss) {
      most_negative = std::min(most_negative, multi_information(osc, t));
      Vector u = t;
      u[2] = 0.0;
      independent = std::max(independent, std::abs(multi_information(osc, u)));
    }
    for (const auto& s : cw) {
      most_negative = std::min(most_negative, multi_information(s.family, s.theta));
      Vector u = s.theta;
      u[1] = 0.0;
      independent = std::max(independent, std::abs(multi_information(s.family, u)));
    }
    VerifyItem r;
    r.value = independent;
    r.limit = 1e-10;
    r.passed = most_negative >= -1e-10 && independent <= 1e-10;
    r.detail = "min I " + fmt(most_negative) + ", max |I| without interactions " + fmt(independent);
    return r;
  });

  item("third_cumulant_symmetric_and_moment", "expfam_core", [&] {
    std::normal_distribution<double> z(0.0, 1.0);
    double asym = 0.0;
    double err = 0.0;
    for (const auto& s : pairwise_small) {
      Vector v(s.theta.size());
      for (auto& x : v) x = z(rng);
      const Matrix c = third_cumulant_contraction(s.model, s.theta, v);
      asym = std::max(asym, (c - c.transpose()).cwiseAbs().maxCoeff());
      const auto e = s.model.convention() == SpinConvention::plus_minus
                         ? reference::pairwise_states(s.model.variable_count(), -1, 1)
                         : reference::pairwise_states(s.model.variable_count(), 0, 1);
      const auto m = reference::moments(e, s.theta);
      err = std::max(err, (c - reference::contracted_third_moment(e, m, v)).cwiseAbs().maxCoeff());
    }
    for (const auto& s : cw) {
      Vector v(2);
      v << z(rng), z(rng);
      const Matrix c = third_cumulant_contraction(s.family, s.theta, v);
      asym = std::max(asym, (c - c.transpose()).cwiseAbs().maxCoeff());
      const auto e = reference::curie_weiss_states(s.family.variable_count());
      err = std::max(err, (c - reference::contracted_third_moment(e, reference::moments(e, s.theta), v))
                              .cwiseAbs()
                              .maxCoeff());
    }
    double gauss_err = 0.0;
    for (const auto& t : gauss) {
      Vector v(3);
      v << z(rng), z(rng), z(rng);
      const Matrix c = third_cumulant_contraction(osc, t, v);
      asym = std::max(asym, (c - c.transpose()).cwiseAbs().maxCoeff());
      // Directional derivative of G along v.
      const double h = 1e-4;
      const Matrix dg = (osc.fisher_information(t + h * v) - osc.fisher_information(t - h * v)) / (2.0 * h);
      const Matrix dg2 =
          (osc.fisher_information(t + 0.5 * h * v) - osc.fisher_information(t - 0.5 * h * v)) / h;
      gauss_err = std::max(gauss_err, rel_error(c, (4.0 * dg2 - dg) / 3.0));
    }
    VerifyItem r;
    r.value = err;
    r.limit = 1e-8;
    r.passed = asym <= 1e-12 && err <= 1e-8 && gauss_err <= 1e-6;
    r.detail = "asymmetry " + fmt(asym) + ", vs enumerated third moment " + fmt(err) + ", Gaussian vs FD of G " +
               fmt(gauss_err);
    return r;
  });

  item("marginal_entropies_exact_and_bounded", "expfam_core", [&] {
    double err = 0.0;
    double excess = -INFINITY;
    for (const auto& s : pairwise_small) {
      const auto e = s.model.convention() == SpinConvention::plus_minus
                         ? reference::pairwise_states(s.model.variable_count(), -1, 1)
                         : reference::pairwise_states(s.model.variable_count(), 0, 1);
      const Vector h = marginal_entropies(s.model, s.theta);
      err = std::max(err, (h - reference::marginal_entropies(e, reference::moments(e, s.theta))).cwiseAbs().maxCoeff());
      excess = std::max(excess, h.maxCoeff() - std::log(2.0));
    }
    VerifyItem r;
    r.value = err;
    r.limit = 1e-12;
    r.passed = err <= 1e-12 && excess <= 1e-12;
    r.detail = "vs enumerated marginals " + fmt(err) + ", max h_i - log 2 " + fmt(excess);
    return r;
  });

  // ---- models
  item("cw_psi_matches_enumeration", "models", [&] {
    double worst = 0.0;
    for (std::size_t n = 2; n <= 12; ++n) {
      const auto e = reference::curie_weiss_states(n);
      for (double j : {0.5, 1.0, 1.5})
        for (double h : {-0.1, 0.01, 0.2})
          for (double beta : {0.3, 1.0, 2.0}) {
            Vector t(2);
            t << beta * h, beta * j;
            const double ref = reference::moments(e, t).log_partition;
            worst = std::max(worst, std::abs(cw_log_partition(CurieWeissModel(n, j, h, beta)) - ref));
          }
    }
    return VerifyItem{"", "", worst <= 1e-9, worst, 1e-9, "n=2..12 over a 3x3x3 (J, h, beta) grid"};
  });

  item("cw_observables_match_enumeration", "models", [&] {
    double worst = 0.0;
    for (std::size_t n : {4, 8, 12}) {
      const auto e = reference::curie_weiss_states(n);
      for (double beta : {0.5, 1.5}) {
        const CurieWeissModel m(n, 1.0, 0.05, beta);
        const auto o = cw_observables(m);
        Vector t(2);
        t << beta * 0.05, beta;
        const auto ref = reference::moments(e, t);
        const double nn = static_cast<double>(n);
        const double m_ref = ref.mean[0] / nn;
        const double energy_ref = -ref.mean[1] - 0.05 * ref.mean[0];
        const Vector h_ref = reference::marginal_entropies(e, ref);
        const double sum_ref = h_ref.sum();
        worst = std::max({worst, std::abs(o.m_intensive - m_ref), std::abs(o.mean_energy - energy_ref),
                          std::abs(o.joint_entropy - ref.entropy), std::abs(o.sum_marginals - sum_ref),
                          std::abs(o.multi_information - (sum_ref - ref.entropy))});
      }
    }
    return VerifyItem{"", "", worst <= 1e-6, worst, 1e-6, "m, <E>, H, sum h_i, I for n in {4, 8, 12}"};
  });

  item("cw_phase_transition", "models", [&] {
    const CurieWeissModel m(400, 1.0, 0.01, 1.0);
    const double low = std::abs(cw_observables(m.with_beta(0.5)).m_intensive);
    const double high = std::abs(cw_observables(m.with_beta(2.0)).m_intensive);
    VerifyItem r;
    r.value = high;
    r.limit = 0.5;
    r.passed = low < 0.1 && high > 0.5;
    r.detail = "|m|(0.5 beta_c) = " + fmt(low) + ", |m|(2 beta_c) = " + fmt(high);
    return r;
  });

  item("gaussian_closed_forms_match_fd", "models", [&] {
    double worst = 0.0;
    for (const auto& t : gauss) {
      const auto c = gauss_closed_forms(osc, t);
      const Vector a_fd = constraint_gradient_fd(osc, t);
      const Matrix hc_fd = symmetric_part(fd::richardson_jacobian(
          [&](const Vector& u) { return osc.constraint_gradient(u); }, t, fd::kDefaultRelStep));
      const Vector mu_fd = fd::richardson_gradient([&](const Vector& u) { return osc.log_partition(u); }, t);
      const Matrix g_fd = fd::richardson_jacobian([&](const Vector& u) { return osc.mean_parameters(u); }, t,
                                                  fd::kDefaultRelStep);
      worst = std::max({worst, rel_error(c.constraint_gradient, a_fd), rel_error(osc.constraint_hessian(t), hc_fd),
                        rel_error(osc.mean_parameters(t), mu_fd), rel_error(c.fisher, g_fd)});
    }
    return VerifyItem{"", "", worst <= 1e-8, worst, 1e-8, "mu, G, a, Hess C against Richardson differences"};
  });

  // ---- dynamics
  const PairwiseBinaryModel triangle(3, SpinConvention::zero_one);
  const Vector frustrated = frustrated_triangle_theta();
  Vector osc_start(3);
  osc_start << 1.0, 0.7, 0.2;
  const CurieWeissFamily cw_family(20);
  Vector cw_start(2);
  cw_start << 0.05, 0.8;

  auto run = [](const auto& model, const Vector& t0, FlowMode mode, std::size_t max_steps) {
    IntegratorOptions o;
    o.mode = mode;
    o.max_steps = max_steps;
    return integrate(model, t0, o);
  };
  const Trajectory tri_c = run(triangle, frustrated, FlowMode::constrained, 100000);
  const Trajectory tri_u = run(triangle, frustrated, FlowMode::unconstrained, 100000);
  const Trajectory osc_c = run(osc, osc_start, FlowMode::constrained, 20000);
  const Trajectory osc_u = run(osc, osc_start, FlowMode::unconstrained, 20000);
  const Trajectory cw_c = run(cw_family, cw_start, FlowMode::constrained, 5000);
  const Trajectory cw_u = run(cw_family, cw_start, FlowMode::unconstrained, 5000);

  item("constraint_drift_bounded", "dynamics", [&] {
    double decrease = 0.0;
    double drift = 0.0;
    bool aborted = false;
    for (const Trajectory* t : {&tri_c, &osc_c, &cw_c}) {
      trajectory_stats(*t, decrease, drift);
      aborted = aborted || t->termination == Termination::aborted;
    }
    VerifyItem r;
    r.value = drift;
    r.limit = 1e-6;
    r.passed = drift <= 1e-6 && !aborted;
    r.detail = "dt = 1e-2 on pairwise N=3, Gaussian, Curie-Weiss (n=20)" + std::string(aborted ? "; a run aborted" : "");
    return r;
  });

  item("entropy_non_decreasing", "dynamics", [&] {
    double decrease = 0.0;
    double drift = 0.0;
    for (const Trajectory* t : {&tri_c, &tri_u, &osc_c, &osc_u, &cw_c, &cw_u}) trajectory_stats(*t, decrease, drift);
    return VerifyItem{"", "", decrease <= 1e-10, decrease, 1e-10, "largest per-step decrease of H, both modes"};
  });

  item("shared_interaction_free_endpoint", "dynamics", [&] {
    const auto& c = tri_c.records.back();
    const auto& u = tri_u.records.back();
    const double inter_c = c.theta.values().tail(3).norm();
    const double inter_u = u.theta.values().tail(3).norm();
    const double gap = std::abs(c.joint_entropy - u.joint_entropy);
    VerifyItem r;
    r.value = gap;
    r.limit = 1e-6;
    r.passed = inter_c <= 1e-4 && inter_u <= 1e-4 && gap <= 1e-6 && tri_c.termination == Termination::converged &&
               tri_u.termination == Termination::converged;
    r.detail = "interaction norms " + fmt(inter_c) + " / " + fmt(inter_u) + "; final H constrained " +
               fmt(c.joint_entropy) + ", unconstrained " + fmt(u.joint_entropy);
    return r;
  });

  item("rk4_fourth_order", "dynamics", [&] {
    auto final_at = [](const auto& model, const Vector& t0, double dt, double horizon, FlowMode mode) {
      IntegratorOptions o;
      o.mode = mode;
      o.dt = dt;
      o.max_steps = static_cast<std::size_t>(std::lround(horizon / dt));
      o.convergence_tolerance = 0.0;
      o.record_every = o.max_steps;
      return integrate(model, t0, o).records.back().theta.values();
    };
    double worst = INFINITY;
    std::string detail;
    auto order = [&](const auto& model, const Vector& t0, FlowMode mode, const std::string& label) {
      const Vector a = final_at(model, t0, 0.1, 1.0, mode);
      const Vector b = final_at(model, t0, 0.05, 1.0, mode);
      const Vector c = final_at(model, t0, 0.025, 1.0, mode);
      const double ratio = (a - b).norm() / (b - c).norm();
      detail += label + " error ratio " + fmt(ratio) + "; ";
      worst = std::min(worst, std::abs(std::log2(ratio)));
      return ratio;
    };
    const double r1 = order(triangle, frustrated, FlowMode::unconstrained, "N=3 unconstrained");
    // The unconstrained Gaussian flow leaves the positive-definite cone within
    // about 0.3 time units, so only its constrained flow is checked.
    const double r2 = order(triangle, frustrated, FlowMode::constrained, "N=3 constrained");
    const double r3 = order(osc, osc_start, FlowMode::constrained, "Gaussian constrained");
    const bool ok = [&] {
      for (double r : {r1, r2, r3})
        if (!(r >= 12.0 && r <= 20.0)) return false;
      return true;
    }();
    return VerifyItem{"", "", ok, std::min({r1, r2, r3}), 12.0, detail + "expected about 16 for halving dt"};
  });

  item("flow_tangent_and_producing_entropy", "dynamics", [&] {
    double tangency = 0.0;
    double forms = 0.0;
    double production = INFINITY;
    auto probe = [&](const auto& model, const Vector& t) {
      const Vector f = flow_field(model, t, FlowMode::constrained);
      const Vector a = constraint_gradient(model, t);
      tangency = std::max(tangency, std::abs(a.dot(f)));
      forms = std::max(forms, (f - projected_flow(model, t)).cwiseAbs().maxCoeff());
      const Vector grad_h = entropy_gradient(model, t);
      production = std::min(production, grad_h.dot(f));
      production = std::min(production, grad_h.dot(flow_field(model, t, FlowMode::unconstrained)));
    };
    for (const auto& s : pairwise_small)
      if (s.model.variable_count() == 3) probe(s.model, s.theta);
    probe(triangle, frustrated);
    for (const auto& t : gauss) probe(osc, t);
    for (const auto& s : cw) probe(s.family, s.theta);
    VerifyItem r;
    r.value = tangency;
    r.limit = 1e-12;
    r.passed = tangency <= 1e-12 && forms <= 1e-12 && production >= 0.0;
    r.detail = "|a^T F| " + fmt(tangency) + ", |F - (-Pi G theta)| " + fmt(forms) + ", min grad H^T F " + fmt(production);
    return r;
  });

  item("multiplier_closed_form_vs_fd", "dynamics", [&] {
    Vector t(3);
    t << 1.0, 1.0, 0.0;
    const double nu = lagrange_multiplier(osc, t);
    const Vector a = constraint_gradient_fd(osc, t);
    const double nu_fd = a.dot(osc.fisher_information(t) * t) / a.squaredNorm();
    const double nu_zero = lagrange_multiplier(triangle, Vector::Zero(6));
    const double err = std::abs(nu - nu_fd);
    VerifyItem r;
    r.value = err;
    r.limit = 1e-8;
    r.passed = err <= 1e-8 && nu_zero == 0.0;
    r.detail = "isotropic Gaussian nu " + fmt(nu) + "; nu(theta = 0) on N=3 " + fmt(nu_zero);
    return r;
  });

  item("projection_repairs_drift", "dynamics", [&] {
    double worst = 0.0;
    auto repair = [&](const auto& model, const Vector& t) {
      const double target = constraint_value(model, t);
      const Vector a = constraint_gradient(model, t);
      const Vector off = t + 1e-4 * a / a.norm();
      const Vector fixed = project_to_constraint(model, off, target).values();
      worst = std::max(worst, std::abs(constraint_value(model, fixed) - target));
    };
    repair(triangle, frustrated);
    repair(osc, osc_start);
    repair(cw_family, cw_start);
    return VerifyItem{"", "", worst <= 1e-10, worst, 1e-10, "perturbation 1e-4 along a"};
  });

  // ---- generic_analysis
  const GenericDecomposition tri_dec = decompose(triangle, frustrated, JacobianMethod::fd);

  item("decomposition_reconstructs", "generic_analysis", [&] {
    double recon = 0.0;
    bool exact = true;
    auto probe = [&](const GenericDecomposition& d) {
      const double scale = d.M.cwiseAbs().maxCoeff();
      recon = std::max(recon, (d.S + d.A - d.M).cwiseAbs().maxCoeff() / std::max(scale, 1e-300));
      exact = exact && d.S == d.S.transpose() && d.A == -d.A.transpose();
    };
    probe(tri_dec);
    for (const auto& t : gauss) probe(decompose(osc, t, JacobianMethod::analytic));
    VerifyItem r;
    r.value = recon;
    r.limit = 4.0 * std::numeric_limits<double>::epsilon();
    r.passed = exact && recon <= r.limit;
    r.detail = "max |S + A - M| / max |M|; symmetry exact " + std::string(exact ? "yes" : "no");
    return r;
  });

  item("jacobian_fd_matches_analytic", "generic_analysis", [&] {
    double worst = 0.0;
    for (const auto& t : gauss) {
      worst = std::max(worst, (flow_jacobian(osc, t, JacobianMethod::fd) - flow_jacobian(osc, t, JacobianMethod::analytic))
                                  .cwiseAbs()
                                  .maxCoeff());
    }
    std::normal_distribution<double> z(0.0, 1.0);
    double directional = 0.0;
    for (int k = 0; k < 5; ++k) {
      Vector v(6);
      for (auto& x : v) x = z(rng);
      v /= v.norm();
      const double eps = 1e-5;
      const Vector fd = (flow_field(triangle, frustrated + eps * v, FlowMode::constrained) -
                         flow_field(triangle, frustrated - eps * v, FlowMode::constrained)) /
                        (2.0 * eps);
      directional = std::max(directional, rel_error(tri_dec.M * v, fd));
    }
    VerifyItem r;
    r.value = worst;
    r.limit = 1e-6;
    r.passed = worst <= 1e-6 && directional <= 1e-5;
    r.detail = "Gaussian max |M_fd - M_analytic| " + fmt(worst) + "; N=3 directional relative error " + fmt(directional);
    return r;
  });

  auto production_probe = [&](bool quadratic) {
    double worst_rate = INFINITY;
    double worst_quad = INFINITY;
    auto probe = [&](const auto& model, const Vector& t, JacobianMethod method) {
      const GenericDecomposition d = decompose(model, t, method);
      const Vector a = constraint_gradient(model, t);
      for (int k = 0; k < 20; ++k) {
        const Vector q = random_tangent(a, 1e-3, rng);
        const Vector p = t + q;
        worst_rate = std::min(worst_rate, entropy_gradient(model, p).dot(flow_field(model, p, FlowMode::constrained)));
        worst_quad = std::min(worst_quad, q.dot(d.S * q) / (q.squaredNorm() * d.norm_S));
      }
    };
    probe(triangle, frustrated, JacobianMethod::fd);
    probe(osc, osc_start, JacobianMethod::analytic);
    Vector o2(3);
    o2 << 1.5, 0.8, -0.3;
    probe(osc, o2, JacobianMethod::analytic);
    return quadratic ? worst_quad : worst_rate;
  };

  item("local_entropy_production_rate", "generic_analysis", [&] {
    const double rate = production_probe(false);
    return VerifyItem{"", "", rate >= -1e-10, rate, -1e-10,
                      "min grad H(theta + q)^T F(theta + q) over random tangent q, |q| = 1e-3"};
  });

  item("symmetric_part_semidefinite_on_tangents", "generic_analysis", [&] {
    const double quad = production_probe(true);
    return VerifyItem{"", "", quad >= -1e-8, quad, -1e-8, "min q^T S q / (|q|^2 ||S||) over random tangent q"};
  });

  item("degeneracy_residuals_fd", "generic_analysis", [&] {
    double worst = std::max(tri_dec.residual_Sa, tri_dec.residual_AgradH);
    std::string detail = "N=3: Sa " + fmt(tri_dec.residual_Sa) + ", A grad H " + fmt(tri_dec.residual_AgradH);
    const GenericDecomposition g = decompose(osc, osc_start, JacobianMethod::fd);
    worst = std::max({worst, g.residual_Sa, g.residual_AgradH});
    detail += "; Gaussian: Sa " + fmt(g.residual_Sa) + ", A grad H " + fmt(g.residual_AgradH);
    return VerifyItem{"", "", worst <= 1e-5, worst, 1e-5, detail};
  });

  item("degeneracy_residuals_analytic", "generic_analysis", [&] {
    double worst = 0.0;
    auto points = gaussian_samples(20, rng);
    for (const auto& t : points) {
      const GenericDecomposition g = decompose(osc, t, JacobianMethod::analytic);
      worst = std::max({worst, g.residual_Sa, g.residual_AgradH});
    }
    return VerifyItem{"", "", worst <= 1e-8, worst, 1e-8, "Gaussian, 20 random positive-definite points"};
  });

  item("jacobi_repeated_indices_vanish", "generic_analysis", [&] {
    double worst_repeat = 0.0;   // in units of the threshold
    bool distinct_carry_max = true;
    nlohmann::ordered_json floors = nlohmann::ordered_json::object();
    auto probe = [&](const JacobiReport& r, const std::string& label) {
      double max_repeat = 0.0;
      double max_distinct = 0.0;
      for (const auto& [t, v] : r.violations) {
        const bool repeated = t[0] == t[1] || t[1] == t[2] || t[0] == t[2];
        (repeated ? max_repeat : max_distinct) = std::max(repeated ? max_repeat : max_distinct, std::abs(v));
      }
      worst_repeat = std::max(worst_repeat, max_repeat / r.threshold);
      distinct_carry_max = distinct_carry_max && max_distinct == r.max_abs;
      floors[label] = r.noise_floor;
    };
    JacobiOptions analytic;
    analytic.method = JacobianMethod::analytic;
    probe(jacobi_violation(osc, osc_start, analytic), "jacobi.gaussian_anisotropic");
    Vector asym(6);
    asym << 0.1, -0.3, 0.2, 0.4, -0.2, 0.6;
    probe(jacobi_violation(triangle, asym), "jacobi.n3_asymmetric");
    for (const auto& [k, v] : floors.items()) report.noise_floors[k] = v;
    VerifyItem r;
    r.value = worst_repeat;
    r.limit = 1.0;
    r.passed = worst_repeat <= 1.0 && distinct_carry_max;
    r.detail = "max repeated-index |J| / (10 x noise floor); distinct-index triplets hold the maximum: " +
               std::string(distinct_carry_max ? "yes" : "no");
    return r;
  });

  report.noise_floors["jacobian_step_halving.n3"] =
      detail::jacobian_noise_floor(triangle, frustrated, kJacobianRelStep);
  report.noise_floors["jacobian_step_halving.gaussian"] =
      detail::jacobian_noise_floor(osc, osc_start, kJacobianRelStep);

  // ---- experiments_cli
  const auto configs = verify_artifact_configs();
  const auto scratch = std::filesystem::temp_directory_path() /
                       ("infoflow-verify-" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));

  item("artifacts_byte_stable", "experiments_cli", [&] {
    std::size_t unstable = 0;
    std::string detail;
    for (const auto& cfg : configs) {
      const std::string name = cfg.require_string("experiment");
      for (auto format : {OutputFormat::csv, OutputFormat::json}) {
        std::string tables[2];
        std::string metas[2];
        for (int rep = 0; rep < 2; ++rep) {
          const auto dir = scratch / ("run" + std::to_string(rep));
          const auto out = run_non_verify(cfg);
          const auto files = write_artifacts(dir, out.table, format, out.metadata);
          tables[rep] = read_file(files.table);
          metas[rep] = strip_timestamp(read_file(files.metadata));
        }
        if (tables[0] != tables[1] || metas[0] != metas[1]) {
          ++unstable;
          detail += name + "." + std::string(to_string(format)) + " differs; ";
        }
      }
    }
    // Worker count must not change sweep values.
    Config one = Config::parse("experiment = n3-sweep\nsweep.points = 9\nthreads = 1\n");
    Config many = Config::parse("experiment = n3-sweep\nsweep.points = 9\nthreads = 4\n");
    if (run_non_verify(one).table.to_csv() != run_non_verify(many).table.to_csv()) {
      ++unstable;
      detail += "n3-sweep depends on thread count; ";
    }
    std::error_code ec;
    std::filesystem::remove_all(scratch, ec);
    VerifyItem r;
    r.value = static_cast<double>(unstable);
    r.limit = 0.0;
    r.passed = unstable == 0;
    r.detail = detail.empty() ? "all experiments, csv and json, plus a 1 vs 4 thread sweep" : detail;
    return r;
  });

  item("artifacts_match_schema", "experiments_cli", [&] {
    std::size_t bad = 0;
    std::string detail;
    for (const auto& cfg : configs) {
      const std::string name = cfg.require_string("experiment");
      const auto out = run_non_verify(cfg);
      const auto j = out.table.to_json();
      const bool ok = out.table.row_count() > 0 && csv_header_matches(out.table.to_csv(), name) &&
                      j["columns"].get<std::vector<std::string>>() == schema_columns(name) &&
                      j["rows"].size() == out.table.row_count();
      if (!ok) {
        ++bad;
        detail += name + "; ";
      }
      for (const auto& row : out.table.rows())
        if (row.size() != schema_columns(name).size()) ++bad;
    }
    VerifyItem r;
    r.value = static_cast<double>(bad);
    r.limit = 0.0;
    r.passed = bad == 0;
    r.detail = detail.empty() ? "headers, JSON columns and row widths for every experiment" : detail;
    return r;
  });

  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace infoflow
