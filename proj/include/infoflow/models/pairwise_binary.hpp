#pragma once

// Pairwise binary model evaluated by exact enumeration of all 2^n states.
//
// Parameter layout: n bias slots theta_i, then n(n-1)/2 pair slots theta_ij
// with i < j in lexicographic order. Sufficient statistics are
// T(x) = (x_1..x_n, x_1 x_2, x_1 x_3, ..., x_{n-1} x_n).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "infoflow/errors.hpp"
#include "infoflow/expfam.hpp"
#include "infoflow/numeric.hpp"

namespace infoflow {

enum class SpinConvention { plus_minus, zero_one };

inline std::string_view to_string(SpinConvention c) noexcept {
  return c == SpinConvention::plus_minus ? "plus_minus" : "zero_one";
}

inline SpinConvention parse_convention(std::string_view s) {
  if (s == "plus_minus" || s == "pm" || s == "ising") return SpinConvention::plus_minus;
  if (s == "zero_one" || s == "01" || s == "binary") return SpinConvention::zero_one;
  throw ConfigError("unknown spin convention '" + std::string(s) + "'");
}

class PairwiseBinaryModel {
public:
  static constexpr std::size_t kMaxVariables = 20;

  PairwiseBinaryModel(std::size_t n, SpinConvention convention) : n_(n), convention_(convention) {
    if (n < 2 || n > kMaxVariables) {
      throw InvalidStateError("pairwise model needs 2 <= n <= " + std::to_string(kMaxVariables) + ", got " +
                              std::to_string(n));
    }
    pairs_.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) pairs_.emplace_back(i, j);
  }

  [[nodiscard]] std::size_t dimension() const noexcept { return n_ + pairs_.size(); }
  [[nodiscard]] std::size_t variable_count() const noexcept { return n_; }
  [[nodiscard]] std::size_t state_count() const noexcept { return std::size_t{1} << n_; }
  [[nodiscard]] SpinConvention convention() const noexcept { return convention_; }
  [[nodiscard]] const std::vector<std::pair<std::size_t, std::size_t>>& pairs() const noexcept { return pairs_; }

  /// Index of the pair slot (i, j), i < j, in the parameter vector.
  [[nodiscard]] std::size_t pair_index(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    if (i == j || j >= n_) throw DimensionError("invalid pair index");
    // Slots before row i: sum_{r<i} (n-1-r).
    return n_ + i * (2 * n_ - i - 1) / 2 + (j - i - 1);
  }

  void check_domain(const Vector&) const noexcept {}

  /// Spin value of variable i in enumerated state s (bit i of s).
  [[nodiscard]] double spin(std::uint32_t state, std::size_t i) const noexcept {
    const bool up = (state >> i) & 1U;
    if (convention_ == SpinConvention::plus_minus) return up ? 1.0 : -1.0;
    return up ? 1.0 : 0.0;
  }

  /// Sufficient statistics of one state, written into out (size d).
  void statistics(std::uint32_t state, Vector& out) const {
    out.resize(static_cast<Eigen::Index>(dimension()));
    for (std::size_t i = 0; i < n_; ++i) out[static_cast<Eigen::Index>(i)] = spin(state, i);
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
      out[static_cast<Eigen::Index>(n_ + k)] = out[static_cast<Eigen::Index>(pairs_[k].first)] *
                                               out[static_cast<Eigen::Index>(pairs_[k].second)];
    }
  }

  struct Distribution {
    Vector prob;        // p(state), indexed by the bitmask
    double log_partition = 0.0;
  };

  /// Normalised probabilities with log-domain (shift-by-max) accumulation.
  [[nodiscard]] Distribution distribution(const Vector& theta) const {
    const std::size_t count = state_count();
    Vector logw(static_cast<Eigen::Index>(count));
    Vector t;
    for (std::uint32_t s = 0; s < count; ++s) {
      statistics(s, t);
      logw[s] = theta.dot(t);
    }
    const double shift = logw.maxCoeff();
    Distribution d;
    d.prob = (logw.array() - shift).exp().matrix();
    const double z = d.prob.sum();
    d.prob /= z;
    d.log_partition = shift + std::log(z);
    return d;
  }

  [[nodiscard]] double log_partition(const Vector& theta) const { return distribution(theta).log_partition; }

  [[nodiscard]] Vector mean_parameters(const Vector& theta) const { return mean(distribution(theta)); }

  [[nodiscard]] Matrix fisher_information(const Vector& theta) const {
    const Distribution d = distribution(theta);
    const Vector mu = mean(d);
    const auto dim = static_cast<Eigen::Index>(dimension());
    Matrix g = Matrix::Zero(dim, dim);
    Vector t;
    for (std::uint32_t s = 0; s < state_count(); ++s) {
      statistics(s, t);
      t -= mu;
      g.selfadjointView<Eigen::Lower>().rankUpdate(t, d.prob[s]);
    }
    g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
    return g;
  }

  [[nodiscard]] Matrix third_cumulant_contraction(const Vector& theta, const Vector& v) const {
    const Distribution d = distribution(theta);
    const Vector mu = mean(d);
    const auto dim = static_cast<Eigen::Index>(dimension());
    Matrix out = Matrix::Zero(dim, dim);
    Vector t;
    for (std::uint32_t s = 0; s < state_count(); ++s) {
      statistics(s, t);
      t -= mu;
      const double w = d.prob[s] * t.dot(v);
      if (w == 0.0) continue;
      out.selfadjointView<Eigen::Lower>().rankUpdate(t, w);
    }
    out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
    return out;
  }

  /// P(bit i = 1) for each variable.
  [[nodiscard]] Vector upper_marginals(const Distribution& d) const {
    Vector q = Vector::Zero(static_cast<Eigen::Index>(n_));
    for (std::uint32_t s = 0; s < state_count(); ++s)
      for (std::size_t i = 0; i < n_; ++i)
        if ((s >> i) & 1U) q[static_cast<Eigen::Index>(i)] += d.prob[s];
    return q;
  }

  [[nodiscard]] Vector marginal_entropies(const Vector& theta) const {
    const Vector q = upper_marginals(distribution(theta));
    Vector h(q.size());
    for (Eigen::Index i = 0; i < q.size(); ++i) h[i] = binary_entropy(q[i]);
    return h;
  }

  /// Exact gradient of sum_i h_i:
  /// dh_i/dtheta_k = log((1 - q_i) / q_i) * Cov[1{x_i up}, T_k].
  [[nodiscard]] Vector constraint_gradient(const Vector& theta) const {
    const Distribution d = distribution(theta);
    const Vector mu = mean(d);
    const Vector q = upper_marginals(d);
    Vector weight(q.size());
    for (Eigen::Index i = 0; i < q.size(); ++i) {
      if (q[i] <= 0.0 || q[i] >= 1.0) throw NumericalError("constraint_gradient: degenerate marginal");
      weight[i] = std::log1p(-q[i]) - std::log(q[i]);
    }
    Vector a = Vector::Zero(static_cast<Eigen::Index>(dimension()));
    Vector t;
    for (std::uint32_t s = 0; s < state_count(); ++s) {
      statistics(s, t);
      t -= mu;
      double coeff = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        const double indicator = ((s >> i) & 1U) ? 1.0 : 0.0;
        coeff += weight[static_cast<Eigen::Index>(i)] * (indicator - q[static_cast<Eigen::Index>(i)]);
      }
      a += (d.prob[s] * coeff) * t;
    }
    return a;
  }

private:
  [[nodiscard]] Vector mean(const Distribution& d) const {
    Vector mu = Vector::Zero(static_cast<Eigen::Index>(dimension()));
    Vector t;
    for (std::uint32_t s = 0; s < state_count(); ++s) {
      statistics(s, t);
      mu += d.prob[s] * t;
    }
    return mu;
  }

  std::size_t n_;
  SpinConvention convention_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
};

static_assert(ExponentialFamily<PairwiseBinaryModel>);

/// A pairwise model together with a validated parameter vector.
struct PairwiseSystem {
  PairwiseBinaryModel model;
  NaturalParams theta;
};

inline PairwiseSystem build_pairwise(std::size_t n, SpinConvention convention, const Vector& theta) {
  PairwiseBinaryModel model(n, convention);
  if (static_cast<std::size_t>(theta.size()) != model.dimension()) {
    throw DimensionError("pairwise model with n=" + std::to_string(n) + " needs " +
                         std::to_string(model.dimension()) + " parameters, got " + std::to_string(theta.size()));
  }
  return PairwiseSystem{std::move(model), NaturalParams(theta)};
}

/// The frustrated three-variable start: zero biases, couplings
/// (1, -1, 1)/sqrt(3) so that ||theta|| = 1.
inline Vector frustrated_triangle_theta() {
  const double c = 1.0 / std::sqrt(3.0);
  Vector theta(6);
  theta << 0.0, 0.0, 0.0, c, -c, c;
  return theta;
}

}  // namespace infoflow
