#pragma once

// Brute-force references over explicit state lists, used by the verify suite.
// They share nothing with the model classes beyond the definition of T(x):
// weights are exp(theta^T T(x)) accumulated in long double, two-pass moments.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "infoflow/numeric.hpp"

namespace infoflow::reference {

struct Enumeration {
  std::vector<Vector> stats;       // T(x) per state
  std::vector<std::vector<int>> values;  // variable values per state
};

/// All 2^n states of n binary variables with values {lo, hi} and pairwise
/// statistics (x_1..x_n, x_i x_j for i < j).
inline Enumeration pairwise_states(std::size_t n, int lo, int hi) {
  Enumeration e;
  const std::size_t d = n + n * (n - 1) / 2;
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
    std::vector<int> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = ((s >> i) & 1U) ? hi : lo;
    Vector t(static_cast<Eigen::Index>(d));
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) t[static_cast<Eigen::Index>(k++)] = x[i];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) t[static_cast<Eigen::Index>(k++)] = x[i] * x[j];
    e.stats.push_back(std::move(t));
    e.values.push_back(std::move(x));
  }
  return e;
}

/// All 2^n +/-1 states with T(x) = (M, M^2 / 2n), M = sum_i x_i.
inline Enumeration curie_weiss_states(std::size_t n) {
  Enumeration e;
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
    std::vector<int> x(n);
    int m = 0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = ((s >> i) & 1U) ? 1 : -1;
      m += x[i];
    }
    Vector t(2);
    t << m, static_cast<double>(m) * m / (2.0 * static_cast<double>(n));
    e.stats.push_back(std::move(t));
    e.values.push_back(std::move(x));
  }
  return e;
}

struct Moments {
  double log_partition = 0.0;
  std::vector<double> prob;
  Vector mean;
  Matrix covariance;
  double entropy = 0.0;  // -sum p log p
};

inline Moments moments(const Enumeration& e, const Vector& theta) {
  Moments m;
  const std::size_t count = e.stats.size();
  std::vector<long double> logw(count);
  long double top = -INFINITY;
  for (std::size_t s = 0; s < count; ++s) {
    long double acc = 0.0L;
    for (Eigen::Index k = 0; k < theta.size(); ++k) acc += static_cast<long double>(theta[k]) * e.stats[s][k];
    logw[s] = acc;
    top = std::max(top, acc);
  }
  long double z = 0.0L;
  for (auto lw : logw) z += std::exp(lw - top);
  const long double log_z = top + std::log(z);
  m.log_partition = static_cast<double>(log_z);
  m.prob.resize(count);
  long double ent = 0.0L;
  for (std::size_t s = 0; s < count; ++s) {
    const long double p = std::exp(logw[s] - log_z);
    m.prob[s] = static_cast<double>(p);
    if (p > 0) ent -= p * (logw[s] - log_z);
  }
  m.entropy = static_cast<double>(ent);
  const auto d = theta.size();
  std::vector<long double> mean(static_cast<std::size_t>(d), 0.0L);
  for (std::size_t s = 0; s < count; ++s)
    for (Eigen::Index k = 0; k < d; ++k) mean[static_cast<std::size_t>(k)] += m.prob[s] * static_cast<long double>(e.stats[s][k]);
  m.mean.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) m.mean[k] = static_cast<double>(mean[static_cast<std::size_t>(k)]);
  m.covariance = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      long double c = 0.0L;
      for (std::size_t s = 0; s < count; ++s) {
        c += m.prob[s] * (e.stats[s][i] - mean[static_cast<std::size_t>(i)]) *
             (e.stats[s][j] - mean[static_cast<std::size_t>(j)]);
      }
      m.covariance(i, j) = static_cast<double>(c);
    }
  return m;
}

/// E[(T - mu)_i (T - mu)_j ((T - mu) . v)].
inline Matrix contracted_third_moment(const Enumeration& e, const Moments& m, const Vector& v) {
  const auto d = m.mean.size();
  Matrix out = Matrix::Zero(d, d);
  for (std::size_t s = 0; s < e.stats.size(); ++s) {
    const Vector c = e.stats[s] - m.mean;
    out += (m.prob[s] * c.dot(v)) * c * c.transpose();
  }
  return out;
}

/// Entropies of the single-variable marginals.
inline Vector marginal_entropies(const Enumeration& e, const Moments& m) {
  const std::size_t n = e.values.empty() ? 0 : e.values.front().size();
  Vector h(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<int, long double>> table;
    for (std::size_t s = 0; s < e.values.size(); ++s) {
      const int x = e.values[s][i];
      auto it = std::find_if(table.begin(), table.end(), [&](const auto& kv) { return kv.first == x; });
      if (it == table.end()) {
        table.emplace_back(x, m.prob[s]);
      } else {
        it->second += m.prob[s];
      }
    }
    long double ent = 0.0L;
    for (const auto& [x, p] : table)
      if (p > 0) ent -= p * std::log(p);
    h[static_cast<Eigen::Index>(i)] = static_cast<double>(ent);
  }
  return h;
}

}  // namespace infoflow::reference
