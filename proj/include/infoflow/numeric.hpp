#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "infoflow/errors.hpp"

namespace infoflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Neumaier-compensated accumulator. The error term is carried separately
/// so that long sums of mixed-sign terms keep their low-order bits.
class CompensatedSum {
public:
  CompensatedSum& operator+=(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
    return *this;
  }
  CompensatedSum& operator-=(double x) noexcept { return *this += -x; }
  [[nodiscard]] double value() const noexcept { return sum_ + carry_; }

private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) noexcept {
  CompensatedSum acc;
  for (double x : xs) acc += x;
  return acc.value();
}

inline double compensated_sum(const Vector& xs) noexcept {
  return compensated_sum(std::span<const double>(xs.data(), static_cast<std::size_t>(xs.size())));
}

/// log(sum(exp(x))) shifted by the maximum so no term overflows.
inline double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

/// -p log p with the 0 log 0 = 0 convention.
inline double xlogx_neg(double p) noexcept { return p > 0.0 ? -p * std::log(p) : 0.0; }

/// Entropy (nats) of a Bernoulli variable with success probability q.
inline double binary_entropy(double q) noexcept { return xlogx_neg(q) + xlogx_neg(1.0 - q); }

inline bool all_finite(const Vector& v) noexcept { return v.allFinite(); }
inline bool all_finite(const Matrix& m) noexcept { return m.allFinite(); }

inline void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw NumericalError(std::string(what) + ": non-finite result");
}

inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw NumericalError(std::string(what) + ": non-finite result");
}

inline Matrix symmetric_part(const Matrix& m) { return 0.5 * (m + m.transpose()); }
inline Matrix antisymmetric_part(const Matrix& m) { return 0.5 * (m - m.transpose()); }

}  // namespace infoflow
