#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "infoflow/expfam.hpp"
#include "infoflow/models/gaussian_oscillator.hpp"
#include "infoflow/models/pairwise_binary.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace infoflow;

namespace {

// One +/-1 spin, p(x) ~ exp(theta x). Moments by summing the two states so the
// generic expfam functions can be checked against the closed forms.
struct SingleSpin {
  std::size_t dimension() const { return 1; }
  std::size_t variable_count() const { return 1; }
  void check_domain(const Vector&) const {}
  double log_partition(const Vector& t) const { return std::log(std::exp(t[0]) + std::exp(-t[0])); }
  Vector mean_parameters(const Vector& t) const { return Vector::Constant(1, std::tanh(t[0])); }
  Matrix fisher_information(const Vector& t) const {
    const double m = std::tanh(t[0]);
    return Matrix::Constant(1, 1, 1.0 - m * m);
  }
  Matrix third_cumulant_contraction(const Vector& t, const Vector& v) const {
    const double m = std::tanh(t[0]);
    return Matrix::Constant(1, 1, -2.0 * m * (1.0 - m * m) * v[0]);
  }
  Vector marginal_entropies(const Vector& t) const {
    return Vector::Constant(1, binary_entropy(0.5 * (1.0 + std::tanh(t[0]))));
  }
};
static_assert(ExponentialFamily<SingleSpin>);

Matrix to_matrix(const oracle::Mat& m) {
  Matrix out(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m[i][j];
  return out;
}

Vector random_theta(std::size_t d, unsigned seed, double scale) {
  std::srand(seed);
  Vector t(static_cast<Eigen::Index>(d));
  for (auto& x : t) x = scale * (2.0 * std::rand() / RAND_MAX - 1.0);
  return t;
}

}  // namespace

TEST(LogPartition, SingleSpin) {
  const SingleSpin s;
  EXPECT_NEAR(log_partition(s, vec({0.0})), std::log(2.0), 1e-15);
  EXPECT_NEAR(log_partition(s, vec({0.5})), 0.813262, 1e-6);
  EXPECT_NEAR(log_partition(s, vec({0.5})), oracle::spin_psi(0.5), 1e-15);
}

TEST(LogPartition, GaussianIdentity) {
  const GaussianOscillatorModel g;
  EXPECT_NEAR(log_partition(g, vec({1, 1, 0})), std::log(2 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(log_partition(g, vec({1, 1, 0})), 1.837877, 1e-6);
}

TEST(LogPartition, NoOverflowForLargeTheta) {
  const PairwiseBinaryModel m(4, SpinConvention::plus_minus);
  Vector t = random_theta(m.dimension(), 7, 1.0);
  t *= 50.0 / t.norm();
  const double psi = log_partition(m, t);
  EXPECT_TRUE(std::isfinite(psi));
  EXPECT_NEAR(psi, oracle::pairwise(4, stdvec(t), -1, 1).psi, 1e-12 * std::abs(psi));
  EXPECT_TRUE(mean_parameters(m, t).allFinite());
}

TEST(LogPartition, RejectsBadInput) {
  const PairwiseBinaryModel m(3, SpinConvention::plus_minus);
  EXPECT_THROW(log_partition(m, vec({0, 0, 0})), DimensionError);
  EXPECT_THROW(log_partition(m, vec({0, 0, NAN, 0, 0, 0})), InvalidStateError);
  EXPECT_THROW(log_partition(m, vec({0, 0, INFINITY, 0, 0, 0})), InvalidStateError);
  EXPECT_THROW(NaturalParams(vec({1.0, NAN})), InvalidStateError);
}

TEST(MeanParameters, SingleSpin) {
  const SingleSpin s;
  EXPECT_EQ(mean_parameters(s, vec({0.0}))[0], 0.0);
  EXPECT_NEAR(mean_parameters(s, vec({0.5}))[0], 0.462117, 1e-6);
}

TEST(MeanParameters, MatchEnumeration) {
  for (auto conv : {SpinConvention::plus_minus, SpinConvention::zero_one}) {
    const double lo = conv == SpinConvention::plus_minus ? -1 : 0;
    for (std::size_t n = 2; n <= 6; ++n) {
      const PairwiseBinaryModel m(n, conv);
      const Vector t = random_theta(m.dimension(), static_cast<unsigned>(n), 1.0);
      const auto ref = oracle::pairwise(n, stdvec(t), lo, 1);
      EXPECT_LE((mean_parameters(m, t) - vec(ref.mean)).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(FisherInformation, SingleSpin) {
  const SingleSpin s;
  EXPECT_NEAR(fisher_information(s, vec({0.0}))(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(fisher_information(s, vec({0.5}))(0, 0), 0.786448, 1e-6);
}

TEST(FisherInformation, EqualsCovarianceAndIsPsd) {
  for (auto conv : {SpinConvention::plus_minus, SpinConvention::zero_one}) {
    const double lo = conv == SpinConvention::plus_minus ? -1 : 0;
    for (std::size_t n : {2, 3, 5, 8}) {
      const PairwiseBinaryModel m(n, conv);
      const Vector t = random_theta(m.dimension(), static_cast<unsigned>(10 + n), 0.7);
      const Matrix g = fisher_information(m, t);
      EXPECT_LE((g - g.transpose()).cwiseAbs().maxCoeff(), 1e-12);
      Eigen::SelfAdjointEigenSolver<Matrix> es(g);
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * g.norm());
      EXPECT_LE((g - to_matrix(oracle::pairwise(n, stdvec(t), lo, 1).cov)).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(FisherInformation, MatchesDifferenceOfMeans) {
  const PairwiseBinaryModel m(3, SpinConvention::zero_one);
  const GaussianOscillatorModel g;
  auto check = [](const auto& model, const Vector& t) {
    const Matrix fish = fisher_information(model, t);
    for (Eigen::Index j = 0; j < t.size(); ++j) {
      auto f = [&](const oracle::Vec& x) { return mean_parameters(model, vec(x))[j]; };
      const Vector col = vec(oracle::gradient(f, stdvec(t), 1e-5));
      EXPECT_LE((fish.row(j).transpose() - col).norm(), 1e-6 * fish.norm());
    }
  };
  check(m, vec({0.1, -0.2, 0.3, 0.5, -0.4, 0.2}));
  check(g, vec({1.3, 0.8, 0.25}));
}

TEST(ThirdCumulant, ZeroDirectionAndSymmetricPoint) {
  const PairwiseBinaryModel m(3, SpinConvention::plus_minus);
  const Vector t = vec({0.3, -0.1, 0.2, 0.4, 0.1, -0.3});
  EXPECT_EQ(third_cumulant_contraction(m, t, Vector::Zero(6)).cwiseAbs().maxCoeff(), 0.0);
  const SingleSpin s;
  EXPECT_NEAR(third_cumulant_contraction(s, vec({0.0}), vec({1.0}))(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(third_cumulant_contraction(s, vec({0.4}), vec({1.0}))(0, 0), oracle::spin_third(0.4), 1e-14);
}

TEST(ThirdCumulant, MatchesThirdCentralMoment) {
  for (auto conv : {SpinConvention::plus_minus, SpinConvention::zero_one}) {
    const double lo = conv == SpinConvention::plus_minus ? -1 : 0;
    for (std::size_t n : {2, 3, 4}) {
      const PairwiseBinaryModel m(n, conv);
      const Vector t = random_theta(m.dimension(), static_cast<unsigned>(20 + n), 0.8);
      const Vector v = random_theta(m.dimension(), static_cast<unsigned>(30 + n), 1.0);
      const Matrix c = third_cumulant_contraction(m, t, v);
      EXPECT_LE((c - c.transpose()).cwiseAbs().maxCoeff(), 1e-12);
      const auto ref = oracle::pairwise(n, stdvec(t), lo, 1);
      EXPECT_LE((c - to_matrix(oracle::third_moment(ref, stdvec(v)))).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

TEST(ThirdCumulant, RejectsWrongDimension) {
  const GaussianOscillatorModel g;
  EXPECT_THROW(third_cumulant_contraction(g, vec({1, 1, 0}), vec({1, 0})), DimensionError);
}

TEST(JointEntropy, Examples) {
  const PairwiseBinaryModel m(4, SpinConvention::plus_minus);
  EXPECT_NEAR(joint_entropy(m, Vector::Zero(10)), 4 * std::log(2.0), 1e-14);
  const SingleSpin s;
  EXPECT_NEAR(joint_entropy(s, vec({0.5})), 0.582203, 1e-6);
  const GaussianOscillatorModel g;
  EXPECT_NEAR(joint_entropy(g, vec({1, 1, 0})), 2.837877, 1e-6);
}

TEST(JointEntropy, MatchesShannonSum) {
  const PairwiseBinaryModel m(5, SpinConvention::zero_one);
  const Vector t = random_theta(m.dimension(), 3, 1.0);
  EXPECT_NEAR(joint_entropy(m, t), oracle::pairwise(5, stdvec(t), 0, 1).entropy, 1e-12);
}

TEST(EntropyGradient, Examples) {
  const SingleSpin s;
  EXPECT_EQ(entropy_gradient(s, vec({0.0}))[0], 0.0);
  EXPECT_NEAR(entropy_gradient(s, vec({0.5}))[0], -0.393224, 1e-6);
}

TEST(EntropyGradient, MatchesDifferenceOfEntropy) {
  const PairwiseBinaryModel m(3, SpinConvention::zero_one);
  const GaussianOscillatorModel g;
  auto check = [](const auto& model, const Vector& t) {
    const Vector grad = entropy_gradient(model, t);
    const Vector ref = vec(oracle::gradient([&](const oracle::Vec& x) { return joint_entropy(model, vec(x)); },
                                            stdvec(t), 1e-5));
    EXPECT_LE((grad - ref).norm(), 1e-6 * grad.norm());
  };
  check(m, vec({0.2, -0.4, 0.1, 0.7, 0.3, -0.5}));
  check(g, vec({0.9, 1.4, -0.3}));
}

TEST(MarginalEntropies, Examples) {
  const PairwiseBinaryModel m(3, SpinConvention::plus_minus);
  for (double h : marginal_entropies(m, Vector::Zero(6))) EXPECT_NEAR(h, std::log(2.0), 1e-15);
  const GaussianOscillatorModel g;
  const Vector hg = marginal_entropies(g, vec({1, 1, 0}));
  EXPECT_NEAR(hg[0], 1.418939, 1e-6);
  EXPECT_NEAR(hg[1], 1.418939, 1e-6);
}

TEST(MarginalEntropies, MatchEnumeratedMarginals) {
  for (auto conv : {SpinConvention::plus_minus, SpinConvention::zero_one}) {
    const double lo = conv == SpinConvention::plus_minus ? -1 : 0;
    const PairwiseBinaryModel m(3, conv);
    const Vector t = random_theta(6, 99, 1.2);
    const auto ref = oracle::pairwise(3, stdvec(t), lo, 1);
    const Vector h = marginal_entropies(m, t);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_NEAR(h[static_cast<Eigen::Index>(i)], oracle::bernoulli_entropy(ref.marginal_up[i]), 1e-12);
      EXPECT_LE(h[static_cast<Eigen::Index>(i)], std::log(2.0) + 1e-12);
    }
  }
}

TEST(MarginalEntropies, NonPositiveDefinitePrecisionIsInvalid) {
  const GaussianOscillatorModel g;
  EXPECT_THROW(marginal_entropies(g, vec({1, 1, 1.5})), InvalidStateError);
  EXPECT_THROW(marginal_entropies(g, vec({-1, 1, 0})), InvalidStateError);
}

TEST(ConstraintGradient, Examples) {
  const PairwiseBinaryModel m(3, SpinConvention::plus_minus);
  EXPECT_LE(constraint_gradient(m, Vector::Zero(6)).norm(), 1e-15);
  EXPECT_LE(constraint_gradient_fd(m, Vector::Zero(6)).norm(), 1e-12);
  const GaussianOscillatorModel g;
  EXPECT_NEAR(constraint_gradient(g, vec({1, 1, 0}))[2], 0.0, 1e-15);
}

TEST(ConstraintGradient, RichardsonAgreesWithSingleStep) {
  const PairwiseBinaryModel m(3, SpinConvention::zero_one);
  const GaussianOscillatorModel g;
  auto check = [](const auto& model, const Vector& t) {
    const Vector rich = constraint_gradient_fd(model, t);
    const Vector single = vec(oracle::gradient(
        [&](const oracle::Vec& x) { return constraint_value(model, vec(x)); }, stdvec(t), 6e-6));
    EXPECT_LE((rich - single).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_LE((rich - constraint_gradient(model, t)).cwiseAbs().maxCoeff(), 1e-8);
  };
  check(m, frustrated_triangle_theta());
  check(m, vec({0.3, -0.2, 0.5, 0.1, 0.4, -0.6}));
  check(g, vec({1.0, 0.7, 0.2}));
}

TEST(MultiInformation, ProductDistributionsAreIndependent) {
  const PairwiseBinaryModel m(4, SpinConvention::zero_one);
  Vector t = Vector::Zero(10);
  t.head(4) << 0.3, -1.2, 0.7, 2.0;
  EXPECT_LE(std::abs(multi_information(m, t)), 1e-10);
  const GaussianOscillatorModel g;
  EXPECT_LE(std::abs(multi_information(g, vec({2.0, 0.5, 0.0}))), 1e-12);
}

TEST(MultiInformation, GaussianCorrelation) {
  const GaussianOscillatorModel g;
  for (double c : {-0.6, 0.2, 0.9}) {
    const auto ref = oracle::gaussian(1.2, 0.9, c);
    EXPECT_NEAR(multi_information(g, vec({1.2, 0.9, c})), -0.5 * std::log(1 - ref.rho * ref.rho), 1e-10);
  }
}

TEST(MultiInformation, FrustratedSystemIsCorrelated) {
  const PairwiseBinaryModel m(3, SpinConvention::zero_one);
  EXPECT_GT(multi_information(m, frustrated_triangle_theta()), 0.0);
}

TEST(EntropyReport, Invariants) {
  const PairwiseBinaryModel m(3, SpinConvention::zero_one);
  const Vector t = vec({0.1, 0.5, -0.3, 0.8, -0.9, 0.4});
  const EntropyReport r = entropy_report(m, t);
  EXPECT_NEAR(r.multi_information, r.constraint_value - r.joint, kMultiInfoClamp);
  EXPECT_GE(r.multi_information, -1e-10);
  for (double h : r.marginals) EXPECT_LE(h, std::log(2.0) + 1e-12);
  EXPECT_NEAR(r.constraint_value, r.marginals.sum(), 1e-15);
}

TEST(MultiInformation, NonNegativeOnRandomStates) {
  for (auto conv : {SpinConvention::plus_minus, SpinConvention::zero_one}) {
    const PairwiseBinaryModel m(4, conv);
    for (unsigned seed = 0; seed < 20; ++seed) EXPECT_GE(multi_information(m, random_theta(10, 100 + seed, 2.0)), 0.0);
  }
}
