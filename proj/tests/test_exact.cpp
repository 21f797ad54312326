#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <vector>

#include "epsis/exact.hpp"

using namespace epsis;

namespace {

const ModelParams kRef{1.0, 2.0, 0.5, 100};

ModelParams ref(State N) {
  auto p = kRef;
  p.N = N;
  return p;
}

Eigen::MatrixXd dense_generator(const ModelParams& p) {
  const auto n = static_cast<Eigen::Index>(p.N + 1);
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    const auto r = generator_row(p, x);
    Q(x, x) = r.diag;
    if (x + 1 < n) Q(x, x + 1) = r.up;
    if (x > 0) Q(x, x - 1) = r.down;
  }
  return Q;
}

}  // namespace

TEST(Stationary, MatchesDenseNullVector) {
  const auto p = ref(50);
  const Eigen::MatrixXd Qt = dense_generator(p).transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Qt);
  Eigen::VectorXd v = lu.kernel().col(0);
  v /= v.sum();
  const auto pi = stationary_distribution(p);
  for (std::size_t x = 0; x < pi.size(); ++x) EXPECT_NEAR(pi[x], v(static_cast<Eigen::Index>(x)), 1e-12);
}

TEST(Stationary, DetailedBalanceAndInvariance) {
  for (State N : {1, 10, 100, 3200}) {
    const auto p = ref(N);
    const auto pi = stationary_distribution(p);
    EXPECT_NEAR(pi.total(), 1.0, 1e-13);
    for (State x = 0; x < N; ++x) {
      const auto i = static_cast<std::size_t>(x);
      EXPECT_LE(std::abs(pi[i] * birth_rate(p, x) - pi[i + 1] * death_rate(p, x + 1)), 1e-12);
    }
    double worst = 0.0;
    for (double v : apply_generator(p, pi.values())) worst = std::max(worst, std::abs(v));
    EXPECT_LE(worst, 1e-10 * p.uniformization_rate());
  }
}

TEST(Stationary, TwoStateClosedForm) {
  const auto pi = stationary_distribution(ref(1));
  EXPECT_NEAR(pi[0], 0.8, 1e-15);
  EXPECT_NEAR(pi[1], 0.2, 1e-15);
}

TEST(Stationary, LargePopulationHasNoUnderflowTrouble) {
  const auto p = ref(100000);
  const auto pi = stationary_distribution(p);
  EXPECT_NEAR(pi.total(), 1.0, 1e-12);
  EXPECT_NEAR(pi.mean() / 100000.0, derived(p).x_star, 1e-3);
}

TEST(Stationary, RangeRestriction) {
  const auto p = ref(20);
  const auto pi = stationary_on_range(p, 3, 9);
  EXPECT_NEAR(pi.total(), 1.0, 1e-14);
  EXPECT_EQ(pi[2], 0.0);
  EXPECT_EQ(pi[10], 0.0);
  EXPECT_THROW(stationary_on_range(p, 9, 3), std::domain_error);
  EXPECT_THROW(stationary_on_range(p, 0, 21), std::domain_error);
}

TEST(Tv, Properties) {
  const ProbabilityVector a({0.5, 0.5, 0.0}), b({0.0, 0.5, 0.5}), c({0.2, 0.3, 0.5});
  EXPECT_DOUBLE_EQ(tv_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(tv_distance(a, b), 0.5);
  EXPECT_DOUBLE_EQ(tv_distance(a, b), tv_distance(b, a));
  EXPECT_LE(tv_distance(a, b), tv_distance(a, c) + tv_distance(c, b) + 1e-15);
  EXPECT_DOUBLE_EQ(tv_distance(ProbabilityVector::point_mass(3, 0), ProbabilityVector::point_mass(3, 2)), 1.0);
  EXPECT_THROW(tv_distance(a, ProbabilityVector({1.0})), std::domain_error);
}

TEST(Poisson, WindowMatchesDirectWeights) {
  for (double mean : {0.5, 3.0, 40.0, 900.0}) {
    const auto w = poisson_window(mean, 1e-12);
    EXPECT_LE(w.truncated_mass, 1e-12);
    double s = 0.0;
    for (std::size_t k = 0; k < w.weights.size(); ++k) {
      const double kk = static_cast<double>(w.left + k);
      const double direct = std::exp(-mean + kk * std::log(mean) - std::lgamma(kk + 1.0));
      EXPECT_NEAR(w.weights[k], direct, 1e-10 * std::max(direct, 1e-300) + 1e-16);
      s += w.weights[k];
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Poisson, HugeMeanStaysAccurate) {
  const auto w = poisson_window(5.6e6, 1e-12);
  EXPECT_LE(w.truncated_mass, 1e-12);
  double s = 0.0, m = 0.0;
  for (std::size_t k = 0; k < w.weights.size(); ++k) {
    s += w.weights[k];
    m += static_cast<double>(w.left + k) * w.weights[k];
  }
  EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_NEAR(m / 5.6e6, 1.0, 1e-10);
}

TEST(Transient, TwoStateClosedForm) {
  const auto p = ref(1);
  const auto law = transient_distribution(p, ProbabilityVector::point_mass(2, 0), 1.0);
  EXPECT_NEAR(law[1], 0.2 * (1.0 - std::exp(-2.5)), 1e-12);
  EXPECT_NEAR(law[1], 0.183583, 1e-6);
}

TEST(Transient, MatchesDenseMatrixExponential) {
  const auto p = ref(50);
  const Eigen::MatrixXd Q = dense_generator(p);
  for (double t : {0.01, 0.3, 1.0, 3.0})
    for (State x0 : {State{0}, State{17}, State{50}}) {
      const Eigen::MatrixXd P = (Q * t).exp();
      const auto law = transient_distribution(p, ProbabilityVector::point_mass(51, x0), t);
      for (Eigen::Index y = 0; y <= 50; ++y)
        EXPECT_NEAR(law[static_cast<std::size_t>(y)], P(x0, y), 1e-11) << "t=" << t << " x0=" << x0;
    }
}

TEST(Transient, ConservesMassAndStaysNonnegative) {
  const auto p = ref(300);
  const auto r = transient_with_report(p, ProbabilityVector::point_mass(301, 300), 2.0);
  EXPECT_NEAR(r.law.total(), 1.0, 1e-13);
  for (double v : r.law.values()) EXPECT_GE(v, 0.0);
  EXPECT_LE(r.truncation_error, 1e-12);
  EXPECT_GT(r.steps, 0u);
}

TEST(Transient, ZeroTimeIsIdentity) {
  const auto p = ref(10);
  const auto law = transient_distribution(p, ProbabilityVector::point_mass(11, 4), 0.0);
  EXPECT_EQ(law[4], 1.0);
}

TEST(Transient, SemigroupProperty) {
  const auto p = ref(80);
  const auto start = ProbabilityVector::point_mass(81, 80);
  const auto direct = transient_distribution(p, start, 1.7);
  const auto composed = transient_distribution(p, transient_distribution(p, start, 0.6), 1.1);
  EXPECT_LE(tv_distance(direct, composed), 1e-11);
}

TEST(Transient, LongTimeReachesStationaryLaw) {
  const auto p = ref(100);
  const double t = 50.0 / derived(p).J;
  for (State x0 : {State{0}, State{100}}) {
    const auto law = transient_distribution(p, ProbabilityVector::point_mass(101, x0), t);
    EXPECT_LE(tv_distance(law, stationary_distribution(p)), 1e-8);
  }
}

TEST(Transient, RejectsBadInput) {
  const auto p = ref(10);
  EXPECT_THROW(transient_distribution(p, ProbabilityVector::point_mass(11, 0), -1.0), std::domain_error);
  EXPECT_THROW(transient_distribution(p, ProbabilityVector::point_mass(5, 0), 1.0), std::domain_error);
}

TEST(Transient, MomentsOfTwoStateChain) {
  const auto m = transient_moments(ref(1), 0, 1.0);
  const double q = 0.2 * (1.0 - std::exp(-2.5));
  EXPECT_NEAR(m.mean, q, 1e-12);
  EXPECT_NEAR(m.variance, q * (1 - q), 1e-12);
}

TEST(Mixing, TwoStateClosedForm) {
  // Worst start is 1: TV = 0.8 exp(-2.5 t).
  const auto p = ref(1);
  const double levels[] = {0.5, 0.25, 0.1};
  const auto tm = mixing_times(p, levels, StartSet::endpoints(p));
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_NEAR(tm[i], std::log(0.8 / levels[i]) / 2.5, kMixingTimeTolerance);
  EXPECT_NEAR(mixing_time(p, 0.25, StartSet::full(p)), std::log(3.2) / 2.5, kMixingTimeTolerance);
}

TEST(Mixing, ProfileAtMixingTimeHitsLevel) {
  const auto p = ref(200);
  const auto starts = StartSet::endpoints(p);
  const double t = mixing_time(p, 0.25, starts);
  const double ts[] = {t - 1e-3, t + 1e-4};
  const auto prof = mixing_profile(p, ts, starts);
  EXPECT_GT(prof.rho[0], 0.25);
  EXPECT_LE(prof.rho[1], 0.25);
}

TEST(Mixing, ProfileIsNonIncreasing) {
  const auto p = ref(150);
  std::vector<double> ts;
  for (int i = 0; i <= 40; ++i) ts.push_back(0.1 * i);
  const auto prof = mixing_profile(p, ts, StartSet::full(p));
  const auto pi = stationary_distribution(p);
  const double min_pi = *std::min_element(pi.values().begin(), pi.values().end());
  EXPECT_NEAR(prof.rho.front(), 1.0 - min_pi, 1e-15);
  for (std::size_t i = 1; i < prof.rho.size(); ++i) EXPECT_LE(prof.rho[i], prof.rho[i - 1] + 1e-12);
}

TEST(Mixing, EndpointsAgreeWithFullStartSet) {
  const auto p = ref(200);
  const std::vector<double> levels{0.9, 0.75, 0.5, 0.25, 0.1};
  ExactOptions opt;
  opt.threads = 4;
  const auto ends = mixing_times(p, levels, StartSet::endpoints(p), opt);
  const auto full = mixing_times(p, levels, StartSet::full(p), opt);
  for (std::size_t i = 0; i < levels.size(); ++i) EXPECT_NEAR(ends[i], full[i], 2 * kMixingTimeTolerance);
}

TEST(Mixing, ThreadCountDoesNotChangeResults) {
  const auto p = ref(120);
  const std::vector<double> levels{0.5, 0.1};
  ExactOptions one, many;
  many.threads = 8;
  EXPECT_EQ(mixing_times(p, levels, StartSet::full(p), one), mixing_times(p, levels, StartSet::full(p), many));
}

TEST(Mixing, RejectsBadInput) {
  const auto p = ref(10);
  const double bad_level[] = {1.0};
  EXPECT_THROW(mixing_times(p, bad_level, StartSet::endpoints(p)), std::domain_error);
  EXPECT_THROW(mixing_time(p, 0.25, StartSet{}), std::domain_error);
  EXPECT_THROW(mixing_time(p, 0.25, StartSet{{11}}), std::domain_error);
  const double unsorted[] = {1.0, 0.5};
  EXPECT_THROW(mixing_profile(p, unsorted, StartSet::endpoints(p)), std::domain_error);
}

TEST(Gap, TwoStateClosedForm) {
  const auto g = spectral_gap(ref(1));
  EXPECT_NEAR(g.gap, 2.5, 1e-12);
  EXPECT_NEAR(g.relaxation_time, 0.4, 1e-12);
}

TEST(Gap, MatchesDenseEigenvalues) {
  for (State N : {5, 50, 200}) {
    const auto p = ref(N);
    const auto pi = stationary_distribution(p);
    const auto n = static_cast<Eigen::Index>(N + 1);
    const Eigen::MatrixXd Q = dense_generator(p);
    Eigen::MatrixXd S(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        S(i, j) = -std::sqrt(pi[static_cast<std::size_t>(i)] / pi[static_cast<std::size_t>(j)]) * Q(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    EXPECT_NEAR(es.eigenvalues()(0), 0.0, 1e-9);
    EXPECT_NEAR(spectral_gap(p).gap, es.eigenvalues()(1), 1e-9 * es.eigenvalues()(1));
  }
}

TEST(Gap, ApproachesJForLargePopulations) {
  const double J = derived(kRef).J;
  EXPECT_NEAR(spectral_gap(ref(2000)).gap, J, 1e-2);
}
