#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "epsis/deterministic.hpp"
#include "epsis/exact.hpp"

using namespace epsis;

namespace {

const ModelParams kRef{1.0, 2.0, 0.5, 1000};

// Classical fourth-order Runge-Kutta for a scalar autonomous ODE.
double rk4(const std::function<double(double)>& f, double y, double t, int steps) {
  const double h = t / steps;
  for (int i = 0; i < steps; ++i) {
    const double k1 = f(y), k2 = f(y + 0.5 * h * k1), k3 = f(y + 0.5 * h * k2),
                 k4 = f(y + h * k3);
    y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return y;
}

}  // namespace

TEST(Ode, StartsAtInitialValue) {
  EXPECT_NEAR(ode_solution(kRef, 0.0, 0.0), 0.0, 1e-15);
  EXPECT_NEAR(ode_solution(kRef, 0.7, 0.0), 0.7, 1e-15);
}

TEST(Ode, FixedPointIsStationary) {
  const double xs = derived(kRef).x_star;
  for (double t : {0.1, 1.0, 10.0}) EXPECT_NEAR(ode_solution(kRef, xs, t), xs, 1e-12);
}

TEST(Ode, ConvergesToFixedPoint) {
  EXPECT_NEAR(ode_solution(kRef, 0.0, 50.0), derived(kRef).x_star, 1e-12);
  EXPECT_NEAR(ode_solution(kRef, 1.0, 1e6), derived(kRef).x_star, 1e-12);
}

TEST(Ode, MatchesRungeKutta) {
  for (const auto& p : {kRef, ModelParams{3.0, 1.0, 0.2, 1}, ModelParams{0.5, 0.5, 0.01, 1}}) {
    auto f = [&](double x) { return mean_field_drift(p, x); };
    for (double alpha : {0.0, 0.1, 0.5, 1.0})
      for (double t : {0.05, 0.5, 2.0, 6.0})
        EXPECT_NEAR(ode_solution(p, alpha, t), rk4(f, alpha, t, 20000), 1e-10)
            << "alpha=" << alpha << " t=" << t;
  }
}

TEST(Ode, SemigroupProperty) {
  for (double alpha : {0.0, 0.3, 0.9, 1.0})
    for (double s : {0.1, 0.7, 3.0})
      for (double t : {0.2, 1.3}) {
        const double direct = ode_solution(kRef, alpha, s + t);
        const double composed = ode_solution(kRef, ode_solution(kRef, alpha, s), t);
        EXPECT_NEAR(direct, composed, 1e-10);
      }
}

TEST(Ode, DecayBoundHolds) {
  const auto d = derived(kRef);
  for (double alpha = 0.0; alpha <= 1.0; alpha += 0.05)
    for (double t = 0.0; t < 8.0; t += 0.1) {
      const double y0 = alpha - d.x_star;
      EXPECT_LE(std::abs(ode_solution(kRef, alpha, t) - d.x_star), decay_bound(kRef, y0, t) + 1e-15);
    }
}

TEST(Ode, DecayRateIsJ) {
  const auto d = derived(kRef);
  const double y1 = ode_solution(kRef, 0.9, 10.0) - d.x_star;
  const double y2 = ode_solution(kRef, 0.9, 11.0) - d.x_star;
  EXPECT_NEAR(std::log(y1 / y2), d.J, 1e-6);
}

TEST(Ode, RejectsBadInput) {
  EXPECT_THROW(ode_solution(kRef, -0.1, 1.0), std::domain_error);
  EXPECT_THROW(ode_solution(kRef, 1.1, 1.0), std::domain_error);
  EXPECT_THROW(ode_solution(kRef, 0.5, -1.0), std::domain_error);
  EXPECT_THROW(decay_bound(kRef, 0.8, 1.0), std::domain_error);
}

TEST(Envelope, ForcingRoundTrip) {
  for (double delta : {0.0, 0.01, 0.5, 2.0}) {
    const auto e = EnvelopeParams::make(kRef, delta);
    EXPECT_NEAR(envelope_delta_for_forcing(kRef, e.forcing(kRef)), delta, 1e-12);
    // c2 and c3 are the roots of -lambda z^2 - J z - C.
    for (double z : {e.c2, e.c3})
      EXPECT_NEAR(-kRef.lambda * z * z - derived(kRef).J * z - e.forcing(kRef), 0.0, 1e-12);
  }
  EXPECT_THROW(EnvelopeParams::make(kRef, derived(kRef).J), std::domain_error);
  EXPECT_THROW(EnvelopeParams::make(kRef, -0.1), std::domain_error);
}

TEST(Envelope, LowerMatchesRungeKutta) {
  const double J = derived(kRef).J;
  for (double delta : {0.0, 0.05, 0.3}) {
    const auto e = EnvelopeParams::make(kRef, delta);
    const double C = e.forcing(kRef);
    auto f = [&](double z) { return -kRef.lambda * z * z - J * z - C; };
    for (double y0 : {-0.28, 0.0, 0.4, 0.7})
      for (double t : {0.3, 1.0, 4.0})
        EXPECT_NEAR(mean_envelope(kRef, y0, delta, t).lower, rk4(f, y0, t, 20000), 1e-10);
  }
}

TEST(Envelope, LowerBelowUpper) {
  for (double y0 : {-0.28, -0.1, 0.0, 0.5})
    for (double t : {0.0, 0.5, 2.0}) {
      const auto env = mean_envelope(kRef, y0, 0.2, t);
      EXPECT_LE(env.lower, env.upper + 1e-15);
    }
}

TEST(Envelope, LowerTendsToAttractingRoot) {
  const auto e = EnvelopeParams::make(kRef, 0.3);
  EXPECT_NEAR(mean_envelope(kRef, 0.5, 0.3, 200.0).lower, e.c2, 1e-12);
}

// The exact centred mean obeys d/dt E Y = -lambda (E Y)^2 - J E Y - lambda Var Y,
// so it lies between the unforced solution and the solution forced with
// lambda * sup Var Y.
TEST(Envelope, SandwichesExactMean) {
  const ModelParams p{1.0, 2.0, 0.5, 200};
  const auto d = derived(p);
  const double n = static_cast<double>(p.N);
  for (State x0 : {State{0}, State{120}, State{200}}) {
    std::vector<double> ts, means;
    double max_var = 0.0;
    for (double t = 0.0; t <= 4.0; t += 0.1) {
      const auto m = transient_moments(p, x0, t);
      ts.push_back(t);
      means.push_back(m.mean / n - d.x_star);
      max_var = std::max(max_var, m.variance / (n * n));
    }
    const double delta = envelope_delta_for_forcing(p, p.lambda * max_var);
    const double y0 = static_cast<double>(x0) / n - d.x_star;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const auto env = mean_envelope(p, y0, delta, ts[i]);
      EXPECT_LE(env.lower, means[i] + 1e-9) << "x0=" << x0 << " t=" << ts[i];
      EXPECT_GE(env.upper, means[i] - 1e-9) << "x0=" << x0 << " t=" << ts[i];
      EXPECT_LE(std::abs(means[i]), mean_deviation_bound(p, y0, delta, ts[i]) + 1e-9);
    }
  }
}

TEST(Envelope, DeviationBoundFloor) {
  const double delta = 0.2;
  const double floor = delta / (2.0 * kRef.lambda);
  EXPECT_DOUBLE_EQ(mean_deviation_bound(kRef, -0.5 * floor, delta, 3.0), floor);
  EXPECT_GE(mean_deviation_bound(kRef, 0.5, delta, 0.0), 0.5 - 1e-12);
  EXPECT_GE(mean_deviation_bound(kRef, -0.25, delta, 0.0), 0.25 - 1e-12);
}
