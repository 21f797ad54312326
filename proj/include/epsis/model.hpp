#pragma once

// The epsilon-SIS chain on {0, ..., N}: rates, generator rows and the
// closed-form constants derived from (lambda, mu, epsilon).

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace epsis {

using State = std::int64_t;

/// Parameters of the chain. All rates are per unit time.
struct ModelParams {
  double lambda = 1.0;   ///< contact rate
  double mu = 2.0;       ///< recovery rate
  double epsilon = 0.5;  ///< self-infection rate
  State N = 100;         ///< population size

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw std::domain_error("lambda must be positive and finite");
    if (!(mu > 0.0) || !std::isfinite(mu))
      throw std::domain_error("mu must be positive and finite");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
      throw std::domain_error("epsilon must be positive and finite");
    if (N < 1) throw std::domain_error("N must be at least 1");
  }

  [[nodiscard]] double rate_sum() const { return lambda + mu + epsilon; }

  /// Uniform bound on the total jump rate, (lambda + mu + epsilon) N.
  [[nodiscard]] double uniformization_rate() const {
    return rate_sum() * static_cast<double>(N);
  }
};

struct DerivedQuantities {
  double J = 0.0;        ///< sqrt((lambda-mu-eps)^2 + 4 lambda eps)
  double x_star = 0.0;   ///< stable fixed point of the mean-field ODE
  double x1_star = 0.0;  ///< the other (nonpositive) root
  double t_N = 0.0;      ///< cutoff location log(N) / (2J)
  double k = 0.0;        ///< (lambda + mu + eps) / (2J)
};

struct GeneratorRow {
  double down = 0.0;
  double up = 0.0;
  double diag = 0.0;
};

namespace detail {

inline void check_state(const ModelParams& p, State x) {
  if (x < 0 || x > p.N)
    throw std::domain_error("state " + std::to_string(x) +
                            " outside {0.." + std::to_string(p.N) + "}");
}

}  // namespace detail

/// x -> x+1 at rate lambda x (1 - x/N) + epsilon (N - x).
inline double birth_rate(const ModelParams& p, State x) {
  detail::check_state(p, x);
  const double n = static_cast<double>(p.N);
  const double xd = static_cast<double>(x);
  const double susceptible = static_cast<double>(p.N - x);
  // x/N is formed first so nothing of order N^2 is ever materialised.
  return p.lambda * xd * (susceptible / n) + p.epsilon * susceptible;
}

/// x -> x-1 at rate mu x.
inline double death_rate(const ModelParams& p, State x) {
  detail::check_state(p, x);
  return p.mu * static_cast<double>(x);
}

inline GeneratorRow generator_row(const ModelParams& p, State x) {
  GeneratorRow row;
  row.down = death_rate(p, x);
  row.up = birth_rate(p, x);
  row.diag = -(row.down + row.up);
  return row;
}

inline DerivedQuantities derived(const ModelParams& p) {
  p.validate();
  const double a = p.lambda - p.mu - p.epsilon;
  DerivedQuantities d;
  d.J = std::hypot(a, 2.0 * std::sqrt(p.lambda * p.epsilon));
  // (a + J) suffers cancellation when a << 0; use the product of roots
  // x_star * x1_star = -eps/lambda instead.
  if (a >= 0.0) {
    d.x_star = (a + d.J) / (2.0 * p.lambda);
    d.x1_star = -p.epsilon / (p.lambda * d.x_star);
  } else {
    d.x1_star = (a - d.J) / (2.0 * p.lambda);
    d.x_star = -p.epsilon / (p.lambda * d.x1_star);
  }
  d.t_N = std::log(static_cast<double>(p.N)) / (2.0 * d.J);
  d.k = p.rate_sum() / (2.0 * d.J);
  return d;
}

/// Right-hand side of dx/dt = lambda x (1-x) + eps (1-x) - mu x.
inline double mean_field_drift(const ModelParams& p, double x) {
  return p.lambda * x * (1.0 - x) + p.epsilon * (1.0 - x) - p.mu * x;
}

}  // namespace epsis
