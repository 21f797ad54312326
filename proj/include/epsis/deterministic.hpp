#pragma once

// Closed-form solutions of the mean-field logistic ODE with self-infection
// and of the perturbed Riccati equations that sandwich the exact mean.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "epsis/model.hpp"

namespace epsis {

/// Constants of the perturbed equation dz/dt = -lambda z^2 - J z - C with
/// C = delta (2J - delta) / (4 lambda), so that its roots are c2 and c3.
struct EnvelopeParams {
  double delta = 0.0;
  double c1 = 0.0;  ///< J - delta
  double c2 = 0.0;  ///< -delta / (2 lambda), the attracting root
  double c3 = 0.0;  ///< -J/lambda + delta/(2 lambda), the repelling root

  static EnvelopeParams make(const ModelParams& p, double delta) {
    const double J = derived(p).J;
    if (!(delta >= 0.0) || !(delta < J))
      throw std::domain_error("envelope delta must lie in [0, J)");
    EnvelopeParams e;
    e.delta = delta;
    e.c1 = J - delta;
    e.c2 = -delta / (2.0 * p.lambda);
    e.c3 = -J / p.lambda + delta / (2.0 * p.lambda);
    return e;
  }

  /// The constant C of the perturbed equation.
  [[nodiscard]] double forcing(const ModelParams& p) const {
    return delta * (2.0 * (c1 + delta) - delta) / (4.0 * p.lambda);
  }
};

/// Inverse of EnvelopeParams::forcing: delta such that the perturbed
/// equation carries forcing C, i.e. J - sqrt(J^2 - 4 lambda C).
inline double envelope_delta_for_forcing(const ModelParams& p, double forcing) {
  const double J = derived(p).J;
  const double disc = J * J - 4.0 * p.lambda * forcing;
  if (!(forcing >= 0.0) || !(disc > 0.0))
    throw std::domain_error("forcing must lie in [0, J^2 / (4 lambda))");
  return J - std::sqrt(disc);
}

namespace detail {

// Solution of dz/dt = -lambda (z - c2)(z - c3) with z(0) = z0, written with
// e^{-c1 t} factored out so large t neither overflows nor produces 0/0.
inline double riccati_solution(double lambda, double c1, double c2, double c3,
                               double z0, double t) {
  const double decay = std::exp(-c1 * t);
  if (decay == 0.0) return c2;
  const double num = (c1 / lambda) * (z0 - c2) * decay;
  const double den = (z0 - c3) - (z0 - c2) * decay;
  return c2 + num / den;
}

}  // namespace detail

/// x(t) for dx/dt = lambda x(1-x) + eps(1-x) - mu x, x(0) = alpha.
inline double ode_solution(const ModelParams& p, double alpha, double t) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::domain_error("initial proportion must lie in [0, 1]");
  if (!(t >= 0.0)) throw std::domain_error("time must be nonnegative");
  const auto d = derived(p);
  const double y = detail::riccati_solution(p.lambda, d.J, 0.0, -d.J / p.lambda,
                                            alpha - d.x_star, t);
  return std::clamp(d.x_star + y, 0.0, 1.0);
}

/// Exponential envelope 2J/(J - (lambda-mu-eps)) |y0| e^{-tJ} on the
/// distance of the ODE solution from x_star.
inline double decay_bound(const ModelParams& p, double y0, double t) {
  const auto d = derived(p);
  constexpr double slack = 1e-12;
  if (!(y0 >= -d.x_star - slack && y0 <= 1.0 - d.x_star + slack))
    throw std::domain_error("centred proportion outside [-x*, 1-x*]");
  const double a = p.lambda - p.mu - p.epsilon;
  return 2.0 * d.J / (d.J - a) * std::abs(y0) * std::exp(-t * d.J);
}

struct MeanEnvelope {
  double lower = 0.0;  ///< z(t), perturbed logistic with forcing
  double upper = 0.0;  ///< y(t), the unperturbed centred solution
};

/// Lower and upper comparison solutions for the centred mean E Y_N(t),
/// started from y0.
inline MeanEnvelope mean_envelope(const ModelParams& p, double y0, double delta,
                                  double t) {
  const auto e = EnvelopeParams::make(p, delta);
  if (!(t >= 0.0)) throw std::domain_error("time must be nonnegative");
  if (!(y0 > e.c3))
    throw std::domain_error("y0 at or below -(2J - delta)/(2 lambda)");
  const double J = e.c1 + e.delta;
  MeanEnvelope env;
  env.lower = detail::riccati_solution(p.lambda, e.c1, e.c2, e.c3, y0, t);
  env.upper = detail::riccati_solution(p.lambda, J, 0.0, -J / p.lambda, y0, t);
  return env;
}

/// Bound on |E Y_N(t)| uniform over the starting point, assembled from the
/// extreme envelopes: -z(t) started at -x*, delta/(2 lambda), and y(t)
/// started at 1 - x*.
inline double mean_deviation_bound(const ModelParams& p, double y0, double delta,
                                   double t) {
  const auto d = derived(p);
  const double floor = delta / (2.0 * p.lambda);
  if (y0 < -floor) return -mean_envelope(p, -d.x_star, delta, t).lower;
  if (y0 <= 0.0) return floor;
  return std::max(floor, mean_envelope(p, 1.0 - d.x_star, 0.0, t).upper);
}

}  // namespace epsis
