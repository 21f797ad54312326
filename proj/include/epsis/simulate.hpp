#pragma once

// Event-driven simulation of the chain, of the independent coupling of two
// copies, and of the chain reflected at the edges of an interval around
// x_star; plus the path functionals used by the concentration checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "epsis/deterministic.hpp"
#include "epsis/format.hpp"
#include "epsis/model.hpp"
#include "epsis/rng.hpp"

namespace epsis {

/// Piecewise-constant path: states[i] holds on [times[i], times[i+1]).
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  double t_end = 0.0;

  [[nodiscard]] std::size_t events() const { return times.empty() ? 0 : times.size() - 1; }
  [[nodiscard]] State initial() const { return states.front(); }
  [[nodiscard]] State final_state() const { return states.back(); }

  /// State at time t (right-continuous).
  [[nodiscard]] State state_at(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - times.begin() - 1));
    return states[i];
  }
};

/// Scaled interval I(r) = [x_star - r, x_star + r].
struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  static Interval around_fixed_point(const ModelParams& p, double r) {
    if (!(r > 0.0)) throw std::domain_error("radius must be positive");
    const double xs = derived(p).x_star;
    return {xs - r, xs + r};
  }

  [[nodiscard]] bool contains_state(State x, State N) const {
    const double s = static_cast<double>(x) / static_cast<double>(N);
    return s >= lo && s <= hi;
  }
};

/// Good-set geometry for the coupling argument.
struct GoodSet {
  double r = 0.0;       ///< radius of I(r)
  double h = 0.5;       ///< concentration exponent in (0, 1)
  double eta_N = 0.0;   ///< 2 (C2 + C3) N^{-(1-h)/2}
  double t_follow = 0.0;

  [[nodiscard]] Interval interval(const ModelParams& p) const {
    return Interval::around_fixed_point(p, r);
  }

  /// Default radius min(J/(12 lambda), x*/2, (1-x*)/2).
  static double default_radius(const ModelParams& p) {
    const auto d = derived(p);
    return std::min({d.J / (12.0 * p.lambda), d.x_star / 2.0, (1.0 - d.x_star) / 2.0});
  }

  /// C3 = (J/lambda * x*/|x1*|) max (1 - x*).
  static double c3(const ModelParams& p) {
    const auto d = derived(p);
    return std::max(d.J / p.lambda * d.x_star / std::abs(d.x1_star), 1.0 - d.x_star);
  }

  static double eta(const ModelParams& p, double c2, double h) {
    return 2.0 * (c2 + c3(p)) * std::pow(static_cast<double>(p.N), -(1.0 - h) / 2.0);
  }

  /// (1/J) ceil(exp(C1 N^h)); infinite once the exponential overflows.
  static double follow_time(const ModelParams& p, double c1, double h) {
    const auto d = derived(p);
    return std::ceil(std::exp(c1 * std::pow(static_cast<double>(p.N), h))) / d.J;
  }

  static GoodSet with_radius(const ModelParams& p, double r, double h = 0.5,
                             double c1 = 1.0, double c2 = 1.0) {
    if (!(h > 0.0 && h < 1.0)) throw std::domain_error("h must lie in (0, 1)");
    GoodSet g;
    g.r = r;
    g.h = h;
    g.eta_N = eta(p, c2, h);
    g.t_follow = follow_time(p, c1, h);
    const auto I = g.interval(p);
    if (I.hi < 0.0 || I.lo > 1.0) throw std::domain_error("good set misses [0, 1]");
    return g;
  }

  /// The shrinking set of radius eta(N) used in the coupling phases.
  static GoodSet shrinking(const ModelParams& p, double h = 0.5, double c1 = 1.0,
                           double c2 = 1.0) {
    return with_radius(p, eta(p, c2, h), h, c1, c2);
  }

  static GoodSet standard(const ModelParams& p) { return with_radius(p, default_radius(p)); }
};

namespace detail {

// Shared event loop: every event consumes one exponential and one uniform,
// so two chains with equal rates on a stretch of path stay in lockstep.
template <class Rates>
Trajectory run_birth_death(State x0, double t_max, ReplicationStream& rng, Rates&& rates) {
  if (!(t_max >= 0.0)) throw std::domain_error("horizon must be nonnegative");
  Trajectory tr;
  tr.t_end = t_max;
  tr.times.push_back(0.0);
  tr.states.push_back(x0);
  double t = 0.0;
  State x = x0;
  for (;;) {
    const auto [up, down] = rates(x);
    const double total = up + down;
    if (total <= 0.0) break;
    t += rng.exponential(total);
    if (t > t_max) break;
    x += rng.uniform() * total < up ? 1 : -1;
    tr.times.push_back(t);
    tr.states.push_back(x);
  }
  return tr;
}

struct UpDown {
  double up;
  double down;
};

}  // namespace detail

inline Trajectory simulate_path(const ModelParams& p, State x0, double t_max,
                                ReplicationStream& rng) {
  p.validate();
  detail::check_state(p, x0);
  return detail::run_birth_death(x0, t_max, rng, [&](State x) {
    return detail::UpDown{birth_rate(p, x), death_rate(p, x)};
  });
}

inline Trajectory simulate_path(const ModelParams& p, State x0, double t_max,
                                std::uint64_t seed, std::uint64_t replication = 0) {
  ReplicationStream rng(seed, replication);
  return simulate_path(p, x0, t_max, rng);
}

/// Outer states {l, u} of the chain reflected at the edges of I(r):
/// l = ceil((x*-r)N) - 1 and u = floor((x*+r)N) + 1.
struct ReflectionBounds {
  State lower = 0;
  State upper = 0;

  static ReflectionBounds of(const ModelParams& p, double r) {
    const auto I = Interval::around_fixed_point(p, r);
    const double n = static_cast<double>(p.N);
    ReflectionBounds b;
    b.lower = static_cast<State>(std::ceil(I.lo * n)) - 1;
    b.upper = static_cast<State>(std::floor(I.hi * n)) + 1;
    if (b.lower < 0 || b.upper > p.N)
      throw std::domain_error("reflection range {l..u} leaves {0..N}; shrink r");
    return b;
  }
};

/// The chain on {l..u}: free rates inside, only x->x-1 (rate mu u) at u and
/// only x->x+1 at l.
inline Trajectory simulate_reflected(const ModelParams& p, State x0, double r, double t_max,
                                     ReplicationStream& rng) {
  p.validate();
  const auto b = ReflectionBounds::of(p, r);
  if (x0 <= b.lower || x0 >= b.upper)
    throw std::domain_error("start state outside the closed good set");
  return detail::run_birth_death(x0, t_max, rng, [&](State x) {
    if (x == b.upper) return detail::UpDown{0.0, death_rate(p, x)};
    if (x == b.lower) return detail::UpDown{birth_rate(p, x), 0.0};
    return detail::UpDown{birth_rate(p, x), death_rate(p, x)};
  });
}

inline Trajectory simulate_reflected(const ModelParams& p, State x0, double r, double t_max,
                                     std::uint64_t seed, std::uint64_t replication = 0) {
  ReplicationStream rng(seed, replication);
  return simulate_reflected(p, x0, r, t_max, rng);
}

struct CouplingTrace {
  Trajectory w_trajectory;
  Trajectory z_trajectory;
  std::optional<double> tau_couple;  ///< empty: not coalesced by the horizon
  std::optional<double> tau_exit;    ///< empty: both stayed in I(r)
};

struct CouplingOptions {
  bool stop_at_coalescence = false;  ///< end the trace at tau_couple
  bool record_paths = true;
};

/// Two copies jumping independently (four competing rates, never together)
/// until they meet, then moving as one.
inline CouplingTrace simulate_coupled(const ModelParams& p, State w0, State z0, double t_max,
                                      const Interval& good, ReplicationStream& rng,
                                      const CouplingOptions& opt = {}) {
  p.validate();
  detail::check_state(p, w0);
  detail::check_state(p, z0);
  if (w0 > z0) throw std::domain_error("coupled start requires w0 <= z0");
  if (!(t_max >= 0.0)) throw std::domain_error("horizon must be nonnegative");

  CouplingTrace tr;
  auto record = [&](Trajectory& path, double t, State x) {
    if (!opt.record_paths) return;
    path.times.push_back(t);
    path.states.push_back(x);
  };
  record(tr.w_trajectory, 0.0, w0);
  record(tr.z_trajectory, 0.0, z0);

  State w = w0, z = z0;
  double t = 0.0;
  auto check_exit = [&] {
    if (!tr.tau_exit && (!good.contains_state(w, p.N) || !good.contains_state(z, p.N)))
      tr.tau_exit = t;
  };
  check_exit();
  if (w == z) tr.tau_couple = 0.0;

  for (;;) {
    if (tr.tau_couple && opt.stop_at_coalescence) {
      t_max = *tr.tau_couple;
      break;
    }
    if (!tr.tau_couple) {
      const double iw = birth_rate(p, w), iz = birth_rate(p, z);
      const double cw = death_rate(p, w), cz = death_rate(p, z);
      const double total = iw + iz + cw + cz;
      t += rng.exponential(total);
      if (t > t_max) break;
      const double u = rng.uniform() * total;
      if (u < iw) {
        ++w;
        record(tr.w_trajectory, t, w);
      } else if (u < iw + iz) {
        ++z;
        record(tr.z_trajectory, t, z);
      } else if (u < iw + iz + cw) {
        --w;
        record(tr.w_trajectory, t, w);
      } else {
        --z;
        record(tr.z_trajectory, t, z);
      }
      if (w == z) tr.tau_couple = t;
    } else {
      const double up = birth_rate(p, w), down = death_rate(p, w);
      const double total = up + down;
      t += rng.exponential(total);
      if (t > t_max) break;
      w += rng.uniform() * total < up ? 1 : -1;
      z = w;
      record(tr.w_trajectory, t, w);
      record(tr.z_trajectory, t, z);
    }
    check_exit();
  }
  tr.w_trajectory.t_end = t_max;
  tr.z_trajectory.t_end = t_max;
  return tr;
}

inline CouplingTrace simulate_coupled(const ModelParams& p, State w0, State z0, double t_max,
                                      const GoodSet& good, std::uint64_t seed,
                                      std::uint64_t replication = 0,
                                      const CouplingOptions& opt = {}) {
  ReplicationStream rng(seed, replication);
  return simulate_coupled(p, w0, z0, t_max, good.interval(p), rng, opt);
}

/// sup over [0, t_end] of |X(t)/N - x(t)|, x the ODE solution from X(0)/N.
/// The ODE is monotone, so on each constant piece of X the supremum sits at
/// an endpoint of the piece.
inline double sup_deviation(const Trajectory& tr, const ModelParams& p) {
  const double n = static_cast<double>(p.N);
  const double alpha = static_cast<double>(tr.initial()) / n;
  double worst = 0.0;
  double x_left = alpha;
  for (std::size_t i = 0; i < tr.states.size(); ++i) {
    const double right = i + 1 < tr.times.size() ? tr.times[i + 1] : tr.t_end;
    const double s = static_cast<double>(tr.states[i]) / n;
    const double x_right = ode_solution(p, alpha, right);
    worst = std::max({worst, std::abs(s - x_left), std::abs(s - x_right)});
    x_left = x_right;
  }
  return worst;
}

/// M_N and the discounted integral int_0^t e^{-J(t-s)} dM_N(s) at 0, at each
/// event time and at t_end.
struct MartingalePath {
  std::vector<double> times;
  std::vector<double> martingale;
  std::vector<double> discounted;
};

/// Evaluates the Dynkin martingale M_N(t) = Y(t) - Y(0) + int_0^t (lambda Y^2
/// + J Y) ds of Y = X/N - x*, whose drift is -lambda y^2 - J y. Compensator
/// integrals are exact because Y is constant between events.
inline MartingalePath martingale_functional(const Trajectory& tr, const ModelParams& p) {
  const auto d = derived(p);
  const double n = static_cast<double>(p.N);
  auto centred = [&](State x) { return static_cast<double>(x) / n - d.x_star; };
  const double y0 = centred(tr.initial());

  MartingalePath out;
  out.times.push_back(0.0);
  out.martingale.push_back(0.0);
  out.discounted.push_back(0.0);
  double compensator = 0.0;
  double disc = 0.0;
  for (std::size_t i = 0; i < tr.states.size(); ++i) {
    const double a = tr.times[i];
    const double b = i + 1 < tr.times.size() ? tr.times[i + 1] : tr.t_end;
    const double y = centred(tr.states[i]);
    const double drift = p.lambda * y * y + d.J * y;
    const double len = b - a;
    compensator += drift * len;
    disc = std::exp(-d.J * len) * disc - drift * std::expm1(-d.J * len) / d.J;
    if (i + 1 < tr.times.size()) {
      const double y_next = centred(tr.states[i + 1]);
      disc += y_next - y;
      out.times.push_back(b);
      out.martingale.push_back(y_next - y0 + compensator);
      out.discounted.push_back(disc);
    } else if (len > 0.0) {
      out.times.push_back(b);
      out.martingale.push_back(y - y0 + compensator);
      out.discounted.push_back(disc);
    }
  }
  return out;
}

/// Threshold e sqrt(omega k / N) with omega = 4 (log 2)^2 k N^h.
inline double martingale_threshold(const ModelParams& p, double h) {
  const auto d = derived(p);
  const double n = static_cast<double>(p.N);
  const double omega = 4.0 * std::log(2.0) * std::log(2.0) * d.k * std::pow(n, h);
  return std::exp(1.0) * std::sqrt(omega * d.k / n);
}

/// First time X/N leaves the interval; 0 if it starts outside.
inline std::optional<double> exit_time(const Trajectory& tr, const Interval& I, State N) {
  for (std::size_t i = 0; i < tr.states.size(); ++i)
    if (!I.contains_state(tr.states[i], N)) return tr.times[i];
  return std::nullopt;
}

/// CSV with columns replication,event_index,time,state.
inline void write_trajectory_csv_header(std::ostream& os) {
  os << "replication,event_index,time,state\n";
}

inline void write_trajectory_csv(std::ostream& os, std::uint64_t replication,
                                 const Trajectory& tr) {
  for (std::size_t i = 0; i < tr.states.size(); ++i)
    os << replication << ',' << i << ',' << format_double(tr.times[i]) << ','
       << tr.states[i] << '\n';
}

}  // namespace epsis
