#pragma once

// Finite-N scans around the cutoff: mixing
// times over N, trajectory and stationary concentration, coupling tails, the
// three coupling phases and the lower-bound witness.
//
// Theory constants that are only known to exist (C1, C2, C4, K1) enter as
// explicit inputs; nothing here treats them as known values.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "epsis/deterministic.hpp"
#include "epsis/errors.hpp"
#include "epsis/exact.hpp"
#include "epsis/model.hpp"
#include "epsis/parallel.hpp"
#include "epsis/rng.hpp"
#include "epsis/simulate.hpp"
#include "epsis/stats.hpp"

namespace epsis {

inline const std::vector<double> kDefaultLevels{0.9, 0.75, 0.5, 0.25, 0.1};

enum class StartMode { endpoints, full };

inline StartSet make_start_set(const ModelParams& p, StartMode mode) {
  return mode == StartMode::full ? StartSet::full(p) : StartSet::endpoints(p);
}

inline ModelParams with_population(ModelParams p, State N) {
  p.N = N;
  p.validate();
  return p;
}

/// Replication id for replication `rep` of the `block`-th sub-experiment.
inline std::uint64_t replication_id(std::size_t block, std::size_t rep) {
  return (static_cast<std::uint64_t>(block) << 32) | static_cast<std::uint64_t>(rep);
}

// ---------------------------------------------------------------- cutoff ---

struct CutoffConfig {
  std::vector<State> N_list;
  std::vector<double> levels = kDefaultLevels;
  StartMode starts = StartMode::endpoints;
  double budget = 1e11;  ///< kernel cell-updates allowed for the whole scan
  unsigned threads = 1;
};

struct CutoffRecord {
  State N = 0;
  double t_N = 0.0;
  std::vector<double> t_mix;  ///< aligned with CutoffReport::levels
  std::optional<double> window;  ///< t_mix(0.1) - t_mix(0.9)
};

struct CutoffReport {
  std::vector<double> levels;
  std::vector<CutoffRecord> records;
  double predicted_slope = 0.0;  ///< 1/(2J)
  std::optional<LinearFit> fit;  ///< t_mix(N, 0.25) against log N
  std::optional<double> window_ratio;  ///< w(N_max) / w(N_min)
  bool sandwich = true;  ///< t_mix(0.25) within t_N +- w(N) for N >= 800
};

/// Kernel cell-updates needed by a cutoff scan, assuming mixing by t_N + 5/J
/// and roughly three extra grid intervals of work per level for bisection.
inline double cutoff_cost_estimate(const ModelParams& base, const CutoffConfig& cfg) {
  double cost = 0.0;
  for (State N : cfg.N_list) {
    const auto p = with_population(base, N);
    const auto d = derived(p);
    const double starts = cfg.starts == StartMode::full ? static_cast<double>(N + 1) : 2.0;
    const double horizon = d.t_N + 5.0 / d.J + 0.75 / d.J * static_cast<double>(cfg.levels.size());
    cost += starts * static_cast<double>(N + 1) * p.uniformization_rate() * horizon;
  }
  return cost;
}

namespace detail {

inline std::optional<std::size_t> level_index(const std::vector<double>& levels, double v) {
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (std::abs(levels[i] - v) < 1e-12) return i;
  return std::nullopt;
}

}  // namespace detail

inline CutoffReport cutoff_scan(const ModelParams& base, const CutoffConfig& cfg) {
  if (cfg.N_list.empty()) throw std::domain_error("N_list is empty");
  for (std::size_t i = 1; i < cfg.N_list.size(); ++i)
    if (cfg.N_list[i] <= cfg.N_list[i - 1])
      throw std::domain_error("N_list must be increasing");
  if (cfg.levels.empty()) throw std::domain_error("no mixing levels given");
  const double cost = cutoff_cost_estimate(base, cfg);
  if (cost > cfg.budget)
    throw InfeasibleError("cutoff scan needs about " + std::to_string(cost) +
                              " kernel updates, budget is " + std::to_string(cfg.budget),
                          cost);

  CutoffReport rep;
  rep.levels = cfg.levels;
  rep.predicted_slope = 1.0 / (2.0 * derived(base).J);
  const auto i90 = detail::level_index(cfg.levels, 0.9);
  const auto i10 = detail::level_index(cfg.levels, 0.1);
  const auto i25 = detail::level_index(cfg.levels, 0.25);
  ExactOptions opt;
  opt.threads = cfg.threads;
  for (State N : cfg.N_list) {
    const auto p = with_population(base, N);
    CutoffRecord rec;
    rec.N = N;
    rec.t_N = derived(p).t_N;
    rec.t_mix = mixing_times(p, cfg.levels, make_start_set(p, cfg.starts), opt);
    if (i90 && i10) rec.window = rec.t_mix[*i10] - rec.t_mix[*i90];
    rep.records.push_back(std::move(rec));
  }
  if (i25 && rep.records.size() >= 2) {
    std::vector<double> x, y;
    for (const auto& r : rep.records) {
      x.push_back(std::log(static_cast<double>(r.N)));
      y.push_back(r.t_mix[*i25]);
    }
    rep.fit = least_squares(x, y);
  }
  if (i90 && i10 && rep.records.size() >= 2)
    rep.window_ratio = *rep.records.back().window / *rep.records.front().window;
  if (i25 && i90 && i10)
    for (const auto& r : rep.records)
      if (r.N >= 800 && std::abs(r.t_mix[*i25] - r.t_N) > *r.window) rep.sandwich = false;
  return rep;
}

// ---------------------------------------------------- trajectory spread ---

struct ConcentrationConfig {
  std::vector<State> N_list;
  std::size_t replications = 200;
  double horizon_factor = 1.0;  ///< horizon = factor * log(N) / J
  double start_fraction = 0.0;  ///< X(0) = round(start_fraction * N)
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct ConcentrationRow {
  State N = 0;
  double horizon = 0.0;
  double median = 0.0;
  double p95 = 0.0;
  double mean = 0.0;
};

struct ConcentrationReport {
  std::vector<ConcentrationRow> rows;
  std::optional<LinearFit> fit;  ///< log median against log N
  double slope_lower = 0.0;  ///< slope +- 1.96 SE
  double slope_upper = 0.0;
  bool p95_decreasing = true;
};

inline ConcentrationReport concentration_scan(const ModelParams& base,
                                              const ConcentrationConfig& cfg) {
  if (cfg.replications < 100) throw std::domain_error("replications must be at least 100");
  if (!(cfg.start_fraction >= 0.0 && cfg.start_fraction <= 1.0))
    throw std::domain_error("start_fraction must lie in [0, 1]");
  if (!(cfg.horizon_factor > 0.0)) throw std::domain_error("horizon_factor must be positive");
  ConcentrationReport rep;
  for (std::size_t b = 0; b < cfg.N_list.size(); ++b) {
    const auto p = with_population(base, cfg.N_list[b]);
    const auto d = derived(p);
    const double horizon = cfg.horizon_factor * std::log(static_cast<double>(p.N)) / d.J;
    const auto x0 = static_cast<State>(std::llround(cfg.start_fraction * static_cast<double>(p.N)));
    std::vector<double> dev(cfg.replications);
    parallel_for(cfg.replications, cfg.threads, [&](std::size_t i) {
      ReplicationStream rng(cfg.seed, replication_id(b, i));
      dev[i] = sup_deviation(simulate_path(p, x0, horizon, rng), p);
    });
    ConcentrationRow row;
    row.N = p.N;
    row.horizon = horizon;
    row.median = quantile(dev, 0.5);
    row.p95 = quantile(dev, 0.95);
    row.mean = mean_with_se(dev).mean;
    rep.rows.push_back(row);
  }
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    if (!(rep.rows[i].p95 < rep.rows[i - 1].p95)) rep.p95_decreasing = false;
  if (rep.rows.size() >= 2) {
    std::vector<double> x, y;
    for (const auto& r : rep.rows) {
      x.push_back(std::log(static_cast<double>(r.N)));
      y.push_back(std::log(r.median));
    }
    rep.fit = least_squares(x, y);
    rep.slope_lower = rep.fit->slope - kZ95 * rep.fit->slope_se;
    rep.slope_upper = rep.fit->slope + kZ95 * rep.fit->slope_se;
  }
  return rep;
}

// --------------------------------------------------------- coupling tail ---

/// P(tau_couple > t) for each t, with Wilson intervals, from independent
/// coupled traces started at (w0, z0).
inline std::vector<Proportion> coupling_survival(const ModelParams& p, State w0, State z0,
                                                 const std::vector<double>& times,
                                                 std::size_t replications, std::uint64_t seed,
                                                 unsigned threads = 1) {
  if (times.empty()) throw std::domain_error("no evaluation times");
  for (double t : times)
    if (!(t >= 0.0)) throw std::domain_error("evaluation times must be nonnegative");
  const double horizon = *std::max_element(times.begin(), times.end());
  std::vector<double> tau(replications);
  CouplingOptions opt;
  opt.stop_at_coalescence = true;
  opt.record_paths = false;
  const Interval whole{0.0, 1.0};
  parallel_for(replications, threads, [&](std::size_t i) {
    ReplicationStream rng(seed, i);
    const auto tr = simulate_coupled(p, w0, z0, horizon, whole, rng, opt);
    tau[i] = tr.tau_couple.value_or(std::numeric_limits<double>::infinity());
  });
  std::vector<Proportion> out;
  for (double t : times) {
    const auto exceed = static_cast<std::size_t>(
        std::count_if(tau.begin(), tau.end(), [&](double x) { return x > t; }));
    out.push_back(wilson(exceed, replications));
  }
  return out;
}

/// || P^t(a, .) - P^t(b, .) ||_TV at each increasing t.
inline std::vector<double> tv_between_starts(const ModelParams& p, State a, State b,
                                             const std::vector<double>& times) {
  detail::check_state(p, a);
  detail::check_state(p, b);
  const UniformizedKernel kernel(p);
  const auto n = kernel.size();
  auto pa = ProbabilityVector::point_mass(n, a);
  auto pb = ProbabilityVector::point_mass(n, b);
  std::vector<double> out;
  double now = 0.0;
  for (double t : times) {
    if (t < now) throw std::domain_error("times must be increasing");
    pa = transient_with_report(kernel, pa, t - now).law;
    pb = transient_with_report(kernel, pb, t - now).law;
    now = t;
    out.push_back(tv_distance(pa, pb));
  }
  return out;
}

/// Dominant term 4 / sqrt(mu ^ eps) * xi^{-1/2} of the coupling tail.
inline double final_phase_bound(const ModelParams& p, double xi) {
  return 4.0 / std::sqrt(std::min(p.mu, p.epsilon)) / std::sqrt(xi);
}

struct CouplingTailConfig {
  State w0 = 0;
  State z0 = -1;  ///< -1 means N
  std::vector<double> xi_grid{1.0, 2.0, 4.0, 8.0, 16.0};
  std::size_t replications = 10000;
  double c4 = 1.0;  ///< overlay constant for the intermediate-phase term
  bool exact_tv = false;  ///< also compute the exact TV between the starts
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct CouplingTailRow {
  double xi = 0.0;
  double t = 0.0;  ///< t_N + xi
  Proportion tail;
  double dominant_term = 0.0;
  double psi1_overlay = 0.0;  ///< dominant term + C4 e^{-J xi / 2}
  std::optional<double> exact_tv;
};

struct CouplingTailReport {
  State w0 = 0, z0 = 0;
  std::vector<CouplingTailRow> rows;
  bool non_increasing = true;
  bool coupling_inequality = true;  ///< tail upper CI >= exact TV everywhere
};

inline CouplingTailReport coupling_tail(const ModelParams& p, const CouplingTailConfig& cfg) {
  p.validate();
  CouplingTailReport rep;
  rep.w0 = cfg.w0;
  rep.z0 = cfg.z0 < 0 ? p.N : cfg.z0;
  for (std::size_t i = 0; i < cfg.xi_grid.size(); ++i) {
    if (!(cfg.xi_grid[i] > 0.0)) throw std::domain_error("xi values must be positive");
    if (i > 0 && !(cfg.xi_grid[i] > cfg.xi_grid[i - 1]))
      throw std::domain_error("xi grid must be increasing");
  }
  const auto d = derived(p);
  std::vector<double> times;
  for (double xi : cfg.xi_grid) times.push_back(d.t_N + xi);
  const auto tails =
      coupling_survival(p, rep.w0, rep.z0, times, cfg.replications, cfg.seed, cfg.threads);
  std::vector<double> tv;
  if (cfg.exact_tv) tv = tv_between_starts(p, rep.w0, rep.z0, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CouplingTailRow row;
    row.xi = cfg.xi_grid[i];
    row.t = times[i];
    row.tail = tails[i];
    row.dominant_term = final_phase_bound(p, row.xi);
    row.psi1_overlay = row.dominant_term + cfg.c4 * std::exp(-d.J * row.xi / 2.0);
    if (cfg.exact_tv) {
      row.exact_tv = tv[i];
      if (row.tail.upper < tv[i]) rep.coupling_inequality = false;
    }
    if (i > 0 && row.tail.estimate > rep.rows.back().tail.estimate) rep.non_increasing = false;
    rep.rows.push_back(row);
  }
  return rep;
}

// ------------------------------------------------------- coupling phases ---

struct PhaseConfig {
  State w0 = 0;
  State z0 = -1;  ///< -1 means N
  double xi = 4.0;
  std::size_t replications = 1000;
  double h = 0.5;
  double c2 = 1.0;  ///< surrogate for the unknown concentration constant C2
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct PhaseReport {
  double eta = 0.0;        ///< radius of the good set
  double t_burn = 0.0;     ///< (1-h)/(2J) log N
  double t_mid = 0.0;      ///< + h/(2J) log N + xi/2
  double t_end = 0.0;      ///< + xi/2
  Proportion burn_in;      ///< both copies in I(eta/2) at t_burn
  Proportion intermediate; ///< D <= sqrt N at t_mid, given burn-in and no exit by t_mid
  Proportion final_phase;  ///< coalesced by t_end, given D(t_mid) <= sqrt N and no exit by t_end
  std::size_t exits = 0;   ///< traces leaving I(eta) after t_burn
};

inline PhaseReport phase_verification(const ModelParams& p, const PhaseConfig& cfg) {
  p.validate();
  if (!(cfg.xi > 0.0)) throw std::domain_error("xi must be positive");
  if (cfg.replications == 0) throw std::domain_error("replications must be positive");
  const auto d = derived(p);
  const auto good = GoodSet::shrinking(p, cfg.h, 1.0, cfg.c2);
  if (!(good.eta_N < d.J / (2.0 * p.lambda)))
    throw std::domain_error("eta(N) = " + std::to_string(good.eta_N) +
                            " is not below J/(2 lambda); increase N");
  const State w0 = cfg.w0;
  const State z0 = cfg.z0 < 0 ? p.N : cfg.z0;
  const double logn = std::log(static_cast<double>(p.N));
  PhaseReport rep;
  rep.eta = good.eta_N;
  rep.t_burn = (1.0 - cfg.h) / (2.0 * d.J) * logn;
  rep.t_mid = rep.t_burn + cfg.h / (2.0 * d.J) * logn + cfg.xi / 2.0;
  rep.t_end = rep.t_mid + cfg.xi / 2.0;
  const auto outer = Interval::around_fixed_point(p, good.eta_N);
  const auto inner = Interval::around_fixed_point(p, good.eta_N / 2.0);
  const double root_n = std::sqrt(static_cast<double>(p.N));

  struct Outcome {
    bool burn = false, mid_eligible = false, mid_ok = false, fin_eligible = false,
         fin_ok = false, exited = false;
  };
  std::vector<Outcome> out(cfg.replications);
  parallel_for(cfg.replications, cfg.threads, [&](std::size_t i) {
    ReplicationStream rng(cfg.seed, i);
    CouplingOptions opt;
    const auto first = simulate_coupled(p, w0, z0, rep.t_burn, outer, rng, opt);
    const State w1 = first.w_trajectory.final_state();
    const State z1 = first.z_trajectory.final_state();
    Outcome& o = out[i];
    o.burn = inner.contains_state(w1, p.N) && inner.contains_state(z1, p.N);
    if (!o.burn) return;
    const auto second = simulate_coupled(p, w1, z1, rep.t_end - rep.t_burn, outer, rng, opt);
    const double mid = rep.t_mid - rep.t_burn;
    const double end = rep.t_end - rep.t_burn;
    const bool exit_by_mid = second.tau_exit && *second.tau_exit <= mid;
    const bool exit_by_end = second.tau_exit && *second.tau_exit <= end;
    o.exited = second.tau_exit.has_value();
    o.mid_eligible = !exit_by_mid;
    const double gap = static_cast<double>(second.z_trajectory.state_at(mid) -
                                           second.w_trajectory.state_at(mid));
    o.mid_ok = gap <= root_n;
    o.fin_eligible = o.mid_eligible && o.mid_ok && !exit_by_end;
    o.fin_ok = second.tau_couple && *second.tau_couple <= end;
  });
  std::size_t burn = 0, mid_n = 0, mid_ok = 0, fin_n = 0, fin_ok = 0;
  for (const auto& o : out) {
    burn += o.burn;
    rep.exits += o.exited;
    if (o.burn && o.mid_eligible) {
      ++mid_n;
      mid_ok += o.mid_ok;
    }
    if (o.burn && o.fin_eligible) {
      ++fin_n;
      fin_ok += o.fin_ok;
    }
  }
  rep.burn_in = wilson(burn, cfg.replications);
  rep.intermediate = wilson(mid_ok, mid_n);
  rep.final_phase = wilson(fin_ok, fin_n);
  return rep;
}

struct IntermediateCheck {
  double xi = 0.0;
  double failure = 0.0;  ///< 1 - intermediate success frequency
  double bound = 0.0;    ///< 2 Cbar e^{-J xi / 2}
  bool ok = false;
};

struct IntermediateFit {
  double c_bar = 0.0;  ///< from the upper Wilson limit of the training failure rate
  double xi_train = 0.0;
  std::vector<IntermediateCheck> checks;
};

/// Fits Cbar in failure(xi) ~ Cbar e^{-J xi / 2} at one xi and checks the
/// doubled envelope at held-out xi values.
inline IntermediateFit intermediate_fit(const ModelParams& p, PhaseConfig cfg, double xi_train,
                                        const std::vector<double>& xi_valid) {
  const double J = derived(p).J;
  IntermediateFit fit;
  fit.xi_train = xi_train;
  cfg.xi = xi_train;
  const auto train = phase_verification(p, cfg);
  fit.c_bar = (1.0 - train.intermediate.lower) * std::exp(J * xi_train / 2.0);
  for (double xi : xi_valid) {
    cfg.xi = xi;
    const auto r = phase_verification(p, cfg);
    IntermediateCheck c;
    c.xi = xi;
    c.failure = 1.0 - r.intermediate.estimate;
    c.bound = 2.0 * fit.c_bar * std::exp(-J * xi / 2.0);
    c.ok = r.intermediate.estimate >= 1.0 - c.bound;
    fit.checks.push_back(c);
  }
  return fit;
}

// ------------------------------------------------ stationary concentration ---

/// pi(|x - x* N| > c sqrt N).
inline double stationary_tail(const ModelParams& p, const ProbabilityVector& pi, double c) {
  const double centre = derived(p).x_star * static_cast<double>(p.N);
  const double radius = c * std::sqrt(static_cast<double>(p.N));
  double tail = 0.0;
  for (std::size_t x = 0; x < pi.size(); ++x)
    if (std::abs(static_cast<double>(x) - centre) > radius) tail += pi[x];
  return tail;
}

/// Smallest c >= 0 with pi(|x - x* N| > c sqrt N) <= level (exact, no grid).
inline double minimal_concentration_radius(const ModelParams& p, const ProbabilityVector& pi,
                                           double level) {
  const double centre = derived(p).x_star * static_cast<double>(p.N);
  std::vector<std::pair<double, double>> by_distance;
  for (std::size_t x = 0; x < pi.size(); ++x)
    by_distance.emplace_back(std::abs(static_cast<double>(x) - centre), pi[x]);
  std::sort(by_distance.begin(), by_distance.end());
  const std::size_t n = by_distance.size();
  std::vector<double> beyond(n + 1, 0.0);  // beyond[j]: mass of entries j..n-1
  for (std::size_t j = n; j-- > 0;) beyond[j] = beyond[j + 1] + by_distance[j].second;
  const auto tail_at = [&](double d) {
    const auto it = std::upper_bound(by_distance.begin(), by_distance.end(), d,
                                     [](double v, const auto& e) { return v < e.first; });
    return beyond[static_cast<std::size_t>(it - by_distance.begin())];
  };
  const double root_n = std::sqrt(static_cast<double>(p.N));
  const auto to_c = [&](double d) {
    double c = d / root_n;
    while (c * root_n < d) c = std::nextafter(c, std::numeric_limits<double>::infinity());
    return c;
  };
  if (tail_at(0.0) <= level) return 0.0;
  for (const auto& [d, mass] : by_distance)
    if (tail_at(d) <= level) return to_c(d);
  return to_c(by_distance.back().first);
}

struct StationaryConcentrationConfig {
  std::vector<State> N_list;
  std::vector<double> c_grid;  ///< empty: 0, 0.05, ..., 5
  double level = 0.05;
  double xi = 1.0;  ///< for the overlay radius (e^{-J xi} K1 + 2 xi) sqrt N
  double k1 = 1.0;  ///< surrogate for the unknown mean-bound constant K1
};

struct StationaryConcentrationRow {
  State N = 0;
  double min_c = 0.0;        ///< exact smallest c meeting the level
  std::vector<double> tail;  ///< tail mass at each grid c
  double overlay_radius = 0.0;
  double overlay_tail = 0.0;  ///< pi outside the overlay ball
};

struct StationaryConcentrationReport {
  std::vector<double> c_grid;
  std::vector<StationaryConcentrationRow> rows;
  double min_c_ratio = 1.0;  ///< max over N of min_c / min over N of min_c
};

inline StationaryConcentrationReport stationary_concentration(
    const ModelParams& base, const StationaryConcentrationConfig& cfg) {
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) throw std::domain_error("level must lie in (0,1)");
  StationaryConcentrationReport rep;
  rep.c_grid = cfg.c_grid;
  if (rep.c_grid.empty())
    for (int i = 0; i <= 100; ++i) rep.c_grid.push_back(0.05 * i);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (State N : cfg.N_list) {
    const auto p = with_population(base, N);
    const auto pi = stationary_distribution(p);
    const auto d = derived(p);
    StationaryConcentrationRow row;
    row.N = N;
    row.min_c = minimal_concentration_radius(p, pi, cfg.level);
    for (double c : rep.c_grid) row.tail.push_back(stationary_tail(p, pi, c));
    const double overlay_c = std::exp(-d.J * cfg.xi) * cfg.k1 + 2.0 * cfg.xi;
    row.overlay_radius = overlay_c * std::sqrt(static_cast<double>(N));
    row.overlay_tail = stationary_tail(p, pi, overlay_c);
    lo = std::min(lo, row.min_c);
    hi = std::max(hi, row.min_c);
    rep.rows.push_back(std::move(row));
  }
  if (!rep.rows.empty() && lo > 0.0) rep.min_c_ratio = hi / lo;
  return rep;
}

// ------------------------------------------------------------ lower bound ---

struct LowerBoundWitness {
  State N = 0;
  double xi = 0.0;
  double t = 0.0;   ///< t_N - xi
  double r = 0.0;
  State x_bar = 0;  ///< floor((x* + r/2) N)
  double tv = 0.0;  ///< || P^t(x_bar, .) - pi ||_TV
  double ball_radius = 0.0;  ///< (e^{-J xi} K1 + 2 xi) sqrt N
  double mass_in_ball = 0.0; ///< P^t(x_bar, S_N)
  double ball_bound = 0.0;   ///< 3 exp(-J xi^2 / (3 (lambda+mu+eps)))
};

inline State lower_bound_start(const ModelParams& p, double r) {
  const auto d = derived(p);
  return static_cast<State>(std::floor((d.x_star + r / 2.0) * static_cast<double>(p.N)));
}

inline LowerBoundWitness lower_bound_witness(const ModelParams& p, double xi,
                                             std::optional<double> radius = std::nullopt,
                                             double k1 = 1.0) {
  p.validate();
  const auto d = derived(p);
  LowerBoundWitness w;
  w.N = p.N;
  w.xi = xi;
  w.t = d.t_N - xi;
  if (!(w.t >= 0.0))
    throw std::domain_error("t_N - xi = " + std::to_string(w.t) + " is negative");
  w.r = radius.value_or(GoodSet::default_radius(p));
  w.x_bar = lower_bound_start(p, w.r);
  detail::check_state(p, w.x_bar);
  const auto law = transient_distribution(
      p, ProbabilityVector::point_mass(static_cast<std::size_t>(p.N) + 1, w.x_bar), w.t);
  w.tv = tv_distance(law, stationary_distribution(p));
  w.ball_radius = (std::exp(-d.J * xi) * k1 + 2.0 * xi) * std::sqrt(static_cast<double>(p.N));
  const double centre = d.x_star * static_cast<double>(p.N);
  w.mass_in_ball = law.mass_between(centre - w.ball_radius, centre + w.ball_radius);
  w.ball_bound = 3.0 * std::exp(-d.J * xi * xi / (3.0 * p.rate_sum()));
  return w;
}

// ------------------------------------------------------------ mean decay ---

struct MeanDecayRow {
  double c = 0.0;
  double deviation = 0.0;       ///< E X(t_N + c) - x* N
  double next_deviation = 0.0;  ///< E X(t_N + c + 1) - x* N
  double ratio = 0.0;           ///< deviation / next_deviation
  double stationary_ratio = 0.0;  ///< same, centred at the stationary mean
};

struct MeanDecayReport {
  State x_bar = 0;
  double stationary_offset = 0.0;  ///< mean(pi) - x* N
  double target = 0.0;             ///< e^J
  std::vector<MeanDecayRow> rows;
};

/// Exact means from x_bar = floor((x* + r/2) N) one time unit apart.
inline MeanDecayReport mean_decay(const ModelParams& p, const std::vector<double>& cs,
                                  std::optional<double> radius = std::nullopt) {
  const auto d = derived(p);
  MeanDecayReport rep;
  rep.x_bar = lower_bound_start(p, radius.value_or(GoodSet::default_radius(p)));
  const double centre = d.x_star * static_cast<double>(p.N);
  const double pi_mean = stationary_distribution(p).mean();
  rep.stationary_offset = pi_mean - centre;
  rep.target = std::exp(d.J);
  for (double c : cs) {
    if (!(d.t_N + c >= 0.0)) throw std::domain_error("t_N + c must be nonnegative");
    const double m0 = transient_moments(p, rep.x_bar, d.t_N + c).mean;
    const double m1 = transient_moments(p, rep.x_bar, d.t_N + c + 1.0).mean;
    MeanDecayRow row;
    row.c = c;
    row.deviation = m0 - centre;
    row.next_deviation = m1 - centre;
    row.ratio = row.deviation / row.next_deviation;
    row.stationary_ratio = (m0 - pi_mean) / (m1 - pi_mean);
    rep.rows.push_back(row);
  }
  return rep;
}

// ------------------------------------------------ simulation vs. exact law ---

struct AgreementRow {
  double t = 0.0;
  double tv = 0.0;  ///< empirical law vs uniformization
};

/// Empirical law of X(t) over independent SSA replications compared with
/// the uniformized law, at each increasing t.
inline std::vector<AgreementRow> simulation_agreement(const ModelParams& p, State x0,
                                                      const std::vector<double>& times,
                                                      std::size_t replications,
                                                      std::uint64_t seed, unsigned threads = 1) {
  p.validate();
  detail::check_state(p, x0);
  if (times.empty()) throw std::domain_error("no evaluation times");
  const double horizon = *std::max_element(times.begin(), times.end());
  const auto n = static_cast<std::size_t>(p.N) + 1;
  std::vector<std::vector<State>> at(times.size(), std::vector<State>(replications));
  parallel_for(replications, threads, [&](std::size_t i) {
    ReplicationStream rng(seed, i);
    const auto tr = simulate_path(p, x0, horizon, rng);
    for (std::size_t k = 0; k < times.size(); ++k) at[k][i] = tr.state_at(times[k]);
  });
  std::vector<AgreementRow> rows;
  const UniformizedKernel kernel(p);
  auto law = ProbabilityVector::point_mass(n, x0);
  double now = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < now) throw std::domain_error("times must be increasing");
    law = transient_with_report(kernel, law, times[k] - now).law;
    now = times[k];
    std::vector<double> counts(n, 0.0);
    for (State x : at[k]) counts[static_cast<std::size_t>(x)] += 1.0 / static_cast<double>(replications);
    rows.push_back({times[k], tv_distance(ProbabilityVector(std::move(counts)), law)});
  }
  return rows;
}

/// Fraction of paths from x0 that leave I(r) before the horizon.
inline Proportion exit_frequency(const ModelParams& p, State x0, double r, double horizon,
                                 std::size_t replications, std::uint64_t seed,
                                 unsigned threads = 1) {
  const auto I = Interval::around_fixed_point(p, r);
  std::vector<char> exited(replications, 0);
  parallel_for(replications, threads, [&](std::size_t i) {
    ReplicationStream rng(seed, i);
    exited[i] = exit_time(simulate_path(p, x0, horizon, rng), I, p.N).has_value();
  });
  return wilson(static_cast<std::size_t>(std::count(exited.begin(), exited.end(), 1)),
                replications);
}

}  // namespace epsis
