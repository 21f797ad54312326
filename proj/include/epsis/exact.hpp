#pragma once

// Exact finite-N analysis of the chain: stationary law by detailed balance,
// transient laws by uniformization, total-variation profiles, mixing times,
// moments and the spectral gap.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "epsis/errors.hpp"
#include "epsis/model.hpp"
#include "epsis/parallel.hpp"

namespace epsis {

/// A probability law on {0, ..., size()-1}.
class ProbabilityVector {
 public:
  ProbabilityVector() = default;
  explicit ProbabilityVector(std::vector<double> values)
      : values_(std::move(values)) {}

  static ProbabilityVector point_mass(std::size_t size, State x) {
    if (x < 0 || static_cast<std::size_t>(x) >= size)
      throw std::domain_error("point mass outside the state space");
    std::vector<double> v(size, 0.0);
    v[static_cast<std::size_t>(x)] = 1.0;
    return ProbabilityVector(std::move(v));
  }

  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] std::vector<double>& mutable_values() { return values_; }

  [[nodiscard]] double total() const {
    return std::accumulate(values_.begin(), values_.end(), 0.0);
  }

  /// Rescales to unit mass; returns |1 - mass| before rescaling.
  double normalize() {
    const double mass = total();
    for (auto& v : values_) v /= mass;
    return std::abs(1.0 - mass);
  }

  [[nodiscard]] double mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i)
      m += static_cast<double>(i) * values_[i];
    return m;
  }

  [[nodiscard]] double variance() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const double d = static_cast<double>(i) - m;
      v += d * d * values_[i];
    }
    return v;
  }

  /// Mass of the states x with lo <= x <= hi.
  [[nodiscard]] double mass_between(double lo, double hi) const {
    double m = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const double x = static_cast<double>(i);
      if (x >= lo && x <= hi) m += values_[i];
    }
    return m;
  }

 private:
  std::vector<double> values_;
};

inline double tv_distance(const ProbabilityVector& p, const ProbabilityVector& q) {
  if (p.size() != q.size())
    throw std::domain_error("tv_distance: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return std::min(1.0, 0.5 * s);
}

/// (pi Q)(x) for a row vector pi.
inline std::vector<double> apply_generator(const ModelParams& p,
                                           std::span<const double> v) {
  const auto n = static_cast<std::size_t>(p.N) + 1;
  if (v.size() != n) throw std::domain_error("apply_generator: length mismatch");
  std::vector<double> out(n, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    const auto row = generator_row(p, static_cast<State>(x));
    out[x] += v[x] * row.diag;
    if (x + 1 < n) out[x + 1] += v[x] * row.up;
    if (x > 0) out[x - 1] += v[x] * row.down;
  }
  return out;
}

/// Detailed-balance law of the chain restricted to {lo, ..., hi}, returned
/// on the full index range {0..N} with zeros outside. Weights are products of
/// rate ratios taken outward from the mode, so adjacent entries satisfy
/// detailed balance to a few ulps.
inline ProbabilityVector stationary_on_range(const ModelParams& p, State lo,
                                             State hi) {
  p.validate();
  if (lo < 0 || hi > p.N || lo > hi)
    throw std::domain_error("stationary_on_range: bad range");
  const auto n = static_cast<std::size_t>(p.N) + 1;
  const auto ratio = [&](State x) { return birth_rate(p, x) / death_rate(p, x + 1); };
  State mode = lo;
  double logw = 0.0, peak = 0.0;
  for (State x = lo; x < hi; ++x) {
    logw += std::log(ratio(x));
    if (logw > peak) {
      peak = logw;
      mode = x + 1;
    }
  }
  std::vector<double> v(n, 0.0);
  const auto m = static_cast<std::size_t>(mode);
  v[m] = 1.0;
  for (State x = mode; x < hi; ++x) {
    const auto i = static_cast<std::size_t>(x);
    v[i + 1] = v[i] * ratio(x);
  }
  for (State x = mode; x > lo; --x) {
    const auto i = static_cast<std::size_t>(x);
    v[i - 1] = v[i] / ratio(x - 1);
  }
  double z = 0.0;
  for (State x = lo; x <= hi; ++x) z += v[static_cast<std::size_t>(x)];
  for (State x = lo; x <= hi; ++x) v[static_cast<std::size_t>(x)] /= z;
  return ProbabilityVector(std::move(v));
}

inline ProbabilityVector stationary_distribution(const ModelParams& p) {
  return stationary_on_range(p, 0, p.N);
}

struct UniformizationOptions {
  double tolerance = 1e-12;  ///< allowed Poisson mass outside the kept window
};

/// Poisson(q t) weights kept after trimming both tails.
struct PoissonWindow {
  std::size_t left = 0;
  std::vector<double> weights;  ///< weights[k] = P(Poisson = left + k)
  double truncated_mass = 0.0;

  [[nodiscard]] std::size_t right() const { return left + weights.size() - 1; }
};

inline PoissonWindow poisson_window(double mean, double tolerance) {
  PoissonWindow w;
  if (mean == 0.0) {
    w.weights = {1.0};
    return w;
  }
  // Steps are capped at mean + 12 sqrt(mean) + 30 on the right and mirrored
  // on the left; the Poisson tails beyond are far below any tolerance used.
  const double spread = 12.0 * std::sqrt(mean) + 30.0;
  const auto mode = static_cast<std::size_t>(std::floor(mean));
  const auto lo = static_cast<std::size_t>(std::max(0.0, std::floor(mean - spread)));
  const auto hi = static_cast<std::size_t>(std::ceil(mean + spread));
  std::vector<double> weights(hi - lo + 1, 0.0);
  const double log_mode = -mean + static_cast<double>(mode) * std::log(mean) -
                          std::lgamma(static_cast<double>(mode) + 1.0);
  weights[mode - lo] = std::exp(log_mode);
  for (std::size_t k = mode; k < hi; ++k)
    weights[k + 1 - lo] = weights[k - lo] * mean / static_cast<double>(k + 1);
  for (std::size_t k = mode; k > lo; --k)
    weights[k - 1 - lo] = weights[k - lo] * static_cast<double>(k) / mean;

  // lgamma is only accurate to ~1e-11 relative at large means; the window
  // holds all but a negligible Poisson tail, so normalise over it.
  double window_mass = 0.0;
  for (double x : weights) window_mass += x;
  for (auto& x : weights) x /= window_mass;
  // Bernstein bounds on the mass outside [lo, hi].
  const double above = static_cast<double>(hi) - mean;
  const double below = mean - static_cast<double>(lo);
  double outside = std::exp(-above * above / (2.0 * (mean + above / 3.0)));
  if (lo > 0) outside += std::exp(-below * below / (2.0 * mean));

  // Trim each tail while its accumulated mass stays under tolerance / 4.
  const double budget = tolerance / 4.0;
  std::size_t first = 0;
  double cut_left = 0.0;
  while (first + 1 < weights.size() && cut_left + weights[first] < budget)
    cut_left += weights[first++];
  std::size_t last = weights.size() - 1;
  double cut_right = 0.0;
  while (last > first && cut_right + weights[last] < budget) cut_right += weights[last--];

  w.left = lo + first;
  w.weights.assign(weights.begin() + static_cast<std::ptrdiff_t>(first),
                   weights.begin() + static_cast<std::ptrdiff_t>(last) + 1);
  w.truncated_mass = cut_left + cut_right + outside;
  return w;
}

/// One step of the uniformized kernel P = I + Q/q, applied to a row vector.
class UniformizedKernel {
 public:
  explicit UniformizedKernel(const ModelParams& p)
      : rate_(p.uniformization_rate()) {
    const auto n = static_cast<std::size_t>(p.N) + 1;
    up_.resize(n);
    down_.resize(n);
    stay_.resize(n);
    for (std::size_t x = 0; x < n; ++x) {
      const auto row = generator_row(p, static_cast<State>(x));
      up_[x] = row.up / rate_;
      down_[x] = row.down / rate_;
      stay_[x] = 1.0 + row.diag / rate_;
    }
  }

  [[nodiscard]] double rate() const { return rate_; }
  [[nodiscard]] std::size_t size() const { return up_.size(); }

  void apply(std::span<const double> in, std::span<double> out) const {
    const std::size_t n = size();
    for (std::size_t y = 0; y < n; ++y) {
      double s = in[y] * stay_[y];
      if (y > 0) s += in[y - 1] * up_[y - 1];
      if (y + 1 < n) s += in[y + 1] * down_[y + 1];
      out[y] = s;
    }
  }

 private:
  double rate_;
  std::vector<double> up_, down_, stay_;
};

struct TransientResult {
  ProbabilityVector law;
  double truncation_error = 0.0;  ///< Poisson mass dropped by the window
  std::size_t steps = 0;          ///< kernel applications performed
};

/// Law at time t of the chain started from `initial`, by uniformization at
/// rate q = (lambda + mu + eps) N.
inline TransientResult transient_with_report(const UniformizedKernel& kernel,
                                             const ProbabilityVector& initial, double t,
                                             const UniformizationOptions& opt = {}) {
  if (!(t >= 0.0)) throw std::domain_error("time must be nonnegative");
  if (initial.size() != kernel.size())
    throw std::domain_error("initial law has the wrong length");
  TransientResult res;
  if (t == 0.0) {
    res.law = initial;
    return res;
  }
  const auto window = poisson_window(kernel.rate() * t, opt.tolerance);
  if (window.truncated_mass > opt.tolerance)
    throw NumericalError("Poisson truncation error " +
                         std::to_string(window.truncated_mass) + " exceeds tolerance");
  const std::size_t n = kernel.size();
  std::vector<double> cur(initial.values().begin(), initial.values().end());
  std::vector<double> nxt(n), acc(n, 0.0);
  const std::size_t last = window.right();
  for (std::size_t k = 0;; ++k) {
    if (k >= window.left) {
      const double w = window.weights[k - window.left];
      for (std::size_t i = 0; i < n; ++i) acc[i] += w * cur[i];
    }
    if (k == last) break;
    kernel.apply(cur, nxt);
    cur.swap(nxt);
  }
  res.steps = last;
  res.truncation_error = window.truncated_mass;
  res.law = ProbabilityVector(std::move(acc));
  const double defect = res.law.normalize();
  if (defect > 1e-9)
    throw NumericalError("transient law lost mass " + std::to_string(defect));
  return res;
}

inline TransientResult transient_with_report(const ModelParams& p,
                                             const ProbabilityVector& initial, double t,
                                             const UniformizationOptions& opt = {}) {
  p.validate();
  return transient_with_report(UniformizedKernel(p), initial, t, opt);
}

inline ProbabilityVector transient_distribution(const ModelParams& p,
                                                const ProbabilityVector& initial,
                                                double t,
                                                const UniformizationOptions& opt = {}) {
  return transient_with_report(p, initial, t, opt).law;
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

inline Moments transient_moments(const ModelParams& p, State x0, double t) {
  detail::check_state(p, x0);
  const auto law = transient_distribution(
      p, ProbabilityVector::point_mass(static_cast<std::size_t>(p.N) + 1, x0), t);
  return {law.mean(), law.variance()};
}

/// Starting states over which the worst-case distance is taken.
struct StartSet {
  std::vector<State> states;

  static StartSet endpoints(const ModelParams& p) { return {{0, p.N}}; }
  static StartSet full(const ModelParams& p) {
    StartSet s;
    s.states.resize(static_cast<std::size_t>(p.N) + 1);
    std::iota(s.states.begin(), s.states.end(), State{0});
    return s;
  }
};

struct MixingProfile {
  std::vector<double> times;
  std::vector<double> rho;
  std::vector<State> start_set;
};

struct ExactOptions {
  UniformizationOptions uniformization;
  unsigned threads = 1;
};

namespace detail {

inline void check_start_set(const ModelParams& p, const StartSet& s) {
  if (s.states.empty()) throw std::domain_error("start set is empty");
  for (State x : s.states) check_state(p, x);
}

// Laws for every start state, advanced together through time.
class TransientEnsemble {
 public:
  TransientEnsemble(const ModelParams& p, const StartSet& starts, const ExactOptions& opt)
      : kernel_(p), pi_(stationary_distribution(p)), opt_(opt) {
    laws_.reserve(starts.states.size());
    for (State x : starts.states)
      laws_.push_back(ProbabilityVector::point_mass(kernel_.size(), x));
  }

  void advance(double dt) {
    if (dt == 0.0) return;
    parallel_for(laws_.size(), opt_.threads, [&](std::size_t i) {
      laws_[i] = transient_with_report(kernel_, laws_[i], dt, opt_.uniformization).law;
    });
  }

  [[nodiscard]] double worst_tv() const {
    double worst = 0.0;
    for (const auto& law : laws_) worst = std::max(worst, tv_distance(law, pi_));
    return worst;
  }

  [[nodiscard]] const ProbabilityVector& stationary() const { return pi_; }

 private:
  UniformizedKernel kernel_;
  ProbabilityVector pi_;
  ExactOptions opt_;
  std::vector<ProbabilityVector> laws_;
};

}  // namespace detail

/// rho(t) = max over the start set of || P^t(x, .) - pi ||_TV.
inline MixingProfile mixing_profile(const ModelParams& p, std::span<const double> times,
                                    const StartSet& starts, const ExactOptions& opt = {}) {
  p.validate();
  detail::check_start_set(p, starts);
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0)) throw std::domain_error("profile times must be nonnegative");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw std::domain_error("profile times must be increasing");
  }
  MixingProfile prof;
  prof.times.assign(times.begin(), times.end());
  prof.start_set = starts.states;
  detail::TransientEnsemble ens(p, starts, opt);
  double now = 0.0;
  for (double t : times) {
    ens.advance(t - now);
    now = t;
    prof.rho.push_back(ens.worst_tv());
  }
  return prof;
}

/// Absolute accuracy of mixing times located by bisection.
inline constexpr double kMixingTimeTolerance = 1e-4;

/// First times at which rho drops to each level in `levels`. Laws are
/// marched on a coarse grid and each crossing is refined by bisection from
/// the bracketing grid point. Result order follows `levels`.
inline std::vector<double> mixing_times(const ModelParams& p, std::span<const double> levels,
                                        const StartSet& starts,
                                        const ExactOptions& opt = {}) {
  p.validate();
  detail::check_start_set(p, starts);
  for (double d : levels)
    if (!(d > 0.0 && d < 1.0)) throw std::domain_error("mixing level must lie in (0, 1)");
  const auto dq = derived(p);
  const double horizon = 4.0 * dq.t_N + 50.0 / dq.J;
  const double step = 0.25 / dq.J;

  std::vector<double> result(levels.size(), -1.0);
  std::size_t remaining = levels.size();
  detail::TransientEnsemble ens(p, starts, opt);
  double t = 0.0;
  const double rho0 = ens.worst_tv();
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (rho0 <= levels[i]) {
      result[i] = 0.0;
      --remaining;
    }
  while (remaining > 0) {
    if (t >= horizon)
      throw NumericalError("worst-case distance did not reach the requested level by t = " +
                           std::to_string(horizon));
    const auto before = ens;
    const double dt = std::min(step, horizon - t);
    ens.advance(dt);
    const double rho = ens.worst_tv();
    for (std::size_t i = 0; i < levels.size(); ++i) {
      if (result[i] >= 0.0 || rho > levels[i]) continue;
      // rho(t) > level >= rho(t + dt): bisect, carrying the laws at lo.
      auto lo_state = before;
      double lo = t, hi = t + dt;
      while (hi - lo > 0.5 * kMixingTimeTolerance) {
        const double mid = 0.5 * (lo + hi);
        auto probe = lo_state;
        probe.advance(mid - lo);
        if (probe.worst_tv() <= levels[i]) {
          hi = mid;
        } else {
          lo = mid;
          lo_state = std::move(probe);
        }
      }
      result[i] = hi;
      --remaining;
    }
    t += dt;
  }
  return result;
}

inline double mixing_time(const ModelParams& p, double level, const StartSet& starts,
                          const ExactOptions& opt = {}) {
  const double levels[] = {level};
  return mixing_times(p, levels, starts, opt).front();
}

struct SpectralGap {
  double gap = 0.0;
  double relaxation_time = 0.0;
};

namespace detail {

// Number of eigenvalues below sigma of the symmetric tridiagonal matrix with
// diagonal `diag` and squared off-diagonals `offsq` (Sturm count via LDL^T).
inline std::size_t sturm_count(std::span<const double> diag, std::span<const double> offsq,
                               double sigma) {
  std::size_t count = 0;
  double d = 1.0;
  for (std::size_t i = 0; i < diag.size(); ++i) {
    d = (diag[i] - sigma) - (i > 0 ? offsq[i - 1] / d : 0.0);
    if (d == 0.0) d = -std::numeric_limits<double>::min();
    if (d < 0.0) ++count;
  }
  return count;
}

}  // namespace detail

/// Smallest nonzero eigenvalue of -Q, found by Sturm bisection on the
/// symmetrised tridiagonal form (the chain is reversible).
inline SpectralGap spectral_gap(const ModelParams& p) {
  p.validate();
  const auto n = static_cast<std::size_t>(p.N) + 1;
  std::vector<double> diag(n), offsq(n - 1);
  double upper = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    const auto row = generator_row(p, static_cast<State>(x));
    diag[x] = -row.diag;
    if (x + 1 < n) offsq[x] = row.up * death_rate(p, static_cast<State>(x) + 1);
  }
  for (std::size_t x = 0; x < n; ++x) {
    double r = diag[x];
    if (x > 0) r += std::sqrt(offsq[x - 1]);
    if (x + 1 < n) r += std::sqrt(offsq[x]);
    upper = std::max(upper, r);
  }
  double lo = 0.0, hi = upper;
  for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi;
       ++it) {
    const double mid = 0.5 * (lo + hi);
    if (detail::sturm_count(diag, offsq, mid) >= 2)
      hi = mid;
    else
      lo = mid;
  }
  SpectralGap g;
  g.gap = 0.5 * (lo + hi);
  g.relaxation_time = 1.0 / g.gap;
  return g;
}

}  // namespace epsis
