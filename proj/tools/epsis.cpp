// epsis: command-line front end for the epsilon-SIS analysis library.
//
//   epsis <subcommand> [--config run.ini] [--section.key value ...]
//
// Exit status: 0 ok, 2 bad configuration, 3 infeasible workload,
// 4 numerical failure.

#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "epsis/config.hpp"
#include "epsis/deterministic.hpp"
#include "epsis/errors.hpp"
#include "epsis/exact.hpp"
#include "epsis/experiments.hpp"
#include "epsis/model.hpp"
#include "epsis/report.hpp"
#include "epsis/simulate.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace epsis;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumerical = 4;

/// Everything a subcommand produces; written out in one place.
struct Output {
  std::vector<std::pair<std::string, Table>> tables;
  json results = json::object();
  json checks = json::object();
};

ModelParams model(const RunConfig& rc, State N = 1) {
  ModelParams p;
  p.lambda = rc.real("model.lambda");
  p.mu = rc.real("model.mu");
  p.epsilon = rc.real("model.epsilon");
  p.N = N;
  p.validate();
  return p;
}

ModelParams model_n(const RunConfig& rc) { return model(rc, rc.integer("experiment.N")); }

unsigned threads(const RunConfig& rc) { return static_cast<unsigned>(rc.integer("threads")); }
std::uint64_t seed(const RunConfig& rc) { return rc.unsigned64("master_seed"); }

State start_state(const RunConfig& rc, const std::string& key, const ModelParams& p) {
  return rc.state(key, p.N, std::llround(derived(p).x_star * static_cast<double>(p.N)));
}

std::size_t replications(const RunConfig& rc) {
  return static_cast<std::size_t>(rc.integer("experiment.replications"));
}

StartMode start_mode(const RunConfig& rc) {
  return rc.str("experiment.start_set") == "full" ? StartMode::full : StartMode::endpoints;
}

Table trajectory_table() {
  Table t;
  t.columns = {"replication", "event_index", "time", "state"};
  return t;
}

void append_trajectory(Table& t, std::uint64_t rep, const Trajectory& tr) {
  for (std::size_t i = 0; i < tr.states.size(); ++i)
    t.add({cell::num(rep), cell::num(std::uint64_t{i}), cell::num(tr.times[i]),
           cell::num(tr.states[i])});
}

// ---------------------------------------------------------- subcommands ---

Output run_derived(const RunConfig& rc) {
  const auto p = model_n(rc);
  const auto d = derived(p);
  Output o;
  o.results = {{"J", d.J},     {"x_star", d.x_star}, {"x1_star", d.x1_star},
               {"t_N", d.t_N}, {"k", d.k},           {"uniformization_rate", p.uniformization_rate()}};
  Table t;
  t.columns = {"quantity", "value"};
  for (const auto& [k, v] : o.results.items()) t.add({k, cell::num(v.get<double>())});
  o.tables.emplace_back("derived", std::move(t));
  return o;
}

Output run_ode(const RunConfig& rc) {
  const auto p = model(rc);
  const auto d = derived(p);
  const double alpha = rc.real("experiment.alpha");
  const double delta = rc.real("experiment.delta");
  const double y0 = alpha - d.x_star;
  Table t;
  t.columns = {"t", "x", "y", "decay_bound", "envelope_lower", "envelope_upper"};
  for (double s : rc.reals("experiment.times")) {
    const double x = ode_solution(p, alpha, s);
    const auto env = mean_envelope(p, y0, delta, s);
    t.add({cell::num(s), cell::num(x), cell::num(x - d.x_star), cell::num(decay_bound(p, y0, s)),
           cell::num(env.lower), cell::num(env.upper)});
  }
  Output o;
  o.results = {{"x_star", d.x_star}, {"J", d.J}, {"y0", y0}};
  o.tables.emplace_back("ode", std::move(t));
  return o;
}

Output run_stationary(const RunConfig& rc) {
  const auto p = model_n(rc);
  const auto pi = stationary_distribution(p);
  Table t;
  t.columns = {"x", "pi"};
  for (std::size_t x = 0; x < pi.size(); ++x) t.add({cell::num(std::uint64_t{x}), cell::num(pi[x])});
  Output o;
  const double centre = derived(p).x_star * static_cast<double>(p.N);
  o.results = {{"mean", pi.mean()}, {"variance", pi.variance()}, {"mean_minus_x_star_N", pi.mean() - centre}};
  o.tables.emplace_back("stationary", std::move(t));
  return o;
}

Output run_transient(const RunConfig& rc) {
  const auto p = model_n(rc);
  const State x0 = start_state(rc, "experiment.x0", p);
  const UniformizedKernel kernel(p);
  auto law = ProbabilityVector::point_mass(kernel.size(), x0);
  Table t;
  t.columns = {"t", "x", "probability"};
  Table m;
  m.columns = {"t", "mean", "variance", "truncation_error", "steps"};
  double now = 0.0, worst = 0.0;
  for (double s : rc.reals("experiment.times")) {
    auto r = transient_with_report(kernel, law, s - now);
    now = s;
    law = std::move(r.law);
    worst = std::max(worst, r.truncation_error);
    for (std::size_t x = 0; x < law.size(); ++x)
      t.add({cell::num(s), cell::num(std::uint64_t{x}), cell::num(law[x])});
    m.add({cell::num(s), cell::num(law.mean()), cell::num(law.variance()),
           cell::num(r.truncation_error), cell::num(std::uint64_t{r.steps})});
  }
  Output o;
  o.results = {{"max_truncation_error", worst}};
  o.tables.emplace_back("transient", std::move(t));
  o.tables.emplace_back("transient_moments", std::move(m));
  return o;
}

Output run_tvprofile(const RunConfig& rc) {
  const auto p = model_n(rc);
  ExactOptions opt;
  opt.threads = threads(rc);
  const auto times = rc.reals("experiment.times");
  const auto prof = mixing_profile(p, times, make_start_set(p, start_mode(rc)), opt);
  Output o;
  o.results = {{"t_N", derived(p).t_N}};
  o.tables.emplace_back("tvprofile", to_table(prof));
  return o;
}

Output run_mixtime(const RunConfig& rc) {
  const auto p = model_n(rc);
  ExactOptions opt;
  opt.threads = threads(rc);
  const auto levels = rc.reals("experiment.delta_levels");
  const auto tm = mixing_times(p, levels, make_start_set(p, start_mode(rc)), opt);
  Table t;
  t.columns = {"level", "t_mix"};
  for (std::size_t i = 0; i < levels.size(); ++i) t.add({cell::num(levels[i]), cell::num(tm[i])});
  Output o;
  o.results = {{"t_N", derived(p).t_N}};
  o.tables.emplace_back("mixtime", std::move(t));
  return o;
}

Output run_gap(const RunConfig& rc) {
  const auto p = model_n(rc);
  const auto g = spectral_gap(p);
  Output o;
  o.results = {{"gap", g.gap}, {"relaxation_time", g.relaxation_time}, {"J", derived(p).J},
               {"t_N", derived(p).t_N}};
  Table t;
  t.columns = {"N", "gap", "relaxation_time"};
  t.add({cell::num(p.N), cell::num(g.gap), cell::num(g.relaxation_time)});
  o.tables.emplace_back("gap", std::move(t));
  return o;
}

Output run_simulate(const RunConfig& rc) {
  const auto p = model_n(rc);
  const State x0 = start_state(rc, "experiment.x0", p);
  const double horizon = rc.real("experiment.horizon");
  const auto n = replications(rc);
  std::vector<Trajectory> paths(n);
  parallel_for(n, threads(rc), [&](std::size_t i) {
    paths[i] = simulate_path(p, x0, horizon, seed(rc), i);
  });
  Table t = trajectory_table();
  Table s;
  s.columns = {"replication", "events", "final_state", "sup_deviation"};
  for (std::size_t i = 0; i < n; ++i) {
    append_trajectory(t, i, paths[i]);
    s.add({cell::num(std::uint64_t{i}), cell::num(std::uint64_t{paths[i].events()}),
           cell::num(paths[i].final_state()), cell::num(sup_deviation(paths[i], p))});
  }
  Output o;
  o.tables.emplace_back("trajectories", std::move(t));
  o.tables.emplace_back("simulate_summary", std::move(s));
  return o;
}

Output run_couple(const RunConfig& rc) {
  const auto p = model_n(rc);
  const State w0 = start_state(rc, "experiment.w0", p);
  const State z0 = start_state(rc, "experiment.z0", p);
  const double horizon = rc.real("experiment.horizon");
  const double r = rc.radius("experiment.radius").value_or(GoodSet::default_radius(p));
  const auto I = Interval::around_fixed_point(p, r);
  const auto n = replications(rc);
  std::vector<CouplingTrace> traces(n);
  parallel_for(n, threads(rc), [&](std::size_t i) {
    ReplicationStream rng(seed(rc), i);
    traces[i] = simulate_coupled(p, w0, z0, horizon, I, rng, CouplingOptions{});
  });
  Table paths;
  paths.columns = {"replication", "copy", "event_index", "time", "state"};
  Table s;
  s.columns = {"replication", "tau_couple", "tau_exit"};
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [name, tr] :
         {std::pair{"w", &traces[i].w_trajectory}, std::pair{"z", &traces[i].z_trajectory}})
      for (std::size_t k = 0; k < tr->states.size(); ++k)
        paths.add({cell::num(std::uint64_t{i}), name, cell::num(std::uint64_t{k}),
                   cell::num(tr->times[k]), cell::num(tr->states[k])});
    s.add({cell::num(std::uint64_t{i}), cell::opt(traces[i].tau_couple),
           cell::opt(traces[i].tau_exit)});
  }
  Output o;
  o.results = {{"radius", r}};
  o.tables.emplace_back("coupled_paths", std::move(paths));
  o.tables.emplace_back("couple_summary", std::move(s));
  return o;
}

Output run_reflect(const RunConfig& rc) {
  const auto p = model_n(rc);
  const State x0 = start_state(rc, "experiment.x0", p);
  const double horizon = rc.real("experiment.horizon");
  const double r = rc.radius("experiment.radius").value_or(GoodSet::default_radius(p));
  const auto n = replications(rc);
  std::vector<Trajectory> paths(n);
  parallel_for(n, threads(rc), [&](std::size_t i) {
    paths[i] = simulate_reflected(p, x0, r, horizon, seed(rc), i);
  });
  Table t = trajectory_table();
  for (std::size_t i = 0; i < n; ++i) append_trajectory(t, i, paths[i]);
  const auto b = ReflectionBounds::of(p, r);
  Output o;
  o.results = {{"radius", r}, {"lower_barrier", b.lower}, {"upper_barrier", b.upper}};
  o.tables.emplace_back("reflected_trajectories", std::move(t));
  return o;
}

Output run_cutoff_scan(const RunConfig& rc) {
  const auto base = model(rc);
  CutoffConfig cfg;
  cfg.N_list = rc.integers("experiment.N_list");
  cfg.levels = rc.reals("experiment.delta_levels");
  cfg.starts = start_mode(rc);
  cfg.budget = rc.real("experiment.budget");
  cfg.threads = threads(rc);
  const auto r = cutoff_scan(base, cfg);
  Output o;
  o.results["predicted_slope"] = r.predicted_slope;
  if (r.fit) {
    o.results["slope"] = r.fit->slope;
    o.results["intercept"] = r.fit->intercept;
    o.results["slope_se"] = r.fit->slope_se;
    o.checks["slope_within_15_percent"] =
        std::abs(r.fit->slope - r.predicted_slope) <= 0.15 * r.predicted_slope;
  }
  if (r.window_ratio) {
    o.results["window_ratio"] = *r.window_ratio;
    o.checks["window_ratio_at_most_1.5"] = *r.window_ratio <= 1.5;
  }
  o.checks["sandwich"] = r.sandwich;
  o.tables.emplace_back("cutoff_scan", to_table(r));
  return o;
}

Output run_concentration_scan(const RunConfig& rc) {
  ConcentrationConfig cfg;
  cfg.N_list = rc.integers("experiment.N_list");
  cfg.replications = replications(rc);
  cfg.horizon_factor = rc.real("experiment.horizon_factor");
  cfg.start_fraction = rc.real("experiment.alpha");
  cfg.seed = seed(rc);
  cfg.threads = threads(rc);
  const auto r = concentration_scan(model(rc), cfg);
  Output o;
  if (r.fit) {
    o.results["slope"] = r.fit->slope;
    o.results["slope_se"] = r.fit->slope_se;
    o.results["slope_ci"] = {r.slope_lower, r.slope_upper};
    o.checks["slope_near_minus_half"] = std::abs(r.fit->slope + 0.5) <= 0.1;
  }
  o.checks["p95_decreasing"] = r.p95_decreasing;
  o.tables.emplace_back("concentration_scan", to_table(r));
  return o;
}

Output run_coupling_tail(const RunConfig& rc) {
  const auto p = model_n(rc);
  CouplingTailConfig cfg;
  cfg.w0 = start_state(rc, "experiment.w0", p);
  cfg.z0 = start_state(rc, "experiment.z0", p);
  cfg.xi_grid = rc.reals("experiment.xi_grid");
  cfg.replications = replications(rc);
  cfg.c4 = rc.real("experiment.c4");
  cfg.exact_tv = rc.boolean("experiment.exact_tv");
  cfg.seed = seed(rc);
  cfg.threads = threads(rc);
  const auto r = coupling_tail(p, cfg);
  Output o;
  o.checks["non_increasing"] = r.non_increasing;
  if (cfg.exact_tv) o.checks["coupling_inequality"] = r.coupling_inequality;
  const auto& last = r.rows.back();
  o.results["largest_xi"] = last.xi;
  o.results["tail_at_largest_xi"] = last.tail.estimate;
  o.checks["tail_within_twice_dominant_term"] = last.tail.estimate <= 2.0 * last.dominant_term;
  o.tables.emplace_back("coupling_tail", to_table(r));
  return o;
}

Output run_phase_verify(const RunConfig& rc) {
  const auto p = model_n(rc);
  PhaseConfig cfg;
  cfg.w0 = start_state(rc, "experiment.w0", p);
  cfg.z0 = start_state(rc, "experiment.z0", p);
  cfg.xi = rc.real("experiment.xi");
  cfg.replications = replications(rc);
  cfg.h = rc.real("experiment.h");
  cfg.c2 = rc.real("experiment.c2");
  cfg.seed = seed(rc);
  cfg.threads = threads(rc);
  const auto r = phase_verification(p, cfg);
  const auto fit = intermediate_fit(p, cfg, rc.real("experiment.xi_train"),
                                    rc.reals("experiment.xi_valid"));
  Output o;
  o.results = {{"eta", r.eta},     {"t_burn", r.t_burn}, {"t_mid", r.t_mid},
               {"t_end", r.t_end}, {"exits", r.exits},   {"c_bar", fit.c_bar}};
  o.checks["burn_in_at_least_0.99"] = r.burn_in.estimate >= 0.99;
  bool valid = true;
  for (const auto& c : fit.checks) valid = valid && c.ok;
  o.checks["intermediate_validated"] = valid;
  o.tables.emplace_back("phases", to_table(r));
  o.tables.emplace_back("intermediate_fit", to_table(fit));
  return o;
}

Output run_stationary_conc(const RunConfig& rc) {
  StationaryConcentrationConfig cfg;
  cfg.N_list = rc.integers("experiment.N_list");
  cfg.c_grid = rc.reals("experiment.c_grid");
  cfg.level = rc.real("experiment.level");
  cfg.xi = rc.real("experiment.xi");
  cfg.k1 = rc.real("experiment.k1");
  const auto r = stationary_concentration(model(rc), cfg);
  Output o;
  o.results["min_c_ratio"] = r.min_c_ratio;
  o.checks["min_c_ratio_at_most_1.5"] = r.min_c_ratio <= 1.5;
  o.tables.emplace_back("stationary_tail", to_table(r));
  o.tables.emplace_back("stationary_radius", minimal_radius_table(r));
  return o;
}

Output run_lower_bound(const RunConfig& rc) {
  const auto p = model_n(rc);
  const double xi = rc.real("experiment.xi");
  const auto w = lower_bound_witness(p, xi, rc.radius("experiment.radius"),
                                     rc.real("experiment.k1"));
  const auto d = derived(p);
  const double psi1 =
      final_phase_bound(p, xi) + rc.real("experiment.c4") * std::exp(-d.J * xi / 2.0);
  Output o;
  o.results = {{"tv", w.tv},
               {"mass_in_ball", w.mass_in_ball},
               {"ball_bound", w.ball_bound},
               {"composite_lower_overlay",
                1.0 - psi1 - 6.0 * std::exp(-d.J * xi * xi / (3.0 * p.rate_sum()))}};
  o.checks["tv_at_least_0.9"] = w.tv >= 0.9;
  o.checks["mass_in_ball_at_most_0.1"] = w.mass_in_ball <= 0.1;
  o.tables.emplace_back("lower_bound", to_table(w));
  return o;
}

using Runner = Output (*)(const RunConfig&);

const std::map<std::string, std::pair<Runner, const char*>>& runners() {
  static const std::map<std::string, std::pair<Runner, const char*>> m{
      {"derived", {run_derived, "J, x*, t_N and related constants"}},
      {"ode", {run_ode, "mean-field ODE, decay bound and mean envelopes"}},
      {"stationary", {run_stationary, "stationary law by detailed balance"}},
      {"transient", {run_transient, "transient law by uniformization"}},
      {"tvprofile", {run_tvprofile, "worst-case TV distance to stationarity over time"}},
      {"mixtime", {run_mixtime, "mixing times at the configured levels"}},
      {"gap", {run_gap, "spectral gap and relaxation time"}},
      {"simulate", {run_simulate, "exact SSA trajectories"}},
      {"couple", {run_couple, "monotone coupled trajectories"}},
      {"reflect", {run_reflect, "trajectories reflected at the good set"}},
      {"cutoff-scan", {run_cutoff_scan, "mixing times across N with slope and window fits"}},
      {"concentration-scan", {run_concentration_scan, "sup-deviation from the ODE across N"}},
      {"coupling-tail", {run_coupling_tail, "tail of the coalescence time"}},
      {"phase-verify", {run_phase_verify, "burn-in, intermediate and final coupling phases"}},
      {"stationary-conc", {run_stationary_conc, "stationary tails around x* N"}},
      {"lower-bound", {run_lower_bound, "TV from a far start shortly before t_N"}},
  };
  return m;
}

void write_outputs(const RunConfig& rc, const Output& out) {
  const fs::path dir = rc.str("output.directory");
  const auto& format = rc.str("output.format");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "config.ini", std::ios::binary);
    write_ini(f, rc.values());
  }
  if (format != "json")
    for (const auto& [name, table] : out.tables) {
      std::ofstream f(dir / (name + ".csv"), std::ios::binary);
      write_csv(f, table);
    }
  if (format != "csv") {
    json config = json::object();
    for (const auto& [k, v] : rc.values()) config[k] = v;
    json summary{{"subcommand", rc.subcommand()},
                 {"master_seed", rc.str("master_seed")},
                 {"config", config},
                 {"results", out.results},
                 {"checks", out.checks}};
    std::ofstream f(dir / "summary.json", std::ios::binary);
    f << summary.dump(2) << '\n';
  }
}

void print_summary(const Output& out) {
  for (const auto& [k, v] : out.results.items())
    std::cout << k << " = " << (v.is_number_float() ? format_double(v.get<double>()) : v.dump())
              << '\n';
  for (const auto& [k, v] : out.checks.items())
    std::cout << "check " << k << ": " << (v.get<bool>() ? "pass" : "fail") << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact and Monte-Carlo analysis of the epsilon-SIS birth-death chain"};
  app.require_subcommand(1, 1);
  std::string config_path;
  app.add_option("--config", config_path, "sectioned key = value file")->check(CLI::ExistingFile);
  std::vector<std::pair<std::string, CLI::Option*>> flags;
  std::map<std::string, std::string> flag_values;
  for (const auto& k : config_schema())
    flags.emplace_back(k.name, app.add_option("--" + k.name, flag_values[k.name], k.help));
  for (const auto& [name, entry] : runners()) app.add_subcommand(name, entry.second)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  RunConfig rc;
  try {
    RawConfig raw;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      raw = parse_ini(in);
    }
    for (const auto& [name, opt] : flags)
      if (opt->count() > 0) raw[name] = flag_values[name];
    rc = RunConfig::resolve(sub, raw);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    const auto out = runners().at(sub).first(rc);
    write_outputs(rc, out);
    print_summary(out);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << " (estimated cost " << format_double(e.estimate())
              << ")\n";
    return kExitInfeasible;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::domain_error& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
