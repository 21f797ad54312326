#pragma once

// Run configuration: a sectioned key=value file, overridable key by key.
// Keys are addressed by dotted names ("model.lambda"); top-level keys
// ("master_seed", "threads") have no section.

#include <algorithm>
#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace epsis {

/// Invalid configuration; key() names the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  [[nodiscard]] const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

using RawConfig = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

/// Parses "[section]" headers, "key = value" lines, and '#' or ';' comments.
inline RawConfig parse_ini(std::istream& in) {
  RawConfig out;
  std::string section, line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = detail::trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ConfigError("", "line " + std::to_string(lineno) + ": unterminated section header");
      section = detail::trim(std::string_view(s).substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("", "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(std::string_view(s).substr(0, eq));
    if (key.empty()) throw ConfigError("", "line " + std::to_string(lineno) + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (out.count(full)) throw ConfigError(full, "given twice");
    out[full] = detail::trim(std::string_view(s).substr(eq + 1));
  }
  return out;
}

/// Writes keys grouped by section, top-level keys first, in key order.
inline void write_ini(std::ostream& os, const RawConfig& cfg) {
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> by_section;
  for (const auto& [k, v] : cfg) {
    const auto dot = k.find('.');
    if (dot == std::string::npos)
      by_section[""].emplace_back(k, v);
    else
      by_section[k.substr(0, dot)].emplace_back(k.substr(dot + 1), v);
  }
  bool first = true;
  for (const auto& [section, entries] : by_section) {
    if (!section.empty()) os << (first ? "" : "\n") << '[' << section << "]\n";
    for (const auto& [k, v] : entries) os << k << " = " << v << '\n';
    first = false;
  }
}

// ------------------------------------------------------------- values ---

namespace parse {

inline double real(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE)
    throw ConfigError(key, "expected a number, got '" + v + "'");
  return x;
}

inline std::int64_t integer(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE)
    throw ConfigError(key, "expected an integer, got '" + v + "'");
  return x;
}

inline std::uint64_t unsigned64(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || v[0] == '-' || end != v.c_str() + v.size() || errno == ERANGE)
    throw ConfigError(key, "expected a nonnegative 64-bit integer, got '" + v + "'");
  return x;
}

inline bool boolean(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = detail::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::vector<double> reals(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(real(key, s));
  return out;
}

inline std::vector<std::int64_t> integers(const std::string& key, const std::string& v) {
  std::vector<std::int64_t> out;
  for (const auto& s : split_list(v)) out.push_back(integer(key, s));
  return out;
}

}  // namespace parse

// ------------------------------------------------------------- schema ---

struct KeySpec {
  std::string name;
  std::optional<std::string> default_value;  ///< empty: required when used
  std::string help;
};

inline const std::vector<KeySpec>& config_schema() {
  static const std::vector<KeySpec> keys{
      {"master_seed", "1", "64-bit seed of all random streams"},
      {"threads", "1", "worker threads (results do not depend on it)"},
      {"model.lambda", std::nullopt, "contact rate"},
      {"model.mu", std::nullopt, "recovery rate"},
      {"model.epsilon", std::nullopt, "self-infection rate"},
      {"experiment.N", "1000", "population size"},
      {"experiment.N_list", "200,400,800,1600", "population sizes for scans"},
      {"experiment.replications", "1000", "Monte-Carlo replications"},
      {"experiment.xi", "2", "offset from the cutoff time"},
      {"experiment.xi_grid", "1,2,4,8,16", "offsets for tail tables"},
      {"experiment.xi_train", "2", "offset used to fit the intermediate constant"},
      {"experiment.xi_valid", "4,8", "held-out offsets for the intermediate check"},
      {"experiment.delta_levels", "0.9,0.75,0.5,0.25,0.1", "TV levels for mixing times"},
      {"experiment.start_set", "endpoints", "worst-case start set: endpoints or full"},
      {"experiment.times", "0.5,1,2", "evaluation times"},
      {"experiment.horizon", "10", "simulation horizon"},
      {"experiment.horizon_factor", "1", "scan horizon as a multiple of log(N)/J"},
      {"experiment.radius", "auto", "good-set radius r, or auto"},
      {"experiment.h", "0.5", "concentration exponent in (0,1)"},
      {"experiment.alpha", "0", "initial infected fraction"},
      {"experiment.x0", "0", "initial state, N or xstar"},
      {"experiment.w0", "0", "lower coupled start, N or xstar"},
      {"experiment.z0", "N", "upper coupled start, N or xstar"},
      {"experiment.delta", "0", "envelope perturbation in [0, J)"},
      {"experiment.c2", "1", "surrogate for the concentration constant"},
      {"experiment.c4", "1", "overlay constant for the intermediate term"},
      {"experiment.k1", "1", "surrogate for the mean-bound constant"},
      {"experiment.level", "0.05", "tail level for stationary radii"},
      {"experiment.c_grid", "", "radii c for stationary tails (empty: 0..5 step 0.05)"},
      {"experiment.exact_tv", "false", "also compute the exact TV between the starts"},
      {"experiment.budget", "1e11", "work budget in kernel cell-updates"},
      {"output.directory", "out", "directory receiving every output file"},
      {"output.format", "both", "csv, json or both"},
  };
  return keys;
}

inline const KeySpec* find_key(const std::string& name) {
  for (const auto& k : config_schema())
    if (k.name == name) return &k;
  return nullptr;
}

/// Keys read by each subcommand beyond the common ones.
inline const std::map<std::string, std::vector<std::string>>& subcommand_keys() {
  static const std::map<std::string, std::vector<std::string>> m{
      {"derived", {"N"}},
      {"ode", {"alpha", "times", "delta"}},
      {"stationary", {"N"}},
      {"transient", {"N", "x0", "times"}},
      {"tvprofile", {"N", "times", "start_set"}},
      {"mixtime", {"N", "delta_levels", "start_set"}},
      {"gap", {"N"}},
      {"simulate", {"N", "x0", "horizon", "replications"}},
      {"couple", {"N", "w0", "z0", "horizon", "replications", "radius"}},
      {"reflect", {"N", "x0", "radius", "horizon", "replications"}},
      {"cutoff-scan", {"N_list", "delta_levels", "start_set", "budget"}},
      {"concentration-scan", {"N_list", "replications", "horizon_factor", "alpha"}},
      {"coupling-tail", {"N", "w0", "z0", "xi_grid", "replications", "c4", "exact_tv"}},
      {"phase-verify",
       {"N", "w0", "z0", "xi", "replications", "h", "c2", "xi_train", "xi_valid"}},
      {"stationary-conc", {"N_list", "xi", "k1", "level", "c_grid"}},
      {"lower-bound", {"N", "xi", "radius", "k1", "c4"}},
  };
  return m;
}

/// Per-subcommand defaults that differ from the schema default.
inline const std::map<std::string, RawConfig>& subcommand_defaults() {
  static const std::map<std::string, RawConfig> m{
      {"simulate", {{"experiment.replications", "1"}}},
      {"reflect", {{"experiment.replications", "1"}, {"experiment.x0", "xstar"}}},
      {"couple", {{"experiment.replications", "1"}}},
      {"concentration-scan", {{"experiment.replications", "200"}}},
      {"coupling-tail", {{"experiment.replications", "10000"}}},
  };
  return m;
}

/// The fully resolved settings of one run, defaults filled in.
class RunConfig {
 public:
  static RunConfig resolve(const std::string& subcommand, const RawConfig& given) {
    const auto& subs = subcommand_keys();
    const auto it = subs.find(subcommand);
    if (it == subs.end()) throw ConfigError("", "unknown subcommand '" + subcommand + "'");
    for (const auto& [k, v] : given)
      if (!find_key(k)) throw ConfigError(k, "unknown key");
    std::vector<std::string> used{"master_seed", "threads", "model.lambda", "model.mu",
                                  "model.epsilon", "output.directory", "output.format"};
    for (const auto& k : it->second) used.push_back("experiment." + k);
    RunConfig rc;
    rc.subcommand_ = subcommand;
    const auto overrides = subcommand_defaults().find(subcommand);
    for (const auto& name : used) {
      const auto* spec = find_key(name);
      const auto g = given.find(name);
      if (g != given.end())
        rc.values_[name] = g->second;
      else if (overrides != subcommand_defaults().end() && overrides->second.count(name))
        rc.values_[name] = overrides->second.at(name);
      else if (spec->default_value)
        rc.values_[name] = *spec->default_value;
      else
        throw ConfigError(name, "required key is missing");
    }
    rc.check();
    return rc;
  }

  [[nodiscard]] const std::string& subcommand() const { return subcommand_; }
  [[nodiscard]] const RawConfig& values() const { return values_; }
  [[nodiscard]] bool has(const std::string& k) const { return values_.count(k) > 0; }

  [[nodiscard]] const std::string& str(const std::string& k) const {
    const auto it = values_.find(k);
    if (it == values_.end()) throw std::logic_error("key not resolved: " + k);
    return it->second;
  }
  [[nodiscard]] double real(const std::string& k) const { return parse::real(k, str(k)); }
  [[nodiscard]] std::int64_t integer(const std::string& k) const {
    return parse::integer(k, str(k));
  }
  [[nodiscard]] std::uint64_t unsigned64(const std::string& k) const {
    return parse::unsigned64(k, str(k));
  }
  [[nodiscard]] bool boolean(const std::string& k) const { return parse::boolean(k, str(k)); }
  [[nodiscard]] std::vector<double> reals(const std::string& k) const {
    return parse::reals(k, str(k));
  }
  [[nodiscard]] std::vector<std::int64_t> integers(const std::string& k) const {
    return parse::integers(k, str(k));
  }

  /// A state given as an integer or the literal "N".
  /// "N" names the top state; "xstar" names `xstar` when it is given (>= 0).
  [[nodiscard]] std::int64_t state(const std::string& k, std::int64_t N,
                                   std::int64_t xstar = -1) const {
    const auto& v = str(k);
    if (v == "xstar" && xstar < 0) throw ConfigError(k, "xstar is not available here");
    const auto x = v == "N" ? N : v == "xstar" ? xstar : parse::integer(k, v);
    if (x < 0 || x > N) throw ConfigError(k, "state " + v + " outside {0.." + std::to_string(N) + "}");
    return x;
  }

  /// A positive radius, or nullopt for "auto".
  [[nodiscard]] std::optional<double> radius(const std::string& k) const {
    if (str(k) == "auto") return std::nullopt;
    const double r = real(k);
    if (!(r > 0.0)) throw ConfigError(k, "must be positive or auto");
    return r;
  }

 private:
  void positive(const std::string& k) const {
    if (has(k) && !(real(k) > 0.0)) throw ConfigError(k, "must be positive");
  }
  void nonnegative(const std::string& k) const {
    if (has(k) && !(real(k) >= 0.0)) throw ConfigError(k, "must be nonnegative");
  }
  void increasing(const std::string& k, bool strictly_positive) const {
    if (!has(k)) return;
    const auto xs = reals(k);
    if (xs.empty()) throw ConfigError(k, "list is empty");
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (strictly_positive ? !(xs[i] > 0.0) : !(xs[i] >= 0.0))
        throw ConfigError(k, strictly_positive ? "values must be positive"
                                               : "values must be nonnegative");
      if (i > 0 && !(xs[i] > xs[i - 1])) throw ConfigError(k, "values must be increasing");
    }
  }

  void check() const {
    static_cast<void>(unsigned64("master_seed"));
    if (const auto t = integer("threads"); t < 1 || t > 1024)
      throw ConfigError("threads", "must lie in [1, 1024]");
    for (const char* k : {"model.lambda", "model.mu", "model.epsilon"}) positive(k);
    if (const auto& f = str("output.format"); f != "csv" && f != "json" && f != "both")
      throw ConfigError("output.format", "must be csv, json or both");
    if (str("output.directory").empty()) throw ConfigError("output.directory", "is empty");
    if (has("experiment.N") && integer("experiment.N") < 1)
      throw ConfigError("experiment.N", "must be at least 1");
    if (has("experiment.N_list")) {
      const auto ns = integers("experiment.N_list");
      if (ns.empty()) throw ConfigError("experiment.N_list", "list is empty");
      for (std::size_t i = 0; i < ns.size(); ++i) {
        if (ns[i] < 1) throw ConfigError("experiment.N_list", "values must be at least 1");
        if (i > 0 && ns[i] <= ns[i - 1])
          throw ConfigError("experiment.N_list", "values must be increasing");
      }
    }
    if (has("experiment.replications") && integer("experiment.replications") < 1)
      throw ConfigError("experiment.replications", "must be at least 1");
    if (subcommand_ == "concentration-scan" && integer("experiment.replications") < 100)
      throw ConfigError("experiment.replications", "must be at least 100");
    increasing("experiment.times", false);
    increasing("experiment.xi_grid", true);
    increasing("experiment.xi_valid", true);
    if (has("experiment.delta_levels")) {
      const auto ds = reals("experiment.delta_levels");
      if (ds.empty()) throw ConfigError("experiment.delta_levels", "list is empty");
      for (double d : ds)
        if (!(d > 0.0 && d < 1.0))
          throw ConfigError("experiment.delta_levels", "values must lie in (0, 1)");
    }
    if (has("experiment.start_set")) {
      const auto& s = str("experiment.start_set");
      if (s != "endpoints" && s != "full")
        throw ConfigError("experiment.start_set", "must be endpoints or full");
    }
    if (subcommand_ == "lower-bound")
      nonnegative("experiment.xi");
    else
      positive("experiment.xi");
    for (const char* k : {"experiment.xi_train", "experiment.horizon",
                          "experiment.horizon_factor", "experiment.c2", "experiment.budget"})
      positive(k);
    for (const char* k : {"experiment.c4", "experiment.k1", "experiment.delta"}) nonnegative(k);
    if (has("experiment.h")) {
      const double h = real("experiment.h");
      if (!(h > 0.0 && h < 1.0)) throw ConfigError("experiment.h", "must lie in (0, 1)");
    }
    if (has("experiment.alpha")) {
      const double a = real("experiment.alpha");
      if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("experiment.alpha", "must lie in [0, 1]");
    }
    if (has("experiment.level")) {
      const double l = real("experiment.level");
      if (!(l > 0.0 && l < 1.0)) throw ConfigError("experiment.level", "must lie in (0, 1)");
    }
    if (has("experiment.c_grid")) {
      const auto cs = reals("experiment.c_grid");
      for (std::size_t i = 0; i < cs.size(); ++i)
        if (!(cs[i] >= 0.0) || (i > 0 && !(cs[i] > cs[i - 1])))
          throw ConfigError("experiment.c_grid", "values must be nonnegative and increasing");
    }
    if (has("experiment.radius")) static_cast<void>(radius("experiment.radius"));
    if (has("experiment.exact_tv")) static_cast<void>(boolean("experiment.exact_tv"));
  }

  std::string subcommand_;
  RawConfig values_;
};

}  // namespace epsis
