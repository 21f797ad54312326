#pragma once

// Plain tables for experiment output and their CSV form (RFC 4180 quoting,
// header row, doubles with 17 significant digits).

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "epsis/experiments.hpp"
#include "epsis/format.hpp"

namespace epsis {

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) {
    if (row.size() != columns.size())
      throw std::logic_error("row width " + std::to_string(row.size()) + " != " +
                             std::to_string(columns.size()) + " columns");
    rows.push_back(std::move(row));
  }
};

namespace cell {

inline std::string num(double v) { return format_double(v); }
inline std::string num(std::int64_t v) { return std::to_string(v); }
inline std::string num(std::uint64_t v) { return std::to_string(v); }
inline std::string flag(bool b) { return b ? "true" : "false"; }
inline std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace cell

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline void write_csv(std::ostream& os, const Table& t) {
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) os << (i ? "," : "") << csv_field(fields[i]);
    os << "\r\n";
  };
  line(t.columns);
  for (const auto& r : t.rows) line(r);
}

// ------------------------------------------------- experiment -> table ---

inline Table to_table(const CutoffReport& r) {
  Table t;
  t.columns = {"N", "t_N"};
  for (double d : r.levels) t.columns.push_back("t_mix_" + format_double(d));
  t.columns.push_back("window");
  for (const auto& rec : r.records) {
    std::vector<std::string> row{cell::num(rec.N), cell::num(rec.t_N)};
    for (double v : rec.t_mix) row.push_back(cell::num(v));
    row.push_back(cell::opt(rec.window));
    t.add(std::move(row));
  }
  return t;
}

inline Table to_table(const ConcentrationReport& r) {
  Table t;
  t.columns = {"N", "horizon", "median", "p95", "mean"};
  for (const auto& row : r.rows)
    t.add({cell::num(row.N), cell::num(row.horizon), cell::num(row.median), cell::num(row.p95),
           cell::num(row.mean)});
  return t;
}

inline Table to_table(const CouplingTailReport& r) {
  Table t;
  t.columns = {"xi", "t", "exceed", "trials", "tail", "tail_lower", "tail_upper",
               "dominant_term", "psi1_overlay", "exact_tv"};
  for (const auto& row : r.rows)
    t.add({cell::num(row.xi), cell::num(row.t), cell::num(std::uint64_t{row.tail.successes}),
           cell::num(std::uint64_t{row.tail.trials}), cell::num(row.tail.estimate),
           cell::num(row.tail.lower), cell::num(row.tail.upper), cell::num(row.dominant_term),
           cell::num(row.psi1_overlay), cell::opt(row.exact_tv)});
  return t;
}

inline Table to_table(const PhaseReport& r) {
  Table t;
  t.columns = {"phase", "boundary_time", "successes", "trials", "frequency", "lower", "upper"};
  auto add = [&](const char* name, double time, const Proportion& p) {
    t.add({name, cell::num(time), cell::num(std::uint64_t{p.successes}),
           cell::num(std::uint64_t{p.trials}), cell::num(p.estimate), cell::num(p.lower),
           cell::num(p.upper)});
  };
  add("burn_in", r.t_burn, r.burn_in);
  add("intermediate", r.t_mid, r.intermediate);
  add("final", r.t_end, r.final_phase);
  return t;
}

inline Table to_table(const IntermediateFit& f) {
  Table t;
  t.columns = {"xi", "failure", "bound", "ok"};
  for (const auto& c : f.checks)
    t.add({cell::num(c.xi), cell::num(c.failure), cell::num(c.bound), cell::flag(c.ok)});
  return t;
}

inline Table to_table(const StationaryConcentrationReport& r) {
  Table t;
  t.columns = {"N", "c", "tail"};
  for (const auto& row : r.rows)
    for (std::size_t i = 0; i < r.c_grid.size(); ++i)
      t.add({cell::num(row.N), cell::num(r.c_grid[i]), cell::num(row.tail[i])});
  return t;
}

inline Table minimal_radius_table(const StationaryConcentrationReport& r) {
  Table t;
  t.columns = {"N", "min_c", "overlay_radius", "overlay_tail"};
  for (const auto& row : r.rows)
    t.add({cell::num(row.N), cell::num(row.min_c), cell::num(row.overlay_radius),
           cell::num(row.overlay_tail)});
  return t;
}

inline Table to_table(const LowerBoundWitness& w) {
  Table t;
  t.columns = {"N", "xi", "t", "r", "x_bar", "tv", "ball_radius", "mass_in_ball", "ball_bound"};
  t.add({cell::num(w.N), cell::num(w.xi), cell::num(w.t), cell::num(w.r), cell::num(w.x_bar),
         cell::num(w.tv), cell::num(w.ball_radius), cell::num(w.mass_in_ball),
         cell::num(w.ball_bound)});
  return t;
}

inline Table to_table(const MixingProfile& m) {
  Table t;
  t.columns = {"t", "rho"};
  for (std::size_t i = 0; i < m.times.size(); ++i)
    t.add({cell::num(m.times[i]), cell::num(m.rho[i])});
  return t;
}

}  // namespace epsis
