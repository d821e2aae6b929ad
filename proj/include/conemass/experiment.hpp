#pragma once

// Declarative experiments: strict JSON configs, resolved defaults, and the
// pipelines that turn a config into report files.

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "conemass/asymptotics.hpp"
#include "conemass/conformal.hpp"
#include "conemass/error.hpp"
#include "conemass/geometry.hpp"
#include "conemass/io.hpp"
#include "conemass/mass.hpp"
#include "conemass/radial_solver.hpp"
#include "conemass/spectral.hpp"

namespace conemass {

inline constexpr const char* kConfigSchema = "conemass-experiment/1";

using io::Json;

namespace config_detail {

inline void reject_unknown(const Json& j, const std::string& where,
                           const std::vector<std::string>& allowed) {
  require(j.is_object(), ErrorKind::kConfig, where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& a : allowed) ok = ok || a == it.key();
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    require(ok, ErrorKind::kConfig, "unknown key '" + key + "'");
  }
}

inline std::string join(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

inline double number(const Json& j, const std::string& where, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  require(j.at(key).is_number(), ErrorKind::kConfig, "'" + join(where, key) + "' must be a number");
  return j.at(key).get<double>();
}

inline int integer(const Json& j, const std::string& where, const std::string& key, int fallback) {
  if (!j.contains(key)) return fallback;
  require(j.at(key).is_number_integer(), ErrorKind::kConfig,
          "'" + join(where, key) + "' must be an integer");
  return j.at(key).get<int>();
}

inline std::string string(const Json& j, const std::string& where, const std::string& key,
                          const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  require(j.at(key).is_string(), ErrorKind::kConfig, "'" + join(where, key) + "' must be a string");
  return j.at(key).get<std::string>();
}

inline std::vector<double> numbers(const Json& j, const std::string& where, const std::string& key,
                                   const std::vector<double>& fallback) {
  if (!j.contains(key)) return fallback;
  const Json& a = j.at(key);
  require(a.is_array(), ErrorKind::kConfig, "'" + join(where, key) + "' must be an array");
  std::vector<double> out;
  for (const auto& v : a) {
    require(v.is_number(), ErrorKind::kConfig, "'" + join(where, key) + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline void check(bool ok, const std::string& key, const std::string& what) {
  require(ok, ErrorKind::kConfig, "'" + key + "' " + what);
}

}  // namespace config_detail

struct MetricSpec {
  std::string builtin = "flat";  // empty when csv is set
  std::string csv;               // columns r,f
  int n = 3;
  double aperture = 1.0;
  double b = 2.0 / 3.0;
  double A = 1.0;
  double mass = 1.0;
  double cone_radius = 1.0;
  double af_radius = 2.0;
};

struct SpectrumSpec {
  std::string builtin = "sphere";  // empty when a table is given
  int jmax = kDefaultCatalogWindow;
  std::vector<Eigenvalue> table;
  double ricci_lower_bound = std::numeric_limits<double>::quiet_NaN();
};

struct PotentialSpec {
  double amplitude = 1.0;
  double inner = 1.2;
  double outer = 1.8;
};

struct ExperimentConfig {
  std::string experiment = "mass";
  MetricSpec metric;
  SpectrumSpec spectrum;
  SolverOptions solver;
  std::vector<double> ladder = default_ladder();
  std::vector<double> deltas = {0.1, 0.2, 0.4};
  double delta = 0.5;
  PotentialSpec potential;
  std::string output_directory = "conemass-out";
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k = {"mass",        "green",    "blowup", "mass_shift",
                                             "schrodinger", "horn_fit", "catalog"};
  return k;
}

/// Parses and validates a config; every failure names the offending key.
inline ExperimentConfig parse_config(const Json& j, const std::string& base_dir = ".") {
  using namespace config_detail;
  reject_unknown(j, "", {"schema", "experiment", "metric", "spectrum", "solver", "ladder", "deltas",
                         "delta", "potential", "output"});
  require(j.contains("schema") && j.at("schema").is_string() &&
              j.at("schema").get<std::string>() == kConfigSchema,
          ErrorKind::kConfig, std::string("'schema' must be \"") + kConfigSchema + "\"");
  ExperimentConfig c;
  c.experiment = string(j, "", "experiment", c.experiment);
  bool known = false;
  for (const auto& k : experiment_kinds()) known = known || k == c.experiment;
  check(known, "experiment", "must be one of mass, green, blowup, mass_shift, schrodinger, horn_fit, catalog");

  if (j.contains("metric")) {
    const Json& m = j.at("metric");
    reject_unknown(m, "metric", {"builtin", "csv", "n", "aperture", "b", "A", "mass", "cone_radius", "af_radius"});
    c.metric.builtin = string(m, "metric", "builtin", c.metric.csv.empty() ? "flat" : "");
    c.metric.csv = string(m, "metric", "csv", "");
    if (!c.metric.csv.empty()) {
      check(!m.contains("builtin"), "metric.csv", "cannot be combined with metric.builtin");
      c.metric.builtin.clear();
      std::string path = c.metric.csv;
      if (!path.empty() && path.front() != '/') path = base_dir + "/" + path;
      std::ifstream probe(path);
      check(probe.good(), "metric.csv", "refers to a file that cannot be read: " + path);
      c.metric.csv = path;
    }
    c.metric.n = integer(m, "metric", "n", c.metric.n);
    c.metric.aperture = number(m, "metric", "aperture", c.metric.aperture);
    c.metric.b = number(m, "metric", "b", c.metric.b);
    c.metric.A = number(m, "metric", "A", c.metric.A);
    c.metric.mass = number(m, "metric", "mass", c.metric.mass);
    c.metric.cone_radius = number(m, "metric", "cone_radius", c.metric.cone_radius);
    c.metric.af_radius = number(m, "metric", "af_radius", c.metric.af_radius);
  }
  const auto& ms = c.metric;
  check(ms.n >= 3 && ms.n <= 12, "metric.n", "must be an integer in [3, 12]");
  if (ms.csv.empty()) {
    const std::vector<std::string> builtins = {"flat", "cone", "horn", "schwarzschild", "neg_schwarzschild", "glued"};
    bool ok = false;
    for (const auto& b : builtins) ok = ok || b == ms.builtin;
    check(ok, "metric.builtin", "must be one of flat, cone, horn, schwarzschild, neg_schwarzschild, glued");
  }
  check(ms.aperture > 0.0, "metric.aperture", "must be positive");
  check(ms.b > 0.0, "metric.b", "must be positive");
  check(ms.A > 0.0, "metric.A", "must be positive");
  check(ms.mass > 0.0, "metric.mass", "must be positive");
  check(ms.cone_radius > 0.0, "metric.cone_radius", "must be positive");
  check(ms.af_radius > ms.cone_radius, "metric.af_radius", "must exceed metric.cone_radius");

  if (j.contains("spectrum")) {
    const Json& s = j.at("spectrum");
    reject_unknown(s, "spectrum", {"builtin", "jmax", "table", "ricci_lower_bound"});
    c.spectrum.jmax = integer(s, "spectrum", "jmax", c.spectrum.jmax);
    c.spectrum.ricci_lower_bound = number(s, "spectrum", "ricci_lower_bound", c.spectrum.ricci_lower_bound);
    if (s.contains("table")) {
      check(!s.contains("builtin"), "spectrum.table", "cannot be combined with spectrum.builtin");
      c.spectrum.builtin.clear();
      const Json& t = s.at("table");
      check(t.is_array() && !t.empty(), "spectrum.table", "must be a nonempty array");
      for (std::size_t i = 0; i < t.size(); ++i) {
        const std::string where = "spectrum.table[" + std::to_string(i) + "]";
        reject_unknown(t[i], where, {"lambda", "multiplicity"});
        check(t[i].contains("lambda"), where + ".lambda", "is required");
        Eigenvalue e;
        e.lambda = number(t[i], where, "lambda", 0.0);
        e.multiplicity = integer(t[i], where, "multiplicity", 1);
        check(e.multiplicity >= 1, where + ".multiplicity", "must be >= 1");
        c.spectrum.table.push_back(e);
      }
    } else {
      c.spectrum.builtin = string(s, "spectrum", "builtin", "sphere");
      check(c.spectrum.builtin == "sphere", "spectrum.builtin", "must be \"sphere\"");
    }
  }
  check(c.spectrum.jmax >= 0 && c.spectrum.jmax <= 200, "spectrum.jmax", "must be in [0, 200]");

  if (j.contains("solver")) {
    const Json& s = j.at("solver");
    reject_unknown(s, "solver", {"r_in", "r_out", "points_per_decade", "elements_per_decade", "degree",
                                 "residual_tolerance", "refine_tolerance", "max_refinements"});
    auto& o = c.solver;
    o.r_in = number(s, "solver", "r_in", o.r_in);
    o.r_out = number(s, "solver", "r_out", o.r_out);
    o.points_per_decade = integer(s, "solver", "points_per_decade", o.points_per_decade);
    o.elements_per_decade = integer(s, "solver", "elements_per_decade", o.elements_per_decade);
    o.degree = integer(s, "solver", "degree", o.degree);
    o.residual_tolerance = number(s, "solver", "residual_tolerance", o.residual_tolerance);
    o.refine_tolerance = number(s, "solver", "refine_tolerance", o.refine_tolerance);
    o.max_refinements = integer(s, "solver", "max_refinements", o.max_refinements);
  }
  const auto& o = c.solver;
  check(o.r_in > 0.0, "solver.r_in", "must be positive");
  check(o.r_out > 10.0 * o.r_in, "solver.r_out", "must exceed 10 * solver.r_in");
  check(o.points_per_decade >= 10, "solver.points_per_decade", "must be >= 10");
  check(o.elements_per_decade >= 1, "solver.elements_per_decade", "must be >= 1");
  check(o.degree >= 4 && o.degree <= 64, "solver.degree", "must be in [4, 64]");
  check(o.residual_tolerance > 0.0, "solver.residual_tolerance", "must be positive");
  check(o.refine_tolerance > 0.0, "solver.refine_tolerance", "must be positive");
  check(o.max_refinements >= 0, "solver.max_refinements", "must be >= 0");

  c.ladder = numbers(j, "", "ladder", c.ladder);
  check(c.ladder.size() >= 3, "ladder", "needs at least three radii");
  for (std::size_t i = 0; i < c.ladder.size(); ++i) {
    check(c.ladder[i] > 0.0 && (i == 0 || c.ladder[i] > c.ladder[i - 1]), "ladder",
          "must be positive and strictly increasing");
  }
  c.deltas = numbers(j, "", "deltas", c.deltas);
  check(c.deltas.size() >= 3, "deltas", "needs at least three values");
  for (double d : c.deltas) check(d >= 0.0, "deltas", "must be nonnegative");
  c.delta = number(j, "", "delta", c.delta);
  check(c.delta > 0.0, "delta", "must be positive");

  if (j.contains("potential")) {
    const Json& p = j.at("potential");
    reject_unknown(p, "potential", {"amplitude", "inner", "outer"});
    c.potential.amplitude = number(p, "potential", "amplitude", c.potential.amplitude);
    c.potential.inner = number(p, "potential", "inner", c.potential.inner);
    c.potential.outer = number(p, "potential", "outer", c.potential.outer);
  }
  check(c.potential.inner > o.r_in, "potential.inner", "must exceed solver.r_in");
  check(c.potential.outer > c.potential.inner && c.potential.outer < o.r_out, "potential.outer",
        "must lie in (potential.inner, solver.r_out)");

  if (j.contains("output")) {
    const Json& out = j.at("output");
    reject_unknown(out, "output", {"directory"});
    c.output_directory = string(out, "output", "directory", c.output_directory);
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::kConfig, "cannot read config file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  const auto slash = path.find_last_of('/');
  return parse_config(j, slash == std::string::npos ? "." : path.substr(0, slash));
}

/// The fully resolved config; parse_config(resolved_json(c)) == c.
inline Json resolved_json(const ExperimentConfig& c) {
  Json j;
  j["schema"] = kConfigSchema;
  j["experiment"] = c.experiment;
  Json m;
  if (c.metric.csv.empty()) {
    m["builtin"] = c.metric.builtin;
  } else {
    m["csv"] = c.metric.csv;
  }
  m["n"] = c.metric.n;
  m["aperture"] = c.metric.aperture;
  m["b"] = c.metric.b;
  m["A"] = c.metric.A;
  m["mass"] = c.metric.mass;
  m["cone_radius"] = c.metric.cone_radius;
  m["af_radius"] = c.metric.af_radius;
  j["metric"] = m;
  Json s;
  s["jmax"] = c.spectrum.jmax;
  if (c.spectrum.table.empty()) {
    s["builtin"] = c.spectrum.builtin;
  } else {
    Json t = Json::array();
    for (const auto& e : c.spectrum.table) t.push_back({{"lambda", e.lambda}, {"multiplicity", e.multiplicity}});
    s["table"] = t;
  }
  if (!std::isnan(c.spectrum.ricci_lower_bound)) s["ricci_lower_bound"] = c.spectrum.ricci_lower_bound;
  j["spectrum"] = s;
  const auto& o = c.solver;
  j["solver"] = {{"r_in", o.r_in},
                 {"r_out", o.r_out},
                 {"points_per_decade", o.points_per_decade},
                 {"elements_per_decade", o.elements_per_decade},
                 {"degree", o.degree},
                 {"residual_tolerance", o.residual_tolerance},
                 {"refine_tolerance", o.refine_tolerance},
                 {"max_refinements", o.max_refinements}};
  j["ladder"] = c.ladder;
  j["deltas"] = c.deltas;
  j["delta"] = c.delta;
  j["potential"] = {{"amplitude", c.potential.amplitude}, {"inner", c.potential.inner}, {"outer", c.potential.outer}};
  j["output"] = {{"directory", c.output_directory}};
  return j;
}

// --- building inputs ----------------------------------------------------------

inline SpectralData build_spectrum(const SpectrumSpec& s, int n) {
  SpectralData out;
  if (s.table.empty()) {
    out = sphere_spectrum(n, s.jmax);
  } else {
    out.n = n;
    out.eigenvalues = s.table;
  }
  if (!std::isnan(s.ricci_lower_bound)) out.ricci_lower_bound = s.ricci_lower_bound;
  return out;
}

/// Reads a two-column CSV (r,f) with a header row.
inline RadialFunction read_warp_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::kConfig, "cannot read metric csv " + path);
  std::string line;
  std::getline(in, line);
  std::vector<double> r, f;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b;
    require(std::getline(ss, a, ',') && std::getline(ss, b, ','), ErrorKind::kConfig,
            "metric csv: expected two columns in line '" + line + "'");
    try {
      r.push_back(std::stod(a));
      f.push_back(std::stod(b));
    } catch (const std::exception&) {
      throw Error(ErrorKind::kConfig, "metric csv: non-numeric entry in line '" + line + "'");
    }
  }
  return RadialFunction::from_values(std::move(r), std::move(f));
}

inline RadialMetric build_metric(const ExperimentConfig& c) {
  const auto& s = c.metric;
  RadialMetric m;
  if (!s.csv.empty()) {
    const RadialFunction f = read_warp_csv(s.csv);
    m = metrics::sphere_based("sampled", s.n);
    m.warp = f.as_profile();
    m.r_min = 0.0;
    m.conical_order = std::numeric_limits<double>::quiet_NaN();
    m.af_order = std::numeric_limits<double>::quiet_NaN();
  } else if (s.builtin == "flat") {
    m = metrics::flat(s.n);
  } else if (s.builtin == "cone") {
    m = metrics::cone(s.n, s.aperture);
  } else if (s.builtin == "horn") {
    m = metrics::horn(s.n, s.b);
  } else if (s.builtin == "schwarzschild") {
    m = metrics::schwarzschild(s.n, s.A);
  } else if (s.builtin == "neg_schwarzschild") {
    m = metrics::neg_schwarzschild(s.n, s.mass);
  } else {
    m = metrics::glued(s.n, s.aperture, s.cone_radius, s.af_radius);
  }
  if (!c.spectrum.table.empty() || c.spectrum.jmax != kDefaultCatalogWindow ||
      !std::isnan(c.spectrum.ricci_lower_bound)) {
    m.spectral = build_spectrum(c.spectrum, s.n);
    m.spectral.is_round_unit_sphere = c.spectrum.table.empty();
  }
  return m;
}

/// ((r - a)(b - r))^4 scaled, supported on [a, b].
inline Profile bump_potential(const PotentialSpec& p) {
  const double a = p.inner, b = p.outer, amp = p.amplitude;
  return Profile(
      [a, b, amp](double r) {
        if (r <= a || r >= b) return Jet{};
        const double q = (r - a) * (b - r), dq = (b - r) - (r - a);
        return Jet{amp * q * q * q * q, amp * 4.0 * q * q * q * dq,
                   amp * (12.0 * q * q * dq * dq - 8.0 * q * q * q)};
      },
      {a, b});
}

// --- running ------------------------------------------------------------------

struct InvariantCheck {
  std::string name;
  bool pass = false;
};

struct ExperimentOutput {
  std::map<std::string, std::string> files;  // file name -> contents
  std::vector<InvariantCheck> checks;
  std::string summary;

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

namespace run_detail {

inline std::string fmt(double v) { return io::format_double(v); }

inline std::string csv_rows(const std::vector<std::string>& header,
                            const std::vector<std::vector<double>>& cols) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += "\n";
  char buf[40];
  for (std::size_t k = 0; k < cols.front().size(); ++k) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", cols[i][k]);
      out += (i ? "," : "") + std::string(buf);
    }
    out += "\n";
  }
  return out;
}

inline Json mass_json(const MassReport& r) {
  return {{"radii", r.radii},       {"fluxes", r.fluxes},       {"mass", r.mass},
          {"order", r.order},       {"order_fit", r.order_fit}, {"error_bar", r.error_bar},
          {"omega_n", r.omega_n},   {"non_monotone_tail", r.non_monotone_tail}};
}

template <typename T>
std::string to_csv(const T& value) {
  std::ostringstream os;
  write_csv(os, value);
  return os.str();
}

}  // namespace run_detail

inline ExperimentOutput run_experiment(const ExperimentConfig& c) {
  using namespace run_detail;
  ExperimentOutput out;
  Json results;
  std::ostringstream sum;
  sum << "experiment: " << c.experiment << "\n";
  sum << "metric: " << (c.metric.csv.empty() ? c.metric.builtin : c.metric.csv) << " n=" << c.metric.n << "\n";
  sum << "solver: r_in=" << fmt(c.solver.r_in) << " r_out=" << fmt(c.solver.r_out)
      << " residual_tolerance=" << fmt(c.solver.residual_tolerance)
      << " refine_tolerance=" << fmt(c.solver.refine_tolerance) << "\n";
  auto add_check = [&](const std::string& name, bool ok) {
    out.checks.push_back({name, ok});
  };

  if (c.experiment == "catalog") {
    const SpectralData s = build_spectrum(c.spectrum, c.metric.n);
    for (const auto& msg : validate_spectrum(s)) throw Error(ErrorKind::kConfig, "spectrum: " + msg);
    const auto cat = exponent_catalog(s, c.spectrum.jmax);
    std::vector<double> j, lam, mult, np, nm;
    for (const auto& row : cat.cone_critical) {
      j.push_back(static_cast<double>(row.j));
      lam.push_back(row.lambda);
      mult.push_back(static_cast<double>(row.multiplicity));
      np.push_back(row.nu_plus);
      nm.push_back(row.nu_minus);
    }
    out.files["catalog.csv"] = csv_rows({"j", "lambda", "multiplicity", "nu_plus", "nu_minus"}, {j, lam, mult, np, nm});
    std::vector<double> inf(cat.infinity_critical.begin(), cat.infinity_critical.end());
    out.files["infinity_critical.csv"] = csv_rows({"exponent"}, {inf});
    results["cone_critical"] = cat.cone_set();
    results["infinity_critical"] = cat.infinity_critical;
    sum << "rows: " << cat.cone_critical.size() << "\n";
  } else {
    const RadialMetric m = build_metric(c);
    if (c.experiment == "mass") {
      const MassReport r = adm_mass(m, c.ladder);
      results = mass_json(r);
      out.files["flux.csv"] = to_csv(r);
      sum << "mass: " << fmt(r.mass) << " +- " << fmt(r.error_bar) << " order " << fmt(r.order)
          << " (fitted " << fmt(r.order_fit) << ") omega_n " << fmt(r.omega_n) << "\n";
      add_check("monotone flux tail", !r.non_monotone_tail);
    } else if (c.experiment == "green") {
      const GreenHarmonic g = green_harmonic(m, c.solver);
      results = {{"A", g.A},
                 {"A_tail_fit", g.A_tail_fit},
                 {"residual", g.mode.residual},
                 {"tip_exponent", g.mode.tip_fit.exponent},
                 {"tip_coefficient", g.mode.tip_fit.coefficient},
                 {"infinity_exponent", g.mode.infinity_fit.exponent},
                 {"infinity_coefficient", g.mode.infinity_fit.coefficient},
                 {"min_u_minus_1", g.min_deviation},
                 {"elements", static_cast<int>(g.mode.mesh.size()) - 1}};
      out.files["green.csv"] = to_csv(g.mode);
      sum << "A: " << fmt(g.A) << " (tail fit " << fmt(g.A_tail_fit) << ")\n"
          << "tip exponent: " << fmt(g.mode.tip_fit.exponent) << "\n"
          << "residual: " << fmt(g.mode.residual) << "\n";
      add_check("u > 1 on grid", g.min_deviation > 0.0);
      add_check("A > 0", g.A > 0.0);
    } else if (c.experiment == "blowup") {
      const GreenHarmonic g = green_harmonic(m, c.solver);
      const BlowUpResult b = blow_up(m, c.delta, g);
      const MassReport r = adm_mass(b.af_end, c.ladder);
      results = {{"delta", b.delta},
                 {"A", g.A},
                 {"decay_exponent", b.decay_exponent},
                 {"decay_fit_residual", b.decay_fit_residual},
                 {"alpha_prime", b.alpha_prime},
                 {"s0_found", b.s0_found},
                 {"s0", b.s0},
                 {"H_at_s0", b.h_at_s0},
                 {"mass", mass_json(r)}};
      out.files["blowup.csv"] = to_csv(b);
      out.files["flux.csv"] = to_csv(r);
      sum << "decay exponent: " << fmt(b.decay_exponent) << " (alpha' " << fmt(b.alpha_prime) << ")\n"
          << "s0: " << fmt(b.s0) << " H(s0): " << fmt(b.h_at_s0) << "\n"
          << "blown-up mass: " << fmt(r.mass) << " +- " << fmt(r.error_bar) << "\n";
      add_check("decay exponent >= alpha'", b.decay_exponent >= b.alpha_prime);
      add_check("slice found", b.s0_found);
      add_check("slice mean concave", b.s0_found && b.h_at_s0 < 0.0);
    } else if (c.experiment == "mass_shift") {
      const GreenHarmonic g = green_harmonic(m, c.solver);
      // Nonlinearity is reported as a failed check rather than thrown.
      const MassShiftResult r =
          mass_shift_experiment(m, g, c.deltas, c.ladder, std::numeric_limits<double>::infinity());
      results = {{"deltas", r.deltas},
                 {"masses", r.masses},
                 {"error_bars", r.error_bars},
                 {"slope", r.slope},
                 {"intercept", r.intercept},
                 {"nonlinearity", r.nonlinearity},
                 {"A", r.A},
                 {"coefficient", r.coefficient},
                 {"relative_error_vs_4(n-2)", r.rel_to_4_n_minus_2},
                 {"relative_error_vs_4(n-1)", r.rel_to_4_n_minus_1},
                 {"matched_constant", r.matched}};
      out.files["mass_shift.csv"] = csv_rows({"delta", "mass", "error_bar"}, {r.deltas, r.masses, r.error_bars});
      sum << "slope: " << fmt(r.slope) << " A: " << fmt(r.A) << " slope/A: " << fmt(r.coefficient) << "\n"
          << "matched constant: " << r.matched << " (4(n-2) rel err " << fmt(r.rel_to_4_n_minus_2)
          << ", 4(n-1) rel err " << fmt(r.rel_to_4_n_minus_1) << ")\n";
      add_check("linear in delta", r.nonlinearity < kNonlinearityThreshold);
    } else if (c.experiment == "schrodinger") {
      const SchrodingerResult r = solve_schrodinger(m, bump_potential(c.potential), c.solver);
      results = {{"A", r.A},
                 {"A_tail_fit", r.A_tail_fit},
                 {"B", r.B},
                 {"tip_mode1_coefficient", r.tip_mode1_coefficient},
                 {"min_u", r.min_u},
                 {"determinant_ratio", r.determinant_ratio},
                 {"degeneracy_threshold", kDegeneracyThreshold},
                 {"residual", r.mode.residual}};
      out.files["schrodinger.csv"] = to_csv(r.mode);
      sum << "A: " << fmt(r.A) << " B: " << fmt(r.B) << " min u: " << fmt(r.min_u) << "\n";
      add_check("u > 0 on grid", r.min_u > 0.0);
    } else if (c.experiment == "horn_fit") {
      const HornFit h = horn_exponent_fit(m);
      results = {{"exponent", h.exponent},
                 {"coefficient", h.coefficient},
                 {"rms_residual", h.rms_residual},
                 {"is_horn", h.is_horn},
                 {"diagnostic", h.diagnostic}};
      sum << "horn exponent: " << fmt(h.exponent) << " residual " << fmt(h.rms_residual) << "\n";
      add_check("horn fit residual below threshold", h.is_horn);
    }
  }

  Json checks = Json::object();
  for (const auto& k : out.checks) checks[k.name] = k.pass;
  Json report;
  report["config"] = resolved_json(c);
  report["results"] = results;
  report["checks"] = checks;
  out.files["report.json"] = io::dump(report);
  for (const auto& k : out.checks) sum << "check " << k.name << ": " << (k.pass ? "pass" : "FAIL") << "\n";
  out.summary = sum.str();
  out.files["summary.txt"] = out.summary;
  return out;
}

}  // namespace conemass
