#pragma once

// Scenario configuration (one JSON document) and the runners that turn a
// configuration into output tables.

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "optocav/dynamics.hpp"
#include "optocav/hamiltonians.hpp"
#include "optocav/table_io.hpp"

namespace optocav {

enum class Scenario {
  population,
  population_decay,
  dressed_table,
  kerr_spectrum,
  entanglement_time,
  entanglement_gsweep,
  entanglement_thermal,
  adiabatic_check,
  potential_scan,
};

struct ScenarioInfo {
  Scenario id;
  const char* name;
  const char* summary;
};

inline constexpr std::array<ScenarioInfo, 9> kScenarios{{
    {Scenario::population, "population", "excited-state population, atom |e> and coherent field |alpha>"},
    {Scenario::population_decay, "population-decay", "same with spontaneous emission and cavity decay"},
    {Scenario::dressed_table, "dressed-table", "analytic dressed energies and mixing angles per photon number"},
    {Scenario::kerr_spectrum, "kerr-spectrum", "block spectrum of the Kerr effective Hamiltonian vs Jaynes-Cummings"},
    {Scenario::entanglement_time, "entanglement-time", "mirror/atom-motion entropy vs time at fixed G"},
    {Scenario::entanglement_gsweep, "entanglement-gsweep", "mirror/atom-motion entropy vs G at fixed time"},
    {Scenario::entanglement_thermal, "entanglement-thermal", "entropy vs time from a thermal mirror state"},
    {Scenario::adiabatic_check, "adiabatic-check", "mirror-adiabaticity and Born-Oppenheimer validity ratios"},
    {Scenario::potential_scan, "potential-scan", "exact vs approximate adiabatic potential over (Q, q)"},
}};

inline const char* scenario_name(Scenario s) {
  for (const auto& i : kScenarios)
    if (i.id == s) return i.name;
  return "?";
}

inline std::optional<Scenario> parse_scenario(const std::string& name) {
  for (const auto& i : kScenarios)
    if (name == i.name) return i.id;
  return std::nullopt;
}

enum class OutputFormat { csv, json };
enum class ThermalSlot { c, b };

struct ScenarioConfig {
  Scenario scenario = Scenario::population;
  PhysicalParams params;
  std::vector<Complex> alphas;
  std::optional<std::size_t> photon_truncation;
  std::size_t d_c = 10;
  std::size_t d_b = 12;
  std::optional<TimeGrid> grid;  // rescaled units once loaded
  double G = 5e3;                // rad/s
  std::vector<double> G_list;    // rad/s
  double beta = 1e14;            // s (beta * omega is the Boltzmann exponent)
  ThermalSlot thermal_on = ThermalSlot::c;
  bool rwa = false;
  bool resonant = false;  // set omega_m = 2 omega'
  OmegaChoice omega_choice = OmegaChoice::cavity;
  unsigned n_m = 0;
  Frame frame = Frame::rotating;
  unsigned n_min = 0;
  unsigned n_max = 15;
  double sweep_time = 1e-4;  // s
  std::size_t boundary_band = kDefaultBoundaryBand;
  // potential-scan
  unsigned scan_n = 0;
  double scan_kQ_max = 0.03;
  double scan_xq_max = 1e-3;  // max |xi q| / |Delta|
  std::size_t scan_points = 50;
  // adiabatic-check
  std::vector<std::pair<unsigned, unsigned>> phonon_pairs{{0, 1}, {1, 2}, {0, 2}, {2, 1}};
  unsigned bo_n = 0;
  std::vector<double> bo_kQ{0.25, 0.5, 0.75, 1.0, 1.25, 1.5};
  std::vector<double> bo_q{0.0, 1e-12, -1e-12};
  double flag_threshold = 0.1;
  // output
  std::string out_path;
  OutputFormat format = OutputFormat::csv;
};

namespace detail {

using nlohmann::json;

inline double get_number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError("config.type", field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError("config.range", field, "must be finite");
  return v;
}

inline unsigned get_unsigned(const json& j, const std::string& field) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw ConfigError("config.type", field, "expected a non-negative integer");
  }
  return j.get<unsigned>();
}

inline bool get_bool(const json& j, const std::string& field) {
  if (!j.is_boolean()) throw ConfigError("config.type", field, "expected true or false");
  return j.get<bool>();
}

inline std::string get_string(const json& j, const std::string& field) {
  if (!j.is_string()) throw ConfigError("config.type", field, "expected a string");
  return j.get<std::string>();
}

inline std::vector<double> get_number_list(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ConfigError("config.type", field, "expected a non-empty array of numbers");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(get_number(j[i], field + "[" + std::to_string(i) + "]"));
  return v;
}

inline Complex get_complex(const json& j, const std::string& field) {
  if (j.is_number()) return {get_number(j, field), 0.0};
  if (j.is_array() && j.size() == 2) return {get_number(j[0], field + "[0]"), get_number(j[1], field + "[1]")};
  throw ConfigError("config.type", field, "expected a number or [re, im]");
}

inline void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError("config.unknown_field", where + it.key(), "not a recognised field");
    }
  }
}

inline bool is_population(Scenario s) { return s == Scenario::population || s == Scenario::population_decay; }
inline bool is_entanglement(Scenario s) {
  return s == Scenario::entanglement_time || s == Scenario::entanglement_gsweep ||
         s == Scenario::entanglement_thermal;
}

// Top-level fields each scenario accepts besides scenario/params/output.
inline std::set<std::string> scenario_fields(Scenario s) {
  switch (s) {
    case Scenario::population:
    case Scenario::population_decay:
      return {"alphas", "truncations", "grid", "n_m", "frame"};
    case Scenario::dressed_table:
    case Scenario::kerr_spectrum:
      return {"n_range"};
    case Scenario::entanglement_time:
      return {"G", "truncations", "grid", "rwa", "resonant", "omega_choice", "boundary_band"};
    case Scenario::entanglement_gsweep:
      return {"G_list", "sweep_time", "truncations", "rwa", "resonant", "omega_choice", "boundary_band"};
    case Scenario::entanglement_thermal:
      return {"G", "beta", "thermal_on", "truncations", "grid", "rwa", "resonant", "omega_choice",
              "boundary_band"};
    case Scenario::adiabatic_check:
      return {"alphas", "adiabatic"};
    case Scenario::potential_scan:
      return {"scan"};
  }
  return {};
}

inline const std::set<std::string>& all_fields() {
  static const std::set<std::string> f{
      "scenario", "params", "output", "alphas", "truncations", "grid", "n_m", "frame", "n_range",
      "G", "G_list", "sweep_time", "beta", "thermal_on", "rwa", "resonant", "omega_choice",
      "boundary_band", "adiabatic", "scan"};
  return f;
}

inline void parse_params(const json& j, ScenarioConfig& cfg) {
  if (!j.is_object()) throw ConfigError("config.type", "params", "expected an object");
  check_keys(j, {"omega", "Omega", "Delta", "g", "omega_m", "m", "M", "L", "c_light", "Gamma",
                 "kappa", "omega0"},
             "params.");
  if (j.contains("Omega") && j.contains("Delta")) {
    throw ConfigError("config.conflict", "params.Delta", "give either Omega or Delta, not both");
  }
  auto& p = cfg.params;
  const std::pair<const char*, double*> fields[] = {
      {"omega", &p.omega}, {"Omega", &p.Omega}, {"g", &p.g},         {"omega_m", &p.omega_m},
      {"m", &p.m},         {"M", &p.M},         {"L", &p.L},         {"c_light", &p.c_light},
      {"Gamma", &p.Gamma}, {"kappa", &p.kappa}, {"omega0", &p.omega0}};
  for (const auto& [key, dst] : fields) {
    if (j.contains(key)) *dst = get_number(j[key], std::string("params.") + key);
  }
  if (j.contains("Delta")) p.Omega = p.omega - get_number(j["Delta"], "params.Delta");
}

}  // namespace detail

// Large detuning Delta = 10 g for the potential scan.
inline constexpr double kScanDetuningOverG = 10.0;

inline PhysicalParams default_params(Scenario s) {
  if (detail::is_entanglement(s)) return PhysicalParams::entanglement_defaults();
  if (s == Scenario::potential_scan) {
    PhysicalParams p = PhysicalParams::entanglement_defaults();
    p.Omega = p.omega - kScanDetuningOverG * p.g;
    return p;
  }
  PhysicalParams p = PhysicalParams::population_defaults();
  if (s == Scenario::population_decay) {
    p.Gamma = 10.0 * p.g;
    p.kappa = 2.0 * p.g;
  }
  return p;
}

// Default grids: five periods of the n = 0 dressed splitting for the
// population run, ten vacuum Rabi periods pi/g for the damped run, and
// 0..1 ms for the entanglement runs.
inline TimeGrid default_grid(const ScenarioConfig& cfg) {
  const auto& p = cfg.params;
  switch (cfg.scenario) {
    case Scenario::population: {
      const double split = dressed_pair(p, 0).splitting();
      if (!(split > 0.0)) {
        throw ConfigError("config.missing_field", "grid", "dressed splitting is zero; give an explicit grid");
      }
      return {0.0, 5.0 * kTwoPi / split, 2001};
    }
    case Scenario::population_decay:
      return {0.0, 10.0 * std::numbers::pi / p.rescale(p.g), 2001};
    default:
      return {0.0, 1e-3 * p.omega0, 1001};
  }
}

inline ScenarioConfig load_config(const nlohmann::json& j, std::optional<Scenario> requested = {}) {
  using namespace detail;
  if (!j.is_object()) throw ConfigError("config.type", "<root>", "expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!all_fields().count(it.key())) {
      throw ConfigError("config.unknown_field", it.key(), "not a recognised field");
    }
  }
  ScenarioConfig cfg;
  std::optional<Scenario> in_file;
  if (j.contains("scenario")) {
    const auto name = get_string(j["scenario"], "scenario");
    in_file = parse_scenario(name);
    if (!in_file) throw ConfigError("config.range", "scenario", "unknown scenario '" + name + "'");
  }
  if (requested && in_file && *requested != *in_file) {
    throw ConfigError("config.scenario_mismatch", "scenario",
                      std::string("file says ") + scenario_name(*in_file) + ", command line says " +
                          scenario_name(*requested));
  }
  if (!requested && !in_file) throw ConfigError("config.missing_field", "scenario", "no scenario given");
  cfg.scenario = requested ? *requested : *in_file;

  const auto allowed = scenario_fields(cfg.scenario);
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k == "scenario" || k == "params" || k == "output") continue;
    if (!allowed.count(k)) {
      throw ConfigError("config.irrelevant_field", k,
                        std::string("not used by scenario ") + scenario_name(cfg.scenario));
    }
  }

  cfg.params = default_params(cfg.scenario);
  if (j.contains("params")) parse_params(j["params"], cfg);
  try {
    cfg.params.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError("config.range", "params", e.what());
  }

  if (j.contains("output")) {
    const auto& o = j["output"];
    if (!o.is_object()) throw ConfigError("config.type", "output", "expected an object");
    check_keys(o, {"path", "format"}, "output.");
    if (o.contains("path")) cfg.out_path = get_string(o["path"], "output.path");
    if (o.contains("format")) {
      const auto f = get_string(o["format"], "output.format");
      if (f == "csv") cfg.format = OutputFormat::csv;
      else if (f == "json") cfg.format = OutputFormat::json;
      else throw ConfigError("config.range", "output.format", "expected csv or json");
    }
  }

  if (cfg.scenario == Scenario::adiabatic_check) cfg.alphas = {Complex(1.0, 0.0)};
  if (is_population(cfg.scenario)) cfg.alphas = {0.0, 1.0, 3.0, 5.0};
  if (j.contains("alphas")) {
    const auto& a = j["alphas"];
    if (!a.is_array() || a.empty()) throw ConfigError("config.type", "alphas", "expected a non-empty array");
    cfg.alphas.clear();
    for (std::size_t i = 0; i < a.size(); ++i) cfg.alphas.push_back(get_complex(a[i], "alphas[" + std::to_string(i) + "]"));
  }

  if (j.contains("truncations")) {
    const auto& t = j["truncations"];
    if (!t.is_object()) throw ConfigError("config.type", "truncations", "expected an object");
    if (is_population(cfg.scenario)) {
      check_keys(t, {"photon"}, "truncations.");
      if (t.contains("photon")) cfg.photon_truncation = get_unsigned(t["photon"], "truncations.photon");
    } else {
      check_keys(t, {"c", "b"}, "truncations.");
      if (t.contains("c")) cfg.d_c = get_unsigned(t["c"], "truncations.c");
      if (t.contains("b")) cfg.d_b = get_unsigned(t["b"], "truncations.b");
    }
  }
  if (cfg.photon_truncation && *cfg.photon_truncation < 2) {
    throw ConfigError("config.range", "truncations.photon", "must be >= 2");
  }
  if (cfg.d_c < 2) throw ConfigError("config.range", "truncations.c", "must be >= 2");
  if (cfg.d_b < 2) throw ConfigError("config.range", "truncations.b", "must be >= 2");
  if (is_entanglement(cfg.scenario) && cfg.d_c * cfg.d_b > kDefaultMaxDimension) {
    throw CapacityError("truncations c x b = " + std::to_string(cfg.d_c * cfg.d_b) + " exceed the dimension cap");
  }

  for (std::size_t i = 0; i < cfg.alphas.size(); ++i) {
    const std::size_t d = cfg.photon_truncation.value_or(coherent_truncation(cfg.alphas[i]));
    if (coherent_tail_weight(cfg.alphas[i], d) > kTruncationTolerance) {
      throw ConfigError("config.truncation", "alphas[" + std::to_string(i) + "]",
                        "photon truncation " + std::to_string(d) + " too small for this amplitude");
    }
    if (is_population(cfg.scenario) && 2 * d > kDefaultMaxDimension) {
      throw CapacityError("photon truncation " + std::to_string(d) + " exceeds the dimension cap");
    }
  }

  if (j.contains("n_m")) cfg.n_m = get_unsigned(j["n_m"], "n_m");
  if (j.contains("frame")) {
    const auto f = get_string(j["frame"], "frame");
    if (f == "lab") cfg.frame = Frame::lab;
    else if (f == "rotating") cfg.frame = Frame::rotating;
    else throw ConfigError("config.range", "frame", "expected lab or rotating");
  }
  if (j.contains("n_range")) {
    const auto& r = j["n_range"];
    if (!r.is_array() || r.size() != 2) throw ConfigError("config.type", "n_range", "expected [n_min, n_max]");
    cfg.n_min = get_unsigned(r[0], "n_range[0]");
    cfg.n_max = get_unsigned(r[1], "n_range[1]");
    if (cfg.n_min > cfg.n_max) throw ConfigError("config.range", "n_range", "n_min exceeds n_max");
    if (cfg.n_max > 4000) throw ConfigError("config.range", "n_range", "n_max above 4000");
  }
  if (j.contains("G")) {
    cfg.G = get_number(j["G"], "G");
    if (cfg.G < 0.0) throw ConfigError("config.range", "G", "must be >= 0");
  }
  if (cfg.scenario == Scenario::entanglement_gsweep) {
    for (int i = 0; i <= 20; ++i) cfg.G_list.push_back(500.0 * i);
  }
  if (j.contains("G_list")) {
    cfg.G_list = get_number_list(j["G_list"], "G_list");
    for (double g : cfg.G_list)
      if (g < 0.0) throw ConfigError("config.range", "G_list", "values must be >= 0");
  }
  if (j.contains("sweep_time")) {
    cfg.sweep_time = get_number(j["sweep_time"], "sweep_time");
    if (!(cfg.sweep_time >= 0.0)) throw ConfigError("config.range", "sweep_time", "must be >= 0");
  }
  if (j.contains("beta")) {
    cfg.beta = get_number(j["beta"], "beta");
    if (!(cfg.beta > 0.0)) throw ConfigError("config.range", "beta", "must be positive");
  }
  if (j.contains("thermal_on")) {
    const auto s = get_string(j["thermal_on"], "thermal_on");
    if (s == "c") cfg.thermal_on = ThermalSlot::c;
    else if (s == "b") cfg.thermal_on = ThermalSlot::b;
    else throw ConfigError("config.range", "thermal_on", "expected c or b");
  }
  if (j.contains("rwa")) cfg.rwa = get_bool(j["rwa"], "rwa");
  if (j.contains("resonant")) cfg.resonant = get_bool(j["resonant"], "resonant");
  if (j.contains("omega_choice")) {
    const auto s = get_string(j["omega_choice"], "omega_choice");
    if (s == "omega") cfg.omega_choice = OmegaChoice::cavity;
    else if (s == "omega_m") cfg.omega_choice = OmegaChoice::mirror;
    else throw ConfigError("config.range", "omega_choice", "expected omega or omega_m");
  }
  if (j.contains("boundary_band")) cfg.boundary_band = get_unsigned(j["boundary_band"], "boundary_band");

  if (is_entanglement(cfg.scenario)) {
    if (!(cfg.params.Delta() > 0.0)) {
      throw ConfigError("config.range", "params.Delta", "entanglement scenarios need omega - Omega > 0");
    }
    if (cfg.resonant) {
      const auto c = derive_couplings(cfg.params, cfg.omega_choice);
      cfg.params.omega_m = 2.0 * c.require_omega_prime() * cfg.params.omega0;
    }
  }
  if (cfg.scenario == Scenario::potential_scan && cfg.params.Delta() == 0.0) {
    throw ConfigError("config.range", "params.Delta", "potential-scan needs omega != Omega");
  }

  if (j.contains("scan")) {
    const auto& s = j["scan"];
    if (!s.is_object()) throw ConfigError("config.type", "scan", "expected an object");
    check_keys(s, {"n", "kQ_max", "xi_q_over_Delta_max", "points"}, "scan.");
    if (s.contains("n")) cfg.scan_n = get_unsigned(s["n"], "scan.n");
    if (s.contains("kQ_max")) cfg.scan_kQ_max = get_number(s["kQ_max"], "scan.kQ_max");
    if (s.contains("xi_q_over_Delta_max")) cfg.scan_xq_max = get_number(s["xi_q_over_Delta_max"], "scan.xi_q_over_Delta_max");
    if (s.contains("points")) cfg.scan_points = get_unsigned(s["points"], "scan.points");
    if (!(cfg.scan_kQ_max > 0.0)) throw ConfigError("config.range", "scan.kQ_max", "must be positive");
    if (!(cfg.scan_xq_max > 0.0)) throw ConfigError("config.range", "scan.xi_q_over_Delta_max", "must be positive");
    if (cfg.scan_points < 2 || cfg.scan_points > 2000) throw ConfigError("config.range", "scan.points", "must be in [2, 2000]");
  }

  if (j.contains("adiabatic")) {
    const auto& a = j["adiabatic"];
    if (!a.is_object()) throw ConfigError("config.type", "adiabatic", "expected an object");
    check_keys(a, {"phonon_pairs", "n", "kQ", "q", "flag_threshold"}, "adiabatic.");
    if (a.contains("phonon_pairs")) {
      const auto& pp = a["phonon_pairs"];
      if (!pp.is_array() || pp.empty()) throw ConfigError("config.type", "adiabatic.phonon_pairs", "expected [[n_m, m_m], ...]");
      cfg.phonon_pairs.clear();
      for (std::size_t i = 0; i < pp.size(); ++i) {
        const std::string f = "adiabatic.phonon_pairs[" + std::to_string(i) + "]";
        if (!pp[i].is_array() || pp[i].size() != 2) throw ConfigError("config.type", f, "expected [n_m, m_m]");
        const unsigned a0 = get_unsigned(pp[i][0], f);
        const unsigned a1 = get_unsigned(pp[i][1], f);
        if (a0 == a1) throw ConfigError("config.range", f, "n_m and m_m must differ");
        cfg.phonon_pairs.emplace_back(a0, a1);
      }
    }
    if (a.contains("n")) cfg.bo_n = get_unsigned(a["n"], "adiabatic.n");
    if (a.contains("kQ")) cfg.bo_kQ = get_number_list(a["kQ"], "adiabatic.kQ");
    if (a.contains("q")) cfg.bo_q = get_number_list(a["q"], "adiabatic.q");
    if (a.contains("flag_threshold")) cfg.flag_threshold = get_number(a["flag_threshold"], "adiabatic.flag_threshold");
  }

  if (j.contains("grid")) {
    const auto& g = j["grid"];
    if (!g.is_object()) throw ConfigError("config.type", "grid", "expected an object");
    check_keys(g, {"t_start", "t_end", "n_steps", "unit"}, "grid.");
    if (!g.contains("t_end")) throw ConfigError("config.missing_field", "grid.t_end", "required");
    if (!g.contains("n_steps")) throw ConfigError("config.missing_field", "grid.n_steps", "required");
    TimeGrid tg;
    tg.t_start = g.contains("t_start") ? get_number(g["t_start"], "grid.t_start") : 0.0;
    tg.t_end = get_number(g["t_end"], "grid.t_end");
    tg.n_steps = get_unsigned(g["n_steps"], "grid.n_steps");
    double scale = 1.0;
    if (g.contains("unit")) {
      const auto u = get_string(g["unit"], "grid.unit");
      if (u == "seconds") scale = cfg.params.omega0;
      else if (u != "rescaled") throw ConfigError("config.range", "grid.unit", "expected rescaled or seconds");
    }
    tg.t_start *= scale;
    tg.t_end *= scale;
    if (tg.t_start < 0.0) throw ConfigError("config.range", "grid.t_start", "must be >= 0");
    if (!(tg.t_end > tg.t_start)) throw ConfigError("config.range", "grid.t_end", "must exceed t_start");
    if (tg.n_steps < 2 || tg.n_steps > 1000000) throw ConfigError("config.range", "grid.n_steps", "must be in [2, 1000000]");
    cfg.grid = tg;
  }
  if (!cfg.grid && (is_population(cfg.scenario) || cfg.scenario == Scenario::entanglement_time ||
                    cfg.scenario == Scenario::entanglement_thermal)) {
    cfg.grid = default_grid(cfg);
  }
  return cfg;
}

inline ScenarioConfig load_config_file(const std::string& path, std::optional<Scenario> requested = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config.io", "--config", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config.parse", path, e.what());
  }
  return load_config(j, requested);
}

namespace detail {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results keep index
// order; the lowest-index exception wins.
template <typename R>
std::vector<R> parallel_map(std::size_t n, unsigned threads, const std::function<R(std::size_t)>& fn) {
  std::vector<std::optional<R>> out(n);
  std::vector<std::exception_ptr> errors(n);
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  auto run = [&](std::size_t i) {
    try {
      out[i].emplace(fn(i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers) run(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<R> res;
  res.reserve(n);
  for (auto& o : out) res.push_back(std::move(*o));
  return res;
}

inline std::map<std::string, std::string> common_metadata(const ScenarioConfig& cfg) {
  const auto& p = cfg.params;
  std::map<std::string, std::string> m;
  m["scenario"] = scenario_name(cfg.scenario);
  m["software_version"] = kSoftwareVersion;
  m["unit_scale_omega0"] = format_double(p.omega0);
  m["energy_unit"] = "hbar*omega0";
  m["time_unit"] = "1/omega0";
  m["param.omega"] = format_double(p.omega);
  m["param.Omega"] = format_double(p.Omega);
  m["param.Delta"] = format_double(p.Delta());
  m["param.g"] = format_double(p.g);
  m["param.omega_m"] = format_double(p.omega_m);
  m["param.m"] = format_double(p.m);
  m["param.M"] = format_double(p.M);
  m["param.L"] = format_double(p.L);
  m["param.c_light"] = format_double(p.c_light);
  m["param.Gamma"] = format_double(p.Gamma);
  m["param.kappa"] = format_double(p.kappa);
  return m;
}

inline void add_warnings(Table& t, const std::vector<std::string>& warnings) {
  for (std::size_t i = 0; i < warnings.size(); ++i) t.metadata["warning." + std::to_string(i)] = warnings[i];
}

}  // namespace detail

inline std::vector<Table> run_population(const ScenarioConfig& cfg, unsigned threads = 1) {
  const bool decay = cfg.scenario == Scenario::population_decay;
  const TimeGrid grid = cfg.grid.value_or(default_grid(cfg));
  std::function<Table(std::size_t)> job = [&](std::size_t i) {
    const Complex alpha = cfg.alphas[i];
    const std::size_t d = cfg.photon_truncation.value_or(coherent_truncation(alpha));
    const auto h = build_h_pi_eff(cfg.params, d, {cfg.frame, cfg.n_m, decay});
    const auto coh = coherent_state(alpha, {ModeLabel::photon, d});
    const auto init = product_state({atom_state(AtomLevel::excited), coh.state});
    const auto states = evolve(h.matrix, init, grid);

    Table t;
    t.name = "alpha" + std::to_string(i);
    t.metadata = detail::common_metadata(cfg);
    t.columns = {"t", "P_e", "norm"};
    double leak_max = 0.0;
    for (std::size_t k = 0; k < states.size(); ++k) {
      t.add_row({grid.time(k), excited_population(states[k], 0), states[k].norm()});
      leak_max = std::max(leak_max, leakage(states[k], cfg.boundary_band, {1}));
    }
    t.metadata["alpha.re"] = format_double(alpha.real());
    t.metadata["alpha.im"] = format_double(alpha.imag());
    t.metadata["truncation.photon"] = std::to_string(d);
    t.metadata["coherent_norm_deficit"] = format_double(coh.norm_deficit);
    t.metadata["frame"] = to_string(cfg.frame);
    t.metadata["mirror_energy"] = format_double(h.mirror_energy);
    t.metadata["n_m"] = std::to_string(cfg.n_m);
    t.metadata["leakage_max"] = format_double(leak_max);
    t.metadata["decay"] = decay ? "imaginary shifts -i*kappa*a^dag*a - i*(Gamma/2)*|e><e|" : "none";
    t.metadata["population"] = decay ? "raw (not renormalized)" : "unitary";
    if (leak_max > kLeakageWarning) {
      detail::add_warnings(t, {"truncation leakage " + format_double(leak_max) + " exceeds 1e-4"});
    }
    return t;
  };
  return detail::parallel_map<Table>(cfg.alphas.size(), threads, job);
}

inline std::vector<Table> run_dressed_table(const ScenarioConfig& cfg) {
  Table t;
  t.name = "dressed";
  t.metadata = detail::common_metadata(cfg);
  t.metadata["energies"] = "relative to offset = omega(n+1) - Omega/2";
  t.metadata["basis"] = "(|n+1,g>, |n,e>)";
  t.columns = {"n", "offset", "H11", "H22", "H12", "E_plus", "E_minus", "theta"};
  for (unsigned n = cfg.n_min; n <= cfg.n_max; ++n) {
    const auto d = dressed_pair(cfg.params, n);
    const double scale = std::max({std::abs(d.h11), std::abs(d.h22), std::abs(d.h12), 1e-300});
    const double root = std::sqrt(0.25 * (d.h11 - d.h22) * (d.h11 - d.h22) + d.h12 * d.h12);
    const double mean = 0.5 * (d.h11 + d.h22);
    const bool ok = d.e_plus >= d.e_minus &&
                    std::abs(d.e_plus - (mean + root)) <= 1e-9 * scale &&
                    std::abs(d.e_minus - (mean - root)) <= 1e-9 * scale &&
                    std::abs(std::sin(d.theta) * std::hypot(2 * d.h12, d.h11 - d.h22) - 2 * d.h12) <= 1e-9 * scale;
    if (!ok) throw NumericalError("dressed-table: invariant check failed at n=" + std::to_string(n));
    t.add_row({static_cast<double>(n), d.offset, d.h11, d.h22, d.h12, d.e_plus, d.e_minus, d.theta});
  }
  return {t};
}

// Closed-form block eigenvalues {|n+1,g>, |n,e>} in the rotating frame.
struct BlockEnergies {
  double e_plus;
  double e_minus;
};

inline BlockEnergies kerr_block(const PhysicalParams& p, unsigned n, bool with_kerr) {
  const auto c = derive_couplings(p);
  const double chi = with_kerr ? c.chi : 0.0;
  const double np1 = n + 1.0;
  const double h11 = -chi * np1 * np1;
  const double h22 = -p.rescale(p.Delta()) - chi * static_cast<double>(n) * n;
  const double h12 = p.rescale(p.g) * std::sqrt(np1);
  const double diff = p.rescale(p.Delta()) - chi * (2.0 * n + 1.0);
  const double root = std::hypot(0.5 * diff, h12);
  return {0.5 * (h11 + h22) + root, 0.5 * (h11 + h22) - root};
}

inline std::vector<Table> run_kerr_spectrum(const ScenarioConfig& cfg) {
  const auto c = derive_couplings(cfg.params);
  Table t;
  t.name = "kerr";
  t.metadata = detail::common_metadata(cfg);
  t.metadata["energies"] = "relative to offset = omega(n+1) - Omega/2";
  t.metadata["chi"] = format_double(c.chi);
  t.columns = {"n", "offset", "E_plus", "E_minus", "E_plus_jc", "E_minus_jc"};
  for (unsigned n = cfg.n_min; n <= cfg.n_max; ++n) {
    const auto k = kerr_block(cfg.params, n, true);
    const auto jc = kerr_block(cfg.params, n, false);
    const double offset = cfg.params.rescale(cfg.params.omega) * (n + 1.0) - 0.5 * cfg.params.rescale(cfg.params.Omega);
    t.add_row({static_cast<double>(n), offset, k.e_plus, k.e_minus, jc.e_plus, jc.e_minus});
  }
  return {t};
}

// Rescaled time expressed in units of 1e-4 s.
inline double time_in_1e4s(const PhysicalParams& p, double t_rescaled) { return t_rescaled / (p.omega0 * 1e-4); }

inline MotionOptions motion_options(const ScenarioConfig& cfg, double G) {
  MotionOptions o;
  o.d_c = cfg.d_c;
  o.d_b = cfg.d_b;
  o.rwa = cfg.rwa;
  o.G_override = G;
  o.omega_choice = cfg.omega_choice;
  return o;
}

inline QuantumState entanglement_initial(const ScenarioConfig& cfg, const MotionHamiltonian& h) {
  const ModeSpec c{ModeLabel::mirror_mode, cfg.d_c};
  const ModeSpec b{ModeLabel::atom_com, cfg.d_b};
  if (cfg.scenario != Scenario::entanglement_thermal) return product_state({fock_state(1, c), fock_state(1, b)});
  // beta in seconds against rescaled frequencies: beta*omega0 * (omega/omega0).
  const double beta = cfg.beta * cfg.params.omega0;
  if (cfg.thermal_on == ThermalSlot::c) {
    return product_state({thermal_state(beta, h.omega_m, c), fock_state(1, b)});
  }
  return product_state({fock_state(1, c), thermal_state(beta, h.omega_prime, b)});
}

inline void motion_metadata(Table& t, const ScenarioConfig& cfg, const MotionHamiltonian& h) {
  t.metadata["truncation.c"] = std::to_string(cfg.d_c);
  t.metadata["truncation.b"] = std::to_string(cfg.d_b);
  t.metadata["rwa"] = cfg.rwa ? "true" : "false";
  t.metadata["omega_m_rescaled"] = format_double(h.omega_m);
  t.metadata["omega_prime_rescaled"] = format_double(h.omega_prime);
  t.metadata["omega_choice"] = cfg.omega_choice == OmegaChoice::cavity ? "omega" : "omega_m";
  t.metadata["modes"] = "c = mirror (omega_m), b = atom COM (omega')";
  t.metadata["entropy"] = "von Neumann, natural log, reduced state of c";
}

inline std::vector<Table> run_entanglement(const ScenarioConfig& cfg, unsigned threads = 1) {
  const std::vector<std::size_t> keep{0};
  if (cfg.scenario == Scenario::entanglement_gsweep) {
    const double t_r = cfg.sweep_time * cfg.params.omega0;
    struct Point {
      double S, leak;
      MotionHamiltonian h;
    };
    std::function<Point(std::size_t)> job = [&](std::size_t i) {
      auto h = build_h_motion(cfg.params, motion_options(cfg, cfg.G_list[i]));
      const auto init = entanglement_initial(cfg, h);
      const auto s = SpectralPropagator(h.matrix).evolve(init, t_r);
      return Point{von_neumann_entropy(partial_trace(s, std::span<const std::size_t>(keep))),
                   leakage(s, cfg.boundary_band), std::move(h)};
    };
    const auto pts = detail::parallel_map<Point>(cfg.G_list.size(), threads, job);
    Table t;
    t.name = "gsweep";
    t.metadata = detail::common_metadata(cfg);
    motion_metadata(t, cfg, pts.front().h);
    t.metadata["sweep_time_rescaled"] = format_double(t_r);
    t.columns = {"G", "G_MHz", "G_rescaled", "S", "leakage"};
    double leak_max = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      t.add_row({cfg.G_list[i], cfg.G_list[i] / 1e6, pts[i].h.G, pts[i].S, pts[i].leak});
      leak_max = std::max(leak_max, pts[i].leak);
    }
    t.metadata["leakage_max"] = format_double(leak_max);
    if (leak_max > kLeakageWarning) detail::add_warnings(t, {"truncation leakage " + format_double(leak_max) + " exceeds 1e-4"});
    return {t};
  }

  const auto h = build_h_motion(cfg.params, motion_options(cfg, cfg.G));
  const auto init = entanglement_initial(cfg, h);
  const TimeGrid grid = cfg.grid.value_or(default_grid(cfg));
  const auto tr = entropy_trajectory(h.matrix, init, grid, keep, cfg.boundary_band);
  Table t;
  t.name = cfg.scenario == Scenario::entanglement_thermal ? "thermal" : "time";
  t.metadata = detail::common_metadata(cfg);
  motion_metadata(t, cfg, h);
  t.metadata["G"] = format_double(cfg.G);
  t.metadata["G_rescaled"] = format_double(h.G);
  if (cfg.scenario == Scenario::entanglement_thermal) {
    t.metadata["beta_seconds"] = format_double(cfg.beta);
    t.metadata["thermal_on"] = cfg.thermal_on == ThermalSlot::c ? "c" : "b";
  }
  t.columns = {"t", "t_1e-4s", "S", "leakage"};
  const auto& S = tr.column("S");
  const auto& leak = tr.column("leakage");
  double leak_max = 0.0;
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    t.add_row({grid.time(k), time_in_1e4s(cfg.params, grid.time(k)), S[k], leak[k]});
    leak_max = std::max(leak_max, leak[k]);
  }
  t.metadata["leakage_max"] = format_double(leak_max);
  detail::add_warnings(t, tr.warnings);
  return {t};
}

inline std::vector<Table> run_adiabatic_check(const ScenarioConfig& cfg) {
  const auto& p = cfg.params;
  Table mirror;
  mirror.name = "mirror";
  mirror.metadata = detail::common_metadata(cfg);
  mirror.metadata["state"] = "|e> x |alpha>";
  mirror.columns = {"alpha_re", "alpha_im", "n_m", "m_m", "ratio", "flag"};
  double m_max = 0.0, m_sum = 0.0;
  std::size_t flags = 0;
  for (const auto& alpha : cfg.alphas) {
    const std::size_t d = coherent_truncation(alpha);
    const auto psi = product_state({atom_state(AtomLevel::excited), coherent_state(alpha, {ModeLabel::photon, d}).state});
    for (const auto& [nm, mm] : cfg.phonon_pairs) {
      const double r = mirror_adiabaticity_ratio(psi, nm, mm, p);
      const bool flag = r >= cfg.flag_threshold;
      flags += flag;
      m_max = std::max(m_max, r);
      m_sum += r;
      mirror.add_row({alpha.real(), alpha.imag(), static_cast<double>(nm), static_cast<double>(mm), r, flag ? 1.0 : 0.0});
    }
  }
  mirror.metadata["ratio_max"] = format_double(m_max);
  mirror.metadata["ratio_mean"] = format_double(m_sum / static_cast<double>(mirror.rows.size()));

  Table bo;
  bo.name = "born_oppenheimer";
  bo.metadata = detail::common_metadata(cfg);
  bo.metadata["units"] = "per meter over hbar*omega0";
  bo.columns = {"n", "kQ", "q", "ratio", "ratio_fd", "flag"};
  const double k0 = p.omega / p.c_light;
  double b_max = 0.0, b_sum = 0.0;
  std::size_t bo_flags = 0;
  for (double kQ : cfg.bo_kQ) {
    for (double q : cfg.bo_q) {
      const auto r = born_oppenheimer_ratio(p, cfg.bo_n, kQ / k0, q);
      const bool flag = r.analytic >= cfg.flag_threshold;
      bo_flags += flag;
      b_max = std::max(b_max, r.analytic);
      b_sum += r.analytic;
      bo.add_row({static_cast<double>(cfg.bo_n), kQ, q, r.analytic, r.finite_difference, flag ? 1.0 : 0.0});
    }
  }
  bo.metadata["ratio_max"] = format_double(b_max);
  bo.metadata["ratio_mean"] = format_double(b_sum / static_cast<double>(bo.rows.size()));
  mirror.metadata["flag_threshold"] = format_double(cfg.flag_threshold);
  bo.metadata["flag_threshold"] = format_double(cfg.flag_threshold);
  mirror.metadata["flagged"] = std::to_string(flags);
  bo.metadata["flagged"] = std::to_string(bo_flags);
  if (flags) detail::add_warnings(mirror, {std::to_string(flags) + " sample(s) violate the mirror adiabaticity regime"});
  if (bo_flags) detail::add_warnings(bo, {std::to_string(bo_flags) + " sample(s) violate the Born-Oppenheimer regime"});
  return {mirror, bo};
}

inline std::vector<Table> run_potential_scan(const ScenarioConfig& cfg) {
  const auto& p = cfg.params;
  const double k0 = p.omega / p.c_light;
  const double xi = p.omega / p.L;
  const double q_max = cfg.scan_xq_max * std::abs(p.Delta()) / xi;
  const double Q_max = cfg.scan_kQ_max / k0;
  const unsigned n = cfg.scan_n;
  Table t;
  t.name = "potential";
  t.metadata = detail::common_metadata(cfg);
  t.metadata["n"] = std::to_string(n);
  t.metadata["U_plus_shift"] = "U_plus(Q,q) - U_plus(0,0)";
  t.metadata["rel_residual"] = "|shift - approx| / |shift| (0 where shift = 0)";
  t.columns = {"Q", "q", "U_plus", "U_minus", "U_plus_shift", "U_plus_approx", "abs_residual", "rel_residual",
               "branch_sum_residual"};
  t.metadata["region.kQ_max"] = format_double(cfg.scan_kQ_max);
  t.metadata["region.xi_q_over_Delta_max"] = format_double(cfg.scan_xq_max);
  t.metadata["region.g_sqrt_n1_over_Delta"] = format_double(p.g * std::sqrt(n + 1.0) / std::abs(p.Delta()));
  const std::size_t np = cfg.scan_points;
  double rel_max = 0.0, branch_max = 0.0;
  for (std::size_t i = 0; i < np; ++i) {
    const double Q = Q_max * static_cast<double>(i) / static_cast<double>(np - 1);
    for (std::size_t j = 0; j < np; ++j) {
      const double q = -q_max + 2.0 * q_max * static_cast<double>(j) / static_cast<double>(np - 1);
      const double up = potential_exact(p, n, Q, q, Branch::plus);
      const double um = potential_exact(p, n, Q, q, Branch::minus);
      const double shift = potential_exact_shift(p, n, Q, q);
      const double approx = potential_approx(p, n, Q, q);
      const double abs_res = std::abs(shift - approx);
      const double rel = shift != 0.0 ? abs_res / std::abs(shift) : 0.0;
      const double branch = up + um - p.rescale((2.0 * n + 1.0) * (p.omega - xi * q));
      rel_max = std::max(rel_max, rel);
      branch_max = std::max(branch_max, std::abs(branch));
      t.add_row({Q, q, up, um, shift, approx, abs_res, rel, branch});
    }
  }
  t.metadata["rel_residual_max"] = format_double(rel_max);
  t.metadata["branch_sum_residual_max"] = format_double(branch_max);
  return {t};
}

inline std::vector<Table> run_scenario(const ScenarioConfig& cfg, unsigned threads = 1) {
  switch (cfg.scenario) {
    case Scenario::population:
    case Scenario::population_decay: return run_population(cfg, threads);
    case Scenario::dressed_table: return run_dressed_table(cfg);
    case Scenario::kerr_spectrum: return run_kerr_spectrum(cfg);
    case Scenario::entanglement_time:
    case Scenario::entanglement_gsweep:
    case Scenario::entanglement_thermal: return run_entanglement(cfg, threads);
    case Scenario::adiabatic_check: return run_adiabatic_check(cfg);
    case Scenario::potential_scan: return run_potential_scan(cfg);
  }
  throw InvalidArgument("unknown scenario");
}

// File name for table `name` when several tables share one --out path:
// out.csv -> out_alpha0.csv.
inline std::string table_path(const std::string& out, const std::string& name, std::size_t n_tables) {
  if (n_tables <= 1) return out;
  const auto slash = out.find_last_of('/');
  const auto dot = out.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return out + "_" + name;
  return out.substr(0, dot) + "_" + name + out.substr(dot);
}

}  // namespace optocav
