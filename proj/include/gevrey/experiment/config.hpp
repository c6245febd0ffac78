#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gevrey/errors.hpp"
#include "gevrey/nonlinearity.hpp"
#include "gevrey/radius_estimator.hpp"
#include "gevrey/wave_solver.hpp"

namespace gevrey::experiment {

using json = nlohmann::json;

struct LatticeConfig {
  int n = 1;
  int m = 1;
  int N = 32;
};

struct EquationConfig {
  bool standard = true;
  double nu = 1.0;
  std::optional<double> lambda;
};

struct InitialConfig {
  std::string preset = "cosine";  ///< cosine | gaussian | exponential | sn_wave | file
  double amplitude = 0.5;
  double sigma = 0.5;
  bool traveling = false;
  std::vector<int> wavevector{1};
  double velocity_amplitude = 0.0;
  double width = 0.5;
  double modulus = 0.9;
  double c = 1.0;
  int L = 1;
  std::string u_path;
  std::string ut_path;
};

struct SolverSection {
  double dt = 1e-3;
  double T = 1.0;
  bool T_is_period = false;  ///< "T": "period" for the sn wave
  Integrator integrator = Integrator::leapfrog;
  double sample_interval = 0.01;
  double fit_interval = 0.5;
};

struct GevreySection {
  double p = 1.0;
  double s = 1.0;
  std::string tau0_policy = "fitted";  ///< fitted | fixed
  double sigma = 1.0;
  FitOptions fit;
};

struct ChecksSection {
  double lower_bound_tolerance = 0.02;
  std::optional<double> energy_drift_max;
  bool asymptotic_law = false;
  double sn_linf_max = 1e-6;
  double sn_residual_max = 1e-8;
  double sn_radius_tolerance = 0.02;
};

struct OutputSection {
  std::string directory = "out";
  std::string snapshots = "none";  ///< none | csv | binary
};

struct ScalingSection {
  std::vector<double> nu;
  double modulus = 0.9;
  double c = 1.0;
  double lambda = 1.0;
  int N = 256;
};

/// Parsed and validated run configuration.
struct RunConfig {
  std::string name = "run";
  LatticeConfig lattice;
  EquationConfig equation;
  NonlinearitySpec nonlinearity = NonlinearitySpec::zero();
  InitialConfig initial;
  SolverSection solver;
  GevreySection gevrey;
  std::vector<std::string> bounds;
  ChecksSection checks;
  OutputSection outputs;
  double scale_C0 = 1.0;  ///< test hook: scales C0 inside the h2 comparison
  std::optional<ScalingSection> scaling;
  json source;
};

namespace detail {

/// Object reader that rejects keys it was never asked about.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(path_ + "." + key + ": missing required key");
    return j_.at(key);
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ConfigError(path_ + "." + key + ": missing required key");
    }
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(path_ + "." + key + ": expected a number");
    return v.get<double>();
  }

  int integer(const std::string& key, std::optional<int> fallback = std::nullopt) {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ConfigError(path_ + "." + key + ": missing required key");
    }
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(path_ + "." + key + ": expected an integer");
    return v.get<int>();
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ConfigError(path_ + "." + key + ": missing required key");
    }
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(path_ + "." + key + ": expected a string");
    return v.get<std::string>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(path_ + "." + key + ": expected true or false");
    return v.get<bool>();
  }

  std::vector<int> int_list(const std::string& key, std::vector<int> fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(path_ + "." + key + ": expected an array of integers");
    std::vector<int> out;
    for (const auto& e : v) {
      if (!e.is_number_integer()) throw ConfigError(path_ + "." + key + ": expected an array of integers");
      out.push_back(e.get<int>());
    }
    return out;
  }

  std::vector<double> number_list(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(path_ + "." + key + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(path_ + "." + key + ": expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  Section child(const std::string& key) { return Section(raw(key), path_ + "." + key); }
  const std::string& path() const { return path_; }

  /// Throws on any key that was not read.
  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(path_ + "." + k + ": unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline CoefficientProfile parse_profile(const json& v, const std::string& path) {
  if (v.is_number()) return CoefficientProfile(v.get<double>());
  if (!v.is_object()) throw ConfigError(path + ": expected a number or an object");
  Section s(v, path);
  if (s.has("table")) {
    Section tab = s.child("table");
    CoefficientProfile::Table t{tab.number_list("t"), tab.number_list("value")};
    tab.finish();
    s.finish();
    try {
      return CoefficientProfile(std::move(t));
    } catch (const ParameterError& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  CoefficientProfile::Sinusoid sin{s.number("mean", 0.0), s.number("amplitude", 0.0), s.number("omega", 0.0),
                                   s.number("phase", 0.0)};
  s.finish();
  return CoefficientProfile(sin);
}

inline std::vector<CoefficientProfile> parse_coefficients(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path + ": expected a non-empty array");
  std::vector<CoefficientProfile> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(parse_profile(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline NonlinearitySpec parse_nonlinearity(Section s) {
  const std::string form = s.text("form");
  NonlinearitySpec spec;
  if (form == "zero") {
    spec = NonlinearitySpec::zero();
  } else if (form == "monomial") {
    spec = NonlinearitySpec::monomial(s.integer("sign"), s.integer("k"));
  } else if (form == "power_series") {
    spec.form = PowerSeries{parse_coefficients(s.raw("coefficients"), s.path() + ".coefficients")};
  } else if (form == "exp_cubic") {
    spec.form = ExpCubic{};
  } else if (form == "spatial_series") {
    const json& modes = s.raw("modes");
    if (!modes.is_array()) throw ConfigError(s.path() + ".modes: expected an array");
    SpatialSeries ss;
    for (std::size_t i = 0; i < modes.size(); ++i) {
      Section m(modes[i], s.path() + ".modes[" + std::to_string(i) + "]");
      SpatialMode mode{m.int_list("j", {}), parse_coefficients(m.raw("coefficients"), m.path() + ".coefficients")};
      m.finish();
      ss.modes.push_back(std::move(mode));
    }
    spec.form = std::move(ss);
    spec.lambda = s.number("lambda");
  } else {
    throw ConfigError(s.path() + ".form: unknown nonlinearity '" + form + "'");
  }
  s.finish();
  try {
    spec.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(s.path() + ": " + e.what());
  }
  return spec;
}

inline FitOptions parse_fit(Section s) {
  FitOptions f;
  f.noise_floor = s.number("noise_floor", f.noise_floor);
  f.min_band = s.integer("min_band", f.min_band);
  f.k_min = s.integer("k_min", f.k_min);
  f.k_max = s.integer("k_max", f.k_max);
  const std::string model = s.text("model", "prefactor");
  if (model == "prefactor")
    f.model = FitModel::prefactor;
  else if (model == "line")
    f.model = FitModel::line;
  else
    throw ConfigError(s.path() + ".model: expected 'prefactor' or 'line'");
  s.finish();
  if (!(f.noise_floor > 0.0) || f.min_band < 3 || f.k_min < 1)
    throw ConfigError(s.path() + ": need noise_floor > 0, min_band >= 3, k_min >= 1");
  return f;
}

inline std::vector<double> parse_nu_grid(Section& s) {
  const json& v = s.raw("nu");
  std::vector<double> nu;
  if (v.is_array()) {
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(s.path() + ".nu: expected numbers");
      nu.push_back(e.get<double>());
    }
  } else if (v.is_object()) {
    Section g(v, s.path() + ".nu");
    const double a = g.number("start");
    const double b = g.number("stop");
    const int k = g.integer("points");
    g.finish();
    if (k < 2 || !(a > 0.0) || !(b > a)) throw ConfigError(s.path() + ".nu: need points >= 2 and 0 < start < stop");
    for (int i = 0; i < k; ++i) nu.push_back(a * std::pow(b / a, static_cast<double>(i) / (k - 1)));
  } else {
    throw ConfigError(s.path() + ".nu: expected an array or {start, stop, points}");
  }
  return nu;
}

}  // namespace detail

/// Parses a configuration document. Unknown keys anywhere are errors.
inline RunConfig parse_config(const json& doc) {
  RunConfig cfg;
  cfg.source = doc;
  detail::Section root(doc, "config");
  cfg.name = root.text("name", "run");

  if (root.has("lattice")) {
    auto s = root.child("lattice");
    cfg.lattice.n = s.integer("n", 1);
    cfg.lattice.m = s.integer("m", cfg.lattice.n);
    cfg.lattice.N = s.integer("N", 32);
    s.finish();
  }
  if (root.has("equation")) {
    auto s = root.child("equation");
    const std::string form = s.text("form", "standard");
    if (form == "standard") {
      cfg.equation.standard = true;
    } else if (form == "klein_gordon_nu_lambda") {
      cfg.equation.standard = false;
      cfg.equation.nu = s.number("nu");
      if (s.has("lambda")) cfg.equation.lambda = s.number("lambda");
    } else {
      throw ConfigError("config.equation.form: expected 'standard' or 'klein_gordon_nu_lambda'");
    }
    s.finish();
  }
  if (root.has("nonlinearity")) cfg.nonlinearity = detail::parse_nonlinearity(root.child("nonlinearity"));
  if (root.has("initial")) {
    auto s = root.child("initial");
    auto& in = cfg.initial;
    in.preset = s.text("preset");
    if (in.preset == "cosine") {
      in.amplitude = s.number("amplitude", 0.5);
      in.wavevector = s.int_list("wavevector", {});
      in.velocity_amplitude = s.number("velocity_amplitude", 0.0);
    } else if (in.preset == "gaussian") {
      in.amplitude = s.number("amplitude", 1.0);
      in.width = s.number("width", 0.5);
      if (!(in.width > 0.0)) throw ConfigError("config.initial.width: must be > 0");
    } else if (in.preset == "exponential") {
      in.amplitude = s.number("amplitude", 1.0);
      in.sigma = s.number("sigma", 0.5);
      in.traveling = s.boolean("traveling", false);
      if (!(in.sigma > 0.0)) throw ConfigError("config.initial.sigma: must be > 0");
    } else if (in.preset == "sn_wave") {
      in.modulus = s.number("modulus");
      in.c = s.number("c", 1.0);
      in.L = s.integer("L", 1);
    } else if (in.preset == "file") {
      in.u_path = s.text("u");
      in.ut_path = s.text("ut", "");
    } else {
      throw ConfigError("config.initial.preset: unknown preset '" + in.preset + "'");
    }
    s.finish();
  }
  if (root.has("solver")) {
    auto s = root.child("solver");
    cfg.solver.dt = s.number("dt", 1e-3);
    if (s.has("T") && doc.at("solver").at("T").is_string()) {
      if (doc.at("solver").at("T").get<std::string>() != "period")
        throw ConfigError("config.solver.T: expected a number or \"period\"");
      cfg.solver.T_is_period = true;
    } else {
      cfg.solver.T = s.number("T", 1.0);
    }
    const std::string integ = s.text("integrator", "leapfrog");
    if (integ == "leapfrog")
      cfg.solver.integrator = Integrator::leapfrog;
    else if (integ == "rk4")
      cfg.solver.integrator = Integrator::rk4;
    else
      throw ConfigError("config.solver.integrator: expected 'leapfrog' or 'rk4'");
    cfg.solver.sample_interval = s.number("sample_interval", 0.01);
    cfg.solver.fit_interval = s.number("fit_interval", 0.5);
    s.finish();
  }
  if (root.has("gevrey")) {
    auto s = root.child("gevrey");
    cfg.gevrey.p = s.number("p", 1.0);
    cfg.gevrey.s = s.number("s", 1.0);
    cfg.gevrey.tau0_policy = s.text("tau0_policy", "fitted");
    if (cfg.gevrey.tau0_policy != "fitted" && cfg.gevrey.tau0_policy != "fixed")
      throw ConfigError("config.gevrey.tau0_policy: expected 'fitted' or 'fixed'");
    cfg.gevrey.sigma = s.number("sigma", 1.0);
    if (s.has("fit")) cfg.gevrey.fit = detail::parse_fit(s.child("fit"));
    s.finish();
  }
  if (root.has("bounds")) {
    const json& b = root.raw("bounds");
    if (!b.is_array()) throw ConfigError("config.bounds: expected an array");
    static const std::set<std::string> known{"thm1", "thm2", "thm3", "prop2", "prop3"};
    for (const auto& e : b) {
      if (!e.is_string() || !known.count(e.get<std::string>()))
        throw ConfigError("config.bounds: entries must be among thm1, thm2, thm3, prop2, prop3");
      cfg.bounds.push_back(e.get<std::string>());
    }
  }
  if (root.has("checks")) {
    auto s = root.child("checks");
    auto& c = cfg.checks;
    c.lower_bound_tolerance = s.number("lower_bound_tolerance", c.lower_bound_tolerance);
    if (s.has("energy_drift_max")) c.energy_drift_max = s.number("energy_drift_max");
    c.asymptotic_law = s.boolean("asymptotic_law", false);
    c.sn_linf_max = s.number("sn_linf_max", c.sn_linf_max);
    c.sn_residual_max = s.number("sn_residual_max", c.sn_residual_max);
    c.sn_radius_tolerance = s.number("sn_radius_tolerance", c.sn_radius_tolerance);
    s.finish();
  }
  if (root.has("outputs")) {
    auto s = root.child("outputs");
    cfg.outputs.directory = s.text("directory", cfg.outputs.directory);
    cfg.outputs.snapshots = s.text("snapshots", "none");
    if (cfg.outputs.snapshots != "none" && cfg.outputs.snapshots != "csv" && cfg.outputs.snapshots != "binary")
      throw ConfigError("config.outputs.snapshots: expected none, csv or binary");
    s.finish();
  }
  if (root.has("test_hooks")) {
    auto s = root.child("test_hooks");
    cfg.scale_C0 = s.number("scale_C0", 1.0);
    if (!(cfg.scale_C0 > 0.0)) throw ConfigError("config.test_hooks.scale_C0: must be > 0");
    s.finish();
  }
  if (root.has("scaling")) {
    auto s = root.child("scaling");
    ScalingSection sc;
    sc.nu = detail::parse_nu_grid(s);
    sc.modulus = s.number("modulus", 0.9);
    sc.c = s.number("c", 1.0);
    sc.lambda = s.number("lambda", 1.0);
    sc.N = s.integer("N", 256);
    s.finish();
    cfg.scaling = sc;
  }
  root.finish();

  // Cross-field validation.
  const auto& L = cfg.lattice;
  if (L.n < 1 || L.m < 1 || L.m > L.n || L.N < 1) throw ConfigError("config.lattice: need n >= 1, 1 <= m <= n, N >= 1");
  if (!(cfg.gevrey.p > 0.5 * L.n))
    throw ConfigError("config.gevrey.p: p must exceed n/2 (p=" + std::to_string(cfg.gevrey.p) +
                      ", n=" + std::to_string(L.n) + ")");
  if (!(cfg.gevrey.s >= 1.0)) throw ConfigError("config.gevrey.s: must be >= 1");
  if (!(cfg.gevrey.sigma > 0.0)) throw ConfigError("config.gevrey.sigma: must be > 0");
  if (!(cfg.solver.dt > 0.0) || !(cfg.solver.T >= 0.0)) throw ConfigError("config.solver: need dt > 0, T >= 0");
  if (!(cfg.solver.sample_interval > 0.0) || !(cfg.solver.fit_interval > 0.0))
    throw ConfigError("config.solver: sampling intervals must be > 0");
  if (cfg.initial.preset == "cosine") {
    if (cfg.initial.wavevector.empty()) {
      cfg.initial.wavevector.assign(static_cast<std::size_t>(L.n), 0);
      cfg.initial.wavevector[0] = 1;
    }
    if (static_cast<int>(cfg.initial.wavevector.size()) != L.n)
      throw ConfigError("config.initial.wavevector: needs n components");
    for (int c : cfg.initial.wavevector)
      if (std::abs(c) > L.N) throw ConfigError("config.initial.wavevector: outside the lattice");
  }
  if (cfg.initial.preset == "sn_wave") {
    if (cfg.equation.standard)
      throw ConfigError("config.equation: the sn_wave datum needs form klein_gordon_nu_lambda");
    const auto* mono = std::get_if<Monomial>(&cfg.nonlinearity.form);
    if (!mono || mono->sign != -1 || mono->k != 3)
      throw ConfigError("config.nonlinearity: the sn_wave datum solves the focusing cubic (monomial sign -1, k 3)");
  } else if (cfg.solver.T_is_period) {
    throw ConfigError("config.solver.T: \"period\" is only defined for the sn_wave datum");
  }
  if (!cfg.equation.standard && cfg.initial.preset != "sn_wave" && !cfg.equation.lambda)
    throw ConfigError("config.equation.lambda: required unless the sn_wave datum fixes it");
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(is, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(doc);
}

}  // namespace gevrey::experiment
