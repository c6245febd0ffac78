#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gevrey/elliptic.hpp"
#include "gevrey/experiment/config.hpp"
#include "gevrey/norms.hpp"
#include "gevrey/radius_bounds.hpp"
#include "gevrey/radius_estimator.hpp"
#include "gevrey/snapshot_io.hpp"
#include "gevrey/wave_solver.hpp"

namespace gevrey::experiment {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kConfigError = 1, kDivergence = 2, kInvariantViolation = 3 };

struct GlobalOptions {
  std::optional<std::string> out;
  bool plot_data = false;
  bool verbose = false;
  std::ostream* console = &std::cout;
};

struct Check {
  std::string name;
  std::string verdict;  ///< PASS | FAIL | SKIP
  std::string detail;
};

/// Initial state and solver settings resolved from a config.
struct Prepared {
  WaveState initial;
  NonlinearitySpec spec;
  SolverConfig solver;
  RunOptions options;
  std::optional<SnWave> sn;
  Lattice lattice{1, 1, 1};
};

/// Everything cmd_run computes.
struct RunOutcome {
  RunConfig config;
  Prepared prepared;
  RunRecord record;
  MeasuredSeries measured;
  BoundInputs inputs;
  std::vector<TauCurve> curves;
  std::map<std::string, std::string> skipped;
  std::vector<Check> checks;
  double tau0 = 0.0;
  std::string tau0_source;
  DecayFit datum_fit;
  double seconds = 0.0;
  std::optional<double> divergence_time;
  std::string divergence_message;
  int exit_code = kOk;

  const TauCurve* curve(const std::string& label) const {
    for (const auto& c : curves)
      if (c.label == label) return &c;
    return nullptr;
  }
  const Check* check(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
  bool passed() const {
    return std::none_of(checks.begin(), checks.end(), [](const Check& c) { return c.verdict == "FAIL"; });
  }
};

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string g17(double v) { return fmt("%.17g", v); }

inline WaveState cosine_datum(const Lattice& lat, const InitialConfig& in) {
  WaveState s{SpectralField(lat), SpectralField(lat), 0.0};
  std::vector<int> plus = in.wavevector;
  std::vector<int> minus = plus;
  for (int& c : minus) c = -c;
  const bool zero = std::all_of(plus.begin(), plus.end(), [](int c) { return c == 0; });
  if (zero) {
    s.u[lat.index(plus)] = in.amplitude;
    s.v[lat.index(plus)] = in.velocity_amplitude;
  } else {
    s.u[lat.index(plus)] += 0.5 * in.amplitude;
    s.u[lat.index(minus)] += 0.5 * in.amplitude;
    s.v[lat.index(plus)] += 0.5 * in.velocity_amplitude;
    s.v[lat.index(minus)] += 0.5 * in.velocity_amplitude;
  }
  return s;
}

/// Periodized Gaussian centred at (pi, ..., pi):
/// u_j = A (w / sqrt(2 pi))^n exp(-w^2 |j|^2 / 2) (-1)^{j_1 + ... + j_n}.
inline WaveState gaussian_datum(const Lattice& lat, const InitialConfig& in) {
  WaveState s{SpectralField(lat), SpectralField(lat), 0.0};
  const double pre = in.amplitude * std::pow(in.width / std::sqrt(2.0 * M_PI), lat.n());
  for (std::size_t f = 0; f < lat.size(); ++f) {
    int parity = 0;
    for (int c : lat.mode(f)) parity += c;
    s.u[f] = pre * std::exp(-0.5 * in.width * in.width * lat.j_squared(f)) * ((parity % 2 == 0) ? 1.0 : -1.0);
  }
  return s;
}

/// u_j = A exp(-sigma |j|) for j != 0. The traveling variant sets
/// v_j = -i omega_j sgn(j) u_j, so every |u_j(t)| is constant under the linear flow.
inline WaveState exponential_datum(const Lattice& lat, const InitialConfig& in, const SolverConfig& solver) {
  WaveState s{SpectralField(lat), SpectralField(lat), 0.0};
  for (std::size_t f = 0; f < lat.size(); ++f) {
    if (f == lat.zero_index()) continue;
    const double j2 = lat.j_squared(f);
    s.u[f] = in.amplitude * std::exp(-in.sigma * std::sqrt(j2));
    if (in.traveling) {
      int sgn = 0;
      for (int c : lat.mode(f))
        if (c != 0) {
          sgn = c > 0 ? 1 : -1;
          break;
        }
      const double omega = std::sqrt(solver.wave_speed2() * j2 + solver.mass());
      s.v[f] = cplx(0.0, -omega * sgn) * s.u[f];
    }
  }
  return s;
}

inline WaveState file_datum(const Lattice& lat, const InitialConfig& in) {
  WaveState s{resample(io::read_snapshot_csv(in.u_path, lat.m()), lat), SpectralField(lat), 0.0};
  if (!in.ut_path.empty()) s.v = resample(io::read_snapshot_csv(in.ut_path, lat.m()), lat);
  return s;
}

}  // namespace detail

/// Resolves lattice, datum, equation and sampling strides.
inline Prepared prepare(const RunConfig& cfg) {
  Prepared p;
  p.lattice = Lattice(cfg.lattice.n, cfg.lattice.m, cfg.lattice.N);
  p.spec = cfg.nonlinearity;
  const auto& in = cfg.initial;
  if (in.preset == "cosine") {
    p.initial = detail::cosine_datum(p.lattice, in);
  } else if (in.preset == "gaussian") {
    p.initial = detail::gaussian_datum(p.lattice, in);
  } else if (in.preset == "exponential") {
    SolverConfig lin;
    lin.standard_form = cfg.equation.standard;
    lin.nu = cfg.equation.nu;
    lin.lambda_coef = cfg.equation.lambda.value_or(1.0);
    p.initial = detail::exponential_datum(p.lattice, in, lin);
  } else if (in.preset == "sn_wave") {
    p.sn = exact_sn_wave(EllipticModulus(in.modulus), in.c, cfg.equation.nu, in.L, p.lattice, cfg.equation.lambda);
    p.initial = p.sn->initial;
  } else {
    p.initial = detail::file_datum(p.lattice, in);
  }
  p.solver.dt = cfg.solver.dt;
  p.solver.T = cfg.solver.T_is_period && p.sn ? p.sn->temporal_period() : cfg.solver.T;
  p.solver.integrator = cfg.solver.integrator;
  p.solver.standard_form = cfg.equation.standard;
  if (!cfg.equation.standard) {
    p.solver.nu = cfg.equation.nu;
    p.solver.lambda_coef = p.sn ? p.sn->lambda : *cfg.equation.lambda;
  }
  p.solver.validate(p.lattice);
  const long steps = p.solver.T > 0.0 ? static_cast<long>(std::ceil(p.solver.T / p.solver.dt - 1e-9)) : 0;
  const double dt = steps > 0 ? p.solver.T / static_cast<double>(steps) : p.solver.dt;
  p.options.p = cfg.gevrey.p;
  p.options.sample_stride = std::max(1L, std::lround(cfg.solver.sample_interval / dt));
  const long fit = std::max(1L, std::lround(cfg.solver.fit_interval / dt));
  p.options.snapshot_stride = std::max(1L, fit / p.options.sample_stride) * p.options.sample_stride;
  return p;
}

namespace detail {

struct NamedSamples {
  std::string kind;
  const std::vector<NormSample>* samples;
};

inline void write_norms_csv(const fs::path& path, const RunRecord& rec) {
  std::vector<NamedSamples> all{{rec.hp.kind, &rec.hp.samples},
                                {rec.hp1.kind, &rec.hp1.samples},
                                {rec.ut_hp.kind, &rec.ut_hp.samples},
                                {rec.l1.kind, &rec.l1.samples},
                                {"energy", &rec.energy}};
  std::sort(all.begin(), all.end(), [](const NamedSamples& a, const NamedSamples& b) { return a.kind < b.kind; });
  std::ofstream os(path);
  os << "t,kind,value\n";
  char buf[128];
  for (const auto& s : all)
    for (const auto& x : *s.samples) {
      std::snprintf(buf, sizeof buf, "%.17g,%s,%.17g\n", x.t, s.kind.c_str(), x.value);
      os << buf;
    }
}

inline void write_columns(const fs::path& path, const std::string& header, const std::vector<double>& a,
                          const std::vector<double>& b) {
  std::ofstream os(path);
  os << "# " << header << "\n";
  char buf[96];
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", a[i], b[i]);
    os << buf;
  }
}

inline void write_plot_data(const fs::path& dir, const RunOutcome& r) {
  fs::create_directories(dir);
  for (const NormSeries* s : r.record.series()) write_columns(dir / ("norm_" + s->kind + ".dat"), "t " + s->kind, s->times(), s->values());
  std::vector<double> et;
  std::vector<double> ev;
  for (const auto& x : r.record.energy) {
    et.push_back(x.t);
    ev.push_back(x.value);
  }
  write_columns(dir / "norm_energy.dat", "t energy", et, ev);
  for (const auto& c : r.curves) write_columns(dir / ("tau_" + c.label + ".dat"), "t tau", c.t, c.tau);
  write_columns(dir / "tau_measured.dat", "t rho", r.measured.curve.t, r.measured.curve.tau);
}

inline void write_snapshots(const fs::path& dir, const RunRecord& rec, const std::string& format) {
  if (format == "none") return;
  fs::create_directories(dir);
  char name[64];
  for (std::size_t i = 0; i < rec.snapshots.size(); ++i) {
    const auto& s = rec.snapshots[i];
    if (format == "csv") {
      std::snprintf(name, sizeof name, "snap_%05zu_u.csv", i);
      io::write_snapshot_csv((dir / name).string(), s.u);
      std::snprintf(name, sizeof name, "snap_%05zu_ut.csv", i);
      io::write_snapshot_csv((dir / name).string(), s.v);
    } else {
      std::snprintf(name, sizeof name, "snap_%05zu.bin", i);
      std::ofstream os(dir / name, std::ios::binary);
      io::write_snapshot_binary(os, s.u);
      io::write_snapshot_binary(os, s.v);
    }
  }
  std::ofstream idx(dir / "index.csv");
  idx << "index,t\n";
  for (std::size_t i = 0; i < rec.snapshots.size(); ++i) idx << i << ',' << detail::g17(rec.snapshots[i].t) << '\n';
}

inline json curve_summary(const TauCurve& c) {
  json j;
  j["label"] = c.label;
  j["samples"] = c.t.size();
  if (!c.t.empty()) {
    j["tau_final"] = c.tau.back();
    j["log_tau_final"] = c.log_tau.back();
  }
  j["ode_discrepancy"] = c.ode_discrepancy;
  if (!c.note.empty()) j["constants"] = c.note;
  return j;
}

inline void add_check(RunOutcome& r, std::string name, bool ok, std::string detail) {
  r.checks.push_back({std::move(name), ok ? "PASS" : "FAIL", std::move(detail)});
}

inline double max_ratio_deviation(const TauCurve& c, double lo, double hi) {
  double worst = 0.0;
  for (std::size_t i = 0; i < c.t.size(); ++i) {
    if (c.t[i] < lo - 1e-9 || c.t[i] > hi + 1e-9) continue;
    const double t2 = 2.0 * c.t[i];
    if (t2 > c.t.back() + 1e-9) continue;
    const double ratio = std::exp(interpolate(c.t, c.log_tau, t2) - c.log_tau[i]);
    worst = std::max(worst, std::abs(ratio - 0.5));
  }
  return worst;
}

/// Computes the requested bound curves, recording skipped ones with a reason.
inline void compute_bounds(RunOutcome& r) {
  const RunConfig& cfg = r.config;
  const NonlinearitySpec& spec = r.prepared.spec;
  auto skip_all = [&](const std::string& why) {
    for (const auto& b : cfg.bounds) r.skipped[b] = why;
  };
  if (!cfg.equation.standard) {
    skip_all("the bounds are stated for the standard form u_tt - Lap u + u + f = 0");
    return;
  }
  if (cfg.gevrey.s != 1.0) {
    skip_all("the bounds are stated for the analytic class s = 1");
    return;
  }
  const MajorisingSeries g = majorising_g(spec, cfg.gevrey.p, cfg.lattice.m);
  const auto* mono = std::get_if<Monomial>(&spec.form);
  for (const auto& b : cfg.bounds) {
    try {
      if (b == "thm1") {
        r.curves.push_back(tau_theorem1(r.inputs, g));
      } else if (b == "thm2") {
        if (g.infinite()) {
          r.skipped[b] = "needs a finite majorising series";
          continue;
        }
        r.curves.push_back(tau_theorem2(r.inputs, to_multivariate(g, cfg.lattice.n)));
      } else if (b == "thm3") {
        r.curves.push_back(tau_theorem3(r.inputs, g));
      } else if (b == "prop2" || b == "prop3") {
        if (!mono) {
          r.skipped[b] = "needs a monomial nonlinearity";
          continue;
        }
        const auto t = r.inputs.l1.times();
        const auto h = b == "prop2" ? h1_series(mono->k, r.inputs.y0, r.inputs.l1)
                                    : h2_series(mono->k, r.inputs.Y0, r.inputs.C0, r.inputs.hp);
        r.curves.push_back(tau_proposition(mono->k, t, h, r.inputs.tau0, b));
      }
    } catch (const OverflowError& e) {
      r.skipped[b] = std::string("rate overflows the double range: ") + e.what();
    }
  }
}

}  // namespace detail

/// Executes a run without touching the file system.
inline RunOutcome execute_run(const RunConfig& cfg, std::ostream* log = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  RunOutcome r;
  r.config = cfg;
  r.prepared = prepare(cfg);
  const Prepared& P = r.prepared;

  // tau0 = min{sigma, lambda}, sigma fitted from the datum when possible.
  r.datum_fit = fit_radius(P.initial.u, cfg.lattice.m, cfg.gevrey.fit);
  double sigma = cfg.gevrey.sigma;
  r.tau0_source = "fixed sigma";
  if (cfg.gevrey.tau0_policy == "fitted") {
    if (r.datum_fit.ok()) {
      sigma = r.datum_fit.rho;
      r.tau0_source = "fitted radius of the datum";
    } else {
      r.tau0_source = std::string("fallback sigma (datum fit ") + to_string(r.datum_fit.status) + ")";
    }
  }
  r.tau0 = std::min(sigma, P.spec.lambda);

  RunOptions opts = P.options;
  opts.log = log;
  try {
    run(P.initial, P.spec, P.solver, opts, r.record);
  } catch (const DivergenceError& e) {
    r.divergence_time = e.time();
    r.divergence_message = e.what();
    r.exit_code = kDivergence;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
  }

  r.measured = measured_tau_series(r.record, cfg.lattice.m, cfg.gevrey.fit);
  r.inputs = make_bound_inputs(r.record, P.initial, cfg.gevrey.p, r.tau0);
  detail::compute_bounds(r);

  for (const auto& c : r.curves) {
    detail::add_check(r, "ode_crosscheck_" + c.label, c.ode_discrepancy <= 1e-8,
                      "max relative closed-form vs RK4 = " + detail::fmt("%.3e", c.ode_discrepancy));
    const bool starts = !c.t.empty() && std::abs(c.tau.front() - r.tau0) <= 1e-12 * r.tau0;
    detail::add_check(r, "monotone_" + c.label, c.positive() && c.nonincreasing() && starts,
                      "positive, nonincreasing, tau(0) = tau0");
  }

  // Lower-bound property.
  for (const char* label : {"thm1", "thm3", "prop2", "prop3"}) {
    const TauCurve* c = r.curve(label);
    if (!c) continue;
    const std::string name = std::string("lower_bound_") + label;
    if (r.measured.curve.t.empty()) {
      r.checks.push_back({name, "SKIP", "no snapshot produced a usable radius fit"});
      continue;
    }
    const LowerBoundCheck lb = check_lower_bound(r.measured.curve, *c, cfg.checks.lower_bound_tolerance);
    std::string detail = std::to_string(lb.compared) + " samples, " + std::to_string(lb.violations) +
                         " violations, max bound/measured = " + detail::fmt("%.4g", lb.worst_ratio);
    if (lb.first_violation) detail += ", first at t=" + detail::fmt("%.6g", *lb.first_violation);
    detail::add_check(r, name, lb.violations == 0 && lb.compared > 0, detail);
  }

  // Energy drift.
  double e0 = r.record.energy.front().value;
  double drift = 0.0;
  for (const auto& e : r.record.energy) drift = std::max(drift, std::abs(e.value - e0));
  if (e0 != 0.0) drift /= std::abs(e0);
  if (cfg.checks.energy_drift_max)
    detail::add_check(r, "energy_drift", drift <= *cfg.checks.energy_drift_max,
                      "max |E(t)-E(0)|/|E(0)| = " + detail::fmt("%.3e", drift));

  // 1/t law of the prop3 curve.
  if (cfg.checks.asymptotic_law) {
    const TauCurve* c = r.curve("prop3");
    const double T = P.solver.T;
    const double hp0 = r.record.hp.samples.front().value;
    double hp_max = 0.0;
    for (const auto& s : r.record.hp.samples) hp_max = std::max(hp_max, s.value);
    if (!c) {
      r.checks.push_back({"asymptotic_law", "SKIP", "prop3 curve not computed"});
    } else {
      const double lo = T >= 200.0 ? 50.0 : 0.25 * T;
      const double hi = T >= 200.0 ? 100.0 : 0.5 * T;
      const double dev = detail::max_ratio_deviation(*c, lo, hi);
      detail::add_check(r, "asymptotic_law", dev <= 0.05,
                        "max |tau(2t)/tau(t) - 1/2| = " + detail::fmt("%.4g", dev) + " on t in [" +
                            detail::fmt("%g", lo) + ", " + detail::fmt("%g", hi) + "]");
      detail::add_check(r, "hp_bounded", hp_max <= 2.0 * hp0,
                        "max ||u||_{H^p} / ||u0||_{H^p} = " + detail::fmt("%.4g", hp_max / hp0));
    }
  }

  // Exact-solution checks.
  if (P.sn) {
    const double res = sn_wave_residual(*P.sn);
    detail::add_check(r, "sn_residual", res <= cfg.checks.sn_residual_max,
                      "max spectral residual = " + detail::fmt("%.3e", res));
    const std::size_t M = grid_points(P.lattice.N(), 1.0);
    const GridField num = to_grid_points(r.record.final_state.u, M);
    const GridField ex = P.sn->evaluate(r.record.final_state.t, M);
    double err = 0.0;
    for (std::size_t i = 0; i < num.values.size(); ++i) err = std::max(err, std::abs(num.values[i] - ex.values[i]));
    detail::add_check(r, "sn_linf", err <= cfg.checks.sn_linf_max,
                      "L-infinity error at t=" + detail::fmt("%.6g", r.record.final_state.t) + " is " +
                          detail::fmt("%.3e", err));
    double worst = 0.0;
    for (double rho : r.measured.curve.tau) worst = std::max(worst, std::abs(rho - P.sn->rho_exact) / P.sn->rho_exact);
    const bool have = !r.measured.curve.t.empty();
    detail::add_check(r, "sn_radius", have && worst <= cfg.checks.sn_radius_tolerance,
                      "max |rho_fit - rho_exact| / rho_exact = " + detail::fmt("%.3e", worst) +
                          " (rho_exact = " + detail::fmt("%.10g", P.sn->rho_exact) + ")");
  }

  if (!r.passed()) r.exit_code = kInvariantViolation;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline json report_json(const RunOutcome& r) {
  json j;
  j["name"] = r.config.name;
  j["config"] = r.config.source;
  const auto& in = r.inputs;
  j["constants"] = {{"C0", in.C0},       {"C1", in.C1}, {"C_tilde", in.C_tilde}, {"tau0", r.tau0},
                    {"tau0_source", r.tau0_source},     {"Y0", in.Y0},           {"y0", in.y0},
                    {"p", r.config.gevrey.p},           {"n", r.config.lattice.n}};
  if (r.prepared.sn) {
    const auto& w = *r.prepared.sn;
    j["sn_wave"] = {{"modulus", w.modulus.k()}, {"c", w.c},         {"nu", w.nu},
                    {"lambda", w.lambda},       {"kappa", w.kappa}, {"amplitude", w.amplitude},
                    {"rho_exact", w.rho_exact}, {"temporal_period", w.temporal_period()}};
  }
  j["solver"] = {{"dt", r.record.dt},
                 {"steps", r.record.steps},
                 {"T", r.prepared.solver.T},
                 {"sample_stride", r.prepared.options.sample_stride},
                 {"snapshot_stride", r.prepared.options.snapshot_stride}};
  j["datum_fit"] = {{"status", to_string(r.datum_fit.status)}, {"rho", r.datum_fit.rho}};
  json curves = json::array();
  for (const auto& c : r.curves) curves.push_back(detail::curve_summary(c));
  j["bounds"] = curves;
  json skipped = json::object();
  for (const auto& [k, v] : r.skipped) skipped[k] = v;
  j["skipped_bounds"] = skipped;
  j["measured"] = {{"fits", r.measured.fits.size()}, {"omitted", r.measured.omitted}};
  json checks = json::array();
  for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"verdict", c.verdict}, {"detail", c.detail}});
  j["checks"] = checks;
  if (r.divergence_time) j["divergence"] = {{"t", *r.divergence_time}, {"message", r.divergence_message}};
  j["verdict"] = r.exit_code == kOk ? "PASS" : "FAIL";
  j["exit_code"] = r.exit_code;
  j["seconds"] = r.seconds;
  return j;
}

inline fs::path output_dir(const RunConfig& cfg, const GlobalOptions& g) {
  return g.out ? fs::path(*g.out) : fs::path(cfg.outputs.directory);
}

namespace detail {

/// Tees run-log lines to a file and, when verbose, to stderr.
class TeeBuf : public std::streambuf {
 public:
  TeeBuf(std::streambuf* a, std::streambuf* b) : a_(a), b_(b) {}

 protected:
  int overflow(int c) override {
    if (c == EOF) return !EOF;
    const int ra = a_->sputc(static_cast<char>(c));
    if (b_) b_->sputc(static_cast<char>(c));
    return ra;
  }
  int sync() override {
    const int ra = a_->pubsync();
    if (b_) b_->pubsync();
    return ra;
  }

 private:
  std::streambuf* a_;
  std::streambuf* b_;
};

inline void print_checks(std::ostream& os, const std::vector<Check>& checks) {
  for (const auto& c : checks) os << "check " << c.name << ": " << c.verdict << " (" << c.detail << ")\n";
}

}  // namespace detail

/// `run <cfg>`: executes the run and writes norms.csv, bounds.csv, fit.csv,
/// run.log and summary.json into the output directory.
inline int cmd_run(const RunConfig& cfg, const GlobalOptions& g) {
  const fs::path dir = output_dir(cfg, g);
  fs::create_directories(dir);
  std::ofstream logfile(dir / "run.log");
  detail::TeeBuf tee(logfile.rdbuf(), g.verbose ? std::cerr.rdbuf() : nullptr);
  std::ostream log(&tee);
  RunOutcome r = execute_run(cfg, &log);
  log.flush();

  detail::write_norms_csv(dir / "norms.csv", r.record);
  if (r.exit_code != kDivergence) {
    std::vector<const TauCurve*> curves;
    for (const auto& c : r.curves) curves.push_back(&c);
    curves.push_back(&r.measured.curve);
    std::ofstream bo(dir / "bounds.csv");
    write_tau_curves_csv(bo, curves);
    std::ofstream fo(dir / "fit.csv");
    write_fit_csv(fo, r.measured);
    detail::write_snapshots(dir / "snapshots", r.record, cfg.outputs.snapshots);
    if (g.plot_data) detail::write_plot_data(dir / "plot", r);
  }
  std::ofstream(dir / "summary.json") << report_json(r).dump(2) << '\n';

  std::ostream& out = *g.console;
  out << "run " << cfg.name << ": tau0=" << detail::fmt("%.10g", r.tau0) << " (" << r.tau0_source << ")"
      << " C0=" << detail::fmt("%.10g", r.inputs.C0) << "\n";
  for (const auto& [label, why] : r.skipped) out << "bound " << label << ": skipped (" << why << ")\n";
  if (r.divergence_time) out << "divergence at t=" << r.divergence_time.value() << ": " << r.divergence_message << "\n";
  detail::print_checks(out, r.checks);
  out << "verdict " << (r.exit_code == kOk ? "PASS" : "FAIL") << " (exit " << r.exit_code << ", output in "
      << dir.string() << ")\n";
  return r.exit_code;
}

/// Result of the h1 / h2 comparison command.
struct CompareOutcome {
  RunOutcome run;
  H1H2Comparison h1h2;
  TauCurve prop2;
  TauCurve prop3;
  double C0_used = 0.0;
  std::optional<double> first_offending;
  bool tau_order_ok = true;
  bool pass() const { return h1h2.ok() && tau_order_ok; }
};

inline CompareOutcome execute_compare(const RunConfig& cfg_in, std::ostream* log = nullptr) {
  const auto* mono = std::get_if<Monomial>(&cfg_in.nonlinearity.form);
  if (!mono) throw ConfigError("compare: needs a monomial nonlinearity");
  if (!cfg_in.equation.standard) throw ConfigError("compare: needs the standard form");
  RunConfig cfg = cfg_in;
  cfg.bounds.clear();
  CompareOutcome c;
  c.run = execute_run(cfg, log);
  if (c.run.exit_code == kDivergence) return c;
  const BoundInputs& in = c.run.inputs;
  c.C0_used = in.C0 * cfg.scale_C0;
  c.h1h2 = compare_h1_h2(mono->k, in.y0, in.Y0, c.C0_used, in.l1, in.hp);
  std::vector<double> h1;
  std::vector<double> h2;
  for (const auto& row : c.h1h2.rows) {
    h1.push_back(row.h1);
    h2.push_back(row.h2);
  }
  const auto t = in.l1.times();
  c.prop2 = tau_proposition(mono->k, t, h1, c.run.tau0, "prop2");
  c.prop3 = tau_proposition(mono->k, t, h2, c.run.tau0, "prop3");
  c.first_offending = c.h1h2.first_violation;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (c.prop2.log_tau[i] < c.prop3.log_tau[i] - 1e-12) {
      c.tau_order_ok = false;
      if (!c.first_offending || t[i] < *c.first_offending) c.first_offending = t[i];
      break;
    }
  }
  return c;
}

/// `compare <cfg>`: h1 <= h2 and tau_prop2 >= tau_prop3 on one run.
inline int cmd_compare(const RunConfig& cfg, const GlobalOptions& g) {
  const fs::path dir = output_dir(cfg, g);
  fs::create_directories(dir);
  std::ofstream logfile(dir / "run.log");
  detail::TeeBuf tee(logfile.rdbuf(), g.verbose ? std::cerr.rdbuf() : nullptr);
  std::ostream log(&tee);
  CompareOutcome c = execute_compare(cfg, &log);
  log.flush();
  detail::write_norms_csv(dir / "norms.csv", c.run.record);
  std::ostream& out = *g.console;
  if (c.run.exit_code == kDivergence) {
    out << "divergence at t=" << c.run.divergence_time.value() << ": " << c.run.divergence_message << "\n";
    std::ofstream(dir / "summary.json") << report_json(c.run).dump(2) << '\n';
    return kDivergence;
  }
  {
    std::ofstream os(dir / "h1_h2.csv");
    write_h1_h2_csv(os, c.h1h2);
    std::ofstream bo(dir / "bounds.csv");
    write_tau_curves_csv(bo, {&c.prop2, &c.prop3});
  }
  double min_margin = std::numeric_limits<double>::infinity();
  for (const auto& row : c.h1h2.rows) min_margin = std::min(min_margin, row.margin);
  json j = report_json(c.run);
  j["compare"] = {{"C0_used", c.C0_used},
                  {"precondition_ok", c.h1h2.precondition_ok},
                  {"h1_le_h2", !c.h1h2.first_violation},
                  {"tau_prop2_ge_tau_prop3", c.tau_order_ok},
                  {"min_margin", min_margin},
                  {"samples", c.h1h2.rows.size()}};
  if (c.first_offending) j["compare"]["first_offending_t"] = *c.first_offending;
  j["verdict"] = c.pass() ? "PASS" : "FAIL";
  j["exit_code"] = c.pass() ? kOk : kInvariantViolation;
  std::ofstream(dir / "summary.json") << j.dump(2) << '\n';
  if (g.plot_data) {
    fs::create_directories(dir / "plot");
    std::vector<double> t;
    std::vector<double> m;
    for (const auto& row : c.h1h2.rows) {
      t.push_back(row.t);
      m.push_back(row.margin);
    }
    detail::write_columns(dir / "plot" / "margin.dat", "t margin", t, m);
    detail::write_columns(dir / "plot" / "tau_prop2.dat", "t tau", c.prop2.t, c.prop2.tau);
    detail::write_columns(dir / "plot" / "tau_prop3.dat", "t tau", c.prop3.t, c.prop3.tau);
  }
  out << "compare " << cfg.name << ": samples=" << c.h1h2.rows.size() << " C0=" << detail::fmt("%.10g", c.C0_used)
      << " min(h2-h1)=" << detail::fmt("%.6g", min_margin) << "\n";
  if (!c.h1h2.precondition_ok) out << "precondition y(0) <= (C0/2) Y0 violated\n";
  if (c.pass()) {
    out << "verdict PASS\n";
    return kOk;
  }
  out << "verdict FAIL first_offending_t=" << detail::fmt("%.10g", c.first_offending.value_or(0.0)) << "\n";
  return kInvariantViolation;
}

/// One row of the l1 / H^p gap table for u = 2 cos(k x).
struct GapRow {
  int k = 0;
  double l1 = 0.0;
  double rhs = 0.0;  ///< (C0/2) ||u||_{H^p}
  double ratio = 0.0;
};

inline std::vector<GapRow> embedding_gap_table(double p, double C0, int kmax) {
  std::vector<GapRow> rows;
  for (int k = 0; k <= kmax; k = k == 0 ? 1 : 2 * k) {
    const Lattice lat(1, 1, std::max(1, k));
    SpectralField u(lat);
    const std::vector<int> plus{k};
    const std::vector<int> minus{-k};
    u[lat.index(plus)] += 1.0;
    u[lat.index(minus)] += 1.0;
    const auto e = embedding_constant_check(u, p, C0);
    rows.push_back({k, e.lhs, e.rhs, e.rhs / e.lhs});
  }
  return rows;
}

/// `constants --n --p`: lattice sum, C0, C1 and the embedding constant.
inline int cmd_constants(int n, double p, const GlobalOptions& g) {
  const AlgebraConstant c = constant_C0(n, p);
  std::ostream& out = *g.console;
  char buf[160];
  out << "quantity,value\n";
  auto row = [&](const char* name, double v) {
    std::snprintf(buf, sizeof buf, "%s,%.15g\n", name, v);
    out << buf;
  };
  row("n", n);
  row("p", p);
  row("S", c.lattice_sum);
  row(("partial_sum_J" + std::to_string(c.partial_radius)).c_str(), c.partial_sum);
  row("tail_integral", c.tail_integral);
  row("C0", c.C0);
  row("C1", default_C1(c.C0));
  row("C_tilde", default_C1(c.C0));
  row("embedding_constant", 0.5 * c.C0);
  out << "\nk,l1,C0/2*Hp,ratio\n";
  const auto gap = embedding_gap_table(p, c.C0, 64);
  for (const auto& r : gap) {
    std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.6g\n", r.k, r.l1, r.rhs, r.ratio);
    out << buf;
  }
  if (g.out) {
    fs::create_directories(*g.out);
    std::ofstream os(fs::path(*g.out) / "constants.csv");
    os << "quantity,value\n";
    char line[128];
    for (auto [name, v] : std::vector<std::pair<std::string, double>>{
             {"n", n}, {"p", p}, {"S", c.lattice_sum}, {"C0", c.C0}, {"C1", default_C1(c.C0)},
             {"embedding_constant", 0.5 * c.C0}}) {
      std::snprintf(line, sizeof line, "%s,%.17g\n", name.c_str(), v);
      os << line;
    }
    std::ofstream gs(fs::path(*g.out) / "embedding_gap.csv");
    gs << "k,l1,rhs,ratio\n";
    for (const auto& r : gap) {
      std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g\n", r.k, r.l1, r.rhs, r.ratio);
      gs << line;
    }
  }
  return kOk;
}

/// One nu of the radius sweep.
struct ScalingRow {
  double nu = 0.0;
  double rho_exact = 0.0;
  double rho_measured = std::numeric_limits<double>::quiet_NaN();
  double local_exponent = 0.0;  ///< d log rho_exact / d log nu
  std::string status;            ///< ok | degenerate | fit_failed
};

struct ScalingOutcome {
  std::vector<ScalingRow> rows;
  double exponent_exact = std::numeric_limits<double>::quiet_NaN();
  double exponent_measured = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline double power_law_exponent(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> X{std::vector<double>(x.size(), 1.0), {}};
  std::vector<double> ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    X[1].push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return gevrey::detail::least_squares(X, ly)[1];
}

}  // namespace detail

/// Radius of the sn profile across nu at fixed lambda and c. The profile is
/// sampled over its own spatial period, fitted, and the radius rescaled.
inline ScalingOutcome execute_scaling(const ScalingSection& sc, const FitOptions& fit) {
  if (sc.nu.size() < 2) throw ConfigError("scaling.nu: need at least two points");
  for (std::size_t i = 0; i < sc.nu.size(); ++i) {
    if (!(sc.nu[i] > 0.0) || !(sc.nu[i] < sc.c * sc.c))
      throw ConfigError("scaling.nu: every value must satisfy 0 < nu < c^2");
    if (i > 0 && !(sc.nu[i] > sc.nu[i - 1])) throw ConfigError("scaling.nu: values must be strictly increasing");
  }
  if (!(sc.lambda > 0.0) || sc.N < 8) throw ConfigError("scaling: need lambda > 0 and N >= 8");
  const EllipticModulus k(sc.modulus);
  ScalingOutcome out;
  const Lattice lat(1, 1, sc.N);
  std::vector<double> xe, ye, xm, ym;
  for (double nu : sc.nu) {
    ScalingRow row;
    row.nu = nu;
    row.local_exponent = -nu / (2.0 * (sc.c * sc.c - nu));
    const double k2 = k.k() * k.k();
    const double kappa = std::sqrt(sc.lambda / ((1.0 + k2) * (sc.c * sc.c - nu)));
    if (k.k() == 0.0 || k.k() == 1.0) {
      row.rho_exact = std::numeric_limits<double>::infinity();
      row.status = "degenerate";
      out.rows.push_back(row);
      continue;
    }
    row.rho_exact = elliptic_Kprime(k) / kappa;
    const double K = elliptic_K(k);
    const double period = 4.0 * K / kappa;
    const double A = std::sqrt(2.0 * k2 * sc.lambda / (1.0 + k2));
    const std::size_t M = grid_points(sc.N, 2.0);
    GridField gf{lat, M, std::vector<double>(M)};
    for (std::size_t s = 0; s < M; ++s) gf.values[s] = A * jacobi_sn(kappa * period * gf.coordinate(s, 0) / (2.0 * M_PI), k);
    const DecayFit f = fit_radius(from_grid(gf, lat), 1, fit);
    xe.push_back(nu);
    ye.push_back(row.rho_exact);
    if (f.ok()) {
      row.rho_measured = f.rho * period / (2.0 * M_PI);
      row.status = "ok";
      xm.push_back(nu);
      ym.push_back(row.rho_measured);
    } else {
      row.status = std::string("fit_") + to_string(f.status);
    }
    out.rows.push_back(row);
  }
  out.exponent_exact = detail::power_law_exponent(xe, ye);
  out.exponent_measured = detail::power_law_exponent(xm, ym);
  return out;
}

/// `scaling <cfg>`: writes scaling.csv with "nu,rho_exact,rho_measured,rel_diff,local_exponent,status".
inline int cmd_scaling(const RunConfig& cfg, const GlobalOptions& g) {
  if (!cfg.scaling) throw ConfigError("config.scaling: section required for the scaling command");
  const ScalingOutcome s = execute_scaling(*cfg.scaling, cfg.gevrey.fit);
  const fs::path dir = output_dir(cfg, g);
  fs::create_directories(dir);
  std::ofstream os(dir / "scaling.csv");
  os << "nu,rho_exact,rho_measured,rel_diff,local_exponent,status\n";
  char buf[256];
  for (const auto& r : s.rows) {
    if (r.status == "degenerate") {
      std::snprintf(buf, sizeof buf, "%.17g,inf,,,%.17g,degenerate\n", r.nu, r.local_exponent);
    } else if (std::isnan(r.rho_measured)) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,,,%.17g,%s\n", r.nu, r.rho_exact, r.local_exponent, r.status.c_str());
    } else {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%s\n", r.nu, r.rho_exact, r.rho_measured,
                    (r.rho_measured - r.rho_exact) / r.rho_exact, r.local_exponent, r.status.c_str());
    }
    os << buf;
  }
  json j;
  j["config"] = cfg.source;
  j["exponent_exact"] = s.exponent_exact;
  j["exponent_measured"] = s.exponent_measured;
  j["degenerate_rows"] = std::count_if(s.rows.begin(), s.rows.end(), [](const ScalingRow& r) { return r.status == "degenerate"; });
  std::ofstream(dir / "summary.json") << j.dump(2) << '\n';
  if (g.plot_data) {
    std::vector<double> nu, re, rm;
    for (const auto& r : s.rows)
      if (r.status == "ok") {
        nu.push_back(r.nu);
        re.push_back(r.rho_exact);
        rm.push_back(r.rho_measured);
      }
    fs::create_directories(dir / "plot");
    detail::write_columns(dir / "plot" / "rho_exact.dat", "nu rho_exact", nu, re);
    detail::write_columns(dir / "plot" / "rho_measured.dat", "nu rho_measured", nu, rm);
  }
  std::ostream& out = *g.console;
  out << "scaling " << cfg.name << ": " << s.rows.size() << " points\n";
  for (const auto& r : s.rows)
    out << "nu=" << detail::fmt("%.6g", r.nu) << " rho_exact=" << detail::fmt("%.10g", r.rho_exact)
        << " rho_measured=" << detail::fmt("%.10g", r.rho_measured) << " local_exponent="
        << detail::fmt("%.6g", r.local_exponent) << " " << r.status << "\n";
  out << "power-law exponent: exact=" << detail::fmt("%.6g", s.exponent_exact)
      << " measured=" << detail::fmt("%.6g", s.exponent_measured) << "\n";
  return kOk;
}

/// Runs `fn`, mapping library errors onto exit codes and printing the message.
template <class Fn>
int guarded(Fn&& fn, std::ostream& err = std::cerr) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const PeriodicityFitError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ParameterError& e) {
    err << "parameter error: " << e.what() << "\n";
    return kConfigError;
  } catch (const SymmetryError& e) {
    err << "input error: " << e.what() << "\n";
    return kConfigError;
  } catch (const UndersamplingError& e) {
    err << "input error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << "\n";
    return kDivergence;
  } catch (const OverflowError& e) {
    err << "overflow: " << e.what() << "\n";
    return kDivergence;
  } catch (const InvariantViolation& e) {
    err << "invariant violation: " << e.what() << "\n";
    return kInvariantViolation;
  } catch (const nlohmann::json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace gevrey::experiment
