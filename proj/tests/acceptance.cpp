#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gevrey/experiment/commands.hpp"
#include "test_support.hpp"

namespace {

using namespace gevrey;
using experiment::RunConfig;
using experiment::RunOutcome;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

RunConfig preset(const std::string& name) { return experiment::load_config(std::string(GEVREY_PRESETS) + "/" + name + ".json"); }

std::vector<double> uniform_grid(double T, double dt) {
  const auto n = static_cast<std::size_t>(std::llround(T / dt));
  std::vector<double> t(n + 1);
  for (std::size_t i = 0; i <= n; ++i) t[i] = T * static_cast<double>(i) / static_cast<double>(n);
  return t;
}

// max |tau(2t)/tau(t) - 1/2| over sample times t in [lo, hi]
double halving_deviation(const TauCurve& c, double lo, double hi) {
  double worst = 0.0;
  int used = 0;
  for (std::size_t i = 0; i < c.t.size(); ++i) {
    if (c.t[i] < lo - 1e-9 || c.t[i] > hi + 1e-9) continue;
    const double ratio = std::exp(interpolate(c.t, c.log_tau, 2.0 * c.t[i]) - c.log_tau[i]);
    worst = std::max(worst, std::abs(ratio - 0.5));
    ++used;
  }
  return used > 0 ? worst : INFINITY;
}

double energy_drift(const RunRecord& rec) {
  const double e0 = rec.energy.front().value;
  double worst = 0.0;
  for (const auto& e : rec.energy) worst = std::max(worst, std::abs(e.value - e0));
  return worst / std::abs(e0);
}

Verdict banach_algebra() {
  const auto t0 = Clock::now();
  const double C0p[2] = {constant_C0(1, 1.0).C0, constant_C0(1, 2.0).C0};
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> pickN(1, 16);
  int violations = 0;
  double worst = 0.0;
  const int pairs = 200;
  for (int trial = 0; trial < pairs; ++trial) {
    const int N = pickN(rng);
    const double p = trial % 2 == 0 ? 1.0 : 2.0;
    const double tau = (trial / 2) % 2 == 0 ? 0.0 : 0.2;
    const Lattice lat(1, 1, N);
    const SpectralField u = testing::random_real_field(lat, rng, 0.9);
    const SpectralField v = testing::random_real_field(lat, rng, 0.9);
    const auto conv = testing::convolve(testing::dense_1d(u), testing::dense_1d(v));
    const SpectralField uv(Lattice(1, 1, 2 * N), std::vector<cplx>(conv.begin(), conv.end()));
    const GevreyParams g{p, tau};
    const double lhs = norm_gevrey_L2(uv, g);
    const double rhs = C0p[trial % 2] * norm_gevrey_L2(u, g) * norm_gevrey_L2(v, g);
    if (!(lhs <= rhs + 1e-9)) ++violations;
    worst = std::max(worst, lhs / rhs);
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < 10.0, std::to_string(pairs) + " pairs, " + std::to_string(violations) +
                                              " violations, max lhs/rhs " + fmt("%.4f", worst) + ", " +
                                              fmt("%.2f", secs) + " s"};
}

Verdict pure_mode() {
  int checked = 0;
  double worst = 0.0;
  for (int n : {1, 2}) {
    const Lattice lat(n, 1, 32);
    for (double p : {1.0, 2.0})
      for (double tau : {0.0, 0.5})
        for (std::size_t f = 0; f < lat.size(); ++f) {
          const double expect = std::pow(1.0 + lat.j_squared(f), 0.5 * p) * std::exp(tau * std::abs(lat.component(f, 0)));
          const double got = norm_gevrey_L2(testing::single_mode(lat, f), {p, tau});
          worst = std::max(worst, std::abs(got - expect) / expect);
          ++checked;
        }
  }
  return {worst <= 1e-12, std::to_string(checked) + " single-mode fields, max relative error " + fmt("%.2e", worst)};
}

Verdict ode_agreement() {
  const auto t = uniform_grid(10.0, 1e-3);
  const double h = 0.7;
  const double tau0 = 0.9;
  const std::vector<double> hs(t.size(), h);
  struct Law {
    const char* name;
    double q;
    std::function<double(double)> exact;
  };
  const std::vector<Law> laws = {
      {"thm1", 3.0, [&](double s) { return 1.0 / std::sqrt(2.0 * h * s + std::pow(tau0, -2.0)); }},
      {"thm3", 2.0, [&](double s) { return 1.0 / (h * s + 1.0 / tau0); }},
      {"prop2", 4.0, [&](double s) { return std::pow(3.0 * h * s + std::pow(tau0, -3.0), -1.0 / 3.0); }},
      {"prop3", 3.0, [&](double s) { return std::pow(2.0 * h * s + std::pow(tau0, -2.0), -0.5); }},
  };
  double worst = 0.0;
  std::string detail;
  for (const Law& law : laws) {
    const auto rk = detail::rk4_power_law(t, hs, law.q, tau0, 1e-3);
    double w = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) w = std::max(w, std::abs(rk[i] - law.exact(t[i])) / law.exact(t[i]));
    detail += std::string(law.name) + " " + fmt("%.1e", w) + ", ";
    worst = std::max(worst, w);
  }
  const auto lg = detail::rk4_log_law(t, hs, std::log(tau0), 1e-3);
  double w = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double exact = tau0 * std::exp(-h * t[i]);
    w = std::max(w, std::abs(std::exp(lg[i]) - exact) / exact);
  }
  detail += "thm2 " + fmt("%.1e", w);
  worst = std::max(worst, w);
  const TauCurve curves[] = {tau_theorem1_from_h(t, hs, tau0), tau_theorem2_from_eta(t, hs, tau0),
                             tau_theorem3_from_h(t, hs, tau0), tau_proposition(3, t, hs, tau0, "prop2"),
                             tau_proposition(2, t, hs, tau0, "prop3")};
  for (const auto& c : curves) worst = std::max(worst, c.ode_discrepancy);
  return {worst <= 1e-8, "max relative RK4 vs closed form: " + detail};
}

Verdict solver_validation(RunOutcome& sn) {
  const auto t0 = Clock::now();
  sn = experiment::execute_run(preset("sn-validate"));
  const double secs = seconds_since(t0);
  const SnWave& w = *sn.prepared.sn;
  const double res = sn_wave_residual(w);
  const GridField num = to_grid(sn.record.final_state.u, 1.0);
  const GridField ex = w.evaluate(sn.record.final_state.t, num.points_per_dim);
  double err = 0.0;
  for (std::size_t i = 0; i < num.total(); ++i) err = std::max(err, std::abs(num.values[i] - ex.values[i]));
  const bool one_period = std::abs(sn.record.final_state.t - w.temporal_period()) < 1e-9 * w.temporal_period();
  const bool setup = sn.prepared.lattice.N() == 256 && sn.record.dt <= 1e-4 && w.modulus.k() == 0.9;
  return {setup && one_period && err <= 1e-6 && res <= 1e-8 && secs < 60.0,
          "L-inf error " + fmt("%.2e", err) + " at t=" + fmt("%.6g", sn.record.final_state.t) + ", residual " +
              fmt("%.2e", res) + ", " + fmt("%.1f", secs) + " s"};
}

Verdict measured_radius(const RunOutcome& sn) {
  const double rho = sn.prepared.sn->rho_exact;
  double worst = 0.0;
  for (const auto& f : sn.measured.fits) worst = std::max(worst, f.ok() ? std::abs(f.rho - rho) / rho : INFINITY);
  std::vector<double> p(81);
  for (int k = 0; k <= 80; ++k) p[static_cast<std::size_t>(k)] = std::pow(1.0 + k, 3.0) * std::exp(-0.3 * k);
  FitOptions opt;
  opt.k_min = 10;
  opt.k_max = 60;
  const DecayFit fit = fit_profile(p, opt);
  const double syn = fit.ok() ? std::abs(fit.rho - 0.3) / 0.3 : INFINITY;
  return {!sn.measured.fits.empty() && worst <= 0.02 && syn <= 0.03,
          "sn: max |rho_fit/rho_exact - 1| " + fmt("%.2e", worst) + " over " + std::to_string(sn.measured.fits.size()) +
              " snapshots; synthetic: rho " + fmt("%.6f", fit.rho) + " (" + fmt("%.2e", syn) + ")"};
}

Verdict lower_bound(const RunOutcome& r) {
  const RunConfig& c = r.config;
  const bool setup = c.lattice.N == 256 && c.solver.T == 20.0 && c.gevrey.p == 1.0 && c.gevrey.tau0_policy == "fitted";
  int violations = 0;
  int compared = 0;
  std::string detail = "tau0 " + fmt("%.6g", r.tau0) + " (" + r.tau0_source + "), " +
                       std::to_string(r.measured.omitted) + " snapshots without a fit;";
  for (const auto& curve : r.curves) {
    const LowerBoundCheck lb = check_lower_bound(r.measured.curve, curve, 0.0);
    violations += lb.violations;
    compared += lb.compared;
    detail += " " + curve.label + " " + std::to_string(lb.violations) + "/" + std::to_string(lb.compared) +
              " (max bound/measured " + fmt("%.3g", lb.worst_ratio) + ")";
  }
  return {setup && r.curves.size() >= 4 && compared > 0 && violations == 0, detail};
}

Verdict h1_h2(const RunOutcome& r) {
  const BoundInputs& in = r.inputs;
  const H1H2Comparison cmp = compare_h1_h2(3, in.y0, in.Y0, in.C0, in.l1, in.hp);
  std::ofstream os("acceptance_h1_h2.csv");
  write_h1_h2_csv(os, cmp);
  const TauCurve* p2 = r.curve("prop2");
  const TauCurve* p3 = r.curve("prop3");
  int order = 0;
  double min_margin = INFINITY;
  for (const auto& row : cmp.rows) min_margin = std::min(min_margin, row.margin);
  if (p2 && p3)
    for (std::size_t i = 0; i < p2->t.size(); ++i)
      if (p2->log_tau[i] < p3->log_tau[i]) ++order;
  return {p2 && p3 && cmp.ok() && order == 0,
          std::to_string(cmp.rows.size()) + " samples, min(h2-h1) " + fmt("%.4g", min_margin) + ", tau ordering violations " +
              std::to_string(order) + ", margins in acceptance_h1_h2.csv"};
}

Verdict asymptotic_law() {
  const auto t = uniform_grid(200.0, 0.05);
  NormSeries hp{"Hp", {}};
  NormSeries l1{"l1", {}};
  for (double s : t) {
    hp.push(s, 0.8 + 0.2 * std::sin(s));
    l1.push(s, 0.5);
  }
  const double C0 = constant_C0(1, 1.0).C0;
  const TauCurve syn = tau_proposition(3, t, h2_series(3, 1.0, C0, hp), 1.0, "prop3");
  const double dev_syn = halving_deviation(syn, 50.0, 100.0);

  RunConfig cfg = preset("cubic-kg");
  cfg.lattice.N = 32;
  cfg.solver.T = 200.0;
  const RunOutcome r = experiment::execute_run(cfg);
  const TauCurve* c = r.curve("prop3");
  const double dev_run = c ? halving_deviation(*c, 50.0, 100.0) : INFINITY;
  const double hp0 = r.record.hp.samples.front().value;
  double hp_max = 0.0;
  for (const auto& s : r.record.hp.samples) hp_max = std::max(hp_max, s.value);
  return {dev_syn <= 0.05 && dev_run <= 0.05 && hp_max <= 2.0 * hp0,
          "synthetic max |ratio-1/2| " + fmt("%.2e", dev_syn) + "; run (N=32, T=200) " + fmt("%.2e", dev_run) +
              ", max Hp/Hp(0) " + fmt("%.4f", hp_max / hp0)};
}

Verdict energy_conservation() {
  RunConfig cfg = preset("energy");
  const RunOutcome a = experiment::execute_run(cfg);
  cfg.solver.dt *= 0.5;
  const RunOutcome b = experiment::execute_run(cfg);
  const double d1 = energy_drift(a.record);
  const double d2 = energy_drift(b.record);
  const double ratio = d1 / d2;
  const bool setup = a.config.lattice.N == 128 && a.config.solver.T == 10.0 && a.record.dt == 1e-3;
  return {setup && d1 <= 1e-6 && std::abs(ratio - 4.0) <= 0.3 * 4.0,
          "drift " + fmt("%.3e", d1) + " at dt=1e-3, " + fmt("%.3e", d2) + " at dt=5e-4, ratio " + fmt("%.3f", ratio)};
}

Verdict embedding() {
  const double C0 = constant_C0(1, 1.0).C0;
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> pickN(1, 64);
  std::uniform_real_distribution<double> pickDecay(0.3, 1.0);
  int violations = 0;
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const SpectralField u = testing::random_real_field(Lattice(1, 1, pickN(rng)), rng, pickDecay(rng));
    const EmbeddingCheck e = embedding_constant_check(u, 1.0, C0);
    if (!e.ok || !(e.lhs <= e.rhs)) ++violations;
    worst = std::max(worst, e.lhs / e.rhs);
  }
  std::printf("  k,l1,C0/2*Hp,ratio\n");
  bool widening = true;
  double prev = 0.0;
  for (const auto& row : experiment::embedding_gap_table(1.0, C0, 64)) {
    std::printf("  %d,%.10g,%.10g,%.6g\n", row.k, row.l1, row.rhs, row.ratio);
    if (row.k > 1 && !(row.ratio > prev)) widening = false;
    prev = row.ratio;
  }
  return {violations == 0 && widening,
          "200 fields, " + std::to_string(violations) + " violations, max l1/rhs " + fmt("%.4f", worst)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const Verdict& v) {
    std::printf("%s %d %s: %s\n", v.ok ? "PASS" : "FAIL", id, name, v.detail.c_str());
    std::fflush(stdout);
    if (!v.ok) ++failures;
  };
  auto guard = [&](int id, const char* name, const std::function<Verdict()>& body) {
    try {
      report(id, name, body());
    } catch (const std::exception& e) {
      report(id, name, {false, std::string("exception: ") + e.what()});
    }
  };

  guard(1, "banach_algebra", banach_algebra);
  guard(2, "pure_mode_identity", pure_mode);
  guard(3, "closed_form_ode_agreement", ode_agreement);
  RunOutcome sn;
  guard(4, "sn_solver_validation", [&] { return solver_validation(sn); });
  guard(5, "measured_radius_accuracy", [&] {
    return sn.prepared.sn ? measured_radius(sn) : Verdict{false, "sn run unavailable"};
  });
  RunOutcome lb;
  guard(6, "lower_bound_property", [&] {
    lb = experiment::execute_run(preset("lower-bound"));
    return lower_bound(lb);
  });
  guard(7, "h1_le_h2", [&] { return lb.curves.empty() ? Verdict{false, "lower-bound run unavailable"} : h1_h2(lb); });
  guard(8, "asymptotic_inverse_t_law", asymptotic_law);
  guard(9, "energy_conservation", energy_conservation);
  guard(10, "embedding_inequality", embedding);

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
