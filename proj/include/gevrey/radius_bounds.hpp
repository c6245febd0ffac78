#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gevrey/errors.hpp"
#include "gevrey/nonlinearity.hpp"
#include "gevrey/norms.hpp"
#include "gevrey/quadrature.hpp"
#include "gevrey/wave_solver.hpp"

namespace gevrey {

/// Norm series and constants feeding the lower-bound laws.
struct BoundInputs {
  NormSeries hp{"Hp", {}};
  NormSeries hp1{"Hp_plus_1", {}};
  NormSeries ut_hp{"ut_Hp", {}};
  NormSeries l1{"l1", {}};
  double Y0 = 0.0;
  double y0 = 0.0;
  double C0 = 0.0;
  double C1 = 0.0;
  double C_tilde = 0.0;
  double tau0 = 1.0;
  double p = 1.0;
  int n = 1;

  /// Sample times shared by every non-empty series.
  std::vector<double> times() const {
    for (const NormSeries* s : {&hp, &hp1, &ut_hp, &l1})
      if (!s->samples.empty()) return s->times();
    return {};
  }

  void validate() const {
    if (!std::isfinite(Y0) || !std::isfinite(y0) || Y0 < 0.0 || y0 < 0.0)
      throw ParameterError("bound inputs: Y0 and y(0) must be finite and >= 0");
    if (!(tau0 > 0.0)) throw ParameterError("bound inputs: tau0 must be > 0");
    const auto t = times();
    for (const NormSeries* s : {&hp, &hp1, &ut_hp, &l1}) {
      if (s->samples.empty()) continue;
      const auto ts = s->times();
      if (ts.size() != t.size()) throw ParameterError("bound inputs: series '" + s->kind + "' is not time-aligned");
      for (std::size_t i = 0; i < t.size(); ++i)
        if (std::abs(ts[i] - t[i]) > 1e-12 * std::max(1.0, std::abs(t[i])))
          throw ParameterError("bound inputs: series '" + s->kind + "' is not time-aligned");
    }
  }

  const NormSeries& require(const NormSeries& s, const char* bound) const {
    if (s.samples.empty())
      throw ParameterError(std::string(bound) + ": needs the '" + s.kind + "' norm series");
    return s;
  }
};

/// C1 = C~ = 1 + 1/C0.
inline double default_C1(double C0) { return 1.0 + 1.0 / C0; }

/// Assembles inputs from a recorded run and its initial state.
inline BoundInputs make_bound_inputs(const RunRecord& record, const WaveState& initial, double p, double tau0) {
  BoundInputs in;
  in.hp = record.hp;
  in.hp1 = record.hp1;
  in.ut_hp = record.ut_hp;
  in.l1 = record.l1;
  in.p = p;
  in.n = initial.u.lattice().n();
  in.tau0 = tau0;
  in.C0 = constant_C0(in.n, p).C0;
  in.C1 = default_C1(in.C0);
  in.C_tilde = default_C1(in.C0);
  in.Y0 = energy_Y(initial.u, initial.v, p, tau0);
  in.y0 = y_l1(initial.u, initial.v, tau0);
  return in;
}

/// tau(t) samples of one lower-bound law (or of a measurement).
struct TauCurve {
  std::string label;  ///< thm1 | thm2 | thm3 | prop2 | prop3 | measured
  std::vector<double> t;
  std::vector<double> tau;
  std::vector<double> log_tau;  ///< kept separately since tau may underflow
  double ode_discrepancy = std::numeric_limits<double>::quiet_NaN();  ///< max relative closed form vs RK4
  std::string note;

  void push(double time, double log_value) {
    t.push_back(time);
    log_tau.push_back(log_value);
    tau.push_back(std::exp(log_value));
  }
  bool positive() const {
    return std::all_of(log_tau.begin(), log_tau.end(), [](double l) { return std::isfinite(l); });
  }
  bool nonincreasing(double rel_tol = 1e-12) const {
    for (std::size_t i = 1; i < log_tau.size(); ++i)
      if (log_tau[i] > log_tau[i - 1] + rel_tol) return false;
    return true;
  }
};

namespace detail {

inline std::vector<double> sample_values(const NormSeries& s) { return s.values(); }

inline void require_nonnegative(std::span<const double> h, const char* what) {
  for (double v : h) {
    if (std::isinf(v)) throw OverflowError(std::string(what) + ": rate exceeds the double range");
    if (!(v >= 0.0)) throw ParameterError(std::string(what) + ": rate samples must be finite and >= 0");
  }
}

/// RK4 for tau' = -tau^q h(t) with h piecewise linear between samples.
/// Steps are capped at max_step and at 0.01 / (q tau^{q-1} h).
inline std::vector<double> rk4_power_law(std::span<const double> t, std::span<const double> h, double q,
                                         double tau0, double max_step) {
  std::vector<double> out(t.size());
  if (t.empty()) return out;
  out[0] = tau0;
  double tau = tau0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double a = t[i - 1];
    const double b = t[i];
    auto hh = [&](double s) { return h[i - 1] + (h[i] - h[i - 1]) * (s - a) / (b - a); };
    auto rate = [&](double s, double y) { return -std::pow(y, q) * hh(s); };
    double s = a;
    while (s < b) {
      const double J = q * std::pow(tau, q - 1.0) * std::max(h[i - 1], h[i]);
      double step = std::min(max_step, b - s);
      if (J > 0.0) step = std::min(step, 0.01 / J);
      if (b - s - step < 1e-14 * std::max(1.0, b)) step = b - s;
      const double k1 = rate(s, tau);
      const double k2 = rate(s + 0.5 * step, tau + 0.5 * step * k1);
      const double k3 = rate(s + 0.5 * step, tau + 0.5 * step * k2);
      const double k4 = rate(s + step, tau + step * k3);
      tau += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      s = (step == b - s) ? b : s + step;
    }
    out[i] = tau;
  }
  return out;
}

/// RK4 for (log tau)' = -eta(t), eta piecewise linear.
inline std::vector<double> rk4_log_law(std::span<const double> t, std::span<const double> eta, double log_tau0,
                                       double max_step) {
  std::vector<double> out(t.size());
  if (t.empty()) return out;
  out[0] = log_tau0;
  double y = log_tau0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double a = t[i - 1];
    const double b = t[i];
    auto rate = [&](double s) { return -(eta[i - 1] + (eta[i] - eta[i - 1]) * (s - a) / (b - a)); };
    const auto steps = static_cast<long>(std::ceil((b - a) / max_step - 1e-9));
    const double step = (b - a) / static_cast<double>(std::max(1L, steps));
    for (long k = 0; k < std::max(1L, steps); ++k) {
      const double s = a + static_cast<double>(k) * step;
      y += step / 6.0 * (rate(s) + 4.0 * rate(s + 0.5 * step) + rate(s + step));
    }
    out[i] = y;
  }
  return out;
}

/// tau = (q' int h + tau0^{-q'})^{-1/q'} with q' = q - 1 > 0, plus its RK4 check.
inline TauCurve power_law_curve(std::string label, std::span<const double> t, std::span<const double> h, double qm1,
                                double tau0, double max_step) {
  require_nonnegative(h, label.c_str());
  TauCurve c;
  c.label = std::move(label);
  const auto H = cumulative_trapezoid(t, h);
  for (std::size_t i = 0; i < t.size(); ++i)
    c.push(t[i], -std::log(qm1 * H[i] + std::pow(tau0, -qm1)) / qm1);
  const auto rk = rk4_power_law(t, h, qm1 + 1.0, tau0, max_step);
  double worst = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) worst = std::max(worst, std::abs(rk[i] - c.tau[i]) / c.tau[i]);
  c.ode_discrepancy = worst;
  return c;
}

}  // namespace detail

/// Default cap on RK4 steps in the cross-checks.
inline constexpr double kOdeMaxStep = 1e-3;

// ---- Theorem-1 law: tau' = -tau^3 h ----------------------------------------

/// xi at every sample: Y0 + C1 int_0^t g(s, C0 (sqrt2 e ||u(s)||_{H^p} + 2)) ds.
inline std::vector<double> xi_series(const BoundInputs& in, const MajorisingSeries& g) {
  const NormSeries& hp = in.require(in.hp, "thm1");
  const auto t = hp.times();
  std::vector<double> integrand(t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    integrand[i] = g_eval(g, t[i], in.C0 * (std::sqrt(2.0) * M_E * hp.samples[i].value + 2.0)).value;
  auto out = cumulative_trapezoid(t, integrand);
  for (double& x : out) x = in.Y0 + in.C1 * x;
  return out;
}

/// h = C1 g(t, C0 (sqrt2 xi + 1)) xi
inline double h_from_xi(const MajorisingSeries& g, double C1, double C0, double t, double xi) {
  if (xi == 0.0) return 0.0;
  return C1 * g_eval(g, t, C0 * (std::sqrt(2.0) * xi + 1.0)).value * xi;
}

inline std::vector<double> h_series(const BoundInputs& in, const MajorisingSeries& g) {
  const auto xi = xi_series(in, g);
  const auto t = in.hp.times();
  std::vector<double> h(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) h[i] = h_from_xi(g, in.C1, in.C0, t[i], xi[i]);
  return h;
}

inline double compute_xi(const BoundInputs& in, const MajorisingSeries& g, double t) {
  return interpolate(in.hp.times(), xi_series(in, g), t);
}

inline double compute_h(const BoundInputs& in, const MajorisingSeries& g, double t) {
  return h_from_xi(g, in.C1, in.C0, t, compute_xi(in, g, t));
}

/// tau = (2 int_0^t h + tau0^{-2})^{-1/2} from sampled h.
inline TauCurve tau_theorem1_from_h(std::span<const double> t, std::span<const double> h, double tau0,
                                    double max_step = kOdeMaxStep) {
  require_increasing(t, "thm1");
  return detail::power_law_curve("thm1", t, h, 2.0, tau0, max_step);
}

inline TauCurve tau_theorem1(const BoundInputs& in, const MajorisingSeries& g) {
  in.validate();
  const auto t = in.require(in.hp, "thm1").times();
  TauCurve c = tau_theorem1_from_h(t, h_series(in, g), in.tau0);
  char buf[96];
  std::snprintf(buf, sizeof buf, "C0=%.10g C1=%.10g", in.C0, in.C1);
  c.note = buf;
  return c;
}

// ---- Theorem-2 law: tau' = -tau eta ----------------------------------------

/// kappa = C~ g(t, 2C0, ..., 2C0) + C~/2^{n+2} g(t, 2eC0 ||u||_{H^{p+1}}, ..., 2eC0 ||u_t||_{H^p}).
inline double kappa_value(const MultiMajorisingSeries& g, double C_tilde, double C0, int n, double t, double hp1,
                          double ut_hp) {
  std::vector<double> a(g.arity, 2.0 * C0);
  const double first = g_eval_multivar(g, t, a);
  std::fill(a.begin(), a.end(), 2.0 * M_E * C0 * hp1);
  a.back() = 2.0 * M_E * C0 * ut_hp;
  const double second = g_eval_multivar(g, t, a);
  return C_tilde * first + C_tilde * std::ldexp(second, -(n + 2));
}

/// psi = 2 C~ g(t, 2eC0 [1 + ||u||_{H^{p+1}} + gevU]^{n+2}, ..., 2eC0 [1 + ||u_t||_{H^p} + gevUt]^{n+2}).
inline double psi_value(const MultiMajorisingSeries& g, double C_tilde, double C0, int n, double t, double hp1,
                        double ut_hp, double gevU, double gevUt) {
  std::vector<double> a(g.arity, 2.0 * M_E * C0 * std::pow(1.0 + hp1 + gevU, n + 2));
  a.back() = 2.0 * M_E * C0 * std::pow(1.0 + ut_hp + gevUt, n + 2);
  return 2.0 * C_tilde * g_eval_multivar(g, t, a);
}

/// eta = psi * Z with Z = Y0 + int_0^t kappa.
inline double eta_value(double psi, double Z) { return psi * Z; }

namespace detail {

inline void require_arity(const MultiMajorisingSeries& g, int n) {
  if (g.arity != static_cast<std::size_t>(n) + 2)
    throw ParameterError("thm2: the multivariate majorant must take n+2 = " + std::to_string(n + 2) + " arguments");
}

}  // namespace detail

inline std::vector<double> kappa_series(const BoundInputs& in, const MultiMajorisingSeries& g) {
  detail::require_arity(g, in.n);
  const NormSeries& hp1 = in.require(in.hp1, "thm2");
  const NormSeries& ut = in.require(in.ut_hp, "thm2");
  std::vector<double> k(hp1.samples.size());
  for (std::size_t i = 0; i < k.size(); ++i)
    k[i] = kappa_value(g, in.C_tilde, in.C0, in.n, hp1.samples[i].t, hp1.samples[i].value, ut.samples[i].value);
  return k;
}

inline std::vector<double> eta_series(const BoundInputs& in, const MultiMajorisingSeries& g) {
  const auto t = in.require(in.hp1, "thm2").times();
  const auto kap = kappa_series(in, g);
  const auto K = cumulative_trapezoid(t, kap);
  std::vector<double> eta(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double Z = in.Y0 + K[i];
    const double psi = psi_value(g, in.C_tilde, in.C0, in.n, t[i], in.hp1.samples[i].value,
                                 in.ut_hp.samples[i].value, Z, Z);
    eta[i] = eta_value(psi, Z);
  }
  return eta;
}

inline double compute_kappa(const BoundInputs& in, const MultiMajorisingSeries& g, double t) {
  return interpolate(in.hp1.times(), kappa_series(in, g), t);
}

inline double compute_psi(const BoundInputs& in, const MultiMajorisingSeries& g, double t, double gevU,
                          double gevUt) {
  const auto ts = in.require(in.hp1, "thm2").times();
  return psi_value(g, in.C_tilde, in.C0, in.n, t, interpolate(ts, in.hp1.values(), t),
                   interpolate(ts, in.require(in.ut_hp, "thm2").values(), t), gevU, gevUt);
}

inline double compute_eta(const BoundInputs& in, const MultiMajorisingSeries& g, double t) {
  return interpolate(in.hp1.times(), eta_series(in, g), t);
}

/// tau = tau0 exp(-int_0^t eta) from sampled eta.
inline TauCurve tau_theorem2_from_eta(std::span<const double> t, std::span<const double> eta, double tau0,
                                      double max_step = kOdeMaxStep) {
  require_increasing(t, "thm2");
  detail::require_nonnegative(eta, "thm2");
  TauCurve c;
  c.label = "thm2";
  const auto E = cumulative_trapezoid(t, eta);
  for (std::size_t i = 0; i < t.size(); ++i) c.push(t[i], std::log(tau0) - E[i]);
  const auto rk = detail::rk4_log_law(t, eta, std::log(tau0), max_step);
  double worst = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    // Below the double range tau is compared through its exponent.
    const double d = rk[i] - c.log_tau[i];
    worst = std::max(worst, c.log_tau[i] > -700.0 ? std::abs(std::expm1(d)) : std::abs(d / c.log_tau[i]));
  }
  c.ode_discrepancy = worst;
  return c;
}

inline TauCurve tau_theorem2(const BoundInputs& in, const MultiMajorisingSeries& g) {
  in.validate();
  const auto t = in.require(in.hp1, "thm2").times();
  TauCurve c = tau_theorem2_from_eta(t, eta_series(in, g), in.tau0);
  char buf[96];
  std::snprintf(buf, sizeof buf, "C0=%.10g C_tilde=%.10g", in.C0, in.C_tilde);
  c.note = buf;
  return c;
}

// ---- Theorem-3 law: tau' = -tau^2 h~ ---------------------------------------

/// h~ = g(t, 2 y(0) + 2 int_0^t g(s, 2e ||u^(s)||_{l1}) ds + 1) at every sample.
inline std::vector<double> h_tilde_series(const BoundInputs& in, const MajorisingSeries& g) {
  const NormSeries& l1 = in.require(in.l1, "thm3");
  const auto t = l1.times();
  std::vector<double> inner(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) inner[i] = g_eval(g, t[i], 2.0 * M_E * l1.samples[i].value).value;
  const auto G = cumulative_trapezoid(t, inner);
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = g_eval(g, t[i], 2.0 * in.y0 + 2.0 * G[i] + 1.0).value;
  return out;
}

inline double compute_h_tilde(const BoundInputs& in, const MajorisingSeries& g, double t) {
  return interpolate(in.l1.times(), h_tilde_series(in, g), t);
}

inline TauCurve tau_theorem3_from_h(std::span<const double> t, std::span<const double> h, double tau0,
                                    double max_step = kOdeMaxStep) {
  require_increasing(t, "thm3");
  return detail::power_law_curve("thm3", t, h, 1.0, tau0, max_step);
}

inline TauCurve tau_theorem3(const BoundInputs& in, const MajorisingSeries& g) {
  in.validate();
  return tau_theorem3_from_h(in.require(in.l1, "thm3").times(), h_tilde_series(in, g), in.tau0);
}

// ---- Monomial laws: tau' = -tau^{k+1} h_{1,2} -------------------------------

namespace detail {

inline void require_power(int k) {
  if (k < 2) throw ParameterError("proposition bounds need k >= 2, got " + std::to_string(k));
}

}  // namespace detail

/// h1 = (2 y(0) + 2^k e^k int_0^t ||u^||_{l1}^k)^{k-1} at every sample.
inline std::vector<double> h1_series(int k, double y0, const NormSeries& l1) {
  detail::require_power(k);
  const auto t = l1.times();
  std::vector<double> pw(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) pw[i] = std::pow(l1.samples[i].value, k);
  const auto I = cumulative_trapezoid(t, pw);
  std::vector<double> out(t.size());
  const double c = std::pow(2.0 * M_E, k);
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = std::pow(2.0 * y0 + c * I[i], k - 1);
  return out;
}

/// h2 = (C0 Y0 + 1/2 C0^k (e sqrt2)^k int_0^t ||u||_{H^p}^k)^{k-1} at every sample.
inline std::vector<double> h2_series(int k, double Y0, double C0, const NormSeries& hp) {
  detail::require_power(k);
  const auto t = hp.times();
  std::vector<double> pw(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) pw[i] = std::pow(hp.samples[i].value, k);
  const auto I = cumulative_trapezoid(t, pw);
  std::vector<double> out(t.size());
  const double c = 0.5 * std::pow(C0 * M_E * std::sqrt(2.0), k);
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = std::pow(C0 * Y0 + c * I[i], k - 1);
  return out;
}

inline double compute_h1(int k, double y0, const NormSeries& l1, double t) {
  return interpolate(l1.times(), h1_series(k, y0, l1), t);
}

inline double compute_h2(int k, double Y0, double C0, const NormSeries& hp, double t) {
  return interpolate(hp.times(), h2_series(k, Y0, C0, hp), t);
}

/// tau = (k int_0^t h + tau0^{-k})^{-1/k}; label prop2 for h1, prop3 for h2.
inline TauCurve tau_proposition(int k, std::span<const double> t, std::span<const double> h, double tau0,
                                std::string label, double max_step = kOdeMaxStep) {
  detail::require_power(k);
  if (!(tau0 > 0.0)) throw ParameterError(label + ": tau0 must be > 0");
  require_increasing(t, label.c_str());
  return detail::power_law_curve(std::move(label), t, h, static_cast<double>(k), tau0, max_step);
}

/// One row of the h1 / h2 comparison.
struct H1H2Row {
  double t = 0.0;
  double h1 = 0.0;
  double h2 = 0.0;
  double margin = 0.0;  ///< h2 - h1
};

struct H1H2Comparison {
  std::vector<H1H2Row> rows;
  bool precondition_ok = true;  ///< y(0) <= (C0/2) Y0
  std::optional<double> first_violation;
  bool ok() const { return precondition_ok && !first_violation; }
};

/// Evaluates h1 and h2 from the same run and checks h1 <= h2 at every sample.
inline H1H2Comparison compare_h1_h2(int k, double y0, double Y0, double C0, const NormSeries& l1,
                                    const NormSeries& hp) {
  detail::require_power(k);
  if (l1.samples.size() != hp.samples.size()) throw ParameterError("compare_h1_h2: series are not time-aligned");
  H1H2Comparison out;
  out.precondition_ok = y0 <= 0.5 * C0 * Y0 * (1.0 + 1e-14);
  const auto h1 = h1_series(k, y0, l1);
  const auto h2 = h2_series(k, Y0, C0, hp);
  for (std::size_t i = 0; i < h1.size(); ++i) {
    const double t = l1.samples[i].t;
    out.rows.push_back({t, h1[i], h2[i], h2[i] - h1[i]});
    if (!out.first_violation && h1[i] > h2[i] * (1.0 + 1e-12)) out.first_violation = t;
  }
  if (!out.precondition_ok && !out.first_violation && !out.rows.empty()) out.first_violation = out.rows.front().t;
  return out;
}

/// T* = min{1 / (C1 max_s g(s, C0 (||U0|| + 1))), T}, the max taken over `times`.
/// Returns T when g vanishes on the grid.
inline double compute_Tstar(const MajorisingSeries& g, double C0, double C1, double U0_norm, double T,
                            std::span<const double> times) {
  if (!(T > 0.0)) throw ParameterError("compute_Tstar: T must be > 0");
  double gmax = 0.0;
  const double arg = C0 * (U0_norm + 1.0);
  for (double s : times) gmax = std::max(gmax, g_eval(g, s, arg).value);
  if (gmax == 0.0) return T;
  return std::min(1.0 / (C1 * gmax), T);
}

inline double compute_Tstar(const MajorisingSeries& g, double C0, double C1, double U0_norm, double T) {
  std::vector<double> grid(1001);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = T * static_cast<double>(i) / 1000.0;
  return compute_Tstar(g, C0, C1, U0_norm, T, grid);
}

/// Writes "t,label,tau" rows, curve by curve.
inline void write_tau_curves_csv(std::ostream& os, const std::vector<const TauCurve*>& curves) {
  os << "t,label,tau\n";
  char buf[128];
  for (const TauCurve* c : curves)
    for (std::size_t i = 0; i < c->t.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%s,%.17g\n", c->t[i], c->label.c_str(), c->tau[i]);
      os << buf;
    }
}

/// Writes "t,h1,h2,margin" rows.
inline void write_h1_h2_csv(std::ostream& os, const H1H2Comparison& cmp) {
  os << "t,h1,h2,margin\n";
  char buf[160];
  for (const auto& r : cmp.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", r.t, r.h1, r.h2, r.margin);
    os << buf;
  }
}

}  // namespace gevrey
