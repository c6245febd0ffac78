#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gevrey/errors.hpp"
#include "gevrey/radius_bounds.hpp"
#include "gevrey/spectral_field.hpp"
#include "gevrey/wave_solver.hpp"

namespace gevrey {

/// profile[k] = max |u_j| over modes with round(|j'|) = k, j' the first m components.
inline std::vector<double> shell_profile(const SpectralField& field, int m) {
  const Lattice& lat = field.lattice();
  if (m < 1 || m > lat.n()) throw ParameterError("shell_profile: split m must lie in [1, n]");
  const auto kmax = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(m)) * lat.N()));
  std::vector<double> profile(kmax + 1, 0.0);
  for (std::size_t f = 0; f < lat.size(); ++f) {
    double r2 = 0.0;
    for (int i = 0; i < m; ++i) r2 += static_cast<double>(lat.component(f, i)) * lat.component(f, i);
    const auto k = static_cast<std::size_t>(std::lround(std::sqrt(r2)));
    profile[k] = std::max(profile[k], std::abs(field[f]));
  }
  return profile;
}

enum class FitModel {
  line,       ///< log|u_k| = a - rho k
  prefactor,  ///< log|u_k| = a + beta log k - rho k
};

enum class FitStatus { ok, indeterminate, not_analytic };

inline const char* to_string(FitStatus s) {
  switch (s) {
    case FitStatus::ok: return "ok";
    case FitStatus::indeterminate: return "indeterminate";
    case FitStatus::not_analytic: return "not_analytic";
  }
  return "?";
}

struct FitOptions {
  double noise_floor = 1e-13;  ///< relative to the largest shell value
  int min_band = 8;
  int k_min = 2;
  int k_max = -1;  ///< -1: up to the floor
  FitModel model = FitModel::prefactor;
};

/// Decay-rate fit of a shell profile.
struct DecayFit {
  FitStatus status = FitStatus::indeterminate;
  double rho = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double beta = 0.0;  ///< algebraic prefactor exponent (prefactor model)
  int k_lo = 0;
  int k_hi = 0;
  int used = 0;  ///< shells entering the fit
  double residual = std::numeric_limits<double>::quiet_NaN();  ///< RMS in log space
  bool floor_hit = false;

  bool ok() const noexcept { return status == FitStatus::ok; }
};

namespace detail {

/// Least squares by modified Gram-Schmidt on the columns of X.
inline std::vector<double> least_squares(std::vector<std::vector<double>> X, std::vector<double> y) {
  const std::size_t p = X.size();
  const std::size_t n = y.size();
  std::vector<std::vector<double>> R(p, std::vector<double>(p, 0.0));
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      double d = 0.0;
      for (std::size_t r = 0; r < n; ++r) d += X[i][r] * X[j][r];
      R[i][j] = d;
      for (std::size_t r = 0; r < n; ++r) X[j][r] -= d * X[i][r];
    }
    double nrm = 0.0;
    for (double v : X[j]) nrm += v * v;
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) throw ParameterError("least_squares: rank-deficient design");
    R[j][j] = nrm;
    for (double& v : X[j]) v /= nrm;
  }
  std::vector<double> qty(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double d = 0.0;
    for (std::size_t r = 0; r < n; ++r) d += X[j][r] * y[r];
    qty[j] = d;
  }
  std::vector<double> c(p, 0.0);
  for (std::size_t j = p; j-- > 0;) {
    double acc = qty[j];
    for (std::size_t i = j + 1; i < p; ++i) acc -= R[j][i] * c[i];
    c[j] = acc / R[j][j];
  }
  return c;
}

}  // namespace detail

/// Fits the exponential decay of a shell profile.
///
/// The band runs from k_min to the last shell above noise_floor * max, or to
/// k_max. Shells inside the band at or below the floor are skipped, which
/// handles spectra supported on odd shells only.
inline DecayFit fit_profile(const std::vector<double>& profile, const FitOptions& opt = {}) {
  if (opt.k_min < 1 && opt.model == FitModel::prefactor)
    throw ParameterError("fit_radius: the prefactor model needs k_min >= 1");
  if (opt.k_min < 0 || opt.min_band < 3) throw ParameterError("fit_radius: need k_min >= 0 and min_band >= 3");
  DecayFit fit;
  const double top = profile.empty() ? 0.0 : *std::max_element(profile.begin(), profile.end());
  if (!(top > 0.0)) return fit;
  const double floor = opt.noise_floor * top;
  int last = -1;
  for (int k = static_cast<int>(profile.size()) - 1; k >= 0; --k)
    if (profile[static_cast<std::size_t>(k)] > floor) {
      last = k;
      break;
    }
  int hi = last;
  if (opt.k_max >= 0) hi = std::min(hi, opt.k_max);
  fit.floor_hit = last < static_cast<int>(profile.size()) - 1 && (opt.k_max < 0 || last < opt.k_max);
  fit.k_lo = opt.k_min;
  fit.k_hi = hi;
  std::vector<double> ks;
  std::vector<double> ys;
  for (int k = opt.k_min; k <= hi; ++k) {
    const double v = profile[static_cast<std::size_t>(k)];
    if (v > floor) {
      ks.push_back(k);
      ys.push_back(std::log(v));
    }
  }
  fit.used = static_cast<int>(ks.size());
  if (fit.used < opt.min_band) return fit;
  fit.k_lo = static_cast<int>(ks.front());
  fit.k_hi = static_cast<int>(ks.back());

  std::vector<std::vector<double>> X;
  X.emplace_back(ks.size(), 1.0);
  if (opt.model == FitModel::prefactor) {
    std::vector<double> lk(ks.size());
    for (std::size_t i = 0; i < ks.size(); ++i) lk[i] = std::log(ks[i]);
    X.push_back(std::move(lk));
  }
  X.push_back(ks);
  const auto c = detail::least_squares(X, ys);
  fit.intercept = c.front();
  fit.rho = -c.back();
  if (opt.model == FitModel::prefactor) fit.beta = c[1];
  double ss = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    double pred = fit.intercept - fit.rho * ks[i];
    if (opt.model == FitModel::prefactor) pred += fit.beta * std::log(ks[i]);
    ss += (ys[i] - pred) * (ys[i] - pred);
  }
  fit.residual = std::sqrt(ss / static_cast<double>(ks.size()));
  fit.status = fit.rho > 0.0 ? FitStatus::ok : FitStatus::not_analytic;
  return fit;
}

inline DecayFit fit_radius(const SpectralField& field, int m, const FitOptions& opt = {}) {
  return fit_profile(shell_profile(field, m), opt);
}

/// Fitted radii along a run.
struct MeasuredSeries {
  TauCurve curve;               ///< label "measured", ok fits only
  std::vector<double> times;    ///< every snapshot time
  std::vector<DecayFit> fits;   ///< one per snapshot
  int omitted = 0;              ///< snapshots without an ok fit
};

inline MeasuredSeries measured_tau_series(const std::vector<WaveState>& snapshots, int m, const FitOptions& opt = {}) {
  MeasuredSeries out;
  out.curve.label = "measured";
  for (const auto& s : snapshots) {
    const DecayFit fit = fit_radius(s.u, m, opt);
    out.times.push_back(s.t);
    out.fits.push_back(fit);
    if (fit.ok())
      out.curve.push(s.t, std::log(fit.rho));
    else
      ++out.omitted;
  }
  return out;
}

inline MeasuredSeries measured_tau_series(const RunRecord& record, int m, const FitOptions& opt = {}) {
  return measured_tau_series(record.snapshots, m, opt);
}

/// Outcome of comparing a measured radius with one bound curve.
struct LowerBoundCheck {
  std::string label;
  int compared = 0;
  int violations = 0;
  std::optional<double> first_violation;
  double worst_ratio = 0.0;  ///< max bound / measured over compared samples
};

/// Checks measured(t) * (1 + rel_tol) >= bound(t) at common sample times.
inline LowerBoundCheck check_lower_bound(const TauCurve& measured, const TauCurve& bound, double rel_tol) {
  LowerBoundCheck out;
  out.label = bound.label;
  std::size_t j = 0;
  for (std::size_t i = 0; i < measured.t.size(); ++i) {
    const double t = measured.t[i];
    while (j < bound.t.size() && bound.t[j] < t - 1e-9 * std::max(1.0, t)) ++j;
    if (j == bound.t.size()) break;
    if (std::abs(bound.t[j] - t) > 1e-9 * std::max(1.0, t)) continue;
    ++out.compared;
    const double ratio = std::exp(bound.log_tau[j] - measured.log_tau[i]);
    out.worst_ratio = std::max(out.worst_ratio, ratio);
    if (ratio > 1.0 + rel_tol) {
      ++out.violations;
      if (!out.first_violation) out.first_violation = t;
    }
  }
  return out;
}

/// Writes "t,rho,residual,k_lo,k_hi,floor_hit" rows; rho is empty for failed fits.
inline void write_fit_csv(std::ostream& os, const MeasuredSeries& m) {
  os << "t,rho,residual,k_lo,k_hi,floor_hit\n";
  char buf[160];
  for (std::size_t i = 0; i < m.fits.size(); ++i) {
    const DecayFit& f = m.fits[i];
    if (f.ok())
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d,%d,%d\n", m.times[i], f.rho, f.residual, f.k_lo, f.k_hi,
                    f.floor_hit ? 1 : 0);
    else
      std::snprintf(buf, sizeof buf, "%.17g,,,%d,%d,%d\n", m.times[i], f.k_lo, f.k_hi, f.floor_hit ? 1 : 0);
    os << buf;
  }
}

}  // namespace gevrey
