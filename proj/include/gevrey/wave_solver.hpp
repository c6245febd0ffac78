#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gevrey/elliptic.hpp"
#include "gevrey/errors.hpp"
#include "gevrey/nonlinearity.hpp"
#include "gevrey/norms.hpp"
#include "gevrey/spectral_field.hpp"
#include "gevrey/transforms.hpp"

namespace gevrey {

/// (u, u_t) at time t.
struct WaveState {
  SpectralField u;
  SpectralField v;
  double t = 0.0;

  void validate() const {
    if (!(u.lattice() == v.lattice())) throw ParameterError("wave state: u and u_t live on different lattices");
    u.require_real("wave state u");
    v.require_real("wave state u_t");
  }
};

enum class Integrator { leapfrog, rk4 };

/// Time stepping for u_tt - nu Lap u + lambda u + f = 0 (standard form: nu = lambda = 1).
struct SolverConfig {
  double dt = 1e-3;
  double T = 1.0;
  Integrator integrator = Integrator::leapfrog;
  double nu = 1.0;
  double lambda_coef = 1.0;
  bool standard_form = true;
  /// Stability constant: dt * max_j omega_j must not exceed it.
  double c_cfl = 2.0;

  double wave_speed2() const noexcept { return standard_form ? 1.0 : nu; }
  double mass() const noexcept { return standard_form ? 1.0 : lambda_coef; }

  double stability_bound(const Lattice& lat) const {
    const double kmax2 = static_cast<double>(lat.n()) * lat.N() * lat.N();
    return c_cfl / std::sqrt(wave_speed2() * kmax2 + mass());
  }

  void validate(const Lattice& lat) const {
    if (!(dt > 0.0)) throw ParameterError("solver: dt must be > 0");
    if (!(T >= 0.0)) throw ParameterError("solver: T must be >= 0");
    if (!standard_form && (!(nu >= 0.0) || !(lambda_coef > 0.0)))
      throw ParameterError("solver: need nu >= 0 and lambda > 0");
    if (c_cfl > 2.0) throw ParameterError("solver: c_cfl must not exceed 2");
    if (dt > stability_bound(lat))
      throw ParameterError("solver: dt=" + std::to_string(dt) + " exceeds the stability bound " +
                           std::to_string(stability_bound(lat)));
  }
};

namespace detail {

inline std::vector<double> frequencies_squared(const Lattice& lat, const SolverConfig& cfg) {
  std::vector<double> w2(lat.size());
  for (std::size_t f = 0; f < lat.size(); ++f) w2[f] = cfg.wave_speed2() * lat.j_squared(f) + cfg.mass();
  return w2;
}

}  // namespace detail

/// Right-hand side of the Galerkin system u_j'' = -omega_j^2 u_j - (P_N f)_j.
class GalerkinSystem {
 public:
  GalerkinSystem(const Lattice& lat, NonlinearitySpec spec, SolverConfig cfg)
      : spec_(std::move(spec)),
        cfg_(cfg),
        omega2_(detail::frequencies_squared(lat, cfg)),
        oversample_(nonlinear_oversample(spec_, lat.N())),
        linear_(spec_.is_zero()) {}

  SpectralField acceleration(const SpectralField& u, double t) const {
    SpectralField a(u.lattice());
    if (!linear_) a = nonlinear_term(spec_, u, t, oversample_);
    for (std::size_t f = 0; f < a.size(); ++f) a[f] = -omega2_[f] * u[f] - a[f];
    return a;
  }

  const SolverConfig& config() const noexcept { return cfg_; }
  const NonlinearitySpec& nonlinearity() const noexcept { return spec_; }

 private:
  NonlinearitySpec spec_;
  SolverConfig cfg_;
  std::vector<double> omega2_;
  double oversample_;
  bool linear_;
};

namespace detail {

inline void axpy(SpectralField& y, double a, const SpectralField& x) {
  for (std::size_t f = 0; f < y.size(); ++f) y[f] += a * x[f];
}

inline WaveState leapfrog(const GalerkinSystem& sys, const WaveState& s, const SpectralField& acc, double dt,
                          SpectralField* acc_out) {
  WaveState out = s;
  axpy(out.v, 0.5 * dt, acc);
  axpy(out.u, dt, out.v);
  out.t = s.t + dt;
  SpectralField a1 = sys.acceleration(out.u, out.t);
  axpy(out.v, 0.5 * dt, a1);
  if (acc_out) *acc_out = std::move(a1);
  return out;
}

inline WaveState rk4(const GalerkinSystem& sys, const WaveState& s, double dt) {
  const SpectralField k1u = s.v;
  const SpectralField k1v = sys.acceleration(s.u, s.t);
  SpectralField u2 = s.u;
  axpy(u2, 0.5 * dt, k1u);
  SpectralField k2u = s.v;
  axpy(k2u, 0.5 * dt, k1v);
  const SpectralField k2v = sys.acceleration(u2, s.t + 0.5 * dt);
  SpectralField u3 = s.u;
  axpy(u3, 0.5 * dt, k2u);
  SpectralField k3u = s.v;
  axpy(k3u, 0.5 * dt, k2v);
  const SpectralField k3v = sys.acceleration(u3, s.t + 0.5 * dt);
  SpectralField u4 = s.u;
  axpy(u4, dt, k3u);
  SpectralField k4u = s.v;
  axpy(k4u, dt, k3v);
  const SpectralField k4v = sys.acceleration(u4, s.t + dt);
  WaveState out = s;
  for (std::size_t f = 0; f < s.u.size(); ++f) {
    out.u[f] += dt / 6.0 * (k1u[f] + 2.0 * k2u[f] + 2.0 * k3u[f] + k4u[f]);
    out.v[f] += dt / 6.0 * (k1v[f] + 2.0 * k2v[f] + 2.0 * k3v[f] + k4v[f]);
  }
  out.t = s.t + dt;
  return out;
}

inline void check_blowup(const WaveState& s, double limit = 1e12) {
  for (std::size_t f = 0; f < s.u.size(); ++f) {
    const double a = std::abs(s.u[f]);
    if (!(a <= limit) || !std::isfinite(std::abs(s.v[f])))
      throw DivergenceError("solver: blow-up detected at t=" + std::to_string(s.t), s.t);
  }
}

}  // namespace detail

/// Advances the state by one step of cfg.dt.
inline WaveState step(const WaveState& state, const NonlinearitySpec& spec, const SolverConfig& cfg) {
  state.validate();
  cfg.validate(state.u.lattice());
  const GalerkinSystem sys(state.u.lattice(), spec, cfg);
  WaveState out = cfg.integrator == Integrator::leapfrog
                      ? detail::leapfrog(sys, state, sys.acceleration(state.u, state.t), cfg.dt, nullptr)
                      : detail::rk4(sys, state, cfg.dt);
  detail::check_blowup(out);
  return out;
}

/// Antiderivative F(t, x, u) with dF/du = f, evaluated pointwise.
inline GridField potential_density(const NonlinearitySpec& spec, const GridField& u, double t) {
  GridField out{u.lattice, u.points_per_dim, std::vector<double>(u.values.size())};
  std::visit(
      [&](const auto& form) {
        using F = std::decay_t<decltype(form)>;
        if constexpr (std::is_same_v<F, Monomial>) {
          for (std::size_t s = 0; s < u.values.size(); ++s)
            out.values[s] = form.sign * std::pow(u.values[s], form.k + 1) / (form.k + 1);
        } else if constexpr (std::is_same_v<F, PowerSeries>) {
          for (std::size_t s = 0; s < u.values.size(); ++s) {
            double acc = 0.0;
            double pw = u.values[s];
            for (std::size_t k = 0; k < form.a.size(); ++k, pw *= u.values[s])
              acc += form.a[k](t) * pw / static_cast<double>(k + 1);
            out.values[s] = acc;
          }
        } else if constexpr (std::is_same_v<F, ExpCubic>) {
          for (std::size_t s = 0; s < u.values.size(); ++s)
            out.values[s] = 0.5 * std::expm1(u.values[s] * u.values[s]);
        } else {
          const int n = u.lattice.n();
          for (std::size_t s = 0; s < u.values.size(); ++s) {
            double acc = 0.0;
            for (const auto& mode : form.modes) {
              double phase = 0.0;
              for (int i = 0; i < n; ++i) phase += mode.j[static_cast<std::size_t>(i)] * u.coordinate(s, i);
              double poly = 0.0;
              double pw = u.values[s];
              for (std::size_t k = 0; k < mode.a.size(); ++k, pw *= u.values[s])
                poly += mode.a[k](t) * pw / static_cast<double>(k + 1);
              acc += std::cos(phase) * poly;
            }
            out.values[s] = acc;
          }
        }
      },
      spec.form);
  return out;
}

/// E = 1/2 sum_j (|v_j|^2 + omega_j^2 |u_j|^2) + mean over the torus of F(u).
/// Conserved by the continuum flow when f does not depend on t.
inline double energy(const WaveState& s, const NonlinearitySpec& spec, const SolverConfig& cfg) {
  const Lattice& lat = s.u.lattice();
  double quad = 0.0;
  for (std::size_t f = 0; f < lat.size(); ++f)
    quad += std::norm(s.v[f]) + (cfg.wave_speed2() * lat.j_squared(f) + cfg.mass()) * std::norm(s.u[f]);
  quad *= 0.5;
  if (spec.is_zero()) return quad;
  const int K = spec.polynomial_degree();
  double oversample = 2.0;
  if (K >= 0) {
    const int degree = (K + 1) * lat.N() + spec.spatial_band();
    oversample = std::max(1.0, static_cast<double>(2 * degree + 2) / static_cast<double>(lat.side()));
  }
  const GridField g = to_grid(s.u, oversample);
  const GridField pot = potential_density(spec, g, s.t);
  return quad + grid_mean(pot, [](double x) { return x; });
}

/// Energy of u_tt - Lap u + u + sign u^k = 0 in the spectral normalization.
inline double energy_KG(const WaveState& s, int sign, int k = 3) {
  return energy(s, NonlinearitySpec::monomial(sign, k), SolverConfig{});
}

/// Everything a run produces.
struct RunRecord {
  NormSeries hp{"Hp", {}};
  NormSeries hp1{"Hp_plus_1", {}};
  NormSeries ut_hp{"ut_Hp", {}};
  NormSeries l1{"l1", {}};
  std::vector<NormSample> energy;  ///< signed, so kept outside NormSeries
  std::vector<WaveState> snapshots;
  WaveState final_state;
  long steps = 0;
  double dt = 0.0;

  std::vector<const NormSeries*> series() const { return {&hp, &hp1, &ut_hp, &l1}; }
};

struct RunOptions {
  double p = 1.0;                ///< Sobolev order of the recorded norms
  long sample_stride = 1;        ///< steps between norm samples
  long snapshot_stride = 0;      ///< steps between retained snapshots (0: none)
  std::vector<std::function<void(const WaveState&)>> observers;
  std::ostream* log = nullptr;   ///< receives "t=.. E=.. Hp=.." lines
};

/// Integrates from `initial` to cfg.T. The step count is ceil(T / dt) and the
/// step is shortened uniformly to land on T. Samples (and snapshots when
/// enabled) are taken at t = 0, every stride, and at T. On a divergence the
/// samples gathered so far remain in `record`.
inline void run(const WaveState& initial, const NonlinearitySpec& spec, const SolverConfig& cfg,
                const RunOptions& opts, RunRecord& record) {
  initial.validate();
  const Lattice& lat = initial.u.lattice();
  cfg.validate(lat);
  const long steps = cfg.T > 0.0 ? static_cast<long>(std::ceil(cfg.T / cfg.dt - 1e-9)) : 0;
  const double dt = steps > 0 ? cfg.T / static_cast<double>(steps) : cfg.dt;
  record.steps = steps;
  record.dt = dt;
  const GalerkinSystem sys(lat, spec, cfg);
  const double e0 = energy(initial, spec, cfg);

  auto sample = [&](const WaveState& s, bool snapshot) {
    const double e = energy(s, spec, cfg);
    if (!std::isfinite(e) || (e0 != 0.0 && std::abs(e) > 1e12 * std::abs(e0)))
      throw DivergenceError("solver: energy blow-up at t=" + std::to_string(s.t), s.t);
    const double hp = norm_Hp(s.u, opts.p);
    record.hp.push(s.t, hp);
    record.hp1.push(s.t, norm_Hp(s.u, opts.p + 1.0));
    record.ut_hp.push(s.t, norm_Hp(s.v, opts.p));
    record.l1.push(s.t, norm_l1(s.u));
    record.energy.push_back({s.t, e});
    if (snapshot) record.snapshots.push_back(s);
    for (const auto& obs : opts.observers) obs(s);
    if (opts.log) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "t=%.6f E=%.12e Hp=%.12e\n", s.t, e, hp);
      *opts.log << buf;
    }
  };

  WaveState state = initial;
  sample(state, opts.snapshot_stride > 0);
  SpectralField acc = sys.acceleration(state.u, state.t);
  for (long i = 1; i <= steps; ++i) {
    if (cfg.integrator == Integrator::leapfrog) {
      state = detail::leapfrog(sys, state, acc, dt, &acc);
    } else {
      state = detail::rk4(sys, state, dt);
    }
    state.t = static_cast<double>(i) * dt;
    detail::check_blowup(state);
    const bool at_sample = (i % std::max(1L, opts.sample_stride) == 0) || i == steps;
    const bool at_snapshot = opts.snapshot_stride > 0 && (i % opts.snapshot_stride == 0 || i == steps);
    if (at_sample || at_snapshot) sample(state, at_snapshot);
  }
  record.final_state = state;
}

inline RunRecord run(const WaveState& initial, const NonlinearitySpec& spec, const SolverConfig& cfg,
                     const RunOptions& opts = {}) {
  RunRecord record;
  run(initial, spec, cfg, opts, record);
  return record;
}

/// Traveling sn wave u = A sn(kappa (x_1 - c t), k) of u_tt - nu u_xx + lambda u - u^3 = 0,
/// with A^2 = 2 k^2 lambda / (1 + k^2) and kappa^2 = lambda / ((1 + k^2)(c^2 - nu)).
struct SnWave {
  EllipticModulus modulus{0.0};
  double c = 1.0;
  double nu = 0.5;
  double lambda = 1.0;
  int L = 1;
  double kappa = 1.0;
  double amplitude = 0.0;
  /// Distance from the real axis to the nearest pole, K'(k) / kappa (+inf for k = 0).
  double rho_exact = 0.0;
  WaveState initial;

  double profile(double xi) const { return amplitude * jacobi_sn(kappa * xi, modulus); }

  /// Exact u(t) sampled on M points per dimension.
  GridField evaluate(double t, std::size_t M) const {
    const Lattice& lat = initial.u.lattice();
    std::size_t total = 1;
    for (int i = 0; i < lat.n(); ++i) total *= M;
    GridField g{lat, M, std::vector<double>(total)};
    for (std::size_t s = 0; s < total; ++s) g.values[s] = profile(g.coordinate(s, 0) - c * t);
    return g;
  }

  SolverConfig solver_config(double dt, double T) const {
    SolverConfig cfg;
    cfg.dt = dt;
    cfg.T = T;
    cfg.standard_form = false;
    cfg.nu = nu;
    cfg.lambda_coef = lambda;
    return cfg;
  }

  /// Focusing cubic term of the equation in the solver's sign convention (f = -u^3).
  static NonlinearitySpec nonlinearity() { return NonlinearitySpec::monomial(-1, 3); }

  /// Time after which the profile has moved by one spatial period 2 pi / L.
  double temporal_period() const { return 2.0 * M_PI / (static_cast<double>(L) * std::abs(c)); }
};

/// lambda for which the sn wave closes on the torus with winding L:
/// 4 K(k) L = 2 pi kappa.
inline double sn_admissible_lambda(EllipticModulus k, double c, double nu, int L) {
  const double kappa = 2.0 * elliptic_K(k) * L / M_PI;
  return kappa * kappa * (1.0 + k.k() * k.k()) * (c * c - nu);
}

/// Builds the traveling wave on `lattice`, solving for lambda unless one is
/// given. A given lambda that does not close the wave on the torus raises
/// PeriodicityFitError carrying the admissible value.
inline SnWave exact_sn_wave(EllipticModulus modulus, double c, double nu, int L, const Lattice& lattice,
                            std::optional<double> lambda = std::nullopt) {
  if (!(nu > 0.0) || !(c * c > nu)) throw ParameterError("exact_sn_wave: requires c^2 > nu > 0");
  if (L < 1) throw ParameterError("exact_sn_wave: winding L must be >= 1");
  if (modulus.k() >= 1.0) throw ParameterError("exact_sn_wave: modulus 1 has no periodic wave");
  const double admissible = sn_admissible_lambda(modulus, c, nu, L);
  if (lambda && std::abs(*lambda - admissible) > 1e-12 * admissible)
    throw PeriodicityFitError("exact_sn_wave: lambda=" + std::to_string(*lambda) +
                                  " does not close the wave on the torus; nearest admissible lambda=" +
                                  std::to_string(admissible),
                              admissible);
  SnWave w;
  w.modulus = modulus;
  w.c = c;
  w.nu = nu;
  w.L = L;
  w.lambda = admissible;
  const double k2 = modulus.k() * modulus.k();
  w.kappa = std::sqrt(admissible / ((1.0 + k2) * (c * c - nu)));
  w.amplitude = std::sqrt(2.0 * k2 * admissible / (1.0 + k2));
  w.rho_exact = elliptic_Kprime(modulus) / w.kappa;

  const std::size_t M = grid_points(lattice.N(), 2.0);
  const GridField g = w.evaluate(0.0, M);
  WaveState s{from_grid(g, lattice), SpectralField(lattice), 0.0};
  s.v = differentiate(s.u, 0);
  s.v *= -c;
  s.v.symmetrize();
  w.initial = std::move(s);
  return w;
}

/// max_x |(c^2 - nu) U'' + lambda U - U^3| of the spectral profile on its lattice.
inline double sn_wave_residual(const SnWave& w) {
  const SpectralField& u = w.initial.u;
  SpectralField r = differentiate(u, 0, 2);
  r *= (w.c * w.c - w.nu);
  SpectralField lin = u;
  lin *= w.lambda;
  r += lin;
  r -= dealiased_power(u, 3);
  r.symmetrize();
  return to_grid(r, 1.0).max_abs();
}

}  // namespace gevrey
