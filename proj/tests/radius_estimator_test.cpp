#include <cmath>
#include <complex>
#include <random>
#include <sstream>
#include <vector>

#include "gtest/gtest.h"

#include "gevrey/radius_estimator.hpp"
#include "test_support.hpp"

namespace gevrey {
namespace {

SpectralField geometric_field(const Lattice& lat, double rho) {
  SpectralField u(lat);
  for (int k = -lat.N(); k <= lat.N(); ++k) u.at({k}) = std::exp(-rho * std::abs(k));
  return u;
}

std::vector<double> synthetic_profile(int kmax, double beta, double rho) {
  std::vector<double> p(static_cast<std::size_t>(kmax) + 1);
  for (int k = 0; k <= kmax; ++k) p[static_cast<std::size_t>(k)] = std::pow(1.0 + k, beta) * std::exp(-rho * k);
  return p;
}

// Least squares of log p(k) on {1, log k, k} over [lo, hi] via normal equations and Cramer's rule.
double oracle_prefactor_rho(const std::vector<double>& p, int lo, int hi) {
  double S[3][3] = {};
  double b[3] = {};
  for (int k = lo; k <= hi; ++k) {
    const double x[3] = {1.0, std::log(static_cast<double>(k)), static_cast<double>(k)};
    const double y = std::log(p[static_cast<std::size_t>(k)]);
    for (int i = 0; i < 3; ++i) {
      b[i] += x[i] * y;
      for (int j = 0; j < 3; ++j) S[i][j] += x[i] * x[j];
    }
  }
  auto det = [](const double M[3][3]) {
    return M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1]) - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0]) +
           M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]);
  };
  double T[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) T[i][j] = j == 2 ? b[i] : S[i][j];
  return -det(T) / det(S);
}

TEST(ShellProfile, Examples) {
  const Lattice lat2(2, 1, 8);
  SpectralField u(lat2);
  u.at({3, 5}) = std::complex<double>(0.3, 0.4);
  const auto p = shell_profile(u, 1);
  for (std::size_t k = 0; k < p.size(); ++k) EXPECT_DOUBLE_EQ(p[k], k == 3 ? 0.5 : 0.0);

  for (double v : shell_profile(SpectralField(lat2), 2)) EXPECT_EQ(v, 0.0);

  std::mt19937_64 rng(4);
  const Lattice lat(1, 1, 12);
  SpectralField w(lat);
  std::normal_distribution<double> g;
  for (int k = -12; k <= 12; ++k) w.at({k}) = std::complex<double>(g(rng), g(rng));
  const auto q = shell_profile(w, 1);
  for (int k = 0; k <= 12; ++k)
    EXPECT_EQ(q[static_cast<std::size_t>(k)], std::max(std::abs(w.at({k})), std::abs(w.at({-k}))));
  EXPECT_THROW(shell_profile(w, 2), ParameterError);
}

TEST(FitRadius, PureExponential) {
  const Lattice lat(1, 1, 64);
  for (FitModel model : {FitModel::line, FitModel::prefactor}) {
    FitOptions opt;
    opt.model = model;
    const DecayFit fit = fit_radius(geometric_field(lat, 0.5), 1, opt);
    ASSERT_TRUE(fit.ok());
    EXPECT_NEAR(fit.rho, 0.5, 1e-10);
    EXPECT_LT(fit.residual, 1e-10);
    EXPECT_LT(fit.k_lo, fit.k_hi);
    EXPECT_EQ(fit.k_lo, 2);
    EXPECT_TRUE(fit.floor_hit);
  }
}

TEST(FitRadius, PolynomialPrefactor) {
  const auto p = synthetic_profile(80, 3.0, 0.3);
  FitOptions opt;
  opt.k_min = 10;
  opt.k_max = 60;
  const DecayFit fit = fit_profile(p, opt);
  ASSERT_TRUE(fit.ok());
  EXPECT_EQ(fit.k_lo, 10);
  EXPECT_EQ(fit.k_hi, 60);
  EXPECT_NEAR(fit.rho, oracle_prefactor_rho(p, 10, 60), 1e-9);
  EXPECT_LT(std::abs(fit.rho - 0.3) / 0.3, 0.03);
  EXPECT_FALSE(fit.floor_hit);
}

TEST(FitRadius, SnWaveMatchesPoleDistance) {
  const Lattice lat(1, 1, 256);
  const SnWave w = exact_sn_wave(EllipticModulus(0.9), 1.0, 0.5, 1, lat);
  const DecayFit fit = fit_radius(w.initial.u, 1);
  ASSERT_TRUE(fit.ok());
  EXPECT_LT(std::abs(fit.rho - w.rho_exact) / w.rho_exact, 0.02) << fit.rho << " vs " << w.rho_exact;
}

TEST(FitRadius, IndeterminateAndNotAnalytic) {
  const Lattice lat(1, 1, 32);
  EXPECT_EQ(fit_radius(SpectralField(lat), 1).status, FitStatus::indeterminate);
  SpectralField few(lat);
  for (int k = -4; k <= 4; ++k) few.at({k}) = std::exp(-0.5 * std::abs(k));
  const DecayFit f = fit_radius(few, 1);
  EXPECT_EQ(f.status, FitStatus::indeterminate);
  EXPECT_FALSE(f.ok());

  FitOptions line;
  line.model = FitModel::line;
  const DecayFit g = fit_radius(geometric_field(lat, -0.1), 1, line);
  EXPECT_EQ(g.status, FitStatus::not_analytic);
  EXPECT_STREQ(to_string(g.status), "not_analytic");
}

TEST(FitRadius, ReconstructionConsistency) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> U(0.1, 1.0);
  const Lattice lat(1, 1, 96);
  for (int trial = 0; trial < 20; ++trial) {
    const double rho = U(rng);
    const double beta = 4.0 * U(rng) - 2.0;
    SpectralField u(lat);
    std::normal_distribution<double> noise(0.0, 0.05);
    for (int k = 0; k <= lat.N(); ++k) {
      const double a = std::pow(1.0 + k, beta) * std::exp(-rho * k) * std::exp(noise(rng));
      u.at({k}) = a;
      u.at({-k}) = a;
    }
    const DecayFit fit = fit_radius(u, 1);
    ASSERT_TRUE(fit.ok());
    SpectralField lifted = u;
    for (int k = -lat.N(); k <= lat.N(); ++k) lifted.at({k}) *= std::exp(fit.rho * std::abs(k));
    FitOptions opt;
    opt.k_max = fit.k_hi;
    const DecayFit re = fit_radius(lifted, 1, opt);
    EXPECT_LE(std::abs(re.rho), 0.05) << "trial " << trial;
  }
}

TEST(FitRadius, ResolutionMonotonicity) {
  const Lattice fine(1, 1, 512);
  for (double k : {0.9, 0.95, 0.99}) {
    const SnWave w = exact_sn_wave(EllipticModulus(k), 1.0, 0.5, 1, fine);
    DecayFit prev;
    for (int N : {64, 128, 256}) {
      const DecayFit fit = fit_radius(resample(w.initial.u, Lattice(1, 1, N)), 1);
      ASSERT_TRUE(fit.ok()) << "k=" << k << " N=" << N;
      if (prev.ok()) {
        EXPECT_GE(fit.used, prev.used);
        EXPECT_GE(fit.k_hi, prev.k_hi);
        EXPECT_LE(std::abs(fit.rho - prev.rho), std::max(fit.residual, prev.residual)) << "k=" << k << " N=" << N;
      }
      prev = fit;
    }
  }
}

TEST(MeasuredSeries, FrozenFieldIsConstant) {
  const Lattice lat(1, 1, 48);
  std::vector<WaveState> snaps;
  for (int i = 0; i < 5; ++i) snaps.push_back({geometric_field(lat, 0.7), SpectralField(lat), 0.5 * i});
  const MeasuredSeries m = measured_tau_series(snaps, 1);
  EXPECT_EQ(m.omitted, 0);
  ASSERT_EQ(m.curve.tau.size(), 5u);
  for (double r : m.curve.tau) EXPECT_NEAR(r, 0.7, 1e-10);
  EXPECT_EQ(m.curve.label, "measured");
}

TEST(MeasuredSeries, OmitsIndeterminateSnapshots) {
  const Lattice lat(1, 1, 48);
  std::vector<WaveState> snaps{{geometric_field(lat, 0.7), SpectralField(lat), 0.0},
                               {SpectralField(lat), SpectralField(lat), 1.0}};
  const MeasuredSeries m = measured_tau_series(snaps, 1);
  EXPECT_EQ(m.omitted, 1);
  EXPECT_EQ(m.curve.t.size(), 1u);
  EXPECT_EQ(m.fits.size(), 2u);
  std::ostringstream os;
  write_fit_csv(os, m);
  const std::string csv = os.str();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,rho,residual,k_lo,k_hi,floor_hit");
  EXPECT_NE(csv.find("\n1,,,"), std::string::npos);
}

TEST(MeasuredSeries, LinearTravellingWaveKeepsItsRadius) {
  const Lattice lat(1, 1, 32);
  WaveState s0{SpectralField(lat), SpectralField(lat), 0.0};
  for (int k = 1; k <= lat.N(); ++k) {
    const double a = std::exp(-0.6 * k);
    const double w = std::sqrt(k * k + 1.0);
    s0.u.at({k}) = a;
    s0.u.at({-k}) = a;
    s0.v.at({k}) = std::complex<double>(0.0, -w * a);
    s0.v.at({-k}) = std::complex<double>(0.0, w * a);
  }
  SolverConfig cfg;
  cfg.T = 5.0;
  RunOptions opts;
  opts.snapshot_stride = 500;
  const RunRecord rec = run(s0, NonlinearitySpec::zero(), cfg, opts);
  const MeasuredSeries m = measured_tau_series(rec, 1);
  ASSERT_GE(m.curve.tau.size(), 5u);
  EXPECT_EQ(m.omitted, 0);
  for (double r : m.curve.tau) EXPECT_NEAR(r, 0.6, 1e-4);
}

TEST(LowerBound, CheckCountsViolations) {
  TauCurve measured;
  TauCurve bound;
  bound.label = "thm1";
  for (int i = 0; i <= 4; ++i) {
    measured.push(i, std::log(1.0));
    bound.push(0.5 * i, std::log(i == 4 ? 1.5 : 0.9));
  }
  const LowerBoundCheck c = check_lower_bound(measured, bound, 0.02);
  EXPECT_EQ(c.label, "thm1");
  EXPECT_EQ(c.compared, 3);
  EXPECT_EQ(c.violations, 1);
  ASSERT_TRUE(c.first_violation.has_value());
  EXPECT_EQ(*c.first_violation, 2.0);
  EXPECT_NEAR(c.worst_ratio, 1.5, 1e-14);

  const LowerBoundCheck ok = check_lower_bound(measured, measured, 0.0);
  EXPECT_EQ(ok.violations, 0);
  EXPECT_EQ(ok.compared, 5);
}

TEST(LowerBound, CubicRunRespectsBounds) {
  const Lattice lat(1, 1, 64);
  WaveState s0{SpectralField(lat), SpectralField(lat), 0.0};
  for (int k = 1; k <= lat.N(); ++k) {
    s0.u.at({k}) = 0.2 * std::exp(-0.8 * k);
    s0.u.at({-k}) = 0.2 * std::exp(-0.8 * k);
  }
  const NonlinearitySpec cubic = NonlinearitySpec::monomial(1, 3);
  SolverConfig cfg;
  cfg.T = 2.0;
  RunOptions opts;
  opts.sample_stride = 10;
  opts.snapshot_stride = 100;
  const RunRecord rec = run(s0, cubic, cfg, opts);
  const MeasuredSeries m = measured_tau_series(rec, 1);
  ASSERT_EQ(m.omitted, 0);
  const BoundInputs in = make_bound_inputs(rec, s0, 1.0, 0.5);
  const MajorisingSeries g = majorising_g(cubic, 1.0, 1);
  for (const TauCurve& b : {tau_theorem1(in, g), tau_theorem3(in, g)}) {
    const LowerBoundCheck c = check_lower_bound(m.curve, b, 0.02);
    EXPECT_GT(c.compared, 0) << b.label;
    EXPECT_EQ(c.violations, 0) << b.label;
  }
}

}  // namespace
}  // namespace gevrey
