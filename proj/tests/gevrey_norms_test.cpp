#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "gtest/gtest.h"

#include "gevrey/norms.hpp"
#include "gevrey/transforms.hpp"
#include "test_support.hpp"

namespace gevrey {
namespace {

using testing::cplx;

SpectralField cosine(const Lattice& lat, int k, double a = 1.0) {
  SpectralField u(lat);
  u.at({k}) += 0.5 * a;
  u.at({-k}) += 0.5 * a;
  return u;
}

TEST(NormHp, Examples) {
  const Lattice lat(1, 1, 4);
  EXPECT_EQ(norm_Hp(SpectralField(lat), 1.0), 0.0);
  EXPECT_NEAR(norm_Hp(testing::single_mode(lat, lat.index(std::vector<int>{1})), 1.0), std::sqrt(2.0), 1e-15);
  SpectralField u(lat);
  u.at({0}) = 3.0;
  u.at({1}) = 1.0;
  u.at({-1}) = 1.0;
  EXPECT_NEAR(norm_Hp(u, 2.0), std::sqrt(17.0), 1e-14);
}

TEST(NormGevreyL2, Examples) {
  const Lattice lat(1, 1, 4);
  const SpectralField e1 = testing::single_mode(lat, lat.index(std::vector<int>{1}));
  EXPECT_NEAR(norm_gevrey_L2(e1, {1.0, std::log(2.0)}), 2.0 * std::sqrt(2.0), 1e-14);
  std::mt19937_64 rng(1);
  const SpectralField u = testing::random_real_field(lat, rng);
  EXPECT_DOUBLE_EQ(norm_gevrey_L2(u, {1.5, 0.0}), norm_Hp(u, 1.5));
}

TEST(NormGevreyL2, PureModeIdentity) {
  const Lattice lat(2, 1, 8);
  for (double tau : {0.0, 0.3, 1.7})
    for (std::size_t f = 0; f < lat.size(); ++f) {
      const SpectralField u = testing::single_mode(lat, f);
      const double j2 = lat.j_squared(f);
      const double jp = std::abs(lat.component(f, 0));
      const double expect = std::pow(1.0 + j2, 0.5) * std::exp(tau * jp);
      EXPECT_NEAR(norm_gevrey_L2(u, {1.0, tau}) / expect, 1.0, 1e-12);
    }
}

TEST(NormGevreyL2, OverflowNamesTheMode) {
  const Lattice lat(1, 1, 4);
  const SpectralField u = cosine(lat, 4);
  try {
    norm_gevrey_L2(u, {1.0, 400.0});
    FAIL() << "expected overflow";
  } catch (const OverflowError& e) {
    EXPECT_NE(std::string(e.what()).find("4"), std::string::npos);
  }
}

TEST(NormGevreyL2, MonotoneInTauAndP) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pick(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Lattice lat(1 + trial % 2, 1, 5);
    const SpectralField u = testing::random_real_field(lat, rng);
    const double p = pick(rng);
    const double tau = pick(rng);
    const double dp = pick(rng);
    const double dt = pick(rng);
    const double base = norm_gevrey_L2(u, {p, tau});
    EXPECT_LE(base, norm_gevrey_L2(u, {p, tau + dt}) * (1.0 + 1e-15));
    EXPECT_LE(base, norm_gevrey_L2(u, {p + dp, tau}) * (1.0 + 1e-15));
  }
}

TEST(NormL1, Examples) {
  const Lattice lat(1, 1, 4);
  EXPECT_EQ(norm_l1(SpectralField(lat)), 0.0);
  EXPECT_DOUBLE_EQ(norm_l1(cosine(lat, 1)), 1.0);
  SpectralField u(lat);
  u.at({0}) = 2.0;
  u.at({3}) = 0.25;
  u.at({-3}) = 0.25;
  EXPECT_DOUBLE_EQ(norm_l1(u), 2.5);
}

TEST(NormGevreyL1, Examples) {
  const Lattice lat(1, 1, 4);
  std::mt19937_64 rng(2);
  const SpectralField r = testing::random_real_field(lat, rng);
  EXPECT_DOUBLE_EQ(norm_gevrey_l1(r, 0.0), norm_l1(r));
  EXPECT_NEAR(norm_gevrey_l1(cosine(lat, 1), 1.0), std::exp(1.0), 1e-15);
  EXPECT_NEAR(norm_gevrey_l1(cosine(lat, 2), 0.5), std::exp(1.0), 1e-15);
}

TEST(PhiJ, Examples) {
  const Lattice lat(1, 1, 3);
  const SpectralField zero(lat);
  SpectralField ut(lat);
  ut.at({0}) = 3.0;
  auto phi = phi_j(zero, ut);
  for (std::size_t f = 0; f < lat.size(); ++f) EXPECT_DOUBLE_EQ(phi[f], f == lat.zero_index() ? 3.0 : 0.0);

  const std::size_t one = lat.index(std::vector<int>{1});
  phi = phi_j(testing::single_mode(lat, one), zero);
  EXPECT_NEAR(phi[one], std::sqrt(2.0), 1e-15);

  const std::size_t two = lat.index(std::vector<int>{2});
  phi = phi_j(testing::single_mode(lat, two), testing::single_mode(lat, two));
  EXPECT_NEAR(phi[two], std::sqrt(6.0), 1e-15);
}

TEST(YL1, Examples) {
  const Lattice lat(1, 1, 3);
  const SpectralField zero(lat);
  EXPECT_EQ(y_l1(zero, zero, 1.0), 0.0);
  std::mt19937_64 rng(4);
  const SpectralField u = testing::random_real_field(lat, rng);
  const SpectralField v = testing::random_real_field(lat, rng);
  double sum = 0.0;
  for (double x : phi_j(u, v)) sum += x;
  EXPECT_NEAR(y_l1(u, v, 0.0), sum, 1e-14 * sum);
  const SpectralField e1 = testing::single_mode(lat, lat.index(std::vector<int>{1}));
  EXPECT_NEAR(y_l1(e1, zero, 1.0), std::exp(1.0) * std::sqrt(2.0), 1e-14);
}

TEST(EnergyY, Examples) {
  const Lattice lat(1, 1, 3);
  const SpectralField zero(lat);
  EXPECT_EQ(energy_Y(zero, zero, 1.0, 0.5), 0.0);
  std::mt19937_64 rng(5);
  const SpectralField v = testing::random_real_field(lat, rng);
  EXPECT_DOUBLE_EQ(energy_Y(zero, v, 1.0, 0.5), norm_gevrey_L2(v, {1.0, 0.5}));
  const SpectralField e1 = testing::single_mode(lat, lat.index(std::vector<int>{1}));
  EXPECT_NEAR(energy_Y(e1, zero, 1.0, 0.0), 2.0, 1e-15);
}

TEST(ConstantC0, OneDimensionalClosedForm) {
  const double S = M_PI / std::tanh(M_PI);
  const AlgebraConstant c = constant_C0(1, 1.0);
  EXPECT_NEAR(c.lattice_sum, 3.1533481, 1e-7);
  EXPECT_LT(testing::rel_diff(c.C0, 2.0 * std::sqrt(2.0 * S)), 1e-10);
  EXPECT_NEAR(c.C0, 5.0226265, 1e-6);
  EXPECT_LT(testing::rel_diff(c.lattice_sum, S), 1e-10);
  EXPECT_LT(testing::rel_diff(testing::lattice_sum_1d(1), S), 1e-12);
}

TEST(ConstantC0, MatchesSummationOracleForP2) {
  const double S = testing::lattice_sum_1d(2);
  const AlgebraConstant c = constant_C0(1, 2.0);
  EXPECT_LT(testing::rel_diff(c.lattice_sum, S), 1e-10);
  EXPECT_LT(testing::rel_diff(c.C0, 4.0 * std::sqrt(2.0 * S)), 1e-10);
}

// Sum over the ball |j| <= R plus the radial integral of the remainder.
double ball_sum(int n, double p, int R) {
  long double acc = 0.0L;
  const long R2 = static_cast<long>(R) * R;
  if (n == 2) {
    for (int a = -R; a <= R; ++a)
      for (int b = -R; b <= R; ++b) {
        const long r2 = static_cast<long>(a) * a + static_cast<long>(b) * b;
        if (r2 <= R2) acc += std::pow(1.0L + r2, -p);
      }
    return static_cast<double>(acc) + M_PI * std::pow(1.0 + R2, 1.0 - p) / (p - 1.0);
  }
  for (int a = -R; a <= R; ++a)
    for (int b = -R; b <= R; ++b)
      for (int c = -R; c <= R; ++c) {
        const long r2 = static_cast<long>(a) * a + static_cast<long>(b) * b + static_cast<long>(c) * c;
        if (r2 <= R2) acc += std::pow(1.0L + r2, -p);
      }
  // p = 2: closed-form radial tail
  const double x = R;
  return static_cast<double>(acc) + 2.0 * M_PI * (M_PI / 2.0 - std::atan(x) + x / (1.0 + x * x));
}

TEST(ConstantC0, HigherDimensionsAgainstLatticeSums) {
  EXPECT_LT(testing::rel_diff(constant_C0(2, 2.0).lattice_sum, ball_sum(2, 2.0, 600)), 1e-6);
  EXPECT_LT(testing::rel_diff(constant_C0(3, 2.0).lattice_sum, ball_sum(3, 2.0, 120)), 1e-4);
}

TEST(ConstantC0, LargePLimit) {
  const AlgebraConstant c = constant_C0(1, 40.0);
  EXPECT_NEAR(c.lattice_sum, 1.0, 1e-11);
  EXPECT_NEAR(c.C0 / std::pow(2.0, 40.0), std::sqrt(2.0), 1e-11);
}

TEST(ConstantC0, DivergentSumRejected) {
  EXPECT_THROW(constant_C0(1, 0.5), ParameterError);
  EXPECT_THROW(constant_C0(2, 1.0), ParameterError);
  EXPECT_THROW(constant_C0(3, 1.2), ParameterError);
}

TEST(BanachAlgebra, RandomPairs) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> pickN(1, 16);
  const double C0p[2] = {constant_C0(1, 1.0).C0, constant_C0(1, 2.0).C0};
  int violations = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int N = pickN(rng);
    const double p = trial % 2 == 0 ? 1.0 : 2.0;
    const double tau = (trial / 2) % 2 == 0 ? 0.0 : 0.2;
    const double C0 = C0p[trial % 2];
    const Lattice lat(1, 1, N);
    const SpectralField u = testing::random_real_field(lat, rng, 0.9);
    const SpectralField v = testing::random_real_field(lat, rng, 0.9);
    // The full product lives on |j| <= 2N; build it by direct convolution.
    const Lattice wide(1, 1, 2 * N);
    const auto conv = testing::convolve(testing::dense_1d(u), testing::dense_1d(v));
    SpectralField uv(wide, std::vector<cplx>(conv.begin(), conv.end()));
    const GevreyParams g{p, tau};
    const double lhs = norm_gevrey_L2(uv, g);
    const double rhs = C0 * norm_gevrey_L2(u, g) * norm_gevrey_L2(v, g) + 1e-9;
    if (!(lhs <= rhs)) ++violations;
    // The dealiased (truncated) product can only be smaller.
    EXPECT_LE(norm_gevrey_L2(dealiased_product(u, v), g), lhs * (1.0 + 1e-12));
  }
  EXPECT_EQ(violations, 0);
}

TEST(WeightInequality, DenseGrid) {
  for (int i = 0; i <= 500000; ++i) {
    const double x = 50.0 * i / 500000.0;
    const double lhs = std::exp(2.0 * x);
    const double rhs = std::exp(2.0) + x * x * x * std::exp(2.0 * x);
    ASSERT_LE(lhs, rhs * (1.0 + 1e-15)) << "x=" << x;
  }
}

TEST(Embedding, RandomFieldsAndGrowingModes) {
  const double C0 = constant_C0(1, 1.0).C0;
  std::mt19937_64 rng(99);
  const Lattice lat(1, 1, 32);
  for (int trial = 0; trial < 100; ++trial) {
    const SpectralField u = testing::random_real_field(lat, rng, 0.5 + 0.005 * trial);
    const EmbeddingCheck e = embedding_constant_check(u, 1.0, C0);
    EXPECT_TRUE(e.ok);
    EXPECT_DOUBLE_EQ(e.lhs, norm_l1(u));
    EXPECT_DOUBLE_EQ(e.rhs, 0.5 * C0 * norm_Hp(u, 1.0));
  }
  const EmbeddingCheck z = embedding_constant_check(SpectralField(lat), 1.0);
  EXPECT_EQ(z.lhs, 0.0);
  EXPECT_EQ(z.rhs, 0.0);
  EXPECT_TRUE(z.ok);

  double prev_gap = 0.0;
  for (int m = 1; m <= 32; m *= 2) {
    const EmbeddingCheck e = embedding_constant_check(testing::single_mode(lat, lat.index(std::vector<int>{m})), 1.0, C0);
    EXPECT_DOUBLE_EQ(e.lhs, 1.0);
    EXPECT_GT(e.rhs - e.lhs, prev_gap);
    prev_gap = e.rhs - e.lhs;
  }
}

TEST(NormSeries, RejectsBadSamples) {
  NormSeries s{"Hp", {}};
  s.push(0.0, 1.0);
  EXPECT_THROW(s.push(0.0, 1.0), ParameterError);
  EXPECT_THROW(s.push(1.0, -1.0), ParameterError);
  EXPECT_THROW(s.push(1.0, std::nan("")), ParameterError);
  s.push(1.0, 2.0);
  NormSeries l{"l1", {}};
  l.push(0.0, 3.0);
  std::ostringstream os;
  write_norm_series_csv(os, {&l, &s});
  EXPECT_EQ(os.str(), "t,kind,value\n0,Hp,1\n1,Hp,2\n0,l1,3\n");
}

}  // namespace
}  // namespace gevrey
