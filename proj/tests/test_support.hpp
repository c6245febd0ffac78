#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <random>
#include <vector>

#include "gevrey/lattice.hpp"
#include "gevrey/spectral_field.hpp"

namespace gevrey::testing {

using cplx = std::complex<double>;

// Random real field with |u_j| ~ decay^{|j|_1}, Hermitian by construction.
inline SpectralField random_real_field(const Lattice& lat, std::mt19937_64& rng, double decay = 0.7) {
  std::normal_distribution<double> g(0.0, 1.0);
  SpectralField u(lat);
  for (std::size_t f = 0; f < lat.size(); ++f) {
    const std::size_t m = lat.mirror(f);
    if (m < f) continue;
    int l1 = 0;
    for (int i = 0; i < lat.n(); ++i) l1 += std::abs(lat.component(f, i));
    const double a = std::pow(decay, l1);
    if (m == f) {
      u[f] = cplx{a * g(rng), 0.0};
    } else {
      u[f] = cplx{a * g(rng), a * g(rng)};
      u[m] = std::conj(u[f]);
    }
  }
  return u;
}

// Coefficients of a 1-D field as a dense vector indexed j + N.
inline std::vector<cplx> dense_1d(const SpectralField& u) {
  return {u.coeffs().begin(), u.coeffs().end()};
}

// Full linear convolution of two dense 1-D coefficient sequences centred at offset.
inline std::vector<cplx> convolve(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  std::vector<cplx> out(a.size() + b.size() - 1, cplx{0.0, 0.0});
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k) out[i + k] += a[i] * b[k];
  return out;
}

// k-fold convolution of a 1-D field, truncated back to |j| <= N.
inline std::vector<cplx> convolution_power(const SpectralField& u, int k) {
  const int N = u.lattice().N();
  std::vector<cplx> base = dense_1d(u);
  std::vector<cplx> acc = base;
  for (int i = 1; i < k; ++i) acc = convolve(acc, base);
  const int centre = k * N;
  std::vector<cplx> out(static_cast<std::size_t>(2 * N + 1));
  for (int j = -N; j <= N; ++j) out[static_cast<std::size_t>(j + N)] = acc[static_cast<std::size_t>(centre + j)];
  return out;
}

// Direct evaluation of the Fourier series of a 1-D field at x.
inline double synthesize_1d(const SpectralField& u, double x) {
  const int N = u.lattice().N();
  cplx acc{0.0, 0.0};
  for (int j = -N; j <= N; ++j) acc += u[static_cast<std::size_t>(j + N)] * std::exp(cplx{0.0, j * x});
  return acc.real();
}

inline SpectralField single_mode(const Lattice& lat, std::size_t f, cplx a = {1.0, 0.0}) {
  SpectralField u(lat);
  u[f] = a;
  return u;
}

inline double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

// Lattice sum over Z of (1 + j^2)^{-p} for p = 1 or 2, summed to J with an
// Euler-Maclaurin tail using the closed-form antiderivatives.
inline double lattice_sum_1d(int p, long J = 1'000'000) {
  long double acc = 0.0L;
  for (long j = J; j >= 1; --j) acc += std::pow(1.0L + static_cast<long double>(j) * j, -p);
  const double x = static_cast<double>(J);
  double integral = 0.0;
  double fJ = std::pow(1.0 + x * x, -p);
  double dfJ = -2.0 * p * x * std::pow(1.0 + x * x, -p - 1);
  if (p == 1) integral = M_PI / 2.0 - std::atan(x);
  else integral = M_PI / 4.0 - x / (2.0 * (1.0 + x * x)) - std::atan(x) / 2.0;
  const double tail = integral - fJ / 2.0 - dfJ / 12.0;
  return 1.0 + 2.0 * (static_cast<double>(acc) + tail);
}

}  // namespace gevrey::testing
