#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "gevrey/errors.hpp"
#include "gevrey/fft.hpp"
#include "gevrey/gevrey_params.hpp"
#include "gevrey/lattice.hpp"
#include "gevrey/spectral_field.hpp"

namespace gevrey {

/// Points per dimension for a grid oversampled by `oversample` relative to 2N+1.
inline std::size_t grid_points(int N, double oversample) {
  if (!(oversample > 0.0)) throw ParameterError("grid: oversample factor must be positive");
  const double raw = oversample * static_cast<double>(2 * N + 1);
  const auto target = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return fft::next_fast_size(std::max<std::size_t>(target, static_cast<std::size_t>(2 * N + 1)));
}

namespace detail {

inline std::size_t grid_offset(const Lattice& lat, std::size_t f, std::size_t M) {
  std::size_t g = 0;
  const auto Ms = static_cast<long>(M);
  for (int i = 0; i < lat.n(); ++i) {
    long c = lat.component(f, i) % Ms;
    if (c < 0) c += Ms;
    g = g * M + static_cast<std::size_t>(c);
  }
  return g;
}

inline std::size_t grid_total(const Lattice& lat, std::size_t M) {
  std::size_t total = 1;
  for (int i = 0; i < lat.n(); ++i) total *= M;
  return total;
}

}  // namespace detail

/// Samples the Fourier series of `field` on a grid with exactly M points per dimension.
inline GridField to_grid_points(const SpectralField& field, std::size_t M) {
  field.require_real("to_grid");
  const Lattice& lat = field.lattice();
  if (M < lat.side())
    throw UndersamplingError("to_grid: grid of " + std::to_string(M) +
                             " points cannot hold 2N+1 = " + std::to_string(lat.side()) + " modes");
  fft::Buffer buf(detail::grid_total(lat, M), cplx{0.0, 0.0});
  for (std::size_t f = 0; f < lat.size(); ++f) buf[detail::grid_offset(lat, f, M)] = field[f];
  fft::transform(buf, lat.n(), M, +1);
  GridField out{lat, M, std::vector<double>(buf.size())};
  for (std::size_t s = 0; s < buf.size(); ++s) out.values[s] = buf[s].real();
  return out;
}

/// Samples `field` on a grid of ceil(oversample (2N+1)) points per dimension,
/// rounded up to a fast transform size.
inline GridField to_grid(const SpectralField& field, double oversample = 1.0) {
  return to_grid_points(field, grid_points(field.lattice().N(), oversample));
}

/// Analysis transform followed by the Galerkin projection onto `lattice`.
/// The result is exactly Hermitian.
inline SpectralField from_grid(const GridField& grid, const Lattice& lattice) {
  const std::size_t M = grid.points_per_dim;
  if (grid.lattice.n() != lattice.n())
    throw ParameterError("from_grid: grid dimension does not match lattice");
  if (M < lattice.side())
    throw UndersamplingError("from_grid: grid of " + std::to_string(M) +
                             " points per dimension is below 2N+1 = " + std::to_string(lattice.side()));
  if (grid.values.size() != detail::grid_total(lattice, M))
    throw ParameterError("from_grid: sample count does not match grid size");
  fft::Buffer buf(grid.values.size());
  for (std::size_t s = 0; s < buf.size(); ++s) buf[s] = cplx{grid.values[s], 0.0};
  fft::transform(buf, lattice.n(), M, -1);
  const double scale = 1.0 / static_cast<double>(buf.size());
  SpectralField out(lattice);
  for (std::size_t f = 0; f < lattice.size(); ++f)
    out[f] = buf[detail::grid_offset(lattice, f, M)] * scale;
  out.symmetrize();
  return out;
}

/// Copies the coefficients of `field` into `target`, zero-filling new modes and
/// dropping modes outside the target cube.
inline SpectralField resample(const SpectralField& field, const Lattice& target) {
  const Lattice& src = field.lattice();
  if (src.n() != target.n() || src.m() != target.m())
    throw ParameterError("resample: lattices differ in n or m");
  SpectralField out(target);
  for (std::size_t f = 0; f < src.size(); ++f) {
    const auto j = src.mode(f);
    if (target.contains(j)) out[target.index(j)] = field[f];
  }
  return out;
}

/// Multiplies coeff(j) by (1 + |j|^2)^{p/2}.
inline SpectralField apply_A_power(const SpectralField& field, double p) {
  SpectralField out = field;
  if (p == 0.0) return out;
  const Lattice& lat = field.lattice();
  for (std::size_t f = 0; f < lat.size(); ++f) out[f] *= std::pow(1.0 + lat.j_squared(f), 0.5 * p);
  return out;
}

/// Multiplies coeff(j) by the exponential Gevrey weight of `params` (p is ignored).
inline SpectralField apply_script_A_weight(const SpectralField& field, const GevreyParams& params) {
  params.validate();
  SpectralField out = field;
  if (params.tau == 0.0) return out;
  const Lattice& lat = field.lattice();
  for (std::size_t f = 0; f < lat.size(); ++f) {
    const double lw = log_weight(params, lat.j_squared(f), lat.jprime_norm(f));
    const double w = std::exp(lw);
    if (!std::isfinite(w))
      throw OverflowError("apply_script_A_weight: weight overflows at |j|^2 = " +
                          std::to_string(lat.j_squared(f)));
    out[f] *= w;
  }
  return out;
}

/// Spectral partial derivative of the given order along axis (0-based).
inline SpectralField differentiate(const SpectralField& field, int axis, int order = 1) {
  const Lattice& lat = field.lattice();
  if (axis < 0 || axis >= lat.n()) throw ParameterError("differentiate: axis out of range");
  SpectralField out = field;
  for (std::size_t f = 0; f < lat.size(); ++f) {
    const cplx factor = std::pow(cplx{0.0, static_cast<double>(lat.component(f, axis))}, order);
    out[f] *= factor;
  }
  return out;
}

/// Coefficients of u^k projected to the lattice, computed alias-free on a grid
/// oversampled by (k+1)/2.
inline SpectralField dealiased_power(const SpectralField& field, int k) {
  if (k < 1) throw ParameterError("dealiased_power: exponent must be >= 1");
  field.require_real("dealiased_power");
  if (k == 1) return field;
  GridField g = to_grid(field, 0.5 * (k + 1));
  for (double& v : g.values) v = std::pow(v, k);
  return from_grid(g, field.lattice());
}

/// Coefficients of u v projected to the common lattice, alias-free (3/2 padding).
inline SpectralField dealiased_product(const SpectralField& u, const SpectralField& v) {
  if (!(u.lattice() == v.lattice())) throw ParameterError("dealiased_product: lattice mismatch");
  const std::size_t M = grid_points(u.lattice().N(), 1.5);
  GridField gu = to_grid_points(u, M);
  const GridField gv = to_grid_points(v, M);
  for (std::size_t s = 0; s < gu.values.size(); ++s) gu.values[s] *= gv.values[s];
  return from_grid(gu, u.lattice());
}

/// Grid mean of a real-valued function of the samples (exact for trigonometric
/// polynomials of degree below M).
template <class F>
double grid_mean(const GridField& g, F&& fn) {
  long double acc = 0.0L;
  for (double v : g.values) acc += static_cast<long double>(fn(v));
  return static_cast<double>(acc / static_cast<long double>(g.values.size()));
}

}  // namespace gevrey
