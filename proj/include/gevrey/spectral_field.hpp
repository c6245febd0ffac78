#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gevrey/errors.hpp"
#include "gevrey/lattice.hpp"

namespace gevrey {

using cplx = std::complex<double>;

/// Fourier coefficients u_j of u(x) = sum_j u_j e^{i j.x} on a Lattice.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(Lattice lattice)
      : lattice_(std::move(lattice)), coeffs_(lattice_.size(), cplx{0.0, 0.0}) {}
  SpectralField(Lattice lattice, std::vector<cplx> coeffs)
      : lattice_(std::move(lattice)), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != lattice_.size())
      throw ParameterError("spectral field: coefficient count does not match lattice");
  }

  const Lattice& lattice() const noexcept { return lattice_; }
  std::size_t size() const noexcept { return coeffs_.size(); }

  cplx& operator[](std::size_t f) noexcept { return coeffs_[f]; }
  const cplx& operator[](std::size_t f) const noexcept { return coeffs_[f]; }
  cplx& at(std::initializer_list<int> j) { return coeffs_[lattice_.index(std::span<const int>(j.begin(), j.size()))]; }
  const cplx& at(std::initializer_list<int> j) const {
    return coeffs_[lattice_.index(std::span<const int>(j.begin(), j.size()))];
  }

  std::span<cplx> coeffs() noexcept { return coeffs_; }
  std::span<const cplx> coeffs() const noexcept { return coeffs_; }

  double max_abs() const noexcept {
    double m = 0.0;
    for (const auto& c : coeffs_) m = std::max(m, std::abs(c));
    return m;
  }

  bool all_finite() const noexcept {
    return std::all_of(coeffs_.begin(), coeffs_.end(),
                       [](const cplx& c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); });
  }

  /// True when coeff(-j) = conj(coeff(j)) to within rel_tol * max|coeff|.
  bool is_real(double rel_tol = 1e-12) const noexcept {
    const double tol = rel_tol * max_abs();
    for (std::size_t f = 0; f < coeffs_.size(); ++f) {
      if (std::abs(coeffs_[lattice_.mirror(f)] - std::conj(coeffs_[f])) > tol) return false;
    }
    return true;
  }

  void require_real(const char* where) const {
    if (!all_finite())
      throw SymmetryError(std::string(where) + ": field has non-finite coefficients");
    if (!is_real())
      throw SymmetryError(std::string(where) + ": field is not Hermitian-symmetric");
  }

  /// Replaces each pair (u_j, u_-j) by its Hermitian part.
  void symmetrize() noexcept {
    for (std::size_t f = 0; f <= lattice_.zero_index(); ++f) {
      const std::size_t g = lattice_.mirror(f);
      const cplx avg = 0.5 * (coeffs_[f] + std::conj(coeffs_[g]));
      coeffs_[f] = avg;
      coeffs_[g] = std::conj(avg);
    }
  }

  SpectralField& operator+=(const SpectralField& o) {
    check_same(o);
    for (std::size_t f = 0; f < coeffs_.size(); ++f) coeffs_[f] += o.coeffs_[f];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    check_same(o);
    for (std::size_t f = 0; f < coeffs_.size(); ++f) coeffs_[f] -= o.coeffs_[f];
    return *this;
  }
  SpectralField& operator*=(double s) noexcept {
    for (auto& c : coeffs_) c *= s;
    return *this;
  }
  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

 private:
  void check_same(const SpectralField& o) const {
    if (!(lattice_ == o.lattice_)) throw ParameterError("spectral field: lattice mismatch");
  }

  Lattice lattice_;
  std::vector<cplx> coeffs_;
};

/// Real samples on the uniform grid x_k = 2 pi k / M, M points per dimension.
struct GridField {
  Lattice lattice;
  std::size_t points_per_dim = 0;
  std::vector<double> values;

  std::size_t total() const noexcept { return values.size(); }

  /// Coordinate i of sample s.
  double coordinate(std::size_t s, int i) const noexcept {
    std::size_t stride = 1;
    for (int d = lattice.n() - 1; d > i; --d) stride *= points_per_dim;
    const std::size_t k = (s / stride) % points_per_dim;
    return 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(points_per_dim);
  }

  double max_abs() const noexcept {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
};

}  // namespace gevrey
