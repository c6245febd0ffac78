#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gevrey/errors.hpp"

namespace gevrey {

/// Retained wavenumbers of a field on the n-torus [0, 2pi]^n.
///
/// The retained set is the cube |j_i| <= N. Modes are stored in row-major
/// order with j_1 most significant, so flat index f and the mirrored mode -j
/// satisfy mirror(f) = size() - 1 - f. The first m components of j form the
/// "analytic" sub-vector j' used by the anisotropic weights.
class Lattice {
 public:
  Lattice() : Lattice(1, 1, 1) {}

  Lattice(int n, int m, int N) : n_(n), m_(m), N_(N) {
    if (n < 1) throw ParameterError("lattice: dimension n must be >= 1");
    if (m < 1 || m > n)
      throw ParameterError("lattice: split index m must satisfy 1 <= m <= n");
    if (N < 1) throw ParameterError("lattice: N must be >= 1");
    tables_ = build(n, m, N);
  }

  int n() const noexcept { return n_; }
  int m() const noexcept { return m_; }
  int N() const noexcept { return N_; }
  std::size_t side() const noexcept { return static_cast<std::size_t>(2 * N_ + 1); }
  std::size_t size() const noexcept { return tables_->j_squared.size(); }

  /// Component i (0-based) of the mode stored at flat index f.
  int component(std::size_t f, int i) const noexcept {
    return tables_->components[f * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i)];
  }
  std::span<const int> mode(std::size_t f) const noexcept {
    return {tables_->components.data() + f * static_cast<std::size_t>(n_),
            static_cast<std::size_t>(n_)};
  }
  /// |j|^2
  double j_squared(std::size_t f) const noexcept { return tables_->j_squared[f]; }
  /// Euclidean length of j' = (j_1, ..., j_m).
  double jprime_norm(std::size_t f) const noexcept { return tables_->jprime_norm[f]; }
  std::size_t mirror(std::size_t f) const noexcept { return size() - 1 - f; }
  std::size_t zero_index() const noexcept { return size() / 2; }

  bool contains(std::span<const int> j) const noexcept {
    if (static_cast<int>(j.size()) != n_) return false;
    for (int c : j)
      if (c < -N_ || c > N_) return false;
    return true;
  }

  std::size_t index(std::span<const int> j) const {
    if (!contains(j)) throw ParameterError("lattice: mode outside the retained cube");
    std::size_t f = 0;
    for (int c : j) f = f * side() + static_cast<std::size_t>(c + N_);
    return f;
  }

  friend bool operator==(const Lattice& a, const Lattice& b) noexcept {
    return a.n_ == b.n_ && a.m_ == b.m_ && a.N_ == b.N_;
  }

  std::string describe() const {
    return "n=" + std::to_string(n_) + " m=" + std::to_string(m_) + " N=" + std::to_string(N_);
  }

 private:
  struct Tables {
    std::vector<int> components;
    std::vector<double> j_squared;
    std::vector<double> jprime_norm;
  };

  static std::shared_ptr<const Tables> build(int n, int m, int N) {
    auto t = std::make_shared<Tables>();
    const std::size_t side = static_cast<std::size_t>(2 * N + 1);
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= side;
    t->components.resize(total * static_cast<std::size_t>(n));
    t->j_squared.resize(total);
    t->jprime_norm.resize(total);
    for (std::size_t f = 0; f < total; ++f) {
      std::size_t rest = f;
      double sq = 0.0;
      double sq_prime = 0.0;
      for (int i = n - 1; i >= 0; --i) {
        const int c = static_cast<int>(rest % side) - N;
        rest /= side;
        t->components[f * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = c;
        sq += static_cast<double>(c) * c;
        if (i < m) sq_prime += static_cast<double>(c) * c;
      }
      t->j_squared[f] = sq;
      t->jprime_norm[f] = std::sqrt(sq_prime);
    }
    return t;
  }

  int n_;
  int m_;
  int N_;
  std::shared_ptr<const Tables> tables_;
};

}  // namespace gevrey
