#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "gevrey/errors.hpp"

namespace gevrey {

/// How the number handed to the elliptic routines is read.
enum class EllipticConvention {
  modulus,    ///< k, with sn(z, 1) = tanh z
  parameter,  ///< m = k^2
};

/// Elliptic modulus k in [0, 1].
class EllipticModulus {
 public:
  explicit EllipticModulus(double value, EllipticConvention convention = EllipticConvention::modulus) {
    if (!(value >= 0.0 && value <= 1.0))
      throw ParameterError("elliptic modulus must lie in [0, 1], got " + std::to_string(value));
    k_ = convention == EllipticConvention::modulus ? value : std::sqrt(value);
  }
  double k() const noexcept { return k_; }
  /// k' = sqrt(1 - k^2), formed without cancellation near k = 1.
  double complement() const noexcept { return std::sqrt((1.0 - k_) * (1.0 + k_)); }

 private:
  double k_ = 0.0;
};

/// Arithmetic-geometric mean of a, b >= 0.
inline double agm(double a, double b) {
  for (int i = 0; i < 64; ++i) {
    const double an = 0.5 * (a + b);
    const double bn = std::sqrt(a * b);
    a = an;
    b = bn;
    if (std::abs(a - b) <= 1e-16 * a) break;
  }
  return 0.5 * (a + b);
}

/// Complete elliptic integral of the first kind, K(k) = pi / (2 agm(1, k')).
/// Returns +infinity for k = 1.
inline double elliptic_K(EllipticModulus k) {
  const double kc = k.complement();
  if (kc == 0.0) return std::numeric_limits<double>::infinity();
  return M_PI / (2.0 * agm(1.0, kc));
}

/// K'(k) = K(k') = pi / (2 agm(1, k)). Returns +infinity for k = 0.
inline double elliptic_Kprime(EllipticModulus k) {
  if (k.k() == 0.0) return std::numeric_limits<double>::infinity();
  return M_PI / (2.0 * agm(1.0, k.k()));
}

/// Jacobi sn(z, k) by the descending Landen (AGM) transformation.
inline double jacobi_sn(double z, EllipticModulus modulus) {
  const double k = modulus.k();
  if (k == 0.0) return std::sin(z);
  if (k == 1.0) return std::tanh(z);
  // Reduce to one real period 4K so the amplification 2^N a_N z stays moderate.
  const double K = elliptic_K(modulus);
  const double period = 4.0 * K;
  z = std::remainder(z, period);

  std::vector<double> a{1.0};
  std::vector<double> c{k};
  double b = modulus.complement();
  while (std::abs(c.back()) > 1e-17 * a.back() && a.size() < 40) {
    const double an = 0.5 * (a.back() + b);
    const double cn = 0.5 * (a.back() - b);
    b = std::sqrt(a.back() * b);
    a.push_back(an);
    c.push_back(cn);
  }
  const std::size_t n = a.size() - 1;
  double phi = std::ldexp(a[n] * z, static_cast<int>(n));
  for (std::size_t i = n; i >= 1; --i) phi = 0.5 * (phi + std::asin(c[i] / a[i] * std::sin(phi)));
  return std::sin(phi);
}

}  // namespace gevrey
