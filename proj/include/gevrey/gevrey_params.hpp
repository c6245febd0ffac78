#pragma once

#include <cmath>
#include <string>

#include "gevrey/errors.hpp"

namespace gevrey {

/// Which exponential weight a Gevrey norm carries.
enum class WeightMode {
  anisotropic,  ///< e^{tau |j'|}, analyticity in the first m variables (s = 1 only)
  isotropic,    ///< e^{tau (1+|j|^2)^{1/(2s)}}, Gevrey order s >= 1
};

/// Parameters of a weighted spectral norm || A^p e^{tau W} u ||.
struct GevreyParams {
  double p = 1.0;
  double tau = 0.0;
  double s = 1.0;
  WeightMode mode = WeightMode::anisotropic;

  void validate() const {
    if (!std::isfinite(p) || p < 0.0) throw ParameterError("gevrey params: p must be finite and >= 0");
    if (!std::isfinite(tau) || tau < 0.0) throw ParameterError("gevrey params: tau must be finite and >= 0");
    if (!std::isfinite(s) || s < 1.0) throw ParameterError("gevrey params: s must be >= 1");
    if (mode == WeightMode::anisotropic && s != 1.0)
      throw ParameterError("gevrey params: the anisotropic weight is defined for s = 1 only");
  }
};

/// log of the exponential weight for a mode with |j|^2 = j2 and |j'| = jp.
inline double log_weight(const GevreyParams& g, double j2, double jp) noexcept {
  if (g.mode == WeightMode::anisotropic) return g.tau * jp;
  return g.tau * std::pow(1.0 + j2, 1.0 / (2.0 * g.s));
}

}  // namespace gevrey
