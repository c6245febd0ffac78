#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "gevrey/errors.hpp"
#include "gevrey/gevrey_params.hpp"
#include "gevrey/spectral_field.hpp"

namespace gevrey {

/// (sum_j |u_j|^2 (1+|j|^2)^p)^{1/2}
inline double norm_Hp(const SpectralField& u, double p) {
  const Lattice& lat = u.lattice();
  double acc = 0.0;
  for (std::size_t f = 0; f < lat.size(); ++f) acc += std::norm(u[f]) * std::pow(1.0 + lat.j_squared(f), p);
  return std::sqrt(acc);
}

/// ||A^p e^{tau W} u|| with W the anisotropic |j'| or isotropic (1+|j|^2)^{1/(2s)}.
///
/// Each term is formed in log space and rescaled by the largest one, so the
/// norm only overflows when the final value does. That case raises
/// OverflowError naming the dominant mode.
inline double norm_gevrey_L2(const SpectralField& u, const GevreyParams& params) {
  params.validate();
  const Lattice& lat = u.lattice();
  std::vector<double> logs(lat.size(), -std::numeric_limits<double>::infinity());
  double top = -std::numeric_limits<double>::infinity();
  std::size_t top_mode = 0;
  for (std::size_t f = 0; f < lat.size(); ++f) {
    const double a = std::abs(u[f]);
    if (a == 0.0) continue;
    logs[f] = std::log(a) + 0.5 * params.p * std::log1p(lat.j_squared(f)) +
              log_weight(params, lat.j_squared(f), lat.jprime_norm(f));
    if (logs[f] > top) {
      top = logs[f];
      top_mode = f;
    }
  }
  if (top == -std::numeric_limits<double>::infinity()) return 0.0;
  double acc = 0.0;
  for (double l : logs)
    if (l != -std::numeric_limits<double>::infinity()) acc += std::exp(2.0 * (l - top));
  const double value = std::exp(top + 0.5 * std::log(acc));
  if (!std::isfinite(value)) {
    std::string j;
    for (int c : lat.mode(top_mode)) j += (j.empty() ? "" : ",") + std::to_string(c);
    throw OverflowError("norm_gevrey_L2: weighted norm overflows, dominated by mode j=(" + j + ")");
  }
  return value;
}

/// sum_j |u_j|
inline double norm_l1(const SpectralField& u) {
  double acc = 0.0;
  for (const auto& c : u.coeffs()) acc += std::abs(c);
  return acc;
}

/// sum_j e^{tau |j'|} |u_j|, with j' given by the lattice split index.
inline double norm_gevrey_l1(const SpectralField& u, double tau) {
  if (!(tau >= 0.0)) throw ParameterError("norm_gevrey_l1: tau must be >= 0");
  const Lattice& lat = u.lattice();
  double acc = 0.0;
  for (std::size_t f = 0; f < lat.size(); ++f) {
    if (u[f] == cplx{}) continue;
    acc += std::exp(tau * lat.jprime_norm(f)) * std::abs(u[f]);
  }
  if (!std::isfinite(acc)) throw OverflowError("norm_gevrey_l1: weighted sum overflows");
  return acc;
}

/// Per-mode energy amplitude phi_j = (|(u_t)_j|^2 + (1+|j|^2)|u_j|^2)^{1/2}.
inline std::vector<double> phi_j(const SpectralField& u, const SpectralField& ut) {
  if (!(u.lattice() == ut.lattice())) throw ParameterError("phi_j: lattice mismatch");
  const Lattice& lat = u.lattice();
  std::vector<double> out(lat.size());
  for (std::size_t f = 0; f < lat.size(); ++f)
    out[f] = std::sqrt(std::norm(ut[f]) + (1.0 + lat.j_squared(f)) * std::norm(u[f]));
  return out;
}

/// y = sum_j e^{tau |j'|} phi_j
inline double y_l1(const SpectralField& u, const SpectralField& ut, double tau) {
  if (!(tau >= 0.0)) throw ParameterError("y_l1: tau must be >= 0");
  const auto phi = phi_j(u, ut);
  const Lattice& lat = u.lattice();
  double acc = 0.0;
  for (std::size_t f = 0; f < lat.size(); ++f)
    if (phi[f] != 0.0) acc += std::exp(tau * lat.jprime_norm(f)) * phi[f];
  if (!std::isfinite(acc)) throw OverflowError("y_l1: weighted sum overflows");
  return acc;
}

/// Y = (||A^p e^{tau A'} u_t||^2 + ||A^{p+1} e^{tau A'} u||^2)^{1/2}, anisotropic weight.
inline double energy_Y(const SpectralField& u, const SpectralField& ut, double p, double tau) {
  const double a = norm_gevrey_L2(ut, {p, tau, 1.0, WeightMode::anisotropic});
  const double b = norm_gevrey_L2(u, {p + 1.0, tau, 1.0, WeightMode::anisotropic});
  return std::hypot(a, b);
}

/// The lattice sum S = sum_{j in Z^n} (1+|j|^2)^{-p} and the algebra constant
/// C0 = 2^p sqrt(2 S).
struct AlgebraConstant {
  int n = 1;
  double p = 1.0;
  double lattice_sum = 0.0;     ///< S
  double C0 = 0.0;
  int partial_radius = 0;       ///< J of the reported partial sum
  double partial_sum = 0.0;     ///< sum over |j_i| <= J
  double tail_integral = 0.0;   ///< integral of (1+|x|^2)^{-p} over |x| > J
};

namespace detail {

/// theta(t) = sum_{j in Z} e^{-t j^2}
inline double theta(double t) {
  if (t >= 1.0) {
    double acc = 1.0;
    for (int j = 1;; ++j) {
      const double term = std::exp(-t * j * j);
      acc += 2.0 * term;
      if (term < 1e-18 * acc) break;
    }
    return acc;
  }
  const double dual = M_PI * M_PI / t;
  double acc = 1.0;
  for (int k = 1;; ++k) {
    const double term = std::exp(-dual * k * k);
    acc += 2.0 * term;
    if (term < 1e-18 * acc) break;
  }
  return std::sqrt(M_PI / t) * acc;
}

/// Surface area of the unit sphere in R^n.
inline double sphere_area(int n) {
  return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
}

}  // namespace detail

/// Computes S and C0 for p > n/2.
///
/// S is evaluated through (1+|j|^2)^{-p} = Gamma(p)^{-1} int t^{p-1} e^{-t(1+|j|^2)} dt,
/// which turns the lattice sum into a one-dimensional integral of theta(t)^n.
/// With t = e^x the integrand is analytic in a strip and decays at both ends,
/// so the trapezoid rule converges geometrically. The remaining far tail
/// x < x_min is added in closed form. A direct partial sum over the cube
/// |j_i| <= J and the continuum tail integral are reported alongside.
inline AlgebraConstant constant_C0(int n, double p) {
  if (n < 1) throw ParameterError("constant_C0: n must be >= 1");
  if (!(p > 0.5 * n))
    throw ParameterError("constant_C0: the lattice sum diverges unless p > n/2 (n=" + std::to_string(n) +
                         ", p=" + std::to_string(p) + ")");
  const double excess = p - 0.5 * n;
  const double h = 0.05;
  const double x_max = 5.0;
  const double x_min = -std::min(45.0 / excess, 2.0e5);
  const double log_gamma = std::lgamma(p);
  auto integrand = [&](double x) {
    const double t = std::exp(x);
    return std::exp(p * x - t + n * std::log(detail::theta(t)) - log_gamma);
  };
  double acc = 0.0;
  const auto steps = static_cast<long>(std::ceil((x_max - x_min) / h));
  for (long i = 0; i <= steps; ++i) {
    const double x = x_max - static_cast<double>(i) * h;
    const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
    acc += w * integrand(x);
  }
  acc *= h;
  const double x_end = x_max - static_cast<double>(steps) * h;
  acc += std::exp(0.5 * n * std::log(M_PI) + excess * x_end - log_gamma) / excess;

  AlgebraConstant out;
  out.n = n;
  out.p = p;
  out.lattice_sum = acc;
  out.C0 = std::pow(2.0, p) * std::sqrt(2.0 * acc);

  // Partial sum over a cube holding at most ~2e6 points.
  const int J = static_cast<int>(std::floor(0.5 * (std::pow(2.0e6, 1.0 / n) - 1.0)));
  out.partial_radius = J;
  std::vector<int> idx(static_cast<std::size_t>(n), -J);
  double partial = 0.0;
  for (;;) {
    double r2 = 0.0;
    for (int c : idx) r2 += static_cast<double>(c) * c;
    partial += std::pow(1.0 + r2, -p);
    int d = n - 1;
    while (d >= 0 && idx[static_cast<std::size_t>(d)] == J) idx[static_cast<std::size_t>(d--)] = -J;
    if (d < 0) break;
    ++idx[static_cast<std::size_t>(d)];
  }
  out.partial_sum = partial;
  // int_{|x|>J} (1+|x|^2)^{-p} dx = |S^{n-1}| int_J^inf r^{n-1} (1+r^2)^{-p} dr,
  // evaluated with r = J e^s and the trapezoid rule.
  double tail = 0.0;
  const double hs = 0.01;
  for (int i = 0;; ++i) {
    const double r = J * std::exp(i * hs);
    const double term = std::pow(r, n) * std::pow(1.0 + r * r, -p);
    tail += (i == 0 ? 0.5 : 1.0) * term;
    if (i > 100 && term < 1e-16 * tail) break;
    if (i > 200000) break;
  }
  out.tail_integral = detail::sphere_area(n) * tail * hs;
  return out;
}

/// Result of the l1 / H^p embedding comparison.
struct EmbeddingCheck {
  double lhs = 0.0;  ///< ||u^||_{l1}
  double rhs = 0.0;  ///< (C0/2) ||u||_{H^p}
  bool ok = true;
};

inline EmbeddingCheck embedding_constant_check(const SpectralField& u, double p, double C0) {
  EmbeddingCheck e;
  e.lhs = norm_l1(u);
  e.rhs = 0.5 * C0 * norm_Hp(u, p);
  e.ok = e.lhs <= e.rhs * (1.0 + 1e-14);
  return e;
}

inline EmbeddingCheck embedding_constant_check(const SpectralField& u, double p) {
  return embedding_constant_check(u, p, constant_C0(u.lattice().n(), p).C0);
}

struct NormSample {
  double t = 0.0;
  double value = 0.0;
};

/// Time-ordered samples of one scalar diagnostic.
struct NormSeries {
  std::string kind;
  std::vector<NormSample> samples;

  void push(double t, double value) {
    if (!std::isfinite(value) || value < 0.0)
      throw ParameterError("norm series '" + kind + "': value must be finite and >= 0");
    if (!samples.empty() && !(t > samples.back().t))
      throw ParameterError("norm series '" + kind + "': times must be strictly increasing");
    samples.push_back({t, value});
  }
  std::vector<double> times() const {
    std::vector<double> v;
    v.reserve(samples.size());
    for (const auto& s : samples) v.push_back(s.t);
    return v;
  }
  std::vector<double> values() const {
    std::vector<double> v;
    v.reserve(samples.size());
    for (const auto& s : samples) v.push_back(s.value);
    return v;
  }
};

/// Writes "t,kind,value" rows ordered by (kind, t).
inline void write_norm_series_csv(std::ostream& os, std::vector<const NormSeries*> series) {
  std::sort(series.begin(), series.end(), [](const NormSeries* a, const NormSeries* b) { return a->kind < b->kind; });
  os << "t,kind,value\n";
  char buf[128];
  for (const NormSeries* s : series)
    for (const auto& x : s->samples) {
      std::snprintf(buf, sizeof buf, "%.17g,%s,%.17g\n", x.t, s->kind.c_str(), x.value);
      os << buf;
    }
}

}  // namespace gevrey
