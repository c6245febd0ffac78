#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gevrey/errors.hpp"
#include "gevrey/spectral_field.hpp"
#include "gevrey/transforms.hpp"

namespace gevrey {

/// A real coefficient a(t): constant, sinusoidal, or tabulated with linear
/// interpolation (held constant outside the table).
class CoefficientProfile {
 public:
  struct Sinusoid {
    double mean = 0.0;
    double amplitude = 0.0;
    double omega = 0.0;
    double phase = 0.0;
  };
  struct Table {
    std::vector<double> t;
    std::vector<double> value;
  };

  CoefficientProfile(double c = 0.0) : repr_(c) {}  // NOLINT: implicit from a constant
  CoefficientProfile(Sinusoid s) : repr_(s) {}       // NOLINT
  CoefficientProfile(Table tab) : repr_(std::move(tab)) {  // NOLINT
    const auto& tb = std::get<Table>(repr_);
    if (tb.t.empty() || tb.t.size() != tb.value.size())
      throw ParameterError("coefficient table: t and value must be non-empty and of equal length");
    for (std::size_t i = 1; i < tb.t.size(); ++i)
      if (!(tb.t[i] > tb.t[i - 1])) throw ParameterError("coefficient table: t must be strictly increasing");
  }

  double operator()(double t) const {
    if (const auto* c = std::get_if<double>(&repr_)) return *c;
    if (const auto* s = std::get_if<Sinusoid>(&repr_)) return s->mean + s->amplitude * std::sin(s->omega * t + s->phase);
    const auto& tb = std::get<Table>(repr_);
    if (t <= tb.t.front()) return tb.value.front();
    if (t >= tb.t.back()) return tb.value.back();
    const auto it = std::upper_bound(tb.t.begin(), tb.t.end(), t);
    const auto i = static_cast<std::size_t>(it - tb.t.begin());
    const double w = (t - tb.t[i - 1]) / (tb.t[i] - tb.t[i - 1]);
    return (1.0 - w) * tb.value[i - 1] + w * tb.value[i];
  }

  bool is_constant() const noexcept { return std::holds_alternative<double>(repr_); }
  bool is_zero() const noexcept {
    const auto* c = std::get_if<double>(&repr_);
    return c != nullptr && *c == 0.0;
  }

 private:
  std::variant<double, Sinusoid, Table> repr_;
};

/// f = sign * u^k
struct Monomial {
  int sign = 1;
  int k = 3;
};
/// f = sum_{k=0}^{K} a_k(t) u^k
struct PowerSeries {
  std::vector<CoefficientProfile> a;
};
/// f = u e^{u^2}
struct ExpCubic {};
/// One spatial mode j of f: contributes cos(j.x) sum_k a_k(t) u^k.
struct SpatialMode {
  std::vector<int> j;
  std::vector<CoefficientProfile> a;
};
/// f = sum over listed modes of cos(j.x) sum_k a_{jk}(t) u^k
struct SpatialSeries {
  std::vector<SpatialMode> modes;
};

/// Analytic nonlinearity f(t, x, u) together with the analyticity parameter
/// lambda of its spatial coefficients (infinite for x-independent forms).
struct NonlinearitySpec {
  std::variant<Monomial, PowerSeries, ExpCubic, SpatialSeries> form = PowerSeries{{0.0}};
  double lambda = std::numeric_limits<double>::infinity();

  static NonlinearitySpec zero() { return {PowerSeries{{0.0}}, std::numeric_limits<double>::infinity()}; }
  static NonlinearitySpec monomial(int sign, int k) {
    return {Monomial{sign, k}, std::numeric_limits<double>::infinity()};
  }

  void validate() const {
    if (const auto* mono = std::get_if<Monomial>(&form)) {
      if (mono->k < 2) throw ParameterError("nonlinearity: monomial exponent must be >= 2");
      if (mono->sign != 1 && mono->sign != -1) throw ParameterError("nonlinearity: monomial sign must be +1 or -1");
    } else if (const auto* ps = std::get_if<PowerSeries>(&form)) {
      if (ps->a.empty()) throw ParameterError("nonlinearity: power series needs at least one coefficient");
    } else if (const auto* ss = std::get_if<SpatialSeries>(&form)) {
      if (ss->modes.empty()) throw ParameterError("nonlinearity: spatial series needs at least one mode");
      if (!(lambda > 0.0) || std::isinf(lambda))
        throw ParameterError("nonlinearity: spatial series needs a finite lambda > 0");
    }
    if (!(lambda > 0.0)) throw ParameterError("nonlinearity: lambda must be > 0");
  }

  bool x_independent() const noexcept { return !std::holds_alternative<SpatialSeries>(form); }

  /// Highest power of u, or -1 when f is not a polynomial in u.
  int polynomial_degree() const {
    if (const auto* mono = std::get_if<Monomial>(&form)) return mono->k;
    if (const auto* ps = std::get_if<PowerSeries>(&form)) return last_nonzero(ps->a);
    if (const auto* ss = std::get_if<SpatialSeries>(&form)) {
      int d = 0;
      for (const auto& m : ss->modes) d = std::max(d, last_nonzero(m.a));
      return d;
    }
    return -1;
  }

  /// Largest |j_i| among spatial modes (0 for x-independent forms).
  int spatial_band() const {
    int b = 0;
    if (const auto* ss = std::get_if<SpatialSeries>(&form))
      for (const auto& m : ss->modes)
        for (int c : m.j) b = std::max(b, std::abs(c));
    return b;
  }

  bool is_zero() const {
    if (const auto* ps = std::get_if<PowerSeries>(&form))
      return std::all_of(ps->a.begin(), ps->a.end(), [](const CoefficientProfile& c) { return c.is_zero(); });
    return false;
  }

 private:
  static int last_nonzero(const std::vector<CoefficientProfile>& a) {
    for (int k = static_cast<int>(a.size()) - 1; k >= 0; --k)
      if (!a[static_cast<std::size_t>(k)].is_zero()) return k;
    return 0;
  }
};

namespace detail {

inline double horner(const std::vector<CoefficientProfile>& a, double t, double u) {
  double acc = 0.0;
  for (auto it = a.rbegin(); it != a.rend(); ++it) acc = acc * u + (*it)(t);
  return acc;
}

}  // namespace detail

/// Pointwise f(t, x, u(x)) on the samples of `u`.
inline GridField eval_f(const NonlinearitySpec& spec, const GridField& u, double t) {
  GridField out{u.lattice, u.points_per_dim, std::vector<double>(u.values.size())};
  std::visit(
      [&](const auto& form) {
        using F = std::decay_t<decltype(form)>;
        if constexpr (std::is_same_v<F, Monomial>) {
          for (std::size_t s = 0; s < u.values.size(); ++s)
            out.values[s] = form.sign * std::pow(u.values[s], form.k);
        } else if constexpr (std::is_same_v<F, PowerSeries>) {
          std::vector<double> a(form.a.size());
          for (std::size_t k = 0; k < a.size(); ++k) a[k] = form.a[k](t);
          for (std::size_t s = 0; s < u.values.size(); ++s) {
            double acc = 0.0;
            for (auto it = a.rbegin(); it != a.rend(); ++it) acc = acc * u.values[s] + *it;
            out.values[s] = acc;
          }
        } else if constexpr (std::is_same_v<F, ExpCubic>) {
          for (std::size_t s = 0; s < u.values.size(); ++s) {
            const double v = u.values[s];
            out.values[s] = v * std::exp(v * v);
          }
        } else {
          const int n = u.lattice.n();
          for (std::size_t s = 0; s < u.values.size(); ++s) {
            double acc = 0.0;
            for (const auto& mode : form.modes) {
              double phase = 0.0;
              for (int i = 0; i < n; ++i) phase += mode.j[static_cast<std::size_t>(i)] * u.coordinate(s, i);
              acc += std::cos(phase) * detail::horner(mode.a, t, u.values[s]);
            }
            out.values[s] = acc;
          }
        }
      },
      spec.form);
  for (std::size_t s = 0; s < out.values.size(); ++s) {
    if (!std::isfinite(out.values[s])) {
      std::string where;
      for (int i = 0; i < u.lattice.n(); ++i) where += (i ? "," : "") + std::to_string(u.coordinate(s, i));
      throw DivergenceError("eval_f: nonlinearity overflows at x=(" + where + "), u=" + std::to_string(u.values[s]), t);
    }
  }
  return out;
}

/// Oversampling factor that makes P_N f(u) alias-free for polynomial f, and
/// the fixed factor 2 otherwise.
inline double nonlinear_oversample(const NonlinearitySpec& spec, int N) {
  const int K = spec.polynomial_degree();
  if (K < 0) return 2.0;
  const int needed = (std::max(K, 1) + 1) * N + spec.spatial_band() + 1;
  return std::max(1.0, static_cast<double>(needed) / static_cast<double>(2 * N + 1));
}

/// P_N f(t, x, u) in spectral form.
inline SpectralField nonlinear_term(const NonlinearitySpec& spec, const SpectralField& u, double t,
                                    double oversample) {
  const GridField g = to_grid(u, oversample);
  return from_grid(eval_f(spec, g, t), u.lattice());
}

inline SpectralField nonlinear_term(const NonlinearitySpec& spec, const SpectralField& u, double t) {
  return nonlinear_term(spec, u, t, nonlinear_oversample(spec, u.lattice().N()));
}

/// Result of evaluating a majorising series.
struct SeriesValue {
  double value = 0.0;
  double remainder = 0.0;  ///< estimate of the neglected tail
};

/// Majorising series g(t, s) = sum_k b_k(t) s^k with b_k >= 0.
///
/// Finite series store each b_k(t) as a weighted sum of |a(t)| profiles. The
/// majorant of u e^{u^2} is the entire series with b_{2i+1} = 1/i!.
struct MajorisingSeries {
  struct WeightedProfile {
    double weight = 1.0;
    CoefficientProfile profile;
  };
  std::vector<std::vector<WeightedProfile>> finite;
  bool exp_cubic = false;

  bool infinite() const noexcept { return exp_cubic; }

  /// b_k(t)
  double coefficient(std::size_t k, double t) const {
    if (exp_cubic) {
      if (k % 2 == 0) return 0.0;
      return std::exp(-std::lgamma(static_cast<double>((k - 1) / 2) + 1.0));
    }
    if (k >= finite.size()) return 0.0;
    double acc = 0.0;
    for (const auto& w : finite[k]) acc += w.weight * std::abs(w.profile(t));
    return acc;
  }

  std::size_t finite_degree() const noexcept { return finite.empty() ? 0 : finite.size() - 1; }

  bool is_zero() const {
    if (exp_cubic) return false;
    for (const auto& terms : finite)
      for (const auto& w : terms)
        if (w.weight != 0.0 && !w.profile.is_zero()) return false;
    return true;
  }

  static MajorisingSeries constant_coefficients(std::vector<double> b) {
    MajorisingSeries g;
    for (double c : b) g.finite.push_back({{1.0, CoefficientProfile(c)}});
    return g;
  }
};

/// Builds the majorant b_k(t) = sum_j |a_{jk}(t)| (1+|j|^2)^{p/2} e^{lambda |j'|},
/// j' being the first m components of j.
inline MajorisingSeries majorising_g(const NonlinearitySpec& spec, double p, int m) {
  spec.validate();
  MajorisingSeries g;
  std::visit(
      [&](const auto& form) {
        using F = std::decay_t<decltype(form)>;
        if constexpr (std::is_same_v<F, Monomial>) {
          g.finite.assign(static_cast<std::size_t>(form.k) + 1, {});
          g.finite.back().push_back({1.0, CoefficientProfile(1.0)});
        } else if constexpr (std::is_same_v<F, PowerSeries>) {
          for (const auto& a : form.a) g.finite.push_back({{1.0, a}});
        } else if constexpr (std::is_same_v<F, ExpCubic>) {
          g.exp_cubic = true;
        } else {
          for (const auto& mode : form.modes) {
            double j2 = 0.0;
            double jp2 = 0.0;
            for (std::size_t i = 0; i < mode.j.size(); ++i) {
              j2 += static_cast<double>(mode.j[i]) * mode.j[i];
              if (static_cast<int>(i) < m) jp2 += static_cast<double>(mode.j[i]) * mode.j[i];
            }
            const double w = std::pow(1.0 + j2, 0.5 * p) * std::exp(spec.lambda * std::sqrt(jp2));
            if (g.finite.size() < mode.a.size()) g.finite.resize(mode.a.size());
            for (std::size_t k = 0; k < mode.a.size(); ++k) g.finite[k].push_back({w, mode.a[k]});
          }
        }
      },
      spec.form);
  return g;
}

/// g(t, s) truncated after degree K (inclusive), with the tail estimate
/// b_{K'} s^{K'} / (1 - ratio) from the next nonzero term.
inline SeriesValue g_eval_truncated(const MajorisingSeries& g, double t, double s, std::size_t K) {
  if (!(s >= 0.0)) throw ParameterError("g_eval: argument s must be >= 0");
  SeriesValue out;
  double pw = 1.0;
  for (std::size_t k = 0; k <= K; ++k) {
    const double b = g.coefficient(k, t);
    if (b != 0.0) out.value += b * pw;
    pw *= s;
  }
  if (!g.infinite()) {
    for (std::size_t k = K + 1; k <= g.finite_degree(); ++k) out.remainder += g.coefficient(k, t) * std::pow(s, static_cast<double>(k));
    return out;
  }
  std::size_t k1 = K + 1;
  while (g.coefficient(k1, t) == 0.0) ++k1;
  std::size_t k2 = k1 + 1;
  while (g.coefficient(k2, t) == 0.0) ++k2;
  const double t1 = g.coefficient(k1, t) * std::pow(s, static_cast<double>(k1));
  const double t2 = g.coefficient(k2, t) * std::pow(s, static_cast<double>(k2));
  const double ratio = t1 > 0.0 ? t2 / t1 : 0.0;
  out.remainder = ratio < 1.0 ? t1 / (1.0 - ratio) : std::numeric_limits<double>::infinity();
  return out;
}

/// g(t, s). Infinite series are summed until the tail estimate falls below
/// 1e-16 of the partial sum.
inline SeriesValue g_eval(const MajorisingSeries& g, double t, double s) {
  if (!(s >= 0.0)) throw ParameterError("g_eval: argument s must be >= 0");
  if (!g.infinite()) {
    SeriesValue v = g_eval_truncated(g, t, s, g.finite_degree());
    if (!std::isfinite(v.value)) throw OverflowError("g_eval: value overflows at s=" + std::to_string(s));
    return v;
  }
  // exp-cubic majorant: terms s^{2i+1}/i!, ratio s^2/(i+1)
  double term = s;
  double sum = 0.0;
  for (std::size_t i = 0; i < 10'000'000; ++i) {
    sum += term;
    if (!std::isfinite(sum)) throw OverflowError("g_eval: exp-cubic majorant overflows at s=" + std::to_string(s));
    const double ratio = s * s / static_cast<double>(i + 1);
    const double next = term * ratio;
    if (ratio < 0.5 && next <= 1e-16 * sum) {
      return {sum, next / (1.0 - ratio)};
    }
    term = next;
    if (term == 0.0) return {sum, 0.0};
  }
  throw DivergenceError("g_eval: majorant did not converge at s=" + std::to_string(s));
}

/// Finite truncation of `g` whose tail at s_max is below rel_tol of the partial sum.
inline MajorisingSeries truncate(const MajorisingSeries& g, double s_max, double rel_tol = 1e-12) {
  if (!g.infinite()) return g;
  std::size_t K = 1;
  for (;; K += 2) {
    const SeriesValue v = g_eval_truncated(g, 0.0, s_max, K);
    if (v.remainder <= rel_tol * v.value || K > 100000) break;
  }
  MajorisingSeries out;
  for (std::size_t k = 0; k <= K; ++k) out.finite.push_back({{g.coefficient(k, 0.0), CoefficientProfile(1.0)}});
  return out;
}

/// Multivariate majorant g(t, s_0, ..., s_{n+1}) = sum_beta b_beta(t) prod s_i^{beta_i}.
struct MultiMajorisingSeries {
  struct Term {
    std::vector<int> beta;
    double weight = 1.0;
    CoefficientProfile profile = CoefficientProfile(1.0);
  };
  std::size_t arity = 3;
  std::vector<Term> terms;

  void add(std::vector<int> beta, double b) {
    if (beta.size() != arity) throw ParameterError("multivariate majorant: multi-index length must equal arity");
    if (b < 0.0) throw ParameterError("multivariate majorant: coefficients must be >= 0");
    terms.push_back({std::move(beta), b, CoefficientProfile(1.0)});
  }
};

inline double g_eval_multivar(const MultiMajorisingSeries& g, double t, std::span<const double> s) {
  if (s.size() != g.arity) throw ParameterError("g_eval_multivar: expected " + std::to_string(g.arity) + " arguments");
  for (double v : s)
    if (!(v >= 0.0)) throw ParameterError("g_eval_multivar: arguments must be >= 0");
  double acc = 0.0;
  for (const auto& term : g.terms) {
    double prod = term.weight * std::abs(term.profile(t));
    for (std::size_t i = 0; i < s.size(); ++i)
      if (term.beta[i] != 0) prod *= std::pow(s[i], term.beta[i]);
    acc += prod;
  }
  if (!std::isfinite(acc)) throw OverflowError("g_eval_multivar: value overflows");
  return acc;
}

/// Lifts a univariate majorant of f(t, x, u) to the n+2 argument form, with
/// every power of u placed on s_0. Infinite series are truncated at s_max.
inline MultiMajorisingSeries to_multivariate(const MajorisingSeries& g, int n, double s_max = 1.0) {
  const MajorisingSeries finite = truncate(g, s_max);
  MultiMajorisingSeries out;
  out.arity = static_cast<std::size_t>(n) + 2;
  for (std::size_t k = 0; k < finite.finite.size(); ++k) {
    for (const auto& w : finite.finite[k]) {
      if (w.weight == 0.0 || w.profile.is_zero()) continue;
      std::vector<int> beta(out.arity, 0);
      beta[0] = static_cast<int>(k);
      out.terms.push_back({beta, w.weight, w.profile});
    }
  }
  return out;
}

}  // namespace gevrey
