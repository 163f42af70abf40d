#pragma once

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sfpme/fft.hpp"
#include "sfpme/grid.hpp"

namespace sfpme {

/// Transition density p^alpha(t, x) of the isotropic alpha-stable process,
/// i.e. the function whose Fourier transform is exp(-|xi|^alpha t).
struct StableKernel {
  double alpha = 1.0;
  int dim = 1;
  /// Relative accuracy demanded from the Fourier inversion.
  double rel_tol = 1e-9;
  /// Error estimates below roundoff_floor * t^{-d/alpha} are accepted
  /// regardless of rel_tol: the integral of |integrand| is of that order, so
  /// smaller estimates are summation roundoff rather than truncation.
  double roundoff_floor = 1e-12;
  /// Maximal bisection depth of the adaptive rule on each half period.
  unsigned max_depth = 3;

  StableKernel() = default;
  StableKernel(double a, int d) : alpha(a), dim(d) { validate(); }

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 2.0)) {
      throw DomainError("stable index must lie in (0, 2]");
    }
    if (dim != 1 && dim != 2) throw DomainError("kernel dimension must be 1 or 2");
  }
};

namespace detail {

inline bool has_closed_form(double alpha) { return alpha == 1.0 || alpha == 2.0; }

inline double closed_form_kernel(double alpha, int dim, double t, double r) {
  constexpr double pi = std::numbers::pi;
  if (alpha == 2.0) {
    const double g = std::exp(-r * r / (4.0 * t));
    return dim == 1 ? g / std::sqrt(4.0 * pi * t) : g / (4.0 * pi * t);
  }
  const double s = t * t + r * r;
  return dim == 1 ? t / (pi * s) : t / (2.0 * pi * s * std::sqrt(s));
}

/// Upper frequency beyond which the integrand is negligible relative to
/// the natural scale t^{-d/alpha}.
inline double frequency_cutoff(double alpha, int dim, double t) {
  const double power = (dim - alpha) / alpha;
  double s = 40.0;
  while (std::pow(s, power) * std::exp(-s) / alpha > 1e-18) s += 1.0;
  return std::pow(s / t, 1.0 / alpha);
}

/// k-th positive zero of J0 (k >= 1).
inline double bessel_j0_zero(unsigned k) {
  if (k <= 20) return boost::math::cyl_bessel_j_zero(0.0, static_cast<int>(k));
  const double beta = (static_cast<double>(k) - 0.25) * std::numbers::pi;
  const double e = 1.0 / (8.0 * beta);
  return beta + e - 124.0 / 3.0 * e * e * e;
}

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
};

/// Sum of integrals over consecutive half periods of the oscillating factor.
/// The first piece carries the |xi|^alpha cusp at the origin and goes to
/// tanh-sinh; every later piece is smooth and goes to adaptive Gauss-Kronrod.
inline QuadratureResult invert_radial(const StableKernel& k, double t, double r) {
  const int d = k.dim;
  const double a = k.alpha;
  const double cutoff = frequency_cutoff(a, d, t);
  const double scale = std::pow(t, -1.0 / a);

  auto integrand = [&](double xi) {
    const double damp = std::exp(-t * std::pow(xi, a));
    if (d == 1) return std::cos(xi * r) * damp;
    return boost::math::cyl_bessel_j(0, xi * r) * xi * damp;
  };

  std::vector<double> cuts;
  for (double g = scale; g < cutoff; g *= 2.0) cuts.push_back(g);
  if (r > 0.0) {
    for (unsigned i = 1;; ++i) {
      const double z = d == 1 ? (static_cast<double>(i) - 0.5) * std::numbers::pi / r
                              : bessel_j0_zero(i) / r;
      if (z >= cutoff) break;
      cuts.push_back(z);
    }
  }
  cuts.push_back(cutoff);
  std::sort(cuts.begin(), cuts.end());

  QuadratureResult out;
  boost::math::quadrature::tanh_sinh<double> head_rule;
  double err = 0.0;
  out.value = head_rule.integrate(integrand, 0.0, cuts.front(), 1e-14, &err);
  out.error = err;
  double lo = cuts.front();
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    const double hi = cuts[i];
    if (hi - lo <= 0.0) continue;
    double piece_err = 0.0;
    out.value += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        integrand, lo, hi, k.max_depth, 1e-10, &piece_err);
    // boost reports |K - G| on the reference interval [-1, 1]
    out.error += piece_err * 0.5 * (hi - lo);
    lo = hi;
  }
  const double norm = d == 1 ? 1.0 / std::numbers::pi : 0.5 / std::numbers::pi;
  out.value *= norm;
  out.error *= norm;
  return out;
}

/// For alpha < 1 and r > 0 the inversion contour can be turned onto the
/// imaginary axis xi = i y, where exp(-t (i y)^alpha) still decays. With
/// c = cos(pi alpha / 2) and s = sin(pi alpha / 2):
///   d = 1:  p = (1/pi)   int_0^inf exp(-y r)   exp(-t c y^alpha) sin(t s y^alpha) dy
///   d = 2:  p = (1/pi^2) int_0^inf y K0(y r)   exp(-t c y^alpha) sin(t s y^alpha) dy
/// (the second from J0 = Re H0 and H0(i z) = 2 K0(z) / (i pi)). Neither
/// integrand oscillates in r, so large radii cost nothing extra.
inline QuadratureResult invert_rotated(const StableKernel& k, double t, double r) {
  const double a = k.alpha;
  const double c = std::cos(0.5 * std::numbers::pi * a);
  const double s = std::sin(0.5 * std::numbers::pi * a);
  auto integrand = [&](double y) {
    const double ya = std::pow(y, a);
    const double damp = std::exp(-t * c * ya) * std::sin(t * s * ya);
    if (k.dim == 1) return std::exp(-y * r) * damp;
    return y * boost::math::cyl_bessel_k(0, y * r) * damp;
  };
  boost::math::quadrature::exp_sinh<double> rule;
  QuadratureResult out;
  out.value = rule.integrate(integrand, 0.0, std::numeric_limits<double>::infinity(), 1e-13, &out.error);
  const double norm = k.dim == 1 ? 1.0 / std::numbers::pi : 1.0 / (std::numbers::pi * std::numbers::pi);
  out.value *= norm;
  out.error *= norm;
  return out;
}

}  // namespace detail

/// p^alpha(t, r) for radial distance r = |x| >= 0.
inline double kernel_eval(const StableKernel& k, double t, double r) {
  k.validate();
  if (!(t > 0.0)) throw DomainError("kernel time must be positive");
  r = std::abs(r);
  if (detail::has_closed_form(k.alpha)) {
    return detail::closed_form_kernel(k.alpha, k.dim, t, r);
  }
  const double natural = std::pow(t, -static_cast<double>(k.dim) / k.alpha);
  auto accepted = [&](const detail::QuadratureResult& q) {
    return q.error <= std::max(k.rel_tol * std::abs(q.value), k.roundoff_floor * natural);
  };
  if (k.alpha < 1.0 && r > 0.0) {
    const auto q = detail::invert_rotated(k, t, r);
    if (accepted(q)) return q.value;
  }
  const auto q = detail::invert_radial(k, t, r);
  if (!accepted(q)) {
    throw AccuracyError("stable kernel quadrature did not converge at r = " +
                        std::to_string(r));
  }
  return q.value;
}

/// Point-valued overload; the kernel is isotropic so only |x| matters.
inline double kernel_eval(const StableKernel& k, double t, std::span<const double> x) {
  if (static_cast<int>(x.size()) != k.dim) {
    throw ContractError("point dimension does not match kernel dimension");
  }
  double r2 = 0.0;
  for (double c : x) r2 += c * c;
  return kernel_eval(k, t, std::sqrt(r2));
}

/// Far-field window [lo, hi] in self-similar units r t^{-1/alpha}. Below
/// alpha = 1 the first correction to the power tail decays only like
/// r^{-alpha}, so the window is pushed out by 10^{1 - alpha}.
inline std::pair<double, double> default_tail_window(double alpha) {
  const double lo = 10.0 * std::pow(10.0, std::max(0.0, 1.0 - alpha));
  return {lo, 10.0 * lo};
}

/// Least-squares slope of log p(1, r) against log r over the far field.
inline double profile_tail_exponent(const StableKernel& k, double r_lo, double r_hi,
                                    int samples = 9) {
  k.validate();
  if (k.alpha >= 2.0) {
    throw UnsupportedError("Gaussian kernel has no power tail; exponent undefined");
  }
  if (!(0.0 < r_lo && r_lo < r_hi) || samples < 2) {
    throw DomainError("tail window must satisfy 0 < r_lo < r_hi");
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double lr = std::log(r_lo) + (std::log(r_hi) - std::log(r_lo)) * i / (samples - 1);
    const double lp = std::log(kernel_eval(k, 1.0, std::exp(lr)));
    sx += lr;
    sy += lp;
    sxx += lr * lr;
    sxy += lr * lp;
  }
  const double nn = samples;
  return (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
}

inline double profile_tail_exponent(const StableKernel& k) {
  if (k.alpha >= 2.0) {
    throw UnsupportedError("Gaussian kernel has no power tail; exponent undefined");
  }
  const auto [lo, hi] = default_tail_window(k.alpha);
  return profile_tail_exponent(k, lo, hi);
}

/// t^{-d/alpha} min t |x|^{-(d+alpha)}.
inline double two_sided_reference(double alpha, int dim, double t, double r) {
  const double near = std::pow(t, -static_cast<double>(dim) / alpha);
  if (r == 0.0) return near;
  return std::min(near, t * std::pow(r, -(dim + alpha)));
}

struct BoundConstants {
  double c_lo = 0.0;
  double c_hi = 0.0;
};

/// Empirical constants of p ~ t^{-d/alpha} min t|x|^{-(d+alpha)} over all
/// (t, r) pairs drawn from the two sample lists.
inline BoundConstants two_sided_bound_check(const StableKernel& k,
                                            std::span<const double> t_samples,
                                            std::span<const double> r_samples) {
  k.validate();
  if (k.alpha >= 2.0) {
    throw UnsupportedError("two-sided power bound does not hold for the Gaussian kernel");
  }
  if (t_samples.empty() || r_samples.empty()) throw InputError("empty sample list");
  BoundConstants c{std::numeric_limits<double>::infinity(), 0.0};
  for (double t : t_samples) {
    if (!(t > 0.0)) throw DomainError("sample times must be positive");
    for (double r : r_samples) {
      const double ratio = kernel_eval(k, t, r) / two_sided_reference(k.alpha, k.dim, t, std::abs(r));
      c.c_lo = std::min(c.c_lo, ratio);
      c.c_hi = std::max(c.c_hi, ratio);
    }
  }
  return c;
}

/// Linear (m = 1) homogeneous solution: uhat(xi, t) = exp(-|xi|^alpha t) u0hat(xi).
inline Field semigroup_solve(double alpha, const Field& u0, double t) {
  if (!(t >= 0.0)) throw DomainError("semigroup time must be nonnegative");
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("stable index must lie in (0, 2]");
  require_finite(u0, "semigroup initial data");
  const LatticeGrid& g = u0.grid;
  Field out = apply_multiplier(u0, [&](std::size_t i) {
    const double k = g.wavenumber_norm(i);
    return k == 0.0 ? 1.0 : std::exp(-std::pow(k, alpha) * t);
  });
  out.time = u0.time + t;
  return out;
}

inline Field semigroup_solve(const StableKernel& k, const Field& u0, double t) {
  k.validate();
  if (k.dim != u0.grid.dim()) throw ContractError("kernel and field dimensions differ");
  return semigroup_solve(k.alpha, u0, t);
}

}  // namespace sfpme
