#pragma once

// Reference computations that share no code with the library: brute-force
// transforms, independent quadratures, closed-form series and a
// finite-difference porous-medium solver.

#include <cmath>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

namespace oracle {

constexpr double pi = std::numbers::pi;

/// O(N^2) DFT of a real 1-d array, F_k = sum_j f_j exp(-2 pi i jk/n).
inline std::vector<std::complex<double>> dft_1d(const std::vector<double>& f) {
  const std::size_t n = f.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = -2.0 * pi * static_cast<double>((j * k) % n) / static_cast<double>(n);
      acc += f[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

/// O(N^2) 2-d DFT of a row-major n x n real array.
inline std::vector<std::complex<double>> dft_2d(const std::vector<double>& f, std::size_t n) {
  std::vector<std::complex<double>> out(n * n);
  for (std::size_t k0 = 0; k0 < n; ++k0) {
    for (std::size_t k1 = 0; k1 < n; ++k1) {
      std::complex<double> acc = 0.0;
      for (std::size_t j0 = 0; j0 < n; ++j0) {
        for (std::size_t j1 = 0; j1 < n; ++j1) {
          const double ang = -2.0 * pi *
                             static_cast<double>((j0 * k0 + j1 * k1) % n) / static_cast<double>(n);
          acc += f[j0 * n + j1] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
      }
      out[k0 * n + k1] = acc;
    }
  }
  return out;
}

/// Applies |xi|^alpha by brute-force DFT and inverse DFT (1-d, box of side L).
inline std::vector<double> frac_laplacian_1d(const std::vector<double>& f, double alpha, double L) {
  const std::size_t n = f.size();
  auto F = dft_1d(f);
  for (std::size_t k = 0; k < n; ++k) {
    const long kk = k < n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
    const double xi = std::abs(2.0 * pi * static_cast<double>(kk) / L);
    F[k] *= xi == 0.0 ? 0.0 : std::pow(xi, alpha);
  }
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double ang = 2.0 * pi * static_cast<double>((j * k) % n) / static_cast<double>(n);
      acc += F[k] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[j] = acc.real() / static_cast<double>(n);
  }
  return out;
}

/// (1/pi) int_0^inf cos(xi x) exp(-t xi^alpha) d xi by the trapezoid rule
/// on [0, Xi], halving the step until two successive values agree to `tol`.
inline double trapezoid_stable_density(double alpha, double t, double x, double tol = 1e-12) {
  double cutoff = 1.0;
  while (std::exp(-t * std::pow(cutoff, alpha)) > 1e-18) cutoff *= 1.25;
  auto f = [&](double xi) { return std::cos(xi * x) * std::exp(-t * std::pow(xi, alpha)); };
  std::size_t n = 1024;
  double h = cutoff / static_cast<double>(n);
  double sum = 0.5 * (f(0.0) + f(cutoff));
  for (std::size_t i = 1; i < n; ++i) sum += f(static_cast<double>(i) * h);
  double prev = sum * h;
  for (int level = 0; level < 22; ++level) {
    for (std::size_t i = 0; i < n; ++i) sum += f((static_cast<double>(i) + 0.5) * h);
    n *= 2;
    h *= 0.5;
    const double cur = sum * h;
    if (std::abs(cur - prev) < tol) return cur / pi;
    prev = cur;
  }
  return prev / pi;
}

/// Convergent large-r series of the 1-d stable density at t = 1 (alpha < 1):
/// p(r) = (1/pi) sum_k (-1)^{k+1} Gamma(alpha k + 1)/k! sin(k pi alpha/2) r^{-alpha k - 1}.
inline double stable_series_far(double alpha, double r, int terms = 400) {
  double sum = 0.0;
  for (int k = 1; k <= terms; ++k) {
    const double lg = std::lgamma(alpha * k + 1.0) - std::lgamma(k + 1.0) -
                      (alpha * k + 1.0) * std::log(r);
    const double term = std::exp(lg) * std::sin(k * pi * alpha / 2.0);
    sum += (k % 2 == 1 ? term : -term);
    if (std::exp(lg) < 1e-20 * std::abs(sum) && k > 10) break;
  }
  return sum / pi;
}

/// int_X^inf p(1, r) dr from the same series (alpha < 1).
inline double stable_series_far_tail(double alpha, double X, int terms = 400) {
  double sum = 0.0;
  for (int k = 1; k <= terms; ++k) {
    const double lg = std::lgamma(alpha * k + 1.0) - std::lgamma(k + 1.0) - alpha * k * std::log(X);
    const double term = std::exp(lg) * std::sin(k * pi * alpha / 2.0) / (alpha * k);
    sum += (k % 2 == 1 ? term : -term);
    if (std::exp(lg) < 1e-20 && k > 10) break;
  }
  return sum / pi;
}

/// First `terms` terms of the asymptotic tail integral for 1 < alpha < 2.
inline double stable_asymptotic_tail(double alpha, double X, int terms = 4) {
  double sum = 0.0;
  for (int k = 1; k <= terms; ++k) {
    const double lg = std::lgamma(alpha * k + 1.0) - std::lgamma(k + 1.0) - alpha * k * std::log(X);
    const double term = std::exp(lg) * std::sin(k * pi * alpha / 2.0) / (alpha * k);
    sum += (k % 2 == 1 ? term : -term);
  }
  return sum / pi;
}

/// Value at the origin of the d-dimensional stable density at time t:
/// Gamma(d/alpha) / (alpha (4 pi)^{d/2} ... ) specialised to d = 1, 2.
inline double stable_density_at_origin(double alpha, int d, double t) {
  if (d == 1) return std::tgamma(1.0 + 1.0 / alpha) / pi * std::pow(t, -1.0 / alpha);
  return std::tgamma(2.0 / alpha) / (2.0 * pi * alpha) * std::pow(t, -2.0 / alpha);
}

/// Periodic Cauchy (Poisson) kernel on a box of side 2 pi:
/// sum_m t / (pi (t^2 + (x + 2 pi m)^2)) = sinh t / (2 pi (cosh t - cos x)).
inline double periodic_cauchy(double t, double x) {
  return std::sinh(t) / (2.0 * pi * (std::cosh(t) - std::cos(x)));
}

/// Explicit finite-difference solver for u_t = (u^m)_xx on a periodic grid
/// (second-order central differences, forward Euler).
inline std::vector<double> fd_porous_medium(std::vector<double> u, double m, double L, double t_end,
                                            double dt) {
  const std::size_t n = u.size();
  const double dx = L / static_cast<double>(n);
  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  std::vector<double> p(n), next(n);
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::size_t i = 0; i < n; ++i) p[i] = std::pow(u[i], m);
    for (std::size_t i = 0; i < n; ++i) {
      const double lap = (p[(i + 1) % n] - 2.0 * p[i] + p[(i + n - 1) % n]) / (dx * dx);
      next[i] = u[i] + dt * lap;
    }
    u.swap(next);
  }
  return u;
}

/// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("sfpme_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
