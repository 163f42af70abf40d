#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <vector>

#include "sfpme/fft.hpp"
#include "sfpme/grid.hpp"

namespace sfpme {

/// Fourier multiplier with symbol |xi|^alpha on a periodic lattice.
///
/// The symbol table is filled once at construction. Order 2 is accepted as the
/// classical Laplacian for validation against closed forms.
class FracLaplacian {
 public:
  FracLaplacian(double alpha, const LatticeGrid& grid)
      : alpha_(alpha), grid_(grid), symbol_(grid.size()) {
    if (!(alpha > 0.0 && alpha <= 2.0)) {
      throw DomainError("fractional order must lie in (0, 2]");
    }
    for (std::size_t i = 0; i < symbol_.size(); ++i) {
      const double k = grid.wavenumber_norm(i);
      symbol_[i] = k == 0.0 ? 0.0 : std::pow(k, alpha);
    }
  }

  double alpha() const noexcept { return alpha_; }
  const LatticeGrid& grid() const noexcept { return grid_; }
  const std::vector<double>& symbol() const noexcept { return symbol_; }

  /// Copy with one symbol entry overwritten. Only for fault-injection tests.
  FracLaplacian tampered_copy(std::size_t index, double value) const {
    FracLaplacian copy = *this;
    copy.symbol_.at(index) = value;
    return copy;
  }

 private:
  double alpha_;
  LatticeGrid grid_;
  std::vector<double> symbol_;
};

/// g with ghat(xi) = |xi|^alpha fhat(xi).
inline Field frac_laplacian_apply(const FracLaplacian& op, const Field& f) {
  if (!(f.grid == op.grid())) {
    throw ContractError("field grid does not match operator grid");
  }
  require_finite(f, "fractional Laplacian input");
  const auto& sym = op.symbol();
  return apply_multiplier(f, [&](std::size_t i) { return sym[i]; });
}

inline Field frac_laplacian_apply(double alpha, const Field& f) {
  return frac_laplacian_apply(FracLaplacian(alpha, f.grid), f);
}

/// Sobolev exponent. Inhomogeneous weight (1+|xi|^2)^{gamma/2}; homogeneous
/// weight |xi|^gamma with the xi = 0 mode dropped (a seminorm on the lattice).
struct SobolevIndex {
  double gamma = 0.0;
  bool homogeneous = false;

  /// Squared weight applied to |fhat|^2.
  double weight_sq(double xi_norm) const {
    if (homogeneous) {
      return xi_norm == 0.0 ? 0.0 : std::pow(xi_norm, 2.0 * gamma);
    }
    return std::pow(1.0 + xi_norm * xi_norm, gamma);
  }
};

/// Norm from a precomputed spectrum; Parseval-normalized so that
/// gamma = 0 (inhomogeneous) equals the Riemann-sum L2 norm.
inline double sobolev_norm_from_spectrum(const SobolevIndex& idx,
                                         const LatticeGrid& g,
                                         const Spectrum& s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    acc += idx.weight_sq(g.wavenumber_norm(i)) * std::norm(s[i]);
  }
  return std::sqrt(acc * g.cell_volume() / static_cast<double>(g.size()));
}

inline double sobolev_norm(const SobolevIndex& idx, const Field& f) {
  require_finite(f, "Sobolev norm input");
  return sobolev_norm_from_spectrum(idx, f.grid, forward(f));
}

/// |<(-Lap)^{a/2} f, g> - <(-Lap)^{a/4} f, (-Lap)^{a/4} g>|.
inline double plancherel_duality_residual(double alpha, const Field& f,
                                          const Field& g) {
  require_same_grid(f, g);
  const FracLaplacian full(alpha, f.grid);
  const FracLaplacian half(alpha / 2.0, f.grid);
  const double lhs = inner(frac_laplacian_apply(full, f), g);
  const double rhs =
      inner(frac_laplacian_apply(half, f), frac_laplacian_apply(half, g));
  return std::abs(lhs - rhs);
}

namespace detail {

inline double smooth_step_kernel(double s) {
  return s > 0.0 ? std::exp(-1.0 / s) : 0.0;
}

}  // namespace detail

/// Radial C-infinity cutoff: 1 on |y| <= 1, 0 on |y| >= 2, with the
/// e^{-1/s} quotient as the transition.
inline double unit_cutoff(double r) {
  const double a = detail::smooth_step_kernel(2.0 - r);
  const double b = detail::smooth_step_kernel(r - 1.0);
  if (b == 0.0) return 1.0;
  if (a == 0.0) return 0.0;
  return a / (a + b);
}

/// phi_R(x) = phi(x/R) sampled on the lattice.
inline Field cutoff_test_function(const LatticeGrid& grid, double radius) {
  if (!(radius > 0.0)) throw DomainError("cutoff radius must be positive");
  if (!(2.0 * radius < 0.5 * grid.side_length())) {
    throw DomainError("cutoff support 2R must lie strictly inside half the cell");
  }
  return Field::sample(grid, [radius](double x, double y) {
    return unit_cutoff(std::hypot(x, y) / radius);
  });
}

/// Evaluates the trigonometric interpolant of `f` at the points
/// scale * x_j of `target` (tensor product in 2-d). Nyquist modes are
/// folded into a cosine so the interpolant stays real.
inline Field resample_periodic(const Field& f, const LatticeGrid& target,
                               double scale) {
  const LatticeGrid& src = f.grid;
  if (src.dim() != target.dim()) throw ContractError("dimension mismatch in resample");
  const std::size_t m = src.points_per_dim();
  const std::size_t n = target.points_per_dim();
  const double x0 = src.coordinate(0);

  // basis[j][k]: mode k evaluated at target point j along one axis
  std::vector<std::complex<double>> basis(n * m);
  for (std::size_t j = 0; j < n; ++j) {
    const double p = scale * target.coordinate(j) - x0;
    for (std::size_t k = 0; k < m; ++k) {
      const double phase = src.wavenumber(k) * p;
      basis[j * m + k] = k == m / 2 ? std::complex<double>(std::cos(phase), 0.0)
                                    : std::polar(1.0, phase);
    }
  }

  const Spectrum s = forward(f);
  Field out(target, f.time);
  if (src.dim() == 1) {
    for (std::size_t j = 0; j < n; ++j) {
      std::complex<double> acc = 0.0;
      for (std::size_t k = 0; k < m; ++k) acc += s[k] * basis[j * m + k];
      out.values[j] = acc.real() / static_cast<double>(m);
    }
    return out;
  }
  // contract axis 1 first, then axis 0
  std::vector<std::complex<double>> partial(m * n);
  for (std::size_t k0 = 0; k0 < m; ++k0) {
    for (std::size_t j1 = 0; j1 < n; ++j1) {
      std::complex<double> acc = 0.0;
      for (std::size_t k1 = 0; k1 < m; ++k1) {
        acc += s[k0 * m + k1] * basis[j1 * m + k1];
      }
      partial[k0 * n + j1] = acc;
    }
  }
  const double norm = 1.0 / static_cast<double>(m * m);
  for (std::size_t j0 = 0; j0 < n; ++j0) {
    for (std::size_t j1 = 0; j1 < n; ++j1) {
      std::complex<double> acc = 0.0;
      for (std::size_t k0 = 0; k0 < m; ++k0) {
        acc += basis[j0 * m + k0] * partial[k0 * n + j1];
      }
      out.values[j0 * n + j1] = acc.real() * norm;
    }
  }
  return out;
}

/// sup_x |(-Lap)^{a/2}[phi(./R)](x) - R^{-a} [(-Lap)^{a/2} phi](x/R)|.
///
/// The left side lives on `grid`. The right side is computed on the box of
/// side L/R (so both sides see the same periodization) with
/// bit_floor(n/R) points, i.e. at roughly the same spacing as `grid`, and is
/// then resampled at x/R by trigonometric interpolation. For R = 1 the two
/// lattices coincide and the residual is pure rounding.
inline double cutoff_scaling_residual(double alpha, double radius,
                                      const LatticeGrid& grid) {
  const Field scaled = cutoff_test_function(grid, radius);
  const Field lhs = frac_laplacian_apply(FracLaplacian(alpha, grid), scaled);

  const double ratio = static_cast<double>(grid.points_per_dim()) / radius;
  std::size_t m = ratio >= 8.0 ? std::bit_floor(static_cast<std::size_t>(ratio)) : 8;
  m = std::min(m, grid.points_per_dim());
  const LatticeGrid unit_grid(grid.dim(), m, grid.side_length() / radius);
  const Field unit = cutoff_test_function(unit_grid, 1.0);
  const Field unit_applied =
      frac_laplacian_apply(FracLaplacian(alpha, unit_grid), unit);
  const Field rhs = resample_periodic(unit_applied, grid, 1.0 / radius);

  const double factor = std::pow(radius, -alpha);
  double worst = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    worst = std::max(worst, std::abs(lhs.values[i] - factor * rhs.values[i]));
  }
  return worst;
}

}  // namespace sfpme
