#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sfpme/errors.hpp"

namespace sfpme {

/// Periodic lattice of n^d points on the box [-L/2, L/2)^d.
///
/// Point j along an axis sits at x_j = -L/2 + j*dx. Wavenumbers follow the
/// FFT ordering: index j maps to k = j for j < n/2 and k = j - n otherwise,
/// with xi_k = 2*pi*k/L.
class LatticeGrid {
 public:
  LatticeGrid(int dim, std::size_t points_per_dim, double side_length)
      : dim_(dim), n_(points_per_dim), length_(side_length) {
    if (dim != 1 && dim != 2) {
      throw DomainError("lattice dimension must be 1 or 2, got " +
                        std::to_string(dim));
    }
    if (n_ < 8 || !std::has_single_bit(n_)) {
      throw DomainError("points per dimension must be a power of two >= 8, got " +
                        std::to_string(n_));
    }
    if (!(side_length > 0.0) || !std::isfinite(side_length)) {
      throw DomainError("side length must be positive and finite");
    }
    spacing_ = length_ / static_cast<double>(n_);
    if (spacing_ * static_cast<double>(n_) != length_) {
      throw DomainError("side length is not exactly divisible by n");
    }
  }

  int dim() const noexcept { return dim_; }
  std::size_t points_per_dim() const noexcept { return n_; }
  double side_length() const noexcept { return length_; }
  double spacing() const noexcept { return spacing_; }

  std::size_t size() const noexcept { return dim_ == 1 ? n_ : n_ * n_; }

  /// Volume of one cell, dx^d.
  double cell_volume() const noexcept {
    return dim_ == 1 ? spacing_ : spacing_ * spacing_;
  }

  /// Volume of the whole box, L^d.
  double volume() const noexcept {
    return dim_ == 1 ? length_ : length_ * length_;
  }

  double coordinate(std::size_t j) const noexcept {
    return -0.5 * length_ + static_cast<double>(j) * spacing_;
  }

  /// Signed integer wavenumber of FFT index j.
  long wave_index(std::size_t j) const noexcept {
    const long jj = static_cast<long>(j);
    const long nn = static_cast<long>(n_);
    return jj < nn / 2 ? jj : jj - nn;
  }

  double wavenumber(std::size_t j) const noexcept {
    return 2.0 * std::numbers::pi * static_cast<double>(wave_index(j)) / length_;
  }

  /// Euclidean |xi| for flat spectral index `idx` (row-major for d = 2).
  double wavenumber_norm(std::size_t idx) const noexcept {
    if (dim_ == 1) return std::abs(wavenumber(idx));
    return std::hypot(wavenumber(idx / n_), wavenumber(idx % n_));
  }

  /// Position of flat point index `idx`.
  std::array<double, 2> position(std::size_t idx) const noexcept {
    if (dim_ == 1) return {coordinate(idx), 0.0};
    return {coordinate(idx / n_), coordinate(idx % n_)};
  }

  friend bool operator==(const LatticeGrid&, const LatticeGrid&) = default;

 private:
  int dim_;
  std::size_t n_;
  double length_;
  double spacing_ = 0.0;
};

/// Lattice sample of a real function u(., t).
struct Field {
  LatticeGrid grid;
  std::vector<double> values;
  double time = 0.0;

  explicit Field(const LatticeGrid& g, double t = 0.0)
      : grid(g), values(g.size(), 0.0), time(t) {}

  Field(const LatticeGrid& g, std::vector<double> v, double t = 0.0)
      : grid(g), values(std::move(v)), time(t) {
    if (values.size() != grid.size()) {
      throw ContractError("field has " + std::to_string(values.size()) +
                          " values, grid expects " + std::to_string(grid.size()));
    }
    if (!(t >= 0.0)) throw DomainError("field time tag must be nonnegative");
  }

  /// Samples f at every lattice point; f receives (x, y) with y = 0 when d = 1.
  static Field sample(const LatticeGrid& g,
                      const std::function<double(double, double)>& f,
                      double t = 0.0) {
    Field out(g, t);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto p = g.position(i);
      out.values[i] = f(p[0], p[1]);
    }
    return out;
  }

  std::size_t size() const noexcept { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

inline bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline void require_finite(const Field& f, const char* what) {
  if (!all_finite(f.values)) {
    throw InputError(std::string(what) + " contains non-finite values");
  }
}

inline void require_same_grid(const Field& a, const Field& b) {
  if (!(a.grid == b.grid)) throw ContractError("fields live on different grids");
}

/// Riemann sum of f over the box: sum_j f_j dx^d.
inline double integral(const Field& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s * f.grid.cell_volume();
}

inline double l1_norm(const Field& f) {
  double s = 0.0;
  for (double v : f.values) s += std::abs(v);
  return s * f.grid.cell_volume();
}

inline double inner(const Field& a, const Field& b) {
  require_same_grid(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values[i] * b.values[i];
  return s * a.grid.cell_volume();
}

inline double l2_norm_sq(const Field& f) {
  double s = 0.0;
  for (double v : f.values) s += v * v;
  return s * f.grid.cell_volume();
}

inline double l2_norm(const Field& f) { return std::sqrt(l2_norm_sq(f)); }

inline double max_abs(const Field& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs_diff(const Field& a, const Field& b) {
  require_same_grid(a, b);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.values[i] - b.values[i]));
  }
  return m;
}

}  // namespace sfpme
