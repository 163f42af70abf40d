#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "sfpme/fft.hpp"
#include "sfpme/grid.hpp"
#include "sfpme/rng.hpp"
#include "sfpme/spectral.hpp"

namespace sfpme {

enum class NoiseKind { SpaceTimeWhite, UniformWiener };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::SpaceTimeWhite;
  std::uint64_t seed = 0;
  int dim = 1;

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

/// Cell-integrated increments W(cell x [t, t + dt]).
struct NoiseIncrement {
  LatticeGrid grid;
  double dt;
  std::vector<double> values;
  /// Brownian increment behind a UniformWiener draw; 0 for white noise.
  double brownian = 0.0;
};

/// (2 pi)^{-d/4}, the amplitude of the spatially uniform Wiener field.
inline double uniform_wiener_amplitude(int dim) {
  return std::pow(2.0 * std::numbers::pi, -0.25 * dim);
}

namespace detail {
// Distinct stream tags so the two noise models never share draws.
inline constexpr std::uint32_t kWhiteTag = 1;
inline constexpr std::uint32_t kWienerTag = 2;
}  // namespace detail

/// Increment number `step` of path `path`. The draw depends only on
/// (seed, kind, path, step, cell), never on call order.
inline NoiseIncrement sample_increment(const NoiseSpec& spec, const LatticeGrid& grid,
                                       double dt, std::uint64_t step,
                                       std::uint32_t path = 0) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("noise dt must be positive");
  if (spec.dim != grid.dim()) throw ContractError("noise dimension does not match grid");
  NoiseIncrement inc{grid, dt, std::vector<double>(grid.size()), 0.0};
  if (spec.kind == NoiseKind::UniformWiener) {
    const auto [z, unused] = normal_pair({spec.seed, detail::kWienerTag, path, step, 0});
    (void)unused;
    inc.brownian = std::sqrt(dt) * z;
    const double cell = uniform_wiener_amplitude(grid.dim()) * inc.brownian *
                        grid.cell_volume();
    std::fill(inc.values.begin(), inc.values.end(), cell);
    return inc;
  }
  const double sd = std::sqrt(dt * grid.cell_volume());
  for (std::size_t i = 0; i < grid.size(); i += 2) {
    const auto [a, b] = normal_pair(
        {spec.seed, detail::kWhiteTag, path, step, static_cast<std::uint32_t>(i / 2)});
    inc.values[i] = sd * a;
    if (i + 1 < grid.size()) inc.values[i + 1] = sd * b;
  }
  return inc;
}

/// Riemann pairing sum_cells inc * phi.
inline double pair_with_test_function(const NoiseIncrement& inc, const Field& phi) {
  if (!(inc.grid == phi.grid)) throw ContractError("increment and test function grids differ");
  double s = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) s += inc.values[i] * phi.values[i];
  return s;
}

/// Covariance K_t(phi, psi) of the pairing <W(t), .> for the uniform Wiener
/// field: (2 pi)^{-d/2} t (int phi)(int psi).
struct CovarianceFunctional {
  NoiseKind kind = NoiseKind::UniformWiener;
  double time = 1.0;

  double operator()(const Field& phi, const Field& psi) const {
    if (kind != NoiseKind::UniformWiener) {
      throw UnsupportedError("closed-form covariance is only available for uniform noise");
    }
    require_same_grid(phi, psi);
    const int d = phi.grid.dim();
    return std::pow(2.0 * std::numbers::pi, -0.5 * d) * time * integral(phi) *
           integral(psi);
  }
};

/// A constant C with |K_t(phi, psi)| <= C ||phi||_{H^1} ||psi||_{H^1} on a
/// box of side L: Cauchy-Schwarz gives |int phi| <= L^{d/2} ||phi||_{L^2}.
inline double covariance_bound_constant(int dim, double t, double side_length) {
  return std::pow(2.0 * std::numbers::pi, -0.5 * dim) * t * std::pow(side_length, dim);
}

/// B(t) of one path, accumulated from increments of length dt
/// (t is rounded to the nearest multiple of dt).
inline double brownian_value(const NoiseSpec& spec, const LatticeGrid& grid, double t,
                             double dt, std::uint32_t path = 0) {
  if (spec.kind != NoiseKind::UniformWiener) {
    throw UnsupportedError("Brownian driver exists only for uniform noise");
  }
  const auto steps = static_cast<std::uint64_t>(std::llround(t / dt));
  double b = 0.0;
  for (std::uint64_t k = 0; k < steps; ++k) {
    b += sample_increment(spec, grid, dt, k, path).brownian;
  }
  return b;
}

/// |<W(t), phi>| / sqrt(K_t(phi, phi)) for each phi along one sampled path.
/// W(t) is the sum of the cell increments up to t, so the pairing is
/// (2 pi)^{-d/4} B(t) int phi.
inline std::vector<double> rkhs_ratio_check(const NoiseSpec& spec, double t,
                                            std::span<const Field> phis,
                                            double dt = 1e-2, std::uint32_t path = 0) {
  if (spec.kind != NoiseKind::UniformWiener) {
    throw UnsupportedError(
        "white noise admits no finite RKHS constant; use uniform Wiener noise");
  }
  if (!(t > 0.0)) throw DomainError("time must be positive");
  if (phis.empty()) return {};
  const LatticeGrid& g = phis.front().grid;
  const auto steps = static_cast<std::uint64_t>(std::llround(t / dt));
  NoiseIncrement total{g, t, std::vector<double>(g.size(), 0.0), 0.0};
  for (std::uint64_t k = 0; k < steps; ++k) {
    const auto inc = sample_increment(spec, g, dt, k, path);
    for (std::size_t i = 0; i < g.size(); ++i) total.values[i] += inc.values[i];
  }
  const CovarianceFunctional cov{NoiseKind::UniformWiener, steps * dt};
  std::vector<double> ratios;
  ratios.reserve(phis.size());
  for (const Field& phi : phis) {
    if (!(phi.grid == g)) throw ContractError("test functions live on different grids");
    const double mass = integral(phi);
    // a zero-mean field leaves only summation roundoff in its integral
    if (std::abs(mass) <= 1e-12 * std::sqrt(l2_norm_sq(phi) * g.volume())) {
      throw InputError("test function with zero integral is excluded");
    }
    ratios.push_back(std::abs(pair_with_test_function(total, phi)) /
                     std::sqrt(cov(phi, phi)));
  }
  return ratios;
}

/// One row of the white-noise regularity table.
struct RegularityRow {
  double gamma = 0.0;
  std::size_t n = 0;
  /// sqrt(E ||W||^2_{H^gamma}) computed exactly as sqrt(sum_k (1 + |k|^2)^gamma).
  double closed_form = 0.0;
  /// Mean of ||W||_{H^gamma} over the sampled fields.
  double monte_carlo = 0.0;
};

struct RegularityVerdict {
  double gamma = 0.0;
  /// Ratio of successive increments of E||W||^2 at the finest three levels.
  double increment_ratio = 0.0;
  bool bounded = false;
};

struct RegularityTable {
  std::vector<RegularityRow> rows;
  std::vector<RegularityVerdict> verdicts;
};

/// Discrete H^gamma norms of white noise on the 2 pi periodic lattice of
/// dimension d_total. The field is the lattice density (variance 1/dx^d per
/// point), so E||W||^2_{H^gamma} = sum_k (1 + |k|^2)^gamma exactly.
///
/// The sequence of squared norms at resolutions n, 2n, 4n has increments
/// growing like 2^{d + 2 gamma}; it is bounded iff the ratio of consecutive
/// increments is below 1.
inline RegularityTable noise_regularity_divergence(int d_total,
                                                   std::span<const double> gammas,
                                                   std::span<const std::size_t> resolutions,
                                                   int samples = 4,
                                                   std::uint64_t seed = 2024) {
  if (resolutions.size() < 3) throw InputError("need at least three resolutions");
  for (std::size_t i = 1; i < resolutions.size(); ++i) {
    if (resolutions[i] != 2 * resolutions[i - 1]) {
      throw InputError("resolutions must double from one level to the next");
    }
  }
  RegularityTable table;
  const NoiseSpec spec{NoiseKind::SpaceTimeWhite, seed, d_total};
  for (double gamma : gammas) {
    const SobolevIndex idx{gamma, false};
    std::vector<double> sums;
    for (std::size_t n : resolutions) {
      const LatticeGrid g(d_total, n, 2.0 * std::numbers::pi);
      double exact = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) exact += idx.weight_sq(g.wavenumber_norm(i));
      double mc = 0.0;
      for (int s = 0; s < samples; ++s) {
        // dt = 1 and a division by the cell volume turn cell integrals into densities
        auto inc = sample_increment(spec, g, 1.0, static_cast<std::uint64_t>(n),
                                    static_cast<std::uint32_t>(s));
        Field w(g, std::move(inc.values));
        for (double& v : w.values) v /= g.cell_volume();
        mc += sobolev_norm(idx, w);
      }
      table.rows.push_back({gamma, n, std::sqrt(exact), mc / samples});
      sums.push_back(exact);
    }
    const std::size_t k = sums.size();
    const double ratio = (sums[k - 1] - sums[k - 2]) / (sums[k - 2] - sums[k - 3]);
    table.verdicts.push_back({gamma, ratio, ratio < 1.0});
  }
  return table;
}

}  // namespace sfpme
