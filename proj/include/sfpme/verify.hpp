#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sfpme/analysis.hpp"
#include "sfpme/io.hpp"
#include "sfpme/kernel.hpp"
#include "sfpme/noise.hpp"
#include "sfpme/rng.hpp"
#include "sfpme/solver.hpp"
#include "sfpme/spectral.hpp"

namespace sfpme {

/// Fourier mode cos(xi_a x + xi_b y) (phase 0) or sin(...) (phase 1) for
/// integer wave indices (ka, kb). On the lattice x_j = -L/2 + j dx the phase
/// is 2 pi (ka j + kb l)/n - pi (ka + kb), so every sample is an exact table
/// entry cos(2 pi r/n) up to sign and no large arguments are reduced.
inline Field fourier_mode(const LatticeGrid& g, long ka, long kb, int phase) {
  const long n = static_cast<long>(g.points_per_dim());
  std::vector<double> table(static_cast<std::size_t>(n));
  for (long r = 0; r < n; ++r) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(n);
    table[static_cast<std::size_t>(r)] = phase == 0 ? std::cos(theta) : std::sin(theta);
  }
  const double sign = ((ka + kb) % 2 == 0) ? 1.0 : -1.0;
  auto wrap = [n](long v) { return static_cast<std::size_t>(((v % n) + n) % n); };
  Field f(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const long j = g.dim() == 1 ? static_cast<long>(i) : static_cast<long>(i) / n;
    const long l = g.dim() == 1 ? 0 : static_cast<long>(i) % n;
    f.values[i] = sign * table[wrap(ka * j + kb * l)];
  }
  return f;
}

namespace detail {

inline double max_symbol(const FracLaplacian& op) {
  const auto& s = op.symbol();
  return *std::max_element(s.begin(), s.end());
}

inline double mode_eigenvalue(const FracLaplacian& op, long ka, long kb) {
  const double s = 2.0 * std::numbers::pi / op.grid().side_length();
  const double xi = s * std::hypot(static_cast<double>(ka), static_cast<double>(kb));
  return xi == 0.0 ? 0.0 : std::pow(xi, op.alpha());
}

/// max |out - lam e| / (max symbol * max |e|).
inline double scaled_mode_error(const FracLaplacian& op, const Field& mode, const Field& out, double lam) {
  double worst = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    worst = std::max(worst, std::abs(out.values[i] - lam * mode.values[i]));
  }
  return worst / (max_symbol(op) * max_abs(mode));
}

/// Modes swept by the eigenfunction check: every index along each axis and
/// along the (k, k/2) direction in 2-d, both phases.
inline std::vector<std::array<long, 3>> swept_modes(const LatticeGrid& g) {
  const long top = static_cast<long>(g.points_per_dim()) / 2 - 1;
  std::vector<std::array<long, 3>> modes;
  for (long k = 0; k <= top; ++k) {
    for (long phase = 0; phase < 2; ++phase) {
      if (k == 0 && phase == 1) continue;
      modes.push_back({k, 0, phase});
      if (g.dim() == 2 && k > 0) {
        modes.push_back({0, k, phase});
        modes.push_back({k, k / 2, phase});
      }
    }
  }
  return modes;
}

}  // namespace detail

/// Error of A e = |xi|^alpha e for one real mode e, relative to the operator
/// norm max |xi|^alpha times max |e|. Relative to |xi|^alpha itself the error
/// of low modes carries roundoff from the top of the spectrum, amplified by
/// (max |xi| / |xi|)^alpha.
inline double eigen_residual(const FracLaplacian& op, long ka, long kb, int phase) {
  const LatticeGrid& g = op.grid();
  if (g.dim() == 1) kb = 0;
  const Field mode = fourier_mode(g, ka, kb, phase);
  return detail::scaled_mode_error(op, mode, frac_laplacian_apply(op, mode),
                                   detail::mode_eigenvalue(op, ka, kb));
}

/// Worst eigen_residual over the swept modes for several operators on one
/// grid; each mode is transformed once and shared by all operators.
inline std::vector<double> worst_eigen_residuals(std::span<const FracLaplacian> ops) {
  std::vector<double> worst(ops.size(), 0.0);
  if (ops.empty()) return worst;
  const LatticeGrid& g = ops.front().grid();
  for (const auto& op : ops) {
    if (!(op.grid() == g)) throw ContractError("operators must share one grid");
  }
  for (const auto& [ka, kb, phase] : detail::swept_modes(g)) {
    const Field mode = fourier_mode(g, ka, kb, static_cast<int>(phase));
    const Spectrum spec = forward(mode);
    for (std::size_t o = 0; o < ops.size(); ++o) {
      // the same forward / multiply / inverse sequence as frac_laplacian_apply
      Spectrum s = spec;
      const auto& sym = ops[o].symbol();
      for (std::size_t i = 0; i < s.size(); ++i) s[i] *= sym[i];
      const Field out = inverse_real(g, s, mode.time);
      worst[o] = std::max(worst[o], detail::scaled_mode_error(ops[o], mode, out,
                                                              detail::mode_eigenvalue(ops[o], ka, kb)));
    }
  }
  return worst;
}

inline double worst_eigen_residual(const FracLaplacian& op) {
  return worst_eigen_residuals(std::span<const FracLaplacian>(&op, 1)).front();
}

/// Real field with Gaussian Fourier coefficients on |k_axis| <= kmax,
/// reproducible from (seed, index).
inline Field random_bandlimited(const LatticeGrid& g, std::uint64_t seed, std::uint32_t index,
                                long kmax) {
  Field f(g);
  const double s = 2.0 * std::numbers::pi / g.side_length();
  std::uint32_t block = 0;
  const long kb_max = g.dim() == 1 ? 0 : kmax;
  for (long ka = 0; ka <= kmax; ++ka) {
    for (long kb = -kb_max; kb <= kb_max; ++kb) {
      const auto [a, b] = normal_pair({seed, 7, index, 0, block++});
      for (std::size_t i = 0; i < g.size(); ++i) {
        const auto p = g.position(i);
        const double arg = s * (static_cast<double>(ka) * p[0] + static_cast<double>(kb) * p[1]);
        f.values[i] += a * std::cos(arg) + b * std::sin(arg);
      }
    }
  }
  return f;
}

struct ClaimResult {
  std::string id;
  std::string description;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  /// "symbol" corrupts one entry of the fractional Laplacian symbol table.
  std::string fault;
  int workers = 1;
  std::uint64_t seed = 20240611;
};

struct Claim {
  std::string id;
  std::string description;
  std::function<ClaimResult(const VerifyOptions&)> run;
};

namespace detail {

inline std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

}  // namespace detail

/// Built-in desk-scale checks, one per analytic claim.
inline std::vector<Claim> verification_claims() {
  using Outcome = std::pair<bool, std::string>;
  std::vector<Claim> claims;
  auto add = [&](std::string id, std::string description,
                 std::function<Outcome(const VerifyOptions&)> check) {
    claims.push_back({id, description, [id, description, check](const VerifyOptions& opt) {
                        auto [ok, text] = check(opt);
                        return ClaimResult{id, description, ok, std::move(text)};
                      }});
  };

  add("fractional-laplacian", "Fourier symbol |xi|^alpha is applied exactly", [](const VerifyOptions& opt) -> Outcome {
    double worst = 0.0;
    for (int d : {1, 2}) {
      const LatticeGrid g(d, d == 1 ? 64 : 32, 2.0 * std::numbers::pi);
      for (double alpha : {0.5, 1.0, 1.5, 2.0}) {
        FracLaplacian op(alpha, g);
        if (opt.fault == "symbol") op = op.tampered_copy(1, op.symbol()[1] * 1.01);
        worst = std::max(worst, worst_eigen_residual(op));
      }
    }
    return Outcome{worst <= 1e-12, "max relative eigen error " + detail::sci(worst)};
  });

  add("plancherel-duality", "<A f, g> = <A^{1/2} f, A^{1/2} g>", [](const VerifyOptions& opt) -> Outcome {
    const LatticeGrid g(1, 64, 2.0 * std::numbers::pi);
    double worst = 0.0;
    for (std::uint32_t i = 0; i < 100; ++i) {
      const Field f = random_bandlimited(g, opt.seed, 2 * i, 20);
      const Field h = random_bandlimited(g, opt.seed, 2 * i + 1, 20);
      const double alpha = 0.2 + 1.8 * (i % 10) / 9.0;
      const double r = plancherel_duality_residual(alpha, f, h) / (1.0 + l2_norm(f) * l2_norm(h));
      worst = std::max(worst, r);
    }
    return Outcome{worst < 1e-10, "max scaled residual " + detail::sci(worst)};
  });

  add("stable-kernel", "closed forms and tail r^-(d+alpha)", [](const VerifyOptions&) -> Outcome {
    const double gauss = kernel_eval(StableKernel(2.0, 1), 1.0, 0.0);
    const double cauchy = kernel_eval(StableKernel(1.0, 1), 1.0, 2.0);
    const bool closed = std::abs(gauss - 1.0 / std::sqrt(4.0 * std::numbers::pi)) < 1e-9 &&
                        std::abs(cauchy - 1.0 / (5.0 * std::numbers::pi)) < 1e-9;
    const double slope = profile_tail_exponent(StableKernel(1.5, 1));
    const bool tail = std::abs(slope + 2.5) <= 0.05 * 2.5;
    return Outcome{closed && tail,
                               "tail slope (alpha=1.5, d=1) " + detail::sci(slope)};
  });

  add("noise-regularity", "white noise lies in H^gamma iff gamma < -d/2", [](const VerifyOptions& opt) -> Outcome {
    bool ok = true;
    std::string detail_text;
    const std::vector<double> g1{-1.0, -0.75, -0.5, 0.0};
    const std::vector<std::size_t> n1{64, 128, 256, 512};
    const std::vector<double> g2{-1.5, -1.01, -1.0, 0.0};
    const std::vector<std::size_t> n2{32, 64, 128};
    for (const auto& [d, gs, ns] :
         {std::tuple{1, g1, n1}, std::tuple{2, g2, n2}}) {
      const auto table = noise_regularity_divergence(d, gs, ns, 2, opt.seed);
      for (const auto& v : table.verdicts) {
        const bool expected = v.gamma < -0.5 * d;
        if (v.bounded != expected) {
          ok = false;
          detail_text += "misclassified d=" + std::to_string(d) + " gamma=" + detail::sci(v.gamma) + "; ";
        }
      }
    }
    return Outcome{ok, ok ? "threshold -d/2 reproduced for d = 1, 2" : detail_text};
  });

  add("rkhs-ratio", "|<W,phi>| / sqrt(K(phi,phi)) is independent of phi", [](const VerifyOptions& opt) -> Outcome {
    const LatticeGrid g(1, 64, 2.0 * std::numbers::pi);
    std::vector<Field> phis;
    for (int j = 0; j < 10; ++j) {
      const double c = -1.5 + 0.3 * j, w = 0.3 + 0.1 * j;
      phis.push_back(Field::sample(g, [=](double x, double) {
        return (1.0 + j) * std::exp(-(x - c) * (x - c) / (2.0 * w * w));
      }));
    }
    double spread = 0.0;
    for (std::uint32_t p = 0; p < 10; ++p) {
      const auto r = rkhs_ratio_check({NoiseKind::UniformWiener, opt.seed, 1}, 1.0, phis, 1e-2, p);
      const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
      spread = std::max(spread, *hi - *lo);
    }
    return Outcome{spread < 1e-10, "max ratio spread " + detail::sci(spread)};
  });

  add("mass-identity", "int u(t) = int u0 + noise integral on every path", [](const VerifyOptions& opt) -> Outcome {
    const LatticeGrid g(1, 64, 2.0 * std::numbers::pi);
    const Field u0 = Field::sample(g, [](double x, double) { return std::exp(-x * x); });
    double worst = 0.0;
    bool ok = true;
    for (double alpha : {0.8, 1.5, 2.0}) {
      for (double m : {0.5, 1.0, 2.0}) {
        const SfpmeProblem p(alpha, m, u0, SigmaSpec::one(), {NoiseKind::SpaceTimeWhite, opt.seed, 1});
        SolverConfig cfg;
        cfg.dt = 1e-2;
        cfg.t_end = 0.5;
        const Trajectory t = evolve(p, cfg, 0);
        if (!t.complete()) {
          ok = false;
          continue;
        }
        const double r = mass_identity_check(t);
        worst = std::max(worst, r);
        ok = ok && r < mass_identity_tolerance(t.mass_series);
      }
    }
    return Outcome{ok, "max residual " + detail::sci(worst)};
  });

  add("coupled-contraction", "E|int(u1-u2)|^2 <= Lip^2 int E||u1-u2||^2", [](const VerifyOptions& opt) -> Outcome {
    const LatticeGrid g(1, 32, 2.0 * std::numbers::pi);
    const Field u0 = Field::sample(g, [](double x, double) { return 1.0 + std::exp(-x * x); });
    const Field pert = Field::sample(g, [](double x, double) { return 0.05 * std::exp(-4.0 * x * x); });
    const SfpmeProblem p(1.5, 1.0, u0, SigmaSpec::linear(0.5), {NoiseKind::SpaceTimeWhite, opt.seed, 1});
    SolverConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_end = 1.0;
    cfg.snapshot_stride = 10;
    const auto r = contraction_check(p, cfg, pert, 100, opt.workers);
    return Outcome{r.holds(), "final lhs " + detail::sci(r.lhs.back()) + ", rhs " +
                                                   detail::sci(r.rhs.back())};
  });

  add("gronwall-envelope", "sqrt(E||u||^2) stays under the exponential envelope", [](const VerifyOptions& opt) -> Outcome {
    const LatticeGrid g(1, 32, 2.0 * std::numbers::pi);
    const Field u0 = Field::sample(g, [](double x, double) { return std::exp(-x * x / 2.0); });
    const SfpmeProblem p(1.5, 1.0, u0, SigmaSpec::linear(0.5), {NoiseKind::SpaceTimeWhite, opt.seed, 1});
    SolverConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_end = 1.0;
    const auto early = early_snapshots(p, cfg, 10, 0.1, opt.workers);
    const auto cal = calibrate_envelope(p, early);
    const auto stats = run_ensemble(p, cfg, 100, opt.workers);
    const auto rep = gronwall_envelope_check(stats, cal.envelope);
    return Outcome{rep.dominated() && rep.slope_ok(),
                               "C = " + detail::sci(cal.envelope.c_const) + ", slope " +
                                   detail::sci(rep.fitted_slope) + " <= " +
                                   detail::sci(rep.slope_bound)};
  });

  return claims;
}

}  // namespace sfpme
