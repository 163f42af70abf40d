#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sfpme/fft.hpp"
#include "sfpme/grid.hpp"
#include "sfpme/mass_record.hpp"
#include "sfpme/noise.hpp"
#include "sfpme/spectral.hpp"

namespace sfpme {

enum class SigmaKind { Zero, One, Linear, CustomLipschitz };

/// Noise coefficient sigma(u) with its Lipschitz constant.
class SigmaSpec {
 public:
  SigmaSpec() = default;

  static SigmaSpec zero() { return SigmaSpec(SigmaKind::Zero, 0.0, 0.0, {}); }
  static SigmaSpec one() { return SigmaSpec(SigmaKind::One, 0.0, 0.0, {}); }
  static SigmaSpec linear(double lambda) {
    if (!std::isfinite(lambda)) throw DomainError("linear noise coefficient must be finite");
    return SigmaSpec(SigmaKind::Linear, lambda, std::abs(lambda), {});
  }

  /// Accepts `f` only after an audit: f(0) = 0 and the difference quotient
  /// over 10^4 random pairs in [-audit_range, audit_range] stays within
  /// lip (1 + 1e-9).
  static SigmaSpec custom(std::function<double(double)> f, double lip,
                          double audit_range = 10.0, std::uint64_t audit_seed = 7) {
    if (!f) throw InputError("custom noise coefficient is empty");
    if (!(lip >= 0.0) || !std::isfinite(lip)) {
      throw DomainError("Lipschitz constant must be finite and nonnegative");
    }
    if (f(0.0) != 0.0) throw DomainError("custom noise coefficient must vanish at 0");
    std::mt19937_64 gen(audit_seed);
    std::uniform_real_distribution<double> pick(-audit_range, audit_range);
    for (int i = 0; i < 10000; ++i) {
      const double x = pick(gen);
      const double y = pick(gen);
      if (x == y) continue;
      const double q = std::abs(f(x) - f(y)) / std::abs(x - y);
      if (!(q <= lip * (1.0 + 1e-9))) {
        throw DomainError("custom noise coefficient fails the Lipschitz audit");
      }
    }
    return SigmaSpec(SigmaKind::CustomLipschitz, 0.0, lip, std::move(f));
  }

  SigmaKind kind() const noexcept { return kind_; }
  double lambda() const noexcept { return lambda_; }
  double lip_constant() const noexcept { return lip_; }

  double operator()(double u) const {
    switch (kind_) {
      case SigmaKind::Zero: return 0.0;
      case SigmaKind::One: return 1.0;
      case SigmaKind::Linear: return lambda_ * u;
      case SigmaKind::CustomLipschitz: return custom_(u);
    }
    return 0.0;
  }

 private:
  SigmaSpec(SigmaKind k, double lambda, double lip, std::function<double(double)> f)
      : kind_(k), lambda_(lambda), lip_(lip), custom_(std::move(f)) {}

  SigmaKind kind_ = SigmaKind::Zero;
  double lambda_ = 0.0;
  double lip_ = 0.0;
  std::function<double(double)> custom_;
};

struct SfpmeProblem {
  double alpha = 1.0;
  double m = 1.0;
  LatticeGrid grid;
  Field u0;
  SigmaSpec sigma;
  NoiseSpec noise;

  SfpmeProblem(double a, double m_exp, const Field& initial, SigmaSpec s, NoiseSpec nz)
      : alpha(a), m(m_exp), grid(initial.grid), u0(initial), sigma(std::move(s)),
        noise(nz) {
    noise.dim = grid.dim();
    validate();
  }

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("alpha must lie in (0, 2]");
    if (!(m > 0.0) || !std::isfinite(m)) throw DomainError("porous medium exponent must be positive");
    if (!(u0.grid == grid)) throw ContractError("initial data grid differs from problem grid");
    require_finite(u0, "initial data");
    if (!std::isfinite(l1_norm(u0))) throw InputError("initial data has infinite L1 norm");
  }
};

enum class Scheme { ExplicitEM, SemiImplicitSpectral };

struct SolverConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  Scheme scheme = Scheme::SemiImplicitSpectral;
  bool dealias = true;
  double cfl_safety = 0.9;
  /// Keep every k-th field; 0 selects ceil(t_end / (100 dt)).
  std::size_t snapshot_stride = 0;

  std::size_t step_count() const {
    return static_cast<std::size_t>(std::llround(t_end / dt));
  }

  std::size_t effective_stride() const {
    if (snapshot_stride > 0) return snapshot_stride;
    return static_cast<std::size_t>(std::max(1.0, std::ceil(t_end / (100.0 * dt) - 1e-9)));
  }

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dt must be positive");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw DomainError("t_end must be positive");
    if (t_end < dt * (1.0 - 1e-12)) throw DomainError("t_end must be at least dt");
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) {
      throw DomainError("cfl_safety must lie in (0, 1]");
    }
  }
};

enum class TrajectoryStatus { Complete, BlownUp, StepSizeViolation };

struct Trajectory {
  std::uint32_t path_id = 0;
  double dt = 0.0;
  std::size_t snapshot_stride = 1;
  /// Times of the stored snapshots (strictly increasing, starting at 0).
  std::vector<double> times;
  std::vector<Field> snapshots;
  /// One entry per step, including t = 0.
  MassProcessRecord mass_series;
  std::vector<double> l2_sq_series;
  std::vector<double> sup_series;

  TrajectoryStatus status = TrajectoryStatus::Complete;
  std::string message;
  double failure_time = 0.0;
  double suggested_dt = 0.0;

  bool complete() const noexcept { return status == TrajectoryStatus::Complete; }
};

/// Rethrows the failure recorded in a partial trajectory.
inline void require_complete(const Trajectory& traj) {
  switch (traj.status) {
    case TrajectoryStatus::Complete: return;
    case TrajectoryStatus::BlownUp: throw BlowUpError(traj.message, traj.failure_time);
    case TrajectoryStatus::StepSizeViolation:
      throw StepSizeError(traj.message, traj.suggested_dt);
  }
}

/// Threshold above which |u| is declared blown up.
inline constexpr double kBlowUpCap = 1e8;

namespace detail {

inline double odd_power(double u, double m) {
  if (m == 1.0) return u;
  if (m == 2.0) return u * std::abs(u);
  if (m == 3.0) return u * u * u;
  return std::copysign(std::pow(std::abs(u), m), u);
}

inline bool is_integer_exponent(double m) { return m == std::floor(m); }

/// Zero-pads a spectrum on an n-lattice to the 2n-lattice of the same box.
inline Spectrum pad_spectrum(const LatticeGrid& src, const LatticeGrid& dst,
                             const Spectrum& s) {
  const std::size_t n = src.points_per_dim();
  const std::size_t big = dst.points_per_dim();
  auto map = [&](std::size_t j) {
    const long k = src.wave_index(j);
    return static_cast<std::size_t>(k < 0 ? k + static_cast<long>(big) : k);
  };
  Spectrum out(dst.size(), 0.0);
  const double scale = static_cast<double>(dst.size()) / static_cast<double>(src.size());
  if (src.dim() == 1) {
    for (std::size_t j = 0; j < n; ++j) out[map(j)] = s[j] * scale;
  } else {
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) out[map(a) * big + map(b)] = s[a * n + b] * scale;
    }
  }
  return out;
}

/// Inverse of pad_spectrum: keeps the modes representable on the n-lattice.
inline Spectrum truncate_spectrum(const LatticeGrid& big_grid, const LatticeGrid& dst,
                                  const Spectrum& s) {
  const std::size_t n = dst.points_per_dim();
  const std::size_t big = big_grid.points_per_dim();
  auto map = [&](std::size_t j) {
    const long k = dst.wave_index(j);
    return static_cast<std::size_t>(k < 0 ? k + static_cast<long>(big) : k);
  };
  Spectrum out(dst.size());
  const double scale = static_cast<double>(dst.size()) / static_cast<double>(big_grid.size());
  if (dst.dim() == 1) {
    for (std::size_t j = 0; j < n; ++j) out[j] = s[map(j)] * scale;
  } else {
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) out[a * n + b] = s[map(a) * big + map(b)] * scale;
    }
  }
  return out;
}

}  // namespace detail

/// True when the 2/3 rule removes spectral index j of an axis.
inline bool outside_two_thirds(const LatticeGrid& g, std::size_t j) {
  return 3 * static_cast<std::size_t>(std::abs(g.wave_index(j))) > g.points_per_dim();
}

/// Spectrum of sign(u)|u|^m, dealiased on request: the 2/3 rule for integer
/// m, a twice finer evaluation lattice for fractional m.
inline Spectrum power_nonlinearity_spectrum(const Field& f, double m, bool dealias) {
  if (!(m > 0.0) || !std::isfinite(m)) throw DomainError("power exponent must be positive");
  require_finite(f, "power nonlinearity input");
  const LatticeGrid& g = f.grid;
  if (m == 1.0) return forward(f);
  if (!dealias) {
    Field p(g, f.time);
    for (std::size_t i = 0; i < f.size(); ++i) p.values[i] = detail::odd_power(f.values[i], m);
    return forward(p);
  }
  if (detail::is_integer_exponent(m)) {
    Field p(g, f.time);
    for (std::size_t i = 0; i < f.size(); ++i) p.values[i] = detail::odd_power(f.values[i], m);
    Spectrum s = forward(p);
    const std::size_t n = g.points_per_dim();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const bool cut = g.dim() == 1 ? outside_two_thirds(g, i)
                                    : outside_two_thirds(g, i / n) || outside_two_thirds(g, i % n);
      if (cut) s[i] = 0.0;
    }
    return s;
  }
  const LatticeGrid fine(g.dim(), 2 * g.points_per_dim(), g.side_length());
  Field u_fine = inverse_real(fine, detail::pad_spectrum(g, fine, forward(f)), f.time);
  for (double& v : u_fine.values) v = detail::odd_power(v, m);
  return detail::truncate_spectrum(fine, g, forward(u_fine));
}

/// sign(u)|u|^m on the lattice; returns f itself for m = 1.
inline Field power_nonlinearity(const Field& f, double m, bool dealias = false) {
  if (m == 1.0) {
    require_finite(f, "power nonlinearity input");
    return f;
  }
  if (!dealias) {
    if (!(m > 0.0) || !std::isfinite(m)) throw DomainError("power exponent must be positive");
    require_finite(f, "power nonlinearity input");
    Field p(f.grid, f.time);
    for (std::size_t i = 0; i < f.size(); ++i) p.values[i] = detail::odd_power(f.values[i], m);
    return p;
  }
  return inverse_real(f.grid, power_nonlinearity_spectrum(f, m, true), f.time);
}

/// Linearization slope a = m max|u|^{m-1} of u -> u^m (1 for m = 1, 0 on u = 0).
inline double linearization_slope(const Field& u, double m) {
  if (m == 1.0) return 1.0;
  const double top = max_abs(u);
  return top == 0.0 ? 0.0 : m * std::pow(top, m - 1.0);
}

/// Largest explicit step allowed by the linearized stability bound
/// dt <= cfl_safety / (a * max|xi|^alpha). In one dimension the maximal
/// symbol is (pi/dx)^alpha.
inline double explicit_step_limit(const FracLaplacian& op, const Field& u, double m,
                                  double cfl_safety) {
  const double a = linearization_slope(u, m);
  double top = 0.0;
  for (double s : op.symbol()) top = std::max(top, s);
  if (a == 0.0 || top == 0.0) return std::numeric_limits<double>::infinity();
  return cfl_safety / (a * top);
}

/// Integral of sigma(u) against the cell increments: the mass the noise adds
/// in one step.
inline double noise_mass(const SigmaSpec& sigma, const Field& u, const NoiseIncrement& inc) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += sigma(u.values[i]) * inc.values[i];
  return s;
}

/// One step of size cfg.dt from (u, t) driven by `inc`.
///
/// ExplicitEM: u' = u - dt (-Lap)^{a/2}[u^m] + sigma(u) inc / dx^d.
/// SemiImplicitSpectral: with a = m max|u|^{m-1}, the linear part a u is
/// taken implicitly,
///   (1 + dt a |xi|^alpha) u'^ = (1 + dt a |xi|^alpha) u^ - dt |xi|^alpha N^,
/// and the noise is added explicitly. The zero mode never sees the
/// diffusion, so the mass changes by exactly sum sigma(u) inc.
inline Field step(const SfpmeProblem& problem, const SolverConfig& cfg,
                  const FracLaplacian& op, const Field& u, double t,
                  const NoiseIncrement* inc) {
  const LatticeGrid& g = u.grid;
  const double dt = cfg.dt;
  if (inc != nullptr && std::abs(inc->dt - dt) > 1e-15 * dt) {
    throw ContractError("noise increment dt differs from the solver dt");
  }
  if (cfg.scheme == Scheme::ExplicitEM) {
    const double limit = explicit_step_limit(op, u, problem.m, cfg.cfl_safety);
    if (dt > limit) {
      throw StepSizeError("explicit step dt = " + std::to_string(dt) +
                              " exceeds the stability bound at t = " + std::to_string(t),
                          limit);
    }
  }
  const Spectrum nonlinear = power_nonlinearity_spectrum(u, problem.m, cfg.dealias);
  const auto& sym = op.symbol();
  Spectrum change(g.size());
  if (cfg.scheme == Scheme::ExplicitEM) {
    for (std::size_t i = 0; i < change.size(); ++i) change[i] = -dt * sym[i] * nonlinear[i];
  } else {
    const double a = linearization_slope(u, problem.m);
    for (std::size_t i = 0; i < change.size(); ++i) {
      change[i] = -dt * sym[i] * nonlinear[i] / (1.0 + dt * a * sym[i]);
    }
  }
  Field next = inverse_real(g, change, t + dt);
  for (std::size_t i = 0; i < next.size(); ++i) next.values[i] += u.values[i];
  if (inc != nullptr && problem.sigma.kind() != SigmaKind::Zero) {
    const double inv_cell = 1.0 / g.cell_volume();
    for (std::size_t i = 0; i < next.size(); ++i) {
      next.values[i] += problem.sigma(u.values[i]) * inc->values[i] * inv_cell;
    }
  }
  for (double v : next.values) {
    if (!std::isfinite(v) || std::abs(v) > kBlowUpCap) {
      throw BlowUpError("solution left the representable range", t + dt);
    }
  }
  return next;
}

/// Runs step from u0 to the last multiple of dt not after t_end. Failures are
/// recorded in the returned trajectory rather than thrown.
inline Trajectory evolve(const SfpmeProblem& problem, const SolverConfig& cfg,
                         std::uint32_t path_id) {
  problem.validate();
  cfg.validate();
  const FracLaplacian op(problem.alpha, problem.grid);
  const std::size_t steps = cfg.step_count();
  const std::size_t stride = cfg.effective_stride();

  Trajectory traj;
  traj.path_id = path_id;
  traj.dt = cfg.dt;
  traj.snapshot_stride = stride;

  Field u = problem.u0;
  u.time = 0.0;
  const double f0 = integral(u);
  traj.mass_series.initial_mass = f0;
  traj.mass_series.push(0.0, f0, 0.0);
  traj.l2_sq_series.push_back(l2_norm_sq(u));
  traj.sup_series.push_back(max_abs(u));
  traj.times.push_back(0.0);
  traj.snapshots.push_back(u);

  const bool noisy = problem.sigma.kind() != SigmaKind::Zero;
  double accumulated = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    std::optional<NoiseIncrement> inc;
    if (noisy) inc = sample_increment(problem.noise, problem.grid, cfg.dt, k, path_id);
    try {
      Field next = step(problem, cfg, op, u, t, inc ? &*inc : nullptr);
      if (inc) accumulated += noise_mass(problem.sigma, u, *inc);
      u = std::move(next);
    } catch (const StepSizeError& e) {
      traj.status = TrajectoryStatus::StepSizeViolation;
      traj.message = e.what();
      traj.failure_time = t;
      traj.suggested_dt = e.suggested_dt();
      return traj;
    } catch (const BlowUpError& e) {
      traj.status = TrajectoryStatus::BlownUp;
      traj.message = e.what();
      traj.failure_time = e.time();
      return traj;
    }
    const double tn = static_cast<double>(k + 1) * cfg.dt;
    u.time = tn;
    traj.mass_series.push(tn, integral(u), accumulated);
    traj.l2_sq_series.push_back(l2_norm_sq(u));
    traj.sup_series.push_back(max_abs(u));
    if ((k + 1) % stride == 0 || k + 1 == steps) {
      traj.times.push_back(tn);
      traj.snapshots.push_back(u);
    }
  }
  return traj;
}

/// Space-time test function psi(x, t) together with its time derivative.
struct SpaceTimeTestFunction {
  std::function<double(double, double, double)> value;
  std::function<double(double, double, double)> time_derivative;

  Field at(const LatticeGrid& g, double t) const {
    return Field::sample(g, [&](double x, double y) { return value(x, y, t); });
  }
  Field rate_at(const LatticeGrid& g, double t) const {
    return Field::sample(g, [&](double x, double y) { return time_derivative(x, y, t); });
  }
};

/// |LHS - RHS| of the weak form integrated by parts,
///   int int u psi_t = int int (-Lap)^{a/4} u^m (-Lap)^{a/4} psi + noise term,
/// with Riemann sums in space and time.
///
/// The left side uses u at t_{n+1} against psi_t at t_{n+1/2}; the diffusion
/// term uses left endpoints; the noise term replays the increments of the
/// trajectory from (noise spec, path, step). For sigma = One it is written
/// int <W(t), psi_t> dt with W the accumulated noise; otherwise it is
/// -sum_n sum_cells sigma(u_n) inc_n psi_n. For the explicit scheme the
/// discrete identity is matched up to O(dt^2).
inline double weak_form_residual(const Trajectory& traj, const SfpmeProblem& problem,
                                 const SolverConfig& cfg, const SpaceTimeTestFunction& psi) {
  if (traj.snapshot_stride != 1) {
    throw PreconditionError("weak form needs every time step stored (snapshot stride 1)");
  }
  if (!traj.complete()) throw PreconditionError("trajectory is incomplete");
  if (traj.snapshots.size() < 2) throw PreconditionError("trajectory has no steps");
  const LatticeGrid& g = problem.grid;
  const double dt = traj.dt;
  const std::size_t steps = traj.snapshots.size() - 1;
  const double t_end = static_cast<double>(steps) * dt;

  const double edge = std::max(max_abs(psi.at(g, 0.0)), max_abs(psi.at(g, t_end)));
  if (edge > 1e-12) {
    throw PreconditionError("test function must vanish at t = 0 and at the final time");
  }

  const FracLaplacian half(problem.alpha / 2.0, g);
  const bool noisy = problem.sigma.kind() != SigmaKind::Zero;
  const bool literal = problem.sigma.kind() == SigmaKind::One;
  std::vector<double> cumulative(g.size(), 0.0);

  double lhs = 0.0, diffusion = 0.0, noise = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Field& u = traj.snapshots[k];
    const Field psi_now = psi.at(g, t);
    const Field psi_mid_rate = psi.rate_at(g, t + 0.5 * dt);

    lhs += dt * inner(traj.snapshots[k + 1], psi_mid_rate);

    const Field um = inverse_real(g, power_nonlinearity_spectrum(u, problem.m, cfg.dealias));
    diffusion += dt * inner(frac_laplacian_apply(half, um), frac_laplacian_apply(half, psi_now));

    if (!noisy) continue;
    const auto inc = sample_increment(problem.noise, g, dt, k, traj.path_id);
    if (literal) {
      for (std::size_t i = 0; i < g.size(); ++i) cumulative[i] += inc.values[i];
      double pairing = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) pairing += cumulative[i] * psi_mid_rate.values[i];
      noise += dt * pairing;
    } else {
      double pairing = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        pairing += problem.sigma(u.values[i]) * inc.values[i] * psi_now.values[i];
      }
      noise -= pairing;
    }
  }
  return std::abs(lhs - diffusion - noise);
}

}  // namespace sfpme
