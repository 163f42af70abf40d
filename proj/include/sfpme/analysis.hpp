#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "sfpme/grid.hpp"
#include "sfpme/mass_record.hpp"
#include "sfpme/solver.hpp"
#include "sfpme/stats.hpp"

namespace sfpme {

/// Per-checkpoint Monte Carlo moments over an ensemble of paths.
struct EnsembleStats {
  std::vector<double> times;
  /// Estimates of E ||u(t)||^2_{L^2}.
  std::vector<double> mean_sq_norm;
  std::vector<double> mean_mass;
  std::vector<double> var_mass;
  /// 95% normal-approximation half-widths of the three estimators above.
  std::vector<double> half_width_sq_norm;
  std::vector<double> half_width_mass;
  std::vector<double> half_width_var_mass;
  std::size_t n_paths = 0;
  std::vector<std::uint32_t> blown_up_paths;

  double sqrt_mean_sq_norm(std::size_t k) const { return std::sqrt(mean_sq_norm[k]); }

  /// Half-width of sqrt(E||u||^2) by the delta method.
  double half_width_sqrt(std::size_t k) const {
    const double root = sqrt_mean_sq_norm(k);
    return root > 0.0 ? half_width_sq_norm[k] / (2.0 * root) : half_width_sq_norm[k];
  }
};

namespace detail {

inline std::vector<std::size_t> checkpoint_steps(const SolverConfig& cfg) {
  const std::size_t steps = cfg.step_count();
  const std::size_t stride = cfg.effective_stride();
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < steps; k += stride) out.push_back(k);
  out.push_back(steps);
  return out;
}

/// Mean, variance and 95% half-widths of one column of per-path values.
struct ColumnMoments {
  double mean = 0.0;
  double variance = 0.0;
  double half_width_mean = 0.0;
  double half_width_variance = 0.0;
};

inline ColumnMoments column_moments(std::span<const double> v) {
  ColumnMoments c;
  const double n = static_cast<double>(v.size());
  c.mean = mean(v);
  c.variance = sample_variance(v);
  c.half_width_mean = kZ95 * std::sqrt(c.variance / n);
  c.half_width_variance = kZ95 * c.variance * std::sqrt(2.0 / (n - 1.0));
  return c;
}

}  // namespace detail

/// Runs evolve on paths 0 .. n_paths-1 and aggregates per-checkpoint
/// statistics in path order, so the result is independent of `workers`.
/// Blown-up paths are excluded and listed; more than 1% of them fails the run.
inline EnsembleStats run_ensemble(const SfpmeProblem& problem, const SolverConfig& cfg,
                                  std::size_t n_paths, int workers = 0) {
  if (n_paths < 2) throw PreconditionError("an ensemble needs at least two paths");
  cfg.validate();
  const auto checkpoints = detail::checkpoint_steps(cfg);
  SolverConfig run_cfg = cfg;
  run_cfg.snapshot_stride = cfg.step_count();  // fields are not needed here

  struct PathSeries {
    std::vector<double> mass, sq_norm;
    TrajectoryStatus status = TrajectoryStatus::Complete;
    std::string message;
    double suggested_dt = 0.0;
  };
  std::vector<PathSeries> paths(n_paths);
  parallel_for(n_paths, resolve_workers(workers), [&](std::size_t p) {
    const Trajectory traj = evolve(problem, run_cfg, static_cast<std::uint32_t>(p));
    PathSeries& out = paths[p];
    out.status = traj.status;
    out.message = traj.message;
    out.suggested_dt = traj.suggested_dt;
    if (!traj.complete()) return;
    for (std::size_t k : checkpoints) {
      out.mass.push_back(traj.mass_series.mass[k]);
      out.sq_norm.push_back(traj.l2_sq_series[k]);
    }
  });

  EnsembleStats stats;
  for (std::size_t p = 0; p < n_paths; ++p) {
    if (paths[p].status == TrajectoryStatus::StepSizeViolation) {
      throw StepSizeError(paths[p].message, paths[p].suggested_dt);
    }
    if (paths[p].status == TrajectoryStatus::BlownUp) {
      stats.blown_up_paths.push_back(static_cast<std::uint32_t>(p));
    }
  }
  if (stats.blown_up_paths.size() * 100 > n_paths) {
    throw BlowUpError(std::to_string(stats.blown_up_paths.size()) + " of " +
                          std::to_string(n_paths) + " paths blew up (limit 1%)",
                      cfg.t_end);
  }
  stats.n_paths = n_paths - stats.blown_up_paths.size();
  if (stats.n_paths < 2) throw PreconditionError("fewer than two usable paths");

  std::vector<double> mass_col, norm_col;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    mass_col.clear();
    norm_col.clear();
    for (const auto& p : paths) {
      if (p.status != TrajectoryStatus::Complete) continue;
      mass_col.push_back(p.mass[c]);
      norm_col.push_back(p.sq_norm[c]);
    }
    const auto mm = detail::column_moments(mass_col);
    const auto nm = detail::column_moments(norm_col);
    stats.times.push_back(static_cast<double>(checkpoints[c]) * cfg.dt);
    stats.mean_mass.push_back(mm.mean);
    stats.var_mass.push_back(mm.variance);
    stats.half_width_mass.push_back(mm.half_width_mean);
    stats.half_width_var_mass.push_back(mm.half_width_variance);
    stats.mean_sq_norm.push_back(nm.mean);
    stats.half_width_sq_norm.push_back(nm.half_width_mean);
  }
  return stats;
}

/// max_k |F_u[k] - F_u(0) - noise_integral[k]| of one trajectory.
inline double mass_identity_check(const Trajectory& traj) {
  return mass_identity_residual(traj.mass_series);
}

/// Variance of the lattice noise integral sum_{cells, steps} inc up to T.
inline double noise_integral_variance(const NoiseSpec& noise, const LatticeGrid& g, double T) {
  if (noise.kind == NoiseKind::SpaceTimeWhite) return T * g.volume();
  const double mass = g.volume();
  return std::pow(2.0 * std::numbers::pi, -0.5 * g.dim()) * T * mass * mass;
}

struct MassDistributionResult {
  double p_value = 0.0;
  double statistic = 0.0;
  double reference_variance = 0.0;
  double sample_variance = 0.0;
  std::vector<double> increments;
};

/// KS test of {F_u(T) - F_u(0)} over n_paths paths against the exact law of
/// the lattice noise integral, N(0, T L^d) for white noise.
inline MassDistributionResult mass_distribution_test(const SfpmeProblem& problem,
                                                     const SolverConfig& cfg,
                                                     std::size_t n_paths, double T,
                                                     int workers = 0) {
  if (problem.sigma.kind() != SigmaKind::One) {
    throw PreconditionError("mass distribution test requires sigma = One");
  }
  if (n_paths < 200) throw PreconditionError("mass distribution test needs >= 200 paths");
  SolverConfig run_cfg = cfg;
  run_cfg.t_end = T;
  run_cfg.validate();
  run_cfg.snapshot_stride = run_cfg.step_count();
  MassDistributionResult r;
  r.increments.assign(n_paths, 0.0);
  parallel_for(n_paths, resolve_workers(workers), [&](std::size_t p) {
    const Trajectory traj = evolve(problem, run_cfg, static_cast<std::uint32_t>(p));
    require_complete(traj);
    r.increments[p] = traj.mass_series.mass.back() - traj.mass_series.mass.front();
  });
  const double horizon = static_cast<double>(run_cfg.step_count()) * run_cfg.dt;
  r.reference_variance = noise_integral_variance(problem.noise, problem.grid, horizon);
  r.sample_variance = sample_variance(r.increments);
  const auto ks = ks_test_normal(r.increments, 0.0, std::sqrt(r.reference_variance));
  r.statistic = ks.statistic;
  r.p_value = ks.p_value;
  return r;
}

/// Both sides of E|int (u1 - u2)|^2 <= Lip^2 int_0^t E||u1 - u2||^2 ds for
/// two solutions driven by the same noise path.
///
/// The left side is measured on the noise-driven part of the mass difference,
/// (noise integral of u1) - (noise integral of u2), which equals
/// int (u1 - u2)(t) - int (u1 - u2)(0) exactly on the lattice and coincides
/// with the mass difference itself when the perturbation has zero mass.
struct ContractionResult {
  std::vector<double> times;
  std::vector<double> lhs;
  std::vector<double> rhs;
  /// Mean and standard error of the per-path difference lhs - rhs.
  std::vector<double> difference;
  std::vector<double> difference_se;
  /// Path average of |int (u1 - u2)(t)|.
  std::vector<double> mass_gap;
  std::size_t n_paths = 0;

  /// lhs <= rhs at every checkpoint up to 3 standard errors.
  bool holds() const {
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (difference[k] > 3.0 * difference_se[k]) return false;
    }
    return true;
  }
};

inline ContractionResult contraction_check(const SfpmeProblem& problem, const SolverConfig& cfg,
                                           const Field& perturbation, std::size_t n_paths,
                                           int workers = 0,
                                           std::optional<NoiseSpec> partner_noise = std::nullopt) {
  if (partner_noise && !(*partner_noise == problem.noise)) {
    throw PreconditionError("coupled paths must share the same noise (seed and kind)");
  }
  if (n_paths < 2) throw PreconditionError("contraction check needs at least two paths");
  if (!(perturbation.grid == problem.grid)) throw ContractError("perturbation grid differs");
  if (l2_norm(perturbation) > 0.1 * l2_norm(problem.u0) * (1.0 + 1e-12)) {
    throw PreconditionError("perturbation exceeds 10% of the initial L2 norm");
  }
  cfg.validate();
  Field shifted = problem.u0;
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted.values[i] += perturbation.values[i];
  const SfpmeProblem partner(problem.alpha, problem.m, shifted, problem.sigma, problem.noise);

  SolverConfig run_cfg = cfg;
  run_cfg.snapshot_stride = 1;
  const auto checkpoints = detail::checkpoint_steps(cfg);
  const double lip2 = problem.sigma.lip_constant() * problem.sigma.lip_constant();

  struct PathColumns {
    std::vector<double> lhs, rhs, gap;
  };
  std::vector<PathColumns> paths(n_paths);
  parallel_for(n_paths, resolve_workers(workers), [&](std::size_t p) {
    const auto id = static_cast<std::uint32_t>(p);
    const Trajectory a = evolve(problem, run_cfg, id);
    const Trajectory b = evolve(partner, run_cfg, id);
    require_complete(a);
    require_complete(b);
    PathColumns& out = paths[p];
    double integrated = 0.0;
    std::size_t next_cp = 0;
    for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
      if (next_cp < checkpoints.size() && checkpoints[next_cp] == k) {
        const double dn = a.mass_series.noise_integral[k] - b.mass_series.noise_integral[k];
        out.lhs.push_back(dn * dn);
        out.rhs.push_back(lip2 * integrated);
        out.gap.push_back(std::abs(a.mass_series.mass[k] - b.mass_series.mass[k]));
        ++next_cp;
      }
      double d2 = 0.0;
      for (std::size_t i = 0; i < a.snapshots[k].size(); ++i) {
        const double d = a.snapshots[k].values[i] - b.snapshots[k].values[i];
        d2 += d * d;
      }
      integrated += run_cfg.dt * d2 * problem.grid.cell_volume();
    }
  });

  ContractionResult r;
  r.n_paths = n_paths;
  std::vector<double> l, h, diff, gap;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    l.clear();
    h.clear();
    diff.clear();
    gap.clear();
    for (const auto& p : paths) {
      l.push_back(p.lhs[c]);
      h.push_back(p.rhs[c]);
      diff.push_back(p.lhs[c] - p.rhs[c]);
      gap.push_back(p.gap[c]);
    }
    r.times.push_back(static_cast<double>(checkpoints[c]) * cfg.dt);
    r.lhs.push_back(mean(l));
    r.rhs.push_back(mean(h));
    r.difference.push_back(mean(diff));
    r.difference_se.push_back(standard_error(diff));
    r.mass_gap.push_back(mean(gap));
  }
  return r;
}

/// Largest C with C int f^2 <= (int f)^2 over a sample of fields.
struct HolderCalibration {
  double c_const = 0.0;
  std::size_t argmin = 0;
  /// Nonempty when some sample is orthogonal to constants.
  std::string diagnostic;
};

inline HolderCalibration reverse_holder_calibrate(std::span<const Field> fields) {
  if (fields.empty()) throw InputError("calibration needs at least one field");
  HolderCalibration cal{std::numeric_limits<double>::infinity(), 0, {}};
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const double sq = l2_norm_sq(fields[i]);
    if (sq == 0.0) continue;
    const double mass = integral(fields[i]);
    const double c = mass * mass / sq;
    // a zero-mean sample leaves only rounding in the numerator
    const bool orthogonal = std::abs(mass) <= 1e-12 * std::sqrt(sq * fields[i].grid.volume());
    if (orthogonal) {
      cal.c_const = 0.0;
      cal.argmin = i;
      cal.diagnostic = "sample " + std::to_string(i) +
                       " has zero integral; no positive constant exists";
      return cal;
    }
    if (c < cal.c_const) {
      cal.c_const = c;
      cal.argmin = i;
    }
  }
  if (!std::isfinite(cal.c_const)) {
    cal.c_const = 0.0;
    cal.diagnostic = "all samples vanish identically";
  }
  return cal;
}

/// (1/sqrt C) ||u0||_{L^1} exp(Lip t / sqrt C).
struct GronwallEnvelope {
  double lip = 0.0;
  double c_const = 0.0;
  double u0_l1 = 0.0;

  double operator()(double t) const {
    return u0_l1 / std::sqrt(c_const) * std::exp(lip * t / std::sqrt(c_const));
  }
  double growth_rate() const { return lip / std::sqrt(c_const); }
};

/// Snapshots of the first n_paths paths up to time t_max.
inline std::vector<Field> early_snapshots(const SfpmeProblem& problem, const SolverConfig& cfg,
                                          std::size_t n_paths, double t_max, int workers = 0) {
  std::vector<std::vector<Field>> per_path(n_paths);
  SolverConfig run_cfg = cfg;
  run_cfg.t_end = std::max(t_max, cfg.dt);
  parallel_for(n_paths, resolve_workers(workers), [&](std::size_t p) {
    Trajectory traj = evolve(problem, run_cfg, static_cast<std::uint32_t>(p));
    require_complete(traj);
    per_path[p] = std::move(traj.snapshots);
  });
  std::vector<Field> out;
  for (auto& fields : per_path) {
    for (auto& f : fields) out.push_back(std::move(f));
  }
  return out;
}

struct GronwallCalibration {
  GronwallEnvelope envelope;
  double c_initial = 0.0;
  HolderCalibration sample;
};

/// C = min((int u0)^2 / int u0^2, reverse-Holder constant of `early`).
inline GronwallCalibration calibrate_envelope(const SfpmeProblem& problem,
                                              std::span<const Field> early) {
  GronwallCalibration cal;
  const double m0 = integral(problem.u0);
  const double q0 = l2_norm_sq(problem.u0);
  if (!(q0 > 0.0)) throw PreconditionError("initial data vanishes identically");
  cal.c_initial = m0 * m0 / q0;
  double c = cal.c_initial;
  if (!early.empty()) {
    cal.sample = reverse_holder_calibrate(early);
    c = std::min(c, cal.sample.c_const);
  }
  cal.envelope = {problem.sigma.lip_constant(), c, l1_norm(problem.u0)};
  return cal;
}

struct GronwallReport {
  std::vector<double> times;
  std::vector<double> moment;      ///< sqrt(E ||u(t)||^2)
  std::vector<double> envelope;
  std::vector<double> margin;      ///< envelope - moment
  std::vector<double> half_width;  ///< of the moment estimate
  double fitted_slope = 0.0;
  double slope_half_width = 0.0;
  double slope_bound = 0.0;

  bool dominated() const {
    for (std::size_t k = 0; k < margin.size(); ++k) {
      if (margin[k] < -half_width[k]) return false;
    }
    return true;
  }
  bool slope_ok() const { return fitted_slope <= slope_bound + slope_half_width; }
};

/// Envelope margins per checkpoint and the log-slope of the moment estimate
/// over the final `late_fraction` of the checkpoints.
inline GronwallReport gronwall_envelope_check(const EnsembleStats& stats,
                                              const GronwallEnvelope& env,
                                              double late_fraction = 0.5) {
  if (!(env.c_const > 0.0) || !std::isfinite(env.c_const)) {
    throw ConfigError("envelope constant C is not calibrated (must be positive)", 0);
  }
  GronwallReport rep;
  for (std::size_t k = 0; k < stats.times.size(); ++k) {
    const double t = stats.times[k];
    rep.times.push_back(t);
    rep.moment.push_back(stats.sqrt_mean_sq_norm(k));
    rep.envelope.push_back(env(t));
    rep.margin.push_back(env(t) - rep.moment.back());
    rep.half_width.push_back(stats.half_width_sqrt(k));
  }
  const std::size_t count = stats.times.size();
  const auto first = static_cast<std::size_t>(std::floor((1.0 - late_fraction) * count));
  std::vector<double> x, y;
  for (std::size_t k = first; k < count; ++k) {
    if (rep.moment[k] <= 0.0) continue;
    x.push_back(rep.times[k]);
    y.push_back(std::log(rep.moment[k]));
  }
  rep.slope_bound = env.growth_rate();
  if (x.size() >= 3) {
    const auto fit = linear_fit(x, y);
    rep.fitted_slope = fit.slope;
    rep.slope_half_width = kZ95 * fit.slope_se;
  }
  return rep;
}

}  // namespace sfpme
