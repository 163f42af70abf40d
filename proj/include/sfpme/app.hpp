#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sfpme/analysis.hpp"
#include "sfpme/config.hpp"
#include "sfpme/io.hpp"
#include "sfpme/kernel.hpp"
#include "sfpme/verify.hpp"

namespace sfpme {

enum ExitCode : int { kExitPass = 0, kExitCheckFailed = 1, kExitUsage = 2, kExitNumerical = 3 };

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
};

namespace detail {

inline RunConfig load_config(const std::string& path, const Overrides& ov) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const InputError& e) {
    throw ConfigError(e.what(), 0);
  }
  RunConfig cfg = parse_run_config(text);
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.workers) cfg.workers = *ov.workers;
  if (ov.out_dir) cfg.out_dir = *ov.out_dir;
  return cfg;
}

/// Maps library exceptions to exit codes; `body` returns the code on success.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const PreconditionError& e) {
    err << "precondition failed: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "invalid parameter: " << e.what() << '\n';
    return kExitUsage;
  } catch (const StepSizeError& e) {
    err << "numerical failure: " << e.what() << " (suggested dt " << fmt17(e.suggested_dt()) << ")\n";
    return kExitNumerical;
  } catch (const BlowUpError& e) {
    err << "numerical failure: " << e.what() << " at t = " << fmt17(e.time()) << '\n';
    return kExitNumerical;
  } catch (const AccuracyError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

inline const char* verdict(bool ok) { return ok ? "pass" : "fail"; }

}  // namespace detail

/// One trajectory: writes mass.csv and snapshots, reports the mass identity.
inline int cmd_simulate(const std::string& config_path, const Overrides& ov, std::ostream& out,
                        std::ostream& err) {
  return detail::guarded(err, [&] {
    const RunConfig rc = detail::load_config(config_path, ov);
    const SfpmeProblem problem = build_problem(rc);
    const Trajectory traj = evolve(problem, rc.solver, rc.path_id);
    const std::filesystem::path dir(rc.out_dir);

    std::string csv = csv_row({"t", "mass", "noise_integral", "identity_residual", "l2_sq", "sup_abs"});
    const auto& ms = traj.mass_series;
    for (std::size_t k = 0; k < ms.size(); ++k) {
      csv += csv_row({fmt17(ms.times[k]), fmt17(ms.mass[k]), fmt17(ms.noise_integral[k]),
                      fmt17(ms.mass[k] - ms.initial_mass - ms.noise_integral[k]),
                      fmt17(traj.l2_sq_series[k]), fmt17(traj.sup_series[k])});
    }
    write_text(dir / "mass.csv", csv);

    if (rc.write_snapshots) {
      std::string index = csv_row({"index", "t", "file"});
      for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "snap_%05zu.bin", i);
        write_text(dir / "snapshots" / name, encode_snapshot(traj.snapshots[i], rc.alpha, rc.m));
        index += csv_row({std::to_string(i), fmt17(traj.times[i]), name});
      }
      write_text(dir / "snapshots" / "index.csv", index);
    }

    if (!traj.complete()) {
      err << "numerical failure: " << traj.message << " at t = " << fmt17(traj.failure_time) << '\n';
      return static_cast<int>(kExitNumerical);
    }
    const double residual = mass_identity_check(traj);
    const double tol = mass_identity_tolerance(ms);
    const bool ok = residual <= tol;
    out << "steps = " << ms.size() - 1 << '\n';
    out << "final_time = " << fmt17(ms.times.back()) << '\n';
    out << "mass_identity_residual = " << fmt17(residual) << '\n';
    out << "mass_identity_tolerance = " << fmt17(tol) << '\n';
    out << "sup_abs_initial = " << fmt17(traj.sup_series.front()) << '\n';
    out << "sup_abs_final = " << fmt17(traj.sup_series.back()) << '\n';
    out << "check mass_identity: " << detail::verdict(ok) << '\n';
    return static_cast<int>(ok ? kExitPass : kExitCheckFailed);
  });
}

/// Monte Carlo ensemble with the checks listed in the config.
inline int cmd_ensemble(const std::string& config_path, const Overrides& ov, std::ostream& out,
                        std::ostream& err) {
  return detail::guarded(err, [&] {
    RunConfig rc = detail::load_config(config_path, ov);
    const SfpmeProblem problem = build_problem(rc);
    std::vector<std::string> checks = rc.checks;
    if (checks.empty()) {
      checks.push_back("martingale");
      if (rc.sigma == SigmaKind::Linear) checks.push_back("gronwall");
    }
    auto enabled = [&](const char* name) {
      return std::find(checks.begin(), checks.end(), name) != checks.end();
    };

    const EnsembleStats stats = run_ensemble(problem, rc.solver, rc.paths, rc.workers);
    std::ostringstream summary;
    summary << "paths = " << rc.paths << '\n';
    summary << "usable_paths = " << stats.n_paths << '\n';
    summary << "blown_up_paths = " << stats.blown_up_paths.size() << '\n';
    summary << "seed = " << rc.seed << '\n';
    bool all_ok = true;

    std::optional<GronwallCalibration> cal;
    std::optional<GronwallReport> report;
    if (enabled("gronwall")) {
      const auto early = early_snapshots(problem, rc.solver, rc.calibration_paths,
                                         rc.calibration_time, rc.workers);
      cal = calibrate_envelope(problem, early);
      summary << "c_initial = " << fmt17(cal->c_initial) << '\n';
      summary << "c_sample = " << fmt17(cal->sample.c_const) << '\n';
      if (!cal->sample.diagnostic.empty()) summary << "c_diagnostic = " << cal->sample.diagnostic << '\n';
      summary << "c_const = " << fmt17(cal->envelope.c_const) << '\n';
      summary << "u0_l1 = " << fmt17(cal->envelope.u0_l1) << '\n';
      report = gronwall_envelope_check(stats, cal->envelope, rc.late_fraction);
      summary << "envelope_rate = " << fmt17(report->slope_bound) << '\n';
      summary << "fitted_slope = " << fmt17(report->fitted_slope) << '\n';
      summary << "fitted_slope_half_width = " << fmt17(report->slope_half_width) << '\n';
    }

    if (enabled("martingale")) {
      const double f0 = integral(problem.u0);
      // Deviations below this are summation-order noise, which dominates while the paths still agree.
      const double roundoff = 1e-12 * std::max(1.0, std::abs(f0));
      bool ok = true;
      double worst = 0.0;
      for (std::size_t k = 0; k < stats.times.size(); ++k) {
        const double se = stats.half_width_mass[k] / kZ95;
        const double dev = std::max(0.0, std::abs(stats.mean_mass[k] - f0) - roundoff);
        if (dev > 3.0 * se) ok = false;
        if (se > 0.0) worst = std::max(worst, dev / se);
      }
      summary << "martingale_max_z = " << fmt17(worst) << '\n';
      summary << "check martingale: " << detail::verdict(ok) << '\n';
      all_ok = all_ok && ok;
    }
    if (enabled("mass_distribution")) {
      const auto md = mass_distribution_test(problem, rc.solver, rc.paths, rc.solver.t_end, rc.workers);
      const bool ok = md.p_value > 0.01;
      summary << "ks_statistic = " << fmt17(md.statistic) << '\n';
      summary << "ks_p_value = " << fmt17(md.p_value) << '\n';
      summary << "reference_variance = " << fmt17(md.reference_variance) << '\n';
      summary << "sample_variance = " << fmt17(md.sample_variance) << '\n';
      summary << "check mass_distribution: " << detail::verdict(ok) << '\n';
      all_ok = all_ok && ok;
    }
    if (report) {
      summary << "check gronwall_domination: " << detail::verdict(report->dominated()) << '\n';
      summary << "check gronwall_slope: " << detail::verdict(report->slope_ok()) << '\n';
      all_ok = all_ok && report->dominated() && report->slope_ok();
    }

    std::string csv = csv_row({"t", "mean_mass", "var_mass", "sqrt_mean_sq_norm", "envelope", "margin",
                               "ci_half_width"});
    for (std::size_t k = 0; k < stats.times.size(); ++k) {
      const double env = report ? report->envelope[k] : std::nan("");
      const double margin = report ? report->margin[k] : std::nan("");
      csv += csv_row({fmt17(stats.times[k]), fmt17(stats.mean_mass[k]), fmt17(stats.var_mass[k]),
                      fmt17(stats.sqrt_mean_sq_norm(k)), fmt17(env), fmt17(margin),
                      fmt17(stats.half_width_sqrt(k))});
    }
    summary << "overall: " << detail::verdict(all_ok) << '\n';
    const std::filesystem::path dir(rc.out_dir);
    write_text(dir / "analysis.csv", csv);
    write_text(dir / "summary.txt", summary.str());
    out << summary.str();
    return static_cast<int>(all_ok ? kExitPass : kExitCheckFailed);
  });
}

struct KernelRequest {
  double alpha = 1.0;
  int dim = 1;
  std::vector<double> times{1.0};
  std::vector<double> radii{0.0, 0.5, 1.0, 2.0, 5.0, 10.0};
  std::string out_dir = "out";
};

/// Kernel table, tail exponent fit and two-sided bound constants.
inline int cmd_kernel(const KernelRequest& req, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const StableKernel k(req.alpha, req.dim);
    const bool stable = req.alpha < 2.0;
    std::string csv = csv_row({"t", "x", "p", "bound_ratio"});
    for (double t : req.times) {
      for (double x : req.radii) {
        const double p = kernel_eval(k, t, x);
        const double ratio =
            stable ? p / two_sided_reference(req.alpha, req.dim, t, std::abs(x)) : std::nan("");
        csv += csv_row({fmt17(t), fmt17(x), fmt17(p), fmt17(ratio)});
      }
    }
    write_text(std::filesystem::path(req.out_dir) / "kernel.csv", csv);
    out << "alpha = " << fmt17(req.alpha) << '\n';
    out << "dim = " << req.dim << '\n';
    if (!stable) {
      out << "notice: Gaussian kernel has no power tail; tail fit and bound check skipped\n";
      return static_cast<int>(kExitPass);
    }
    const double slope = profile_tail_exponent(k);
    const double expected = -(req.dim + req.alpha);
    const bool ok = std::abs(slope - expected) <= 0.05 * std::abs(expected);
    const auto bounds = two_sided_bound_check(k, req.times, req.radii);
    out << "tail_exponent = " << fmt17(slope) << '\n';
    out << "tail_expected = " << fmt17(expected) << '\n';
    out << "bound_c_lo = " << fmt17(bounds.c_lo) << '\n';
    out << "bound_c_hi = " << fmt17(bounds.c_hi) << '\n';
    out << "check tail_exponent: " << detail::verdict(ok) << '\n';
    return static_cast<int>(ok ? kExitPass : kExitCheckFailed);
  });
}

/// Runs the built-in claim suite, optionally restricted to `only`.
inline int cmd_verify(const std::vector<std::string>& only, const VerifyOptions& opt, std::ostream& out,
                      std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto claims = verification_claims();
    for (const auto& id : only) {
      const bool known = std::any_of(claims.begin(), claims.end(), [&](const Claim& c) { return c.id == id; });
      if (!known) {
        err << "unknown claim '" << id << "'; known claims:";
        for (const auto& c : claims) err << ' ' << c.id;
        err << '\n';
        return static_cast<int>(kExitUsage);
      }
    }
    bool all_ok = true;
    for (const auto& c : claims) {
      if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
      const ClaimResult r = c.run(opt);
      char line[160];
      std::snprintf(line, sizeof line, "%-22s %-4s  ", r.id.c_str(), detail::verdict(r.passed));
      out << line << r.detail << '\n';
      all_ok = all_ok && r.passed;
    }
    out << "overall: " << detail::verdict(all_ok) << '\n';
    return static_cast<int>(all_ok ? kExitPass : kExitCheckFailed);
  });
}

}  // namespace sfpme
