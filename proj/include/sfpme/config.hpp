#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sfpme/errors.hpp"
#include "sfpme/grid.hpp"
#include "sfpme/noise.hpp"
#include "sfpme/solver.hpp"
#include "sfpme/spectral.hpp"

namespace sfpme {

enum class InitialShape { Gaussian, Bump, Sine, Constant };

/// Everything needed to reproduce a run, as read from a config file.
struct RunConfig {
  // [problem]
  int dim = 1;
  std::size_t n = 128;
  double side_length = 2.0 * std::numbers::pi;
  double alpha = 1.5;
  double m = 1.0;
  SigmaKind sigma = SigmaKind::Zero;
  double lambda = 0.0;
  NoiseKind noise = NoiseKind::SpaceTimeWhite;
  InitialShape initial = InitialShape::Gaussian;
  double amplitude = 1.0;
  double width = 1.0;
  double baseline = 0.0;
  // [solver]
  SolverConfig solver;
  // [ensemble]
  std::size_t paths = 100;
  std::uint64_t seed = 1;
  int workers = 0;
  std::vector<std::string> checks;
  std::size_t calibration_paths = 20;
  double calibration_time = 0.1;
  double late_fraction = 0.5;
  // [output]
  std::string out_dir = "out";
  bool write_snapshots = true;
  std::uint32_t path_id = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool parse_plain_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace detail

/// Real number, optionally written as a multiple of pi: "3.5", "pi", "2*pi".
inline bool parse_real(std::string_view s, double& out) {
  s = detail::trim(s);
  if (s == "pi") {
    out = std::numbers::pi;
    return true;
  }
  if (s.size() > 3 && s.substr(s.size() - 3) == "*pi") {
    double factor = 0.0;
    if (!detail::parse_plain_double(detail::trim(s.substr(0, s.size() - 3)), factor)) return false;
    out = factor * std::numbers::pi;
    return true;
  }
  return detail::parse_plain_double(s, out);
}

namespace detail {

struct KeyContext {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;

  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError("line " + std::to_string(line) + ": key '" + key + "' in [" + section +
                          "]: " + why + " (got '" + value + "')",
                      line);
  }

  double real() const {
    double x = 0.0;
    if (!parse_real(value, x) || !std::isfinite(x)) fail("expected a finite number");
    return x;
  }

  std::uint64_t count() const {
    std::uint64_t x = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), x);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
      fail("expected a nonnegative integer");
    }
    return x;
  }

  bool flag() const {
    if (value == "true" || value == "on" || value == "yes" || value == "1") return true;
    if (value == "false" || value == "off" || value == "no" || value == "0") return false;
    fail("expected true or false");
  }
};

}  // namespace detail

/// Parses the sectioned key = value format. '#' and ';' start comments.
/// Unknown sections or keys, duplicates and out-of-range values are
/// reported with their line number.
inline RunConfig parse_run_config(const std::string& text) {
  using detail::KeyContext;
  RunConfig cfg;
  std::map<std::string, std::function<void(const KeyContext&)>> setters;
  auto put = [&](const std::string& section, const std::string& key,
                 std::function<void(const KeyContext&)> fn) {
    setters.emplace(section + "." + key, std::move(fn));
  };

  put("problem", "dim", [&](const KeyContext& c) {
    const auto v = c.count();
    if (v != 1 && v != 2) c.fail("dimension must be 1 or 2");
    cfg.dim = static_cast<int>(v);
  });
  put("problem", "n", [&](const KeyContext& c) {
    const auto v = c.count();
    if (v < 8 || (v & (v - 1)) != 0) c.fail("must be a power of two >= 8");
    cfg.n = v;
  });
  put("problem", "side_length", [&](const KeyContext& c) {
    const double v = c.real();
    if (!(v > 0.0)) c.fail("must be positive");
    cfg.side_length = v;
  });
  put("problem", "alpha", [&](const KeyContext& c) {
    const double v = c.real();
    if (!(v > 0.0 && v <= 2.0)) c.fail("must lie in (0, 2]");
    cfg.alpha = v;
  });
  put("problem", "m", [&](const KeyContext& c) {
    const double v = c.real();
    if (!(v > 0.0)) c.fail("must be positive");
    cfg.m = v;
  });
  put("problem", "sigma", [&](const KeyContext& c) {
    if (c.value == "zero") cfg.sigma = SigmaKind::Zero;
    else if (c.value == "one") cfg.sigma = SigmaKind::One;
    else if (c.value == "linear") cfg.sigma = SigmaKind::Linear;
    else c.fail("expected zero, one or linear");
  });
  put("problem", "lambda", [&](const KeyContext& c) { cfg.lambda = c.real(); });
  put("problem", "noise", [&](const KeyContext& c) {
    if (c.value == "white") cfg.noise = NoiseKind::SpaceTimeWhite;
    else if (c.value == "uniform") cfg.noise = NoiseKind::UniformWiener;
    else c.fail("expected white or uniform");
  });
  put("problem", "initial", [&](const KeyContext& c) {
    if (c.value == "gaussian") cfg.initial = InitialShape::Gaussian;
    else if (c.value == "bump") cfg.initial = InitialShape::Bump;
    else if (c.value == "sine") cfg.initial = InitialShape::Sine;
    else if (c.value == "constant") cfg.initial = InitialShape::Constant;
    else c.fail("expected gaussian, bump, sine or constant");
  });
  put("problem", "amplitude", [&](const KeyContext& c) { cfg.amplitude = c.real(); });
  put("problem", "width", [&](const KeyContext& c) {
    const double v = c.real();
    if (!(v > 0.0)) c.fail("must be positive");
    cfg.width = v;
  });
  put("problem", "baseline", [&](const KeyContext& c) { cfg.baseline = c.real(); });

  put("solver", "dt", [&](const KeyContext& c) {
    const double v = c.real();
    if (!(v > 0.0)) c.fail("must be positive");
    cfg.solver.dt = v;
  });
  put("solver", "t_end", [&](const KeyContext& c) {
    const double v = c.real();
    if (!(v > 0.0)) c.fail("must be positive");
    cfg.solver.t_end = v;
  });
  put("solver", "scheme", [&](const KeyContext& c) {
    if (c.value == "explicit") cfg.solver.scheme = Scheme::ExplicitEM;
    else if (c.value == "semi_implicit") cfg.solver.scheme = Scheme::SemiImplicitSpectral;
    else c.fail("expected explicit or semi_implicit");
  });
  put("solver", "dealias", [&](const KeyContext& c) { cfg.solver.dealias = c.flag(); });
  put("solver", "cfl_safety", [&](const KeyContext& c) {
    const double v = c.real();
    if (!(v > 0.0 && v <= 1.0)) c.fail("must lie in (0, 1]");
    cfg.solver.cfl_safety = v;
  });
  put("solver", "snapshot_stride", [&](const KeyContext& c) { cfg.solver.snapshot_stride = c.count(); });

  put("ensemble", "paths", [&](const KeyContext& c) {
    const auto v = c.count();
    if (v < 2) c.fail("an ensemble needs at least 2 paths");
    cfg.paths = v;
  });
  put("ensemble", "seed", [&](const KeyContext& c) { cfg.seed = c.count(); });
  put("ensemble", "workers", [&](const KeyContext& c) { cfg.workers = static_cast<int>(c.count()); });
  put("ensemble", "checks", [&](const KeyContext& c) {
    cfg.checks.clear();
    std::stringstream ss(c.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::string name(detail::trim(item));
      if (name != "martingale" && name != "mass_distribution" && name != "gronwall") {
        c.fail("unknown check '" + name + "' (martingale, mass_distribution, gronwall)");
      }
      cfg.checks.push_back(name);
    }
  });
  put("ensemble", "calibration_paths", [&](const KeyContext& c) { cfg.calibration_paths = c.count(); });
  put("ensemble", "calibration_time", [&](const KeyContext& c) {
    const double v = c.real();
    if (!(v > 0.0)) c.fail("must be positive");
    cfg.calibration_time = v;
  });
  put("ensemble", "late_fraction", [&](const KeyContext& c) {
    const double v = c.real();
    if (!(v > 0.0 && v <= 1.0)) c.fail("must lie in (0, 1]");
    cfg.late_fraction = v;
  });

  put("output", "dir", [&](const KeyContext& c) {
    if (c.value.empty()) c.fail("must not be empty");
    cfg.out_dir = c.value;
  });
  put("output", "snapshots", [&](const KeyContext& c) { cfg.write_snapshots = c.flag(); });
  put("output", "path", [&](const KeyContext& c) { cfg.path_id = static_cast<std::uint32_t>(c.count()); });

  std::map<std::string, int> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view s = raw;
    if (const auto c = s.find_first_of("#;"); c != std::string_view::npos) s = s.substr(0, c);
    s = detail::trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("line " + std::to_string(line) + ": malformed section header", line);
      section = std::string(detail::trim(s.substr(1, s.size() - 2)));
      if (section != "problem" && section != "solver" && section != "ensemble" && section != "output") {
        throw ConfigError("line " + std::to_string(line) + ": unknown section [" + section + "]", line);
      }
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line) + ": expected key = value", line);
    }
    if (section.empty()) {
      throw ConfigError("line " + std::to_string(line) + ": key outside of any section", line);
    }
    const KeyContext ctx{section, std::string(detail::trim(s.substr(0, eq))),
                         std::string(detail::trim(s.substr(eq + 1))), line};
    const std::string full = section + "." + ctx.key;
    const auto it = setters.find(full);
    if (it == setters.end()) {
      throw ConfigError("line " + std::to_string(line) + ": unknown key '" + ctx.key + "' in [" +
                            section + "]",
                        line);
    }
    if (const auto prev = seen.find(full); prev != seen.end()) {
      ctx.fail("duplicate key (first set on line " + std::to_string(prev->second) + ")");
    }
    seen.emplace(full, line);
    it->second(ctx);
  }

  // cross-key checks
  const int dt_line = seen.count("solver.dt") ? seen["solver.dt"] : 0;
  if (cfg.solver.t_end < cfg.solver.dt) {
    throw ConfigError("line " + std::to_string(dt_line) + ": key 'dt' exceeds t_end", dt_line);
  }
  const double spacing = cfg.side_length / static_cast<double>(cfg.n);
  if (spacing * static_cast<double>(cfg.n) != cfg.side_length) {
    const int l = seen.count("problem.side_length") ? seen["problem.side_length"] : 0;
    throw ConfigError("line " + std::to_string(l) + ": key 'side_length' is not divisible by n exactly", l);
  }
  return cfg;
}

/// u0 on the lattice described by `cfg`.
inline Field build_initial_field(const RunConfig& cfg) {
  const LatticeGrid g(cfg.dim, cfg.n, cfg.side_length);
  const double a = cfg.amplitude, w = cfg.width, b = cfg.baseline;
  switch (cfg.initial) {
    case InitialShape::Gaussian:
      return Field::sample(g, [=](double x, double y) {
        return b + a * std::exp(-(x * x + y * y) / (2.0 * w * w));
      });
    case InitialShape::Bump:
      return Field::sample(g, [=](double x, double y) {
        return b + a * unit_cutoff(std::hypot(x, y) / w);
      });
    case InitialShape::Sine:
      return Field::sample(g, [=](double x, double) { return b + a * std::sin(x); });
    case InitialShape::Constant:
      return Field::sample(g, [=](double, double) { return a + b; });
  }
  throw ContractError("unknown initial shape");
}

inline SigmaSpec build_sigma(const RunConfig& cfg) {
  switch (cfg.sigma) {
    case SigmaKind::Zero: return SigmaSpec::zero();
    case SigmaKind::One: return SigmaSpec::one();
    case SigmaKind::Linear: return SigmaSpec::linear(cfg.lambda);
    case SigmaKind::CustomLipschitz: break;
  }
  throw ConfigError("custom noise coefficients cannot be read from a config file", 0);
}

inline SfpmeProblem build_problem(const RunConfig& cfg) {
  return SfpmeProblem(cfg.alpha, cfg.m, build_initial_field(cfg), build_sigma(cfg),
                      NoiseSpec{cfg.noise, cfg.seed, cfg.dim});
}

}  // namespace sfpme
