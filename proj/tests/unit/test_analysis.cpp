#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "sfpme/analysis.hpp"

using namespace sfpme;
using Catch::Approx;
constexpr double kPi = std::numbers::pi;

namespace {

LatticeGrid circle(std::size_t n) { return LatticeGrid(1, n, 2.0 * kPi); }

Field positive_bump(const LatticeGrid& g, double base = 0.2) {
  return Field::sample(g, [base](double x, double y) { return base + std::exp(-x * x - y * y); });
}

SolverConfig cheap(double t_end = 1.0, double dt = 1e-2) {
  SolverConfig c;
  c.dt = dt;
  c.t_end = t_end;
  c.scheme = Scheme::SemiImplicitSpectral;
  return c;
}

NoiseSpec white(std::uint64_t seed, int d = 1) { return {NoiseKind::SpaceTimeWhite, seed, d}; }

/// Recomputes sum_n sum_cells sigma(u_n) inc_n from stored fields and
/// replayed increments, independently of the solver's running sum.
double replayed_noise_integral(const SfpmeProblem& p, const Trajectory& traj) {
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < traj.snapshots.size(); ++k) {
    const auto inc = sample_increment(p.noise, p.grid, traj.dt, k, traj.path_id);
    for (std::size_t i = 0; i < p.grid.size(); ++i) {
      total += p.sigma(traj.snapshots[k][i]) * inc.values[i];
    }
  }
  return total;
}

}  // namespace

TEST_CASE("mass identity on single trajectories", "[analysis]") {
  const auto g = circle(64);
  SECTION("no noise") {
    const SfpmeProblem p(1.5, 2.0, positive_bump(g), SigmaSpec::zero(), white(1));
    const Trajectory t = evolve(p, cheap(), 0);
    CHECK(mass_identity_check(t) < 1e-12);
  }
  SECTION("additive noise") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const SfpmeProblem p(1.5, 2.0, positive_bump(g), SigmaSpec::one(), white(seed));
      auto cfg = cheap();
      cfg.snapshot_stride = 1;
      const Trajectory t = evolve(p, cfg, 0);
      require_complete(t);
      CHECK(mass_identity_check(t) < 1e-10);
      const double f0 = t.mass_series.mass.front();
      CHECK(t.mass_series.mass.back() - f0 == Approx(replayed_noise_integral(p, t)).margin(1e-10));
    }
  }
  SECTION("multiplicative noise, fractional exponent") {
    const SfpmeProblem p(0.8, 0.5, positive_bump(g, 1.0), SigmaSpec::linear(2.0), white(4));
    auto cfg = cheap(0.5, 1e-3);
    cfg.snapshot_stride = 1;
    const Trajectory t = evolve(p, cfg, 2);
    require_complete(t);
    CHECK(mass_identity_check(t) < 1e-10 * (1.0 + std::abs(t.mass_series.initial_mass)));
    const double f0 = t.mass_series.mass.front();
    CHECK(t.mass_series.mass.back() - f0 == Approx(replayed_noise_integral(p, t)).margin(1e-10));
  }
  SECTION("record arithmetic") {
    MassProcessRecord rec;
    rec.initial_mass = 2.0;
    rec.push(0.0, 2.0, 0.0);
    rec.push(0.1, 2.5, 0.5);
    rec.push(0.2, 1.0, -0.75);
    CHECK(mass_identity_residual(rec) == Approx(0.25));
    CHECK(mass_identity_tolerance(rec) == Approx(3e-10));
  }
}

TEST_CASE("ensemble moments", "[analysis]") {
  const auto g = circle(32);
  SECTION("without noise every path is the same") {
    const SfpmeProblem p(1.0, 2.0, positive_bump(g), SigmaSpec::zero(), white(3));
    const auto s = run_ensemble(p, cheap(0.2), 4, 1);
    CHECK(s.n_paths == 4);
    for (double v : s.var_mass) CHECK(v == 0.0);
    CHECK_THROWS_AS(run_ensemble(p, cheap(0.2), 1, 1), PreconditionError);
  }
  SECTION("additive white noise: Var F_u(1) = L") {
    const SfpmeProblem p(1.5, 2.0, positive_bump(g), SigmaSpec::one(), white(10));
    const auto s = run_ensemble(p, cheap(1.0), 500, 1);
    const double target = 1.0 * g.volume();
    const double se = target * std::sqrt(2.0 / (s.n_paths - 1.0));
    CHECK(s.times.back() == Approx(1.0));
    CHECK(std::abs(s.var_mass.back() - target) < 3.0 * se);
    CHECK(noise_integral_variance(p.noise, g, 1.0) == Approx(target));
    CHECK(s.half_width_sq_norm.front() == 0.0);  // every path starts from u0
    for (std::size_t k = 1; k < s.times.size(); ++k) CHECK(s.half_width_sq_norm[k] > 0.0);
  }
  SECTION("worker count does not change the result") {
    const SfpmeProblem p(1.5, 1.0, positive_bump(g), SigmaSpec::linear(0.5), white(11));
    const auto a = run_ensemble(p, cheap(0.3), 8, 1);
    const auto b = run_ensemble(p, cheap(0.3), 8, 8);
    CHECK(a.mean_sq_norm == b.mean_sq_norm);
    CHECK(a.mean_mass == b.mean_mass);
    CHECK(a.var_mass == b.var_mass);
    CHECK(a.half_width_sq_norm == b.half_width_sq_norm);
  }
  SECTION("a step-size violation aborts the ensemble") {
    const SfpmeProblem p(2.0, 1.0, positive_bump(g), SigmaSpec::one(), white(12));
    SolverConfig c = cheap(0.1, 0.05);
    c.scheme = Scheme::ExplicitEM;
    CHECK_THROWS_AS(run_ensemble(p, c, 4, 1), StepSizeError);
  }
}

TEST_CASE("martingale property of the mass", "[analysis][property]") {
  const auto g = circle(32);
  const SfpmeProblem p(1.5, 1.0, positive_bump(g), SigmaSpec::linear(0.5), white(21));
  const auto s = run_ensemble(p, cheap(1.0), 300, 1);
  const double f0 = integral(p.u0);
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    const double se = s.half_width_mass[k] / kZ95;
    CHECK(std::abs(s.mean_mass[k] - f0) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("law of the mass increment", "[analysis]") {
  SECTION("one dimension, T = 1") {
    const auto g = circle(32);
    const SfpmeProblem p(1.5, 2.0, positive_bump(g), SigmaSpec::one(), white(30));
    const auto r = mass_distribution_test(p, cheap(), 400, 1.0, 1);
    CHECK(r.reference_variance == Approx(2.0 * kPi));
    CHECK(r.p_value > 0.01);
    // direct sum of the increments without the PDE gives the same numbers
    for (std::uint32_t path : {0u, 17u, 399u}) {
      double direct = 0.0;
      for (std::uint64_t k = 0; k < 100; ++k) {
        for (double v : sample_increment(p.noise, g, 1e-2, k, path).values) direct += v;
      }
      CHECK(r.increments[path] == Approx(direct).margin(1e-10));
    }
  }
  SECTION("two dimensions, T = 0.25") {
    const LatticeGrid g(2, 16, 2.0 * kPi);
    const SfpmeProblem p(1.5, 2.0, positive_bump(g), SigmaSpec::one(), white(31, 2));
    const auto r = mass_distribution_test(p, cheap(0.25), 400, 0.25, 1);
    CHECK(r.reference_variance == Approx(0.25 * g.volume()));
    CHECK(r.p_value > 0.01);
  }
  SECTION("preconditions") {
    const auto g = circle(32);
    const SfpmeProblem zero(1.5, 2.0, positive_bump(g), SigmaSpec::zero(), white(1));
    CHECK_THROWS_AS(mass_distribution_test(zero, cheap(), 400, 1.0, 1), PreconditionError);
    const SfpmeProblem one(1.5, 2.0, positive_bump(g), SigmaSpec::one(), white(1));
    CHECK_THROWS_AS(mass_distribution_test(one, cheap(), 100, 1.0, 1), PreconditionError);
  }
}

TEST_CASE("coupled contraction estimate", "[analysis]") {
  const auto g = circle(32);
  const Field small = Field::sample(g, [](double x, double) { return 0.05 * std::exp(-4.0 * (x - 1.0) * (x - 1.0)); });
  SECTION("zero perturbation gives zero on both sides") {
    const SfpmeProblem p(1.5, 2.0, positive_bump(g), SigmaSpec::linear(0.5), white(40));
    const auto r = contraction_check(p, cheap(0.5), Field(g), 10, 1);
    for (std::size_t k = 0; k < r.times.size(); ++k) {
      CHECK(r.lhs[k] == 0.0);
      CHECK(r.rhs[k] == 0.0);
    }
    CHECK(r.holds());
  }
  SECTION("linear coefficient, heat flow, 200 paths") {
    for (double lambda : {0.25, 0.5}) {
      const SfpmeProblem p(2.0, 1.0, positive_bump(g), SigmaSpec::linear(lambda), white(41));
      const auto r = contraction_check(p, cheap(1.0), small, 200, 1);
      CHECK(r.holds());
      CHECK(r.lhs.back() > 0.0);
      CHECK(r.rhs.back() > 0.0);
    }
  }
  SECTION("without noise the mass gap is constant") {
    const SfpmeProblem p(1.5, 2.0, positive_bump(g), SigmaSpec::zero(), white(42));
    const auto r = contraction_check(p, cheap(0.5), small, 4, 1);
    for (std::size_t k = 0; k < r.times.size(); ++k) {
      CHECK(r.lhs[k] == 0.0);
      CHECK(r.rhs[k] == 0.0);
      CHECK(r.mass_gap[k] == Approx(integral(small)).epsilon(1e-10));
    }
  }
  SECTION("preconditions") {
    const SfpmeProblem p(1.5, 1.0, positive_bump(g), SigmaSpec::linear(0.5), white(43));
    CHECK_THROWS_AS(contraction_check(p, cheap(0.1), small, 4, 1, white(44)), PreconditionError);
    CHECK_NOTHROW(contraction_check(p, cheap(0.1), small, 4, 1, white(43)));
    const Field big = positive_bump(g);
    CHECK_THROWS_AS(contraction_check(p, cheap(0.1), big, 4, 1), PreconditionError);
  }
}

TEST_CASE("reverse Holder calibration", "[analysis]") {
  const auto g = circle(64);
  SECTION("a constant attains the Cauchy-Schwarz bound") {
    const std::vector<Field> f = {Field::sample(g, [](double, double) { return 3.0; })};
    const auto c = reverse_holder_calibrate(f);
    CHECK(c.c_const == Approx(2.0 * kPi).epsilon(1e-12));
    CHECK(c.diagnostic.empty());
  }
  SECTION("a zero-mean sample forces C = 0 with a diagnostic") {
    const std::vector<Field> f = {positive_bump(g),
                                  Field::sample(g, [](double x, double) { return std::sin(x); })};
    const auto c = reverse_holder_calibrate(f);
    CHECK(c.c_const == 0.0);
    CHECK(c.argmin == 1);
    CHECK_FALSE(c.diagnostic.empty());
  }
  SECTION("stochastic snapshots give a positive constant and its argmin") {
    const SfpmeProblem p(1.5, 1.0, positive_bump(g), SigmaSpec::linear(0.5), white(50));
    const auto snaps = early_snapshots(p, cheap(0.2), 10, 0.2, 1);
    CHECK(snaps.size() >= 100);
    const auto c = reverse_holder_calibrate(snaps);
    CHECK(c.c_const > 0.0);
    CHECK(c.c_const <= 2.0 * kPi);
    const double m = integral(snaps[c.argmin]);
    CHECK(c.c_const == Approx(m * m / l2_norm_sq(snaps[c.argmin])));
    for (const auto& s : snaps) {
      const double q = integral(s) * integral(s) / l2_norm_sq(s);
      CHECK(q >= c.c_const * (1.0 - 1e-12));
    }
  }
  SECTION("empty input") {
    CHECK_THROWS_AS(reverse_holder_calibrate(std::vector<Field>{}), InputError);
  }
}

TEST_CASE("Gronwall envelope", "[analysis]") {
  const auto g = circle(64);
  SECTION("no noise: constant envelope above a dissipating moment") {
    const SfpmeProblem p(1.5, 1.0, positive_bump(g), SigmaSpec::zero(), white(60));
    const auto cal = calibrate_envelope(p, std::vector<Field>{});
    CHECK(cal.envelope(0.0) == Approx(cal.envelope(5.0)));
    const auto stats = run_ensemble(p, cheap(1.0), 2, 1);
    const auto rep = gronwall_envelope_check(stats, cal.envelope);
    CHECK(rep.dominated());
    for (std::size_t k = 1; k < rep.moment.size(); ++k) CHECK(rep.moment[k] <= rep.moment[k - 1] + 1e-14);
    for (double m : rep.margin) CHECK(m >= 0.0);
  }
  SECTION("the margin at t = 0 is nonnegative by calibration") {
    const SfpmeProblem p(1.5, 1.0, positive_bump(g), SigmaSpec::linear(0.5), white(61));
    const auto cal = calibrate_envelope(p, early_snapshots(p, cheap(0.1), 5, 0.1, 1));
    CHECK(cal.envelope.c_const <= cal.c_initial);
    CHECK(cal.envelope(0.0) - l2_norm(p.u0) >= 0.0);
    CHECK(cal.envelope.u0_l1 == Approx(l1_norm(p.u0)));
  }
  SECTION("linear noise: domination within half-widths") {
    const SfpmeProblem p(1.5, 1.0, positive_bump(g), SigmaSpec::linear(0.5), white(62));
    const auto cal = calibrate_envelope(p, early_snapshots(p, cheap(0.1), 10, 0.1, 1));
    const auto stats = run_ensemble(p, cheap(1.0), 100, 1);
    const auto rep = gronwall_envelope_check(stats, cal.envelope);
    CHECK(rep.dominated());
    CHECK(rep.slope_ok());
    CHECK(rep.slope_bound == Approx(0.5 / std::sqrt(cal.envelope.c_const)));
  }
  SECTION("an uncalibrated constant is a configuration error") {
    const SfpmeProblem p(1.5, 1.0, positive_bump(g), SigmaSpec::zero(), white(63));
    const auto stats = run_ensemble(p, cheap(0.1), 2, 1);
    CHECK_THROWS_AS(gronwall_envelope_check(stats, GronwallEnvelope{0.5, 0.0, 1.0}), ConfigError);
  }
}
