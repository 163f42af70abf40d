#include <catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "sfpme/app.hpp"

using namespace sfpme;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

std::string config_error_message(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

int config_error_line(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  write_text(p, text);
  return p.string();
}

const char* kSmallRun = R"([problem]
dim = 1
n = 32
side_length = 2*pi
alpha = 1.5
m = 2
sigma = one
noise = white
initial = gaussian
baseline = 0.1

[solver]
dt = 1e-2
t_end = 0.2
scheme = semi_implicit
snapshot_stride = 5

[ensemble]
paths = 20
seed = 5
workers = 1
checks = martingale

[output]
snapshots = true
)";

}  // namespace

TEST_CASE("config parsing", "[config]") {
  SECTION("values and defaults") {
    const RunConfig c = parse_run_config(kSmallRun);
    CHECK(c.dim == 1);
    CHECK(c.n == 32);
    CHECK(c.side_length == 2.0 * std::numbers::pi);
    CHECK(c.alpha == 1.5);
    CHECK(c.m == 2.0);
    CHECK(c.sigma == SigmaKind::One);
    CHECK(c.noise == NoiseKind::SpaceTimeWhite);
    CHECK(c.solver.dt == 1e-2);
    CHECK(c.solver.t_end == 0.2);
    CHECK(c.solver.snapshot_stride == 5);
    CHECK(c.paths == 20);
    CHECK(c.seed == 5);
    CHECK(c.checks == std::vector<std::string>{"martingale"});
    CHECK(c.width == 1.0);
    CHECK(c.late_fraction == 0.5);
  }
  SECTION("pi multiples") {
    double x = 0.0;
    CHECK(parse_real("pi", x));
    CHECK(x == std::numbers::pi);
    CHECK(parse_real("4*pi", x));
    CHECK(x == 4.0 * std::numbers::pi);
    CHECK(parse_real(" 2.5 ", x));
    CHECK(x == 2.5);
    CHECK_FALSE(parse_real("pie", x));
    CHECK_FALSE(parse_real("", x));
  }
  SECTION("comments and blank lines") {
    const RunConfig c = parse_run_config("# top\n\n[problem] ; trailing\nalpha = 0.7 # note\n");
    CHECK(c.alpha == 0.7);
  }
  SECTION("out-of-range alpha names the key and the line") {
    const std::string text = "[problem]\ndim = 1\nalpha = 2.5\n";
    const std::string msg = config_error_message(text);
    CHECK(msg.find("'alpha'") != std::string::npos);
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("2.5") != std::string::npos);
    CHECK(config_error_line(text) == 3);
  }
  SECTION("rejections") {
    CHECK(config_error_message("[problem]\nn = 100\n").find("'n'") != std::string::npos);
    CHECK(config_error_message("[problem]\ncolour = red\n").find("unknown key 'colour'") !=
          std::string::npos);
    CHECK(config_error_message("[physics]\n").find("unknown section") != std::string::npos);
    CHECK(config_error_message("[problem]\nm = 1\nm = 2\n").find("duplicate") != std::string::npos);
    CHECK(config_error_line("[problem]\nm = 1\nm = 2\n") == 3);
    CHECK(config_error_message("alpha = 1\n").find("outside") != std::string::npos);
    CHECK(config_error_message("[solver]\ndt = 1\nt_end = 0.5\n").find("'dt'") != std::string::npos);
    CHECK(config_error_message("[ensemble]\npaths = 1\n").find("'paths'") != std::string::npos);
    CHECK(config_error_message("[ensemble]\nchecks = martingale,bogus\n").find("bogus") !=
          std::string::npos);
    CHECK(config_error_message("[solver]\ndealias = maybe\n").find("'dealias'") != std::string::npos);
    CHECK(config_error_message("[problem]\nalpha = nan\n").find("'alpha'") != std::string::npos);
  }
  SECTION("problem assembly") {
    RunConfig c = parse_run_config(kSmallRun);
    const SfpmeProblem p = build_problem(c);
    CHECK(p.grid.size() == 32);
    CHECK(p.noise.seed == 5);
    CHECK(p.u0[16] == Approx(1.1));
    c.initial = InitialShape::Constant;
    c.amplitude = 2.0;
    CHECK(build_initial_field(c)[3] == Approx(2.1));
    c.sigma = SigmaKind::Linear;
    c.lambda = 0.75;
    CHECK(build_sigma(c).lip_constant() == 0.75);
  }
}

TEST_CASE("text and binary output", "[io]") {
  SECTION("round-trip number format") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) {
      CHECK(std::stod(fmt17(x)) == x);
    }
    CHECK(fmt17(0.5) == "0.5");
    CHECK(csv_row({"a", "b"}) == "a,b\n");
  }
  SECTION("snapshot encoding") {
    const LatticeGrid g(2, 8, 4.0);
    const Field f = Field::sample(g, [](double x, double y) { return x - 3.0 * y; }, 0.25);
    const std::string buf = encode_snapshot(f, 1.25, 3.0);
    CHECK(buf.size() == 8 + 4 + 4 + 8 + 4 * 8 + 64 * 8);
    CHECK(std::memcmp(buf.data(), "SFPMSNAP", 8) == 0);
    CHECK(static_cast<unsigned char>(buf[8]) == 1);
    CHECK(static_cast<unsigned char>(buf[12]) == 2);
    CHECK(static_cast<unsigned char>(buf[16]) == 8);
    const auto d = decode_snapshot(buf);
    CHECK(d.header.dim == 2);
    CHECK(d.header.n == 8);
    CHECK(d.header.side_length == 4.0);
    CHECK(d.header.alpha == 1.25);
    CHECK(d.header.m == 3.0);
    CHECK(d.header.time == 0.25);
    CHECK(d.values == f.values);
    CHECK_THROWS_AS(decode_snapshot("NOTSNAPS"), InputError);
    CHECK_THROWS_AS(decode_snapshot(buf.substr(0, buf.size() - 3)), InputError);
    CHECK_THROWS_AS(decode_snapshot(buf + "x"), InputError);
  }
}

TEST_CASE("command entry points", "[app]") {
  const fs::path dir = oracle::scratch_dir("app");
  const std::string cfg = write_config(dir, "small.ini", kSmallRun);

  SECTION("simulate writes the mass series and snapshots") {
    std::ostringstream out, err;
    Overrides ov;
    ov.out_dir = (dir / "sim").string();
    CHECK(cmd_simulate(cfg, ov, out, err) == kExitPass);
    CHECK(out.str().find("check mass_identity: pass") != std::string::npos);
    const std::string mass = read_file(dir / "sim" / "mass.csv");
    CHECK(mass.rfind("t,mass,noise_integral,identity_residual,l2_sq,sup_abs\n", 0) == 0);
    CHECK(std::count(mass.begin(), mass.end(), '\n') == 22);
    const auto snap = decode_snapshot(read_file(dir / "sim" / "snapshots" / "snap_00004.bin"));
    CHECK(snap.header.time == Approx(0.2));
    CHECK(snap.header.m == 2.0);
    CHECK(fs::exists(dir / "sim" / "snapshots" / "index.csv"));

    std::ostringstream out2, err2;
    Overrides ov2;
    ov2.out_dir = (dir / "sim2").string();
    CHECK(cmd_simulate(cfg, ov2, out2, err2) == kExitPass);
    CHECK(read_file(dir / "sim2" / "mass.csv") == mass);
  }
  SECTION("configuration problems exit with status 2") {
    std::ostringstream out, err;
    const std::string bad = write_config(dir, "bad.ini", "[problem]\nalpha = 2.5\n");
    CHECK(cmd_simulate(bad, {}, out, err) == kExitUsage);
    CHECK(err.str().find("alpha") != std::string::npos);
    CHECK(cmd_simulate((dir / "missing.ini").string(), {}, out, err) == kExitUsage);
    const std::string one = write_config(dir, "one.ini", "[ensemble]\npaths = 1\n");
    CHECK(cmd_ensemble(one, {}, out, err) == kExitUsage);
  }
  SECTION("a step-size violation exits with status 3") {
    std::ostringstream out, err;
    const std::string text =
        "[problem]\nn = 64\nalpha = 2\nm = 1\n[solver]\nscheme = explicit\ndt = 0.05\nt_end = 0.1\n"
        "[output]\nsnapshots = false\ndir = " +
        (dir / "cfl").string() + "\n";
    CHECK(cmd_simulate(write_config(dir, "cfl.ini", text), {}, out, err) == kExitNumerical);
    CHECK(err.str().find("numerical failure") != std::string::npos);
  }
  SECTION("ensemble output does not depend on worker count") {
    std::string first;
    for (int w : {1, 4}) {
      std::ostringstream out, err;
      Overrides ov;
      ov.workers = w;
      ov.out_dir = (dir / ("ens" + std::to_string(w))).string();
      CHECK(cmd_ensemble(cfg, ov, out, err) == kExitPass);
      const std::string csv = read_file(fs::path(*ov.out_dir) / "analysis.csv");
      if (first.empty()) first = csv;
      CHECK(csv == first);
      CHECK(out.str().find("check martingale: pass") != std::string::npos);
    }
  }
  SECTION("kernel table") {
    std::ostringstream out, err;
    KernelRequest req;
    req.alpha = 1.0;
    req.out_dir = (dir / "kern").string();
    CHECK(cmd_kernel(req, out, err) == kExitPass);
    CHECK(out.str().find("check tail_exponent: pass") != std::string::npos);
    const std::string csv = read_file(dir / "kern" / "kernel.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
    req.alpha = 2.0;
    std::ostringstream out2;
    CHECK(cmd_kernel(req, out2, err) == kExitPass);
    CHECK(out2.str().find("notice") != std::string::npos);
    req.alpha = 3.0;
    CHECK(cmd_kernel(req, out2, err) == kExitUsage);
  }
  SECTION("verify subset, fault injection and unknown claims") {
    std::ostringstream out, err;
    CHECK(cmd_verify({"fractional-laplacian", "mass-identity"}, {}, out, err) == kExitPass);
    CHECK(out.str().find("overall: pass") != std::string::npos);
    VerifyOptions faulty;
    faulty.fault = "symbol";
    std::ostringstream out2;
    CHECK(cmd_verify({"fractional-laplacian"}, faulty, out2, err) == kExitCheckFailed);
    std::ostringstream err3;
    CHECK(cmd_verify({"no-such-claim"}, {}, out, err3) == kExitUsage);
    CHECK(err3.str().find("mass-identity") != std::string::npos);
  }
}
