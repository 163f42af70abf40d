// Command-line front end: simulate, ensemble, kernel, verify.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "sfpme/app.hpp"

namespace {

std::optional<int> workers_from_env() {
  const char* raw = std::getenv("SFPME_WORKERS");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  try {
    const int w = std::stoi(raw);
    if (w > 0) return w;
  } catch (const std::exception&) {
  }
  std::cerr << "ignoring invalid SFPME_WORKERS value '" << raw << "'\n";
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral simulator and verification harness for the stochastic fractional "
               "porous medium equation"};
  app.require_subcommand(1);

  sfpme::Overrides ov;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out_dir;
  auto add_overrides = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Master seed (overrides [ensemble] seed)");
    sub->add_option("--workers", workers, "Worker threads (overrides config and SFPME_WORKERS)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "Output directory (overrides [output] dir)");
  };

  std::string config_path;
  auto* simulate = app.add_subcommand("simulate", "Run one trajectory from a config file");
  simulate->add_option("config", config_path, "Config file")->required();
  add_overrides(simulate);

  auto* ensemble = app.add_subcommand("ensemble", "Run a Monte Carlo ensemble and its checks");
  ensemble->add_option("config", config_path, "Config file")->required();
  add_overrides(ensemble);

  sfpme::KernelRequest kreq;
  auto* kernel = app.add_subcommand("kernel", "Tabulate the stable kernel and test its tail");
  kernel->add_option("--alpha", kreq.alpha, "Stable index in (0, 2]")->required();
  kernel->add_option("--dim", kreq.dim, "Spatial dimension (1 or 2)");
  kernel->add_option("--t", kreq.times, "Times (comma separated)")->delimiter(',');
  kernel->add_option("--x", kreq.radii, "Radii (comma separated)")->delimiter(',');
  kernel->add_option("--out", out_dir, "Output directory");

  std::vector<std::string> only;
  std::string fault;
  auto* verify = app.add_subcommand("verify", "Run the built-in claim suite");
  verify->add_option("--only", only, "Restrict to these claim ids (comma separated)")->delimiter(',');
  verify->add_option("--inject-fault", fault, "Fault injection for self-tests")
      ->check(CLI::IsMember({"symbol"}));
  verify->add_option("--seed", seed, "Seed of the randomized checks");
  verify->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sfpme::kExitUsage;
  }

  auto given = [](CLI::App* sub, const char* name) { return sub->count(name) > 0; };
  auto collect = [&](CLI::App* sub) {
    if (given(sub, "--seed")) ov.seed = seed;
    if (given(sub, "--workers")) {
      ov.workers = workers;
    } else if (auto env = workers_from_env()) {
      ov.workers = *env;
    }
    if (given(sub, "--out")) ov.out_dir = out_dir;
  };

  if (*simulate) {
    collect(simulate);
    return sfpme::cmd_simulate(config_path, ov, std::cout, std::cerr);
  }
  if (*ensemble) {
    collect(ensemble);
    return sfpme::cmd_ensemble(config_path, ov, std::cout, std::cerr);
  }
  if (*kernel) {
    if (given(kernel, "--out")) kreq.out_dir = out_dir;
    return sfpme::cmd_kernel(kreq, std::cout, std::cerr);
  }
  sfpme::VerifyOptions opt;
  if (given(verify, "--seed")) opt.seed = seed;
  if (given(verify, "--workers")) {
    opt.workers = workers;
  } else if (auto env = workers_from_env()) {
    opt.workers = *env;
  }
  opt.fault = fault;
  return sfpme::cmd_verify(only, opt, std::cout, std::cerr);
}
