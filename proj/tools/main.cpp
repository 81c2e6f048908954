#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rdsos/pipeline.hpp"

using namespace rdsos;

int main(int argc, char** argv) {
  CLI::App app{"Moment relaxations of the periodic Fisher-KPP equation"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out, backend;
  bool quiet = false;
  app.add_option("--config", config_path, "JSON run configuration (defaults apply when omitted)");
  app.add_option("--seed", seed, "Override oracle.seed");
  app.add_option("--out", out, "Override io.out");
  app.add_option("--backend", backend, "Override solver.backend");
  app.add_flag("-q,--quiet", quiet, "Do not print the stage summary");

  auto* simulate = app.add_subcommand("simulate", "Finite-difference trajectories of the initial states");
  auto* moments = app.add_subcommand("moments", "Initial and empirical push-forward moments");
  auto* assemble = app.add_subcommand("assemble", "Liouville constraints and the conic problem");
  bool sdpa = false;
  assemble->add_flag("--sdpa", sdpa, "Also export the problem in SDPA sparse format");
  auto* solve = app.add_subcommand("solve", "Solve the moment relaxation");
  auto* compare = app.add_subcommand("compare", "Match solved pseudo-moments against reference moments");
  std::string computed, reference;
  compare->add_option("--computed", computed, "Directory with occupation.csv and terminal.csv (default <out>/solve)");
  compare->add_option("--reference", reference, "Reference directory (default <out>/moments)");
  auto* validate = app.add_subcommand("validate", "Run the property checks and emit pass/fail JSON");
  auto* report = app.add_subcommand("report", "Collect stage reports into one summary");
  auto* show = app.add_subcommand("config", "Print the resolved configuration");
  for (auto* sub : {simulate, moments, assemble, solve, compare, validate, report, show}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
    if (seed) cfg.oracle.seed = *seed;
    if (out) cfg.io.out = *out;
    if (backend) cfg.solver.backend = *backend;
    if (sdpa) cfg.io.sdpa = true;
    validate_config(cfg);
  } catch (const std::exception& e) {
    std::cerr << "rdsos: invalid configuration: " << e.what() << '\n';
    return kExitConfig;
  }

  CommandResult r;
  try {
    if (*show) {
      std::cout << config_to_json(cfg).dump(2) << '\n';
      return kExitOk;
    }
    if (*simulate) r = cmd_simulate(cfg);
    else if (*moments) r = cmd_moments(cfg);
    else if (*assemble) r = cmd_assemble(cfg);
    else if (*solve) r = cmd_solve(cfg);
    else if (*compare) r = cmd_compare(cfg, computed, reference);
    else if (*validate) r = cmd_validate(cfg);
    else r = cmd_report(cfg);
  } catch (const std::exception& e) {
    std::cerr << "rdsos: " << e.what() << '\n';
    return kExitContract;
  }
  if (!quiet) {
    if (*report) {
      std::cout << r.summary["markdown"].get<std::string>();
    } else {
      std::cout << r.summary.dump(2) << '\n';
    }
  }
  if (r.exit_code != kExitOk) std::cerr << "rdsos: stage finished with exit code " << r.exit_code << '\n';
  return r.exit_code;
}
