#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vofeb/bench.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Embedded-boundary VOF advection benchmarks"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "Run the benchmark described by a config file");
  std::string config_path;
  std::optional<std::string> case_name, scheme, out;
  std::optional<double> cpr, cycles, cfl;
  std::optional<int> threads;
  run->add_option("config", config_path, "key = value config file")->required();
  run->add_option("--case", case_name, "rotating_shell or conical_cutout");
  run->add_option("--scheme", scheme, "traditional, conservative, or redistribution");
  run->add_option("--cpr", cpr, "cells per liquid radius");
  run->add_option("--cycles", cycles, "rotation cycles to run");
  run->add_option("--out", out, "artifact directory");
  run->add_option("--threads", threads, "worker threads");
  run->add_option("--cfl", cfl, "CFL number in (0, 1]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    vofeb::RunConfig cfg = vofeb::load_run_config(config_path);
    if (case_name) cfg.case_name = *case_name;
    if (scheme) cfg.scheme = vofeb::parse_scheme(*scheme);
    if (cpr) cfg.cpr = *cpr;
    if (cycles) cfg.cycles = *cycles;
    if (out) cfg.out = *out;
    if (threads) cfg.threads = *threads;
    if (cfl) cfg.cfl = *cfl;

    const vofeb::RunResult res = vofeb::run_benchmark(cfg, stdout);
    for (const auto& [k, v] : vofeb::summarize(res))
      std::printf("%s = %s\n", k.c_str(), v.c_str());
    return 0;
  } catch (const vofeb::NumericalAbort& e) {
    std::fprintf(stderr, "numerical abort: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
