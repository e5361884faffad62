#include "vofeb/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "vofeb/run_io.hpp"

namespace vofeb {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& val) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(val, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != val.size() || val.empty())
    throw std::invalid_argument("config value for '" + key + "' is not a number: " + val);
  return v;
}

long parse_long(const std::string& key, const std::string& val) {
  const double v = parse_double(key, val);
  if (v != std::floor(v) || std::abs(v) > 1e18)
    throw std::invalid_argument("config value for '" + key + "' is not an integer: " + val);
  return static_cast<long>(v);
}

bool parse_bool(const std::string& key, const std::string& val) {
  if (val == "true" || val == "1") return true;
  if (val == "false" || val == "0") return false;
  throw std::invalid_argument("config value for '" + key + "' is not a boolean: " + val);
}

double elapsed_seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string opt_str(const std::optional<double>& v) {
  return format_g17(v.value_or(std::numeric_limits<double>::quiet_NaN()));
}

}  // namespace

AdvectScheme parse_scheme(const std::string& name) {
  if (name == "traditional") return AdvectScheme::kTraditional;
  if (name == "conservative") return AdvectScheme::kConservative;
  if (name == "redistribution") return AdvectScheme::kRedistribution;
  throw std::invalid_argument("unknown scheme: " + name +
                              " (expected traditional, conservative, or redistribution)");
}

std::string scheme_name(AdvectScheme scheme) {
  switch (scheme) {
    case AdvectScheme::kTraditional: return "traditional";
    case AdvectScheme::kConservative: return "conservative";
    case AdvectScheme::kRedistribution: return "redistribution";
  }
  return "?";
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": malformed section header: " + line);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value, got: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "case") {
      cfg.case_name = val;
    } else if (key == "scheme") {
      cfg.scheme = parse_scheme(val);
    } else if (key == "cpr") {
      cfg.cpr = parse_double(key, val);
    } else if (key == "cycles") {
      cfg.cycles = parse_double(key, val);
    } else if (key == "cfl") {
      cfg.cfl = parse_double(key, val);
    } else if (key == "prune") {
      cfg.prune = parse_double(key, val);
    } else if (key == "relaxed_dt") {
      cfg.relaxed_dt = parse_bool(key, val);
    } else if (key == "theta_deg") {
      cfg.theta_deg = parse_double(key, val);
    } else if (key == "projection_tol") {
      cfg.projection_tol = parse_double(key, val);
    } else if (key == "out") {
      cfg.out = val;
    } else if (key == "snapshot_every") {
      cfg.snapshot_every = parse_long(key, val);
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(parse_long(key, val));
    } else {
      throw std::invalid_argument("unknown config key: " + key);
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

void validate(const RunConfig& c) {
  if (c.case_name != "rotating_shell" && c.case_name != "conical_cutout")
    throw std::invalid_argument("unknown case: " + c.case_name +
                                " (expected rotating_shell or conical_cutout)");
  if (!(c.cpr > 0.0) || !(c.cpr <= 1024.0))
    throw std::invalid_argument("cpr must be in (0, 1024]");
  if (!(c.cycles > 0.0)) throw std::invalid_argument("cycles must be positive");
  if (!(c.cfl > 0.0) || !(c.cfl <= 1.0)) throw std::invalid_argument("cfl must be in (0, 1]");
  if (c.prune && (!(*c.prune >= 0.0) || !(*c.prune < 1.0)))
    throw std::invalid_argument("prune must be in [0, 1)");
  if (!(c.theta_deg > 0.0) || !(c.theta_deg < 180.0))
    throw std::invalid_argument("theta_deg must be in (0, 180)");
  if (!(c.projection_tol > 0.0)) throw std::invalid_argument("projection_tol must be positive");
  if (c.snapshot_every < 0) throw std::invalid_argument("snapshot_every must be >= 0");
  if (c.threads < 1) throw std::invalid_argument("threads must be >= 1");
}

RunResult run_benchmark(const RunConfig& config, std::FILE* echo) {
  validate(config);
  const bool shell = config.case_name == "rotating_shell";
  const double prune = config.prune.value_or(shell ? 0.15 : 0.0);
  CaseSetup setup =
      shell ? make_rotating_shell(config.cpr, prune, config.projection_tol, config.threads)
            : make_conical_cutout(config.cpr, prune, config.projection_tol, config.threads);
  if (!setup.projection.converged)
    throw std::runtime_error("velocity projection did not converge: max divergence " +
                             format_g17(setup.projection.max_divergence));

  RunResult res;
  res.config = config;
  res.config.prune = prune;
  const bool relaxed =
      config.relaxed_dt.value_or(config.scheme == AdvectScheme::kRedistribution);
  res.config.relaxed_dt = relaxed;
  res.grid_n = setup.lat.spec.n[0];
  res.delta = setup.lat.spec.delta;
  res.projection = setup.projection;

  const NormContext ctx(setup.lat, config.threads);
  res.mixed_cells = ctx.mixed_count();
  res.contact_cells = ctx.contact_count();

  const double dt_max =
      max_stable_dt(setup.lat, setup.vel,
                    relaxed ? AdvectScheme::kRedistribution : AdvectScheme::kConservative,
                    config.cfl);
  res.duration = config.cycles * setup.period;
  res.steps = steps_for_interval(res.duration, dt_max);
  res.dt = res.duration / res.steps;

  std::optional<CsvWriter> csv;
  if (!config.out.empty()) {
    std::filesystem::create_directories(config.out);
    csv.emplace(config.out + "/diag.csv");
    write_vtk_scalar(config.out + "/cs.vtk", setup.lat.spec, setup.lat.cs, "c_s");
  }
  auto snapshot = [&](long step) {
    char name[32];
    std::snprintf(name, sizeof name, "/c_%06ld.vtk", step);
    write_vtk_scalar(config.out + name, setup.lat.spec, setup.lat.c, "c");
  };
  if (csv && config.snapshot_every > 0) snapshot(0);

  if (echo != nullptr)
    std::fprintf(echo, "%s %s cpr=%s: grid %ld^3, %ld mixed cells, %ld steps of dt=%s\n",
                 config.case_name.c_str(), scheme_name(config.scheme).c_str(),
                 format_g17(config.cpr).c_str(), res.grid_n, res.mixed_cells, res.steps,
                 format_g17(res.dt).c_str());

  res.min_c_overall = HUGE_VAL;
  res.max_over_overall = -HUGE_VAL;
  const long echo_every = std::max<long>(1, res.steps / 20);
  const auto t0 = std::chrono::steady_clock::now();
  for (long s = 0; s < res.steps; ++s) {
    try {
      res.stats.merge(advance(setup.lat, setup.vel, res.dt, s, config.scheme, config.threads));
    } catch (const std::exception& e) {
      throw NumericalAbort("step " + std::to_string(s + 1) + ": " + e.what());
    }
    const Norms n = ctx.measure(setup.lat, config.threads);
    if (csv) {
      csv->write(DiagnosticsRow{s + 1, (s + 1) * res.dt, n, elapsed_seconds(t0), res.steps});
      if (config.snapshot_every > 0 && (s + 1) % config.snapshot_every == 0) snapshot(s + 1);
    }
    res.ev_max = std::max(res.ev_max, n.ev);
    res.min_c_overall = std::min(res.min_c_overall, n.min_c);
    res.max_over_overall = std::max(res.max_over_overall, n.max_over);
    res.final_norms = n;
    if (echo != nullptr && ((s + 1) % echo_every == 0 || s + 1 == res.steps))
      std::fprintf(echo, "  step %ld/%ld  t=%s  E_V=%.3e  min c=%.3e  max(c-c_s)=%.3e\n", s + 1,
                   res.steps, format_g17((s + 1) * res.dt).c_str(), n.ev, n.min_c, n.max_over);
  }
  res.wall_seconds = elapsed_seconds(t0);

  if (!config.out.empty()) {
    write_contact_points_csv(config.out + "/contact_points.csv", setup.lat, config.threads);
    write_key_values(config.out + "/summary.txt", summarize(res));
  }
  return res;
}

std::vector<std::pair<std::string, std::string>> summarize(const RunResult& r) {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("case", r.config.case_name);
  kv.emplace_back("scheme", scheme_name(r.config.scheme));
  kv.emplace_back("cpr", format_g17(r.config.cpr));
  kv.emplace_back("cycles", format_g17(r.config.cycles));
  kv.emplace_back("cfl", format_g17(r.config.cfl));
  kv.emplace_back("prune", opt_str(r.config.prune));
  kv.emplace_back("relaxed_dt", r.config.relaxed_dt.value_or(false) ? "true" : "false");
  kv.emplace_back("theta_deg", format_g17(r.config.theta_deg));
  kv.emplace_back("threads", std::to_string(r.config.threads));
  kv.emplace_back("grid_n", std::to_string(r.grid_n));
  kv.emplace_back("delta", format_g17(r.delta));
  kv.emplace_back("steps", std::to_string(r.steps));
  kv.emplace_back("dt", format_g17(r.dt));
  kv.emplace_back("duration", format_g17(r.duration));
  kv.emplace_back("projection_iterations", std::to_string(r.projection.iterations));
  kv.emplace_back("projection_max_divergence", format_g17(r.projection.max_divergence));
  kv.emplace_back("projection_converged", r.projection.converged ? "true" : "false");
  kv.emplace_back("mixed_cells", std::to_string(r.mixed_cells));
  kv.emplace_back("contact_cells", std::to_string(r.contact_cells));
  kv.emplace_back("final_l2", opt_str(r.final_norms.l2));
  kv.emplace_back("final_linf", opt_str(r.final_norms.linf));
  kv.emplace_back("final_ev", format_g17(r.final_norms.ev));
  kv.emplace_back("final_eshape1", format_g17(r.final_norms.eshape1));
  kv.emplace_back("final_eshape2", opt_str(r.final_norms.eshape2));
  kv.emplace_back("final_min_c", format_g17(r.final_norms.min_c));
  kv.emplace_back("final_max_c_minus_cs", format_g17(r.final_norms.max_over));
  kv.emplace_back("ev_max", format_g17(r.ev_max));
  kv.emplace_back("min_c_overall", format_g17(r.min_c_overall));
  kv.emplace_back("max_c_minus_cs_overall", format_g17(r.max_over_overall));
  kv.emplace_back("redistribution_transfers", std::to_string(r.stats.redistribution_transfers));
  kv.emplace_back("widened_cells", std::to_string(r.stats.widened_cells));
  kv.emplace_back("clamped_cells", std::to_string(r.stats.clamped_cells));
  kv.emplace_back("clamped_volume", format_g17(r.stats.clamped_volume));
  kv.emplace_back("wall_seconds", format_g17(r.wall_seconds));
  return kv;
}

}  // namespace vofeb
