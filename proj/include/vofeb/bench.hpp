#pragma once

#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>

#include "vofeb/advection.hpp"
#include "vofeb/cases.hpp"
#include "vofeb/norms.hpp"

namespace vofeb {

// Failure raised from inside the step loop (overflow, NaN, lost volume), as
// opposed to configuration and setup problems which keep their plain types.
struct NumericalAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Everything a benchmark run needs; field names double as config keys.
struct RunConfig {
  std::string case_name = "rotating_shell";  // rotating_shell | conical_cutout
  AdvectScheme scheme = AdvectScheme::kConservative;
  double cpr = 19.2;
  double cycles = 1.0;
  double cfl = 0.5;
  std::optional<double> prune;        // default 0.15 for the shell, 0 for the cutout
  std::optional<bool> relaxed_dt;     // default: only the redistribution scheme
  double theta_deg = 90.0;
  double projection_tol = 1e-13;
  std::string out;                    // artifact directory; empty writes nothing
  long snapshot_every = 0;            // steps between field snapshots; 0 disables
  int threads = 1;
};

AdvectScheme parse_scheme(const std::string& name);
std::string scheme_name(AdvectScheme scheme);

// Parses flat "key = value" text. '#' starts a comment, blank lines and
// [section] headers are allowed (sections group keys but do not rename
// them). Unknown keys, malformed lines, and unparsable values throw
// std::invalid_argument naming the offender.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

// Throws std::invalid_argument on out-of-range fields.
void validate(const RunConfig& config);

struct RunResult {
  RunConfig config;
  long grid_n = 0;
  double delta = 0.0;
  long steps = 0;
  double dt = 0.0;
  double duration = 0.0;
  ProjectionReport projection;
  long mixed_cells = 0;
  long contact_cells = 0;
  Norms final_norms;
  double ev_max = 0.0;        // largest E_V seen at any step
  double min_c_overall = 0.0;
  double max_over_overall = 0.0;
  AdvectStats stats;
  double wall_seconds = 0.0;
};

// Runs one benchmark end to end: builds the case, steps it through
// cycles * period, and measures norms after every step. With config.out set,
// writes diag.csv (one row per step), cs.vtk, snapshots c_<step>.vtk at the
// configured cadence, contact_points.csv, and summary.txt there, creating
// the directory first. `echo` (when given) receives occasional progress
// rows. Setup problems throw std::invalid_argument or std::runtime_error
// before stepping; numerical failures surface as std::runtime_error from
// inside the step loop.
RunResult run_benchmark(const RunConfig& config, std::FILE* echo = nullptr);

// Summary key/value pairs of a finished run, the same content written to
// summary.txt.
std::vector<std::pair<std::string, std::string>> summarize(const RunResult& r);

}  // namespace vofeb
