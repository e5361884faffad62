#pragma once

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "vofeb/lattice.hpp"
#include "vofeb/norms.hpp"

namespace vofeb {

// One per-step record emitted by the benchmark driver.
struct DiagnosticsRow {
  long step = 0;
  double time = 0.0;
  Norms norms;
  double wall_seconds = 0.0;
  long step_count = 0;
};

// Shortest decimal form that round-trips to the same double.
std::string format_g17(double v);

// Per-step diagnostics as "; "-separated text with a fixed header. Every
// column except the wall-clock one is byte-deterministic for a fixed
// configuration; absent norms (no mixed or no contact-line cells) leave
// their field empty. Throws std::runtime_error when the file cannot be
// opened.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void write(const DiagnosticsRow& row);
  void flush();

 private:
  std::FILE* f_ = nullptr;
};

// Legacy-ASCII STRUCTURED_POINTS snapshot of one cell-centered scalar field:
// DIMENSIONS hold the vertex counts and the values appear as CELL_DATA in
// x-fastest order, one per line.
void write_vtk_scalar(const std::string& path, const LatticeSpec& spec,
                      const std::vector<double>& values, const std::string& field_name);

// "key = value" lines in the given order.
void write_key_values(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& entries);

// Contact-line sample points (header "x; y; z", one row per point): for every
// cell holding liquid, gas, and solid, the midpoint of the segment where the
// reconstructed interface plane crosses the cell's solid facet, in world
// coordinates and ascending cell order.
void write_contact_points_csv(const std::string& path, const ScalarLattice& lat, int nthreads);

}  // namespace vofeb
