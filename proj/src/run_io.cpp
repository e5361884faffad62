#include "vofeb/run_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <stdexcept>

#include "vofeb/heights.hpp"
#include "vofeb/normals.hpp"
#include "vofeb/polyhedron.hpp"

namespace vofeb {

namespace {

std::FILE* open_or_throw(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) throw std::runtime_error("cannot open for writing: " + path);
  return f;
}

constexpr char kCsvHeader[] =
    "step; time; L2; L∞; E_V; E_shape(1); E_shape(2); min c; max (c − c_s); "
    "wall-clock seconds; step count\n";

void append_field(std::string& line, double v) {
  line += format_g17(v);
}

void append_field(std::string& line, const std::optional<double>& v) {
  if (v.has_value()) line += format_g17(*v);
}

}  // namespace

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path) : f_(open_or_throw(path)) {
  std::fputs(kCsvHeader, f_);
}

CsvWriter::~CsvWriter() {
  if (f_ != nullptr) std::fclose(f_);
}

void CsvWriter::write(const DiagnosticsRow& row) {
  std::string line;
  line += std::to_string(row.step);
  line += "; ";
  append_field(line, row.time);
  line += "; ";
  append_field(line, row.norms.l2);
  line += "; ";
  append_field(line, row.norms.linf);
  line += "; ";
  append_field(line, row.norms.ev);
  line += "; ";
  append_field(line, row.norms.eshape1);
  line += "; ";
  append_field(line, row.norms.eshape2);
  line += "; ";
  append_field(line, row.norms.min_c);
  line += "; ";
  append_field(line, row.norms.max_over);
  line += "; ";
  append_field(line, row.wall_seconds);
  line += "; ";
  line += std::to_string(row.step_count);
  line += '\n';
  std::fputs(line.c_str(), f_);
}

void CsvWriter::flush() {
  std::fflush(f_);
}

void write_vtk_scalar(const std::string& path, const LatticeSpec& spec,
                      const std::vector<double>& values, const std::string& field_name) {
  if (static_cast<long>(values.size()) != spec.cells())
    throw std::invalid_argument("write_vtk_scalar: value count does not match the lattice");
  std::FILE* f = open_or_throw(path);
  std::fputs("# vtk DataFile Version 3.0\n", f);
  std::fprintf(f, "%s\n", field_name.c_str());
  std::fputs("ASCII\nDATASET STRUCTURED_POINTS\n", f);
  std::fprintf(f, "DIMENSIONS %d %d %d\n", spec.n[0] + 1, spec.n[1] + 1, spec.n[2] + 1);
  std::fprintf(f, "ORIGIN %s %s %s\n", format_g17(spec.origin[0]).c_str(),
               format_g17(spec.origin[1]).c_str(), format_g17(spec.origin[2]).c_str());
  std::fprintf(f, "SPACING %s %s %s\n", format_g17(spec.delta).c_str(),
               format_g17(spec.delta).c_str(), format_g17(spec.delta).c_str());
  std::fprintf(f, "CELL_DATA %ld\n", spec.cells());
  std::fprintf(f, "SCALARS %s double 1\nLOOKUP_TABLE default\n", field_name.c_str());
  for (double v : values) std::fprintf(f, "%s\n", format_g17(v).c_str());
  std::fclose(f);
}

void write_key_values(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& entries) {
  std::FILE* f = open_or_throw(path);
  for (const auto& [k, v] : entries) std::fprintf(f, "%s = %s\n", k.c_str(), v.c_str());
  std::fclose(f);
}

void write_contact_points_csv(const std::string& path, const ScalarLattice& lat, int nthreads) {
  const HeightField hf = compute_heights(lat, nthreads);
  const InterfaceNormals nrm = plic_normals(lat, hf, {}, nthreads);
  const Reconstruction rec = reconstruct_planes(lat, nrm, nthreads);

  std::FILE* f = open_or_throw(path);
  std::fputs("x; y; z\n", f);
  const long N = lat.spec.cells();
  for (long ci = 0; ci < N; ++ci) {
    if (!rec.interfacial[ci] || lat.kind[ci] != kCellMixed) continue;
    const ConvexPolyhedron* fp = lat.fluid_poly(ci);
    if (fp == nullptr) continue;
    const auto edges = plane_section(*fp, rec.plane[ci].n, rec.plane[ci].gamma);
    int i, j, k;
    lat.spec.cell_coords(ci, &i, &j, &k);
    const Vec3 center = lat.spec.cell_center(i, j, k);
    for (const SectionEdge& e : edges) {
      if (e.tag != kTagSolid) continue;
      const Vec3 p = center + lat.spec.delta * (0.5 * (e.a + e.b));
      std::fprintf(f, "%s; %s; %s\n", format_g17(p[0]).c_str(), format_g17(p[1]).c_str(),
                   format_g17(p[2]).c_str());
    }
  }
  std::fclose(f);
}

}  // namespace vofeb
