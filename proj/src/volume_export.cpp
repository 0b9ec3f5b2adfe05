#include "fracflow/volume_export.hpp"

#include <cstdio>
#include <fstream>

namespace fracflow {

namespace {

void write_value(std::ofstream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  os << buf;
}

}  // namespace

void write_structured_points(
    const std::string& path, const GridDims& dims,
    const std::vector<std::pair<std::string, const ScalarField*>>& scalars,
    const std::vector<std::pair<std::string, const VectorField3*>>& vectors) {
  for (const auto& [name, f] : scalars) require_same_shape(dims, f->dims(), "volume export");
  for (const auto& [name, f] : vectors) require_same_shape(dims, f->dims(), "volume export");

  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");

  const std::size_t n = dims.voxel_count();
  os << "# vtk DataFile Version 3.0\n";
  os << "fracflow volume export\n";
  os << "ASCII\n";
  os << "DATASET STRUCTURED_POINTS\n";
  os << "DIMENSIONS " << dims.n1 << " " << dims.n2 << " " << dims.n3 << "\n";
  os << "ORIGIN 0 0 0\n";
  os << "SPACING " << dims.h << " " << dims.h << " " << dims.h << "\n";
  os << "POINT_DATA " << n << "\n";

  for (const auto& [name, f] : scalars) {
    os << "SCALARS " << name << " double 1\n";
    os << "LOOKUP_TABLE default\n";
    const double* d = f->data();
    for (std::size_t v = 0; v < n; ++v) {
      write_value(os, d[v]);
      os << ((v + 1) % 9 == 0 ? '\n' : ' ');
    }
    if (n % 9 != 0) os << "\n";
  }
  for (const auto& [name, f] : vectors) {
    os << "VECTORS " << name << " double\n";
    const double* x = f->data();
    const double* y = x + n;
    const double* z = y + n;
    for (std::size_t v = 0; v < n; ++v) {
      write_value(os, x[v]);
      os << " ";
      write_value(os, y[v]);
      os << " ";
      write_value(os, z[v]);
      os << "\n";
    }
  }
  if (!os) throw IoError("short write to '" + path + "'");
}

}  // namespace fracflow
