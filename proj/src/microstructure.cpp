#include "fracflow/microstructure.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fracflow/rng.hpp"

namespace fracflow {

namespace {

double min_image(double d, double period) {
  return std::remainder(d, period);
}

double periodic_dist2(const std::array<double, 3>& a,
                      const std::array<double, 3>& b, const GridDims& dims) {
  const double dx = min_image(a[0] - b[0], dims.n1);
  const double dy = min_image(a[1] - b[1], dims.n2);
  const double dz = min_image(a[2] - b[2], dims.n3);
  return dx * dx + dy * dy + dz * dz;
}

// Stamps `inclusion` into every voxel whose center lies within `radius` of
// `center` (periodic), returning how many voxels changed phase.
std::size_t stamp_sphere(PhaseMap& map, const std::array<double, 3>& center,
                         double radius, std::uint8_t inclusion) {
  if (radius <= 0.0) return 0;
  const GridDims& d = map.dims;
  const double r2 = radius * radius;
  std::size_t added = 0;
  const int ext[3] = {
      std::min(d.n1, 2 * static_cast<int>(std::ceil(radius + 0.5)) + 1),
      std::min(d.n2, 2 * static_cast<int>(std::ceil(radius + 0.5)) + 1),
      std::min(d.n3, 2 * static_cast<int>(std::ceil(radius + 0.5)) + 1)};
  const int lo[3] = {static_cast<int>(std::floor(center[0] - radius - 0.5)),
                     static_cast<int>(std::floor(center[1] - radius - 0.5)),
                     static_cast<int>(std::floor(center[2] - radius - 0.5))};
  const int n[3] = {d.n1, d.n2, d.n3};
  for (int dk = 0; dk < ext[2]; ++dk) {
    const int k = ((lo[2] + dk) % n[2] + n[2]) % n[2];
    const double dz = min_image(k + 0.5 - center[2], n[2]);
    for (int dj = 0; dj < ext[1]; ++dj) {
      const int j = ((lo[1] + dj) % n[1] + n[1]) % n[1];
      const double dy = min_image(j + 0.5 - center[1], n[1]);
      for (int di = 0; di < ext[0]; ++di) {
        const int i = ((lo[0] + di) % n[0] + n[0]) % n[0];
        const double dx = min_image(i + 0.5 - center[0], n[0]);
        if (dx * dx + dy * dy + dz * dz <= r2) {
          auto& ph = map.phase[d.index(i, j, k)];
          if (ph != inclusion) {
            ph = inclusion;
            ++added;
          }
        }
      }
    }
  }
  return added;
}

// Smallest extent over the non-degenerate axes; singleton axes host 2D
// structures and do not constrain inclusion sizes.
int min_extent(const GridDims& dims) {
  int m = 0;
  for (const int n : {dims.n1, dims.n2, dims.n3}) {
    if (n > 1 && (m == 0 || n < m)) m = n;
  }
  return m == 0 ? 1 : m;
}

std::array<double, 3> sample_center(Xoshiro256pp& rng, const GridDims& dims) {
  // Axes of extent 1 get the voxel-center plane, keeping 2D structures
  // exactly two-dimensional.
  std::array<double, 3> c;
  c[0] = dims.n1 == 1 ? 0.5 : rng.uniform(0.0, dims.n1);
  c[1] = dims.n2 == 1 ? 0.5 : rng.uniform(0.0, dims.n2);
  c[2] = dims.n3 == 1 ? 0.5 : rng.uniform(0.0, dims.n3);
  return c;
}

void write_u32_le(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {
      static_cast<unsigned char>(v & 0xff),
      static_cast<unsigned char>((v >> 8) & 0xff),
      static_cast<unsigned char>((v >> 16) & 0xff),
      static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32_le(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_header(std::ostream& os, const GridDims& dims, VoxelDType dtype) {
  os.write("FFVX", 4);
  write_u32_le(os, 1u);
  write_u32_le(os, static_cast<std::uint32_t>(dims.n1));
  write_u32_le(os, static_cast<std::uint32_t>(dims.n2));
  write_u32_le(os, static_cast<std::uint32_t>(dims.n3));
  const unsigned char tail[4] = {static_cast<unsigned char>(dtype), 0, 0, 0};
  os.write(reinterpret_cast<const char*>(tail), 4);
}

}  // namespace

void GammaTable::set(std::uint8_t phase, double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw ValueError("crack resistance for phase " + std::to_string(phase) +
                     " must be finite and non-negative");
  }
  entries_[phase] = gamma;
}

double GammaTable::at(std::uint8_t phase) const {
  const auto it = entries_.find(phase);
  if (it == entries_.end()) {
    throw ValueError("phase id " + std::to_string(phase) +
                     " has no crack-resistance entry");
  }
  return it->second;
}

bool GammaTable::contains(std::uint8_t phase) const {
  return entries_.count(phase) > 0;
}

GammaTable GammaTable::parse(const std::string& text) {
  GammaTable table;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ValueError("bad gamma table entry '" + item + "', expected id=value");
    }
    int phase = -1;
    double value = 0.0;
    try {
      phase = std::stoi(item.substr(0, eq));
      value = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw ValueError("bad gamma table entry '" + item + "'");
    }
    if (phase < 0 || phase > 255) {
      throw ValueError("phase id must fit u8, got " + std::to_string(phase));
    }
    table.set(static_cast<std::uint8_t>(phase), value);
  }
  if (table.entries().empty()) {
    throw ValueError("empty gamma table '" + text + "'");
  }
  return table;
}

PhaseMap gen_laminate(const GridDims& dims, int axis,
                      std::span<const LayerSpec> layers) {
  validate_dims(dims);
  if (axis < 0 || axis > 2) throw ValueError("laminate axis must be 0, 1 or 2");
  const int extent = axis == 0 ? dims.n1 : (axis == 1 ? dims.n2 : dims.n3);
  int total = 0;
  for (const auto& l : layers) {
    if (l.thickness < 1) throw ValueError("layer thickness must be positive");
    if (l.thickness < 2) {
      std::cerr << "warning: laminate layer of thickness " << l.thickness
                << " voxel couples with both neighbors\n";
    }
    total += l.thickness;
  }
  if (total != extent) {
    throw ValueError("layer thicknesses sum to " + std::to_string(total) +
                     " but axis extent is " + std::to_string(extent));
  }

  std::vector<std::uint8_t> by_slice(static_cast<std::size_t>(extent));
  int pos = 0;
  for (const auto& l : layers) {
    std::fill_n(by_slice.begin() + pos, l.thickness, l.phase);
    pos += l.thickness;
  }

  PhaseMap map{dims, std::vector<std::uint8_t>(dims.voxel_count())};
  for (int k = 0; k < dims.n3; ++k) {
    for (int j = 0; j < dims.n2; ++j) {
      for (int i = 0; i < dims.n1; ++i) {
        const int slice = axis == 0 ? i : (axis == 1 ? j : k);
        map.phase[dims.index(i, j, k)] = by_slice[static_cast<std::size_t>(slice)];
      }
    }
  }
  return map;
}

PhaseMap gen_sphere(const GridDims& dims, const std::array<double, 3>& center,
                    double diameter, std::uint8_t matrix, std::uint8_t inclusion) {
  validate_dims(dims);
  if (diameter > min_extent(dims)) {
    throw ValueError("sphere diameter exceeds the smallest grid extent");
  }
  PhaseMap map{dims, std::vector<std::uint8_t>(dims.voxel_count(), matrix)};
  if (diameter > 0.0) stamp_sphere(map, center, diameter / 2.0, inclusion);
  return map;
}

SpherePackResult gen_sphere_pack(const GridDims& dims,
                                 const SpherePackParams& p) {
  validate_dims(dims);
  if (p.count <= 0 && !(p.target_fraction >= 0.0 && p.target_fraction < 1.0)) {
    throw ValueError("sphere pack needs a count or a target fraction in [0,1)");
  }
  if (!(p.diameter > 0.0)) throw ValueError("sphere diameter must be positive");
  if (!(p.exclusion > 0.0)) throw ValueError("exclusion factor must be positive");
  if (p.diameter > min_extent(dims)) {
    throw ValueError("sphere diameter exceeds the smallest grid extent");
  }

  SpherePackResult res;
  res.map = PhaseMap{dims, std::vector<std::uint8_t>(dims.voxel_count(), p.matrix)};
  Xoshiro256pp rng(p.seed);
  const double total = static_cast<double>(dims.voxel_count());
  const double min_dist2 = p.exclusion * p.diameter * p.exclusion * p.diameter;
  std::size_t filled = 0;
  int rejections = 0;

  const bool by_count = p.count > 0;
  while (true) {
    if (by_count && res.centers.size() == static_cast<std::size_t>(p.count)) break;
    if (rejections > p.max_rejections) {
      std::ostringstream os;
      os << "sphere pack jammed after " << p.max_rejections
         << " consecutive rejections at fraction " << (filled / total);
      if (!by_count) os << " (target " << p.target_fraction << ")";
      throw JammingError(os.str());
    }

    const auto c = sample_center(rng, dims);
    bool clash = false;
    for (const auto& other : res.centers) {
      if (periodic_dist2(c, other, dims) < min_dist2) {
        clash = true;
        break;
      }
    }
    if (clash) {
      ++rejections;
      continue;
    }

    if (!by_count) {
      // Stop once another sphere would move the achieved fraction further
      // from the target than leaving it out does.
      PhaseMap trial = res.map;
      const std::size_t added = stamp_sphere(trial, c, p.diameter / 2.0, p.inclusion);
      const double before = filled / total;
      const double after = (filled + added) / total;
      if (std::abs(after - p.target_fraction) > std::abs(before - p.target_fraction)) {
        break;
      }
      res.map = std::move(trial);
      filled += added;
    } else {
      filled += stamp_sphere(res.map, c, p.diameter / 2.0, p.inclusion);
    }
    res.centers.push_back(c);
    rejections = 0;
  }

  res.fraction = filled / total;
  return res;
}

CapsuleResult gen_capsules(const GridDims& dims, const CapsuleParams& p) {
  validate_dims(dims);
  if (p.count < 0) throw ValueError("capsule count must be non-negative");
  if (!(p.diameter > 0.0)) throw ValueError("capsule diameter must be positive");
  if (!(p.aspect_ratio >= 1.0)) {
    throw ValueError("capsule aspect ratio must be at least 1");
  }
  const double length = p.aspect_ratio * p.diameter;
  if (length >= min_extent(dims)) {
    throw ValueError("capsule length must be smaller than the smallest extent");
  }
  const double w2 = p.axis_weights[0] * p.axis_weights[0] +
                    p.axis_weights[1] * p.axis_weights[1] +
                    p.axis_weights[2] * p.axis_weights[2];
  if (!(w2 > 0.0)) throw ValueError("axis weights must not all vanish");

  CapsuleResult res;
  res.map = PhaseMap{dims, std::vector<std::uint8_t>(dims.voxel_count(), p.matrix)};
  Xoshiro256pp rng(p.seed);
  const double r = p.diameter / 2.0;
  const double half_seg = std::max(length - p.diameter, 0.0) / 2.0;
  const int n[3] = {dims.n1, dims.n2, dims.n3};

  for (int cap = 0; cap < p.count; ++cap) {
    const auto c = sample_center(rng, dims);
    std::array<double, 3> a{};
    while (true) {
      const double gx = rng.gaussian();
      const double gy = rng.gaussian();
      const double gz = rng.gaussian();
      a = {p.axis_weights[0] * gx, p.axis_weights[1] * gy, p.axis_weights[2] * gz};
      const double na = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
      if (na > 1e-12) {
        a = {a[0] / na, a[1] / na, a[2] / na};
        break;
      }
    }
    res.axes.push_back(a);

    for (int k = 0; k < n[2]; ++k) {
      const double dz = min_image(k + 0.5 - c[2], n[2]);
      for (int j = 0; j < n[1]; ++j) {
        const double dy = min_image(j + 0.5 - c[1], n[1]);
        for (int i = 0; i < n[0]; ++i) {
          const double dx = min_image(i + 0.5 - c[0], n[0]);
          double t = dx * a[0] + dy * a[1] + dz * a[2];
          t = std::clamp(t, -half_seg, half_seg);
          const double ex = dx - t * a[0];
          const double ey = dy - t * a[1];
          const double ez = dz - t * a[2];
          if (ex * ex + ey * ey + ez * ez <= r * r) {
            res.map.phase[dims.index(i, j, k)] = p.inclusion;
          }
        }
      }
    }
  }

  res.fraction = volume_fraction(res.map, p.inclusion);
  if (p.count == 0) res.fraction = 0.0;
  return res;
}

ScalarField phases_to_gamma(const PhaseMap& map, const GammaTable& table) {
  ScalarField out(map.dims);
  // Per-phase lookup once, then a flat pass.
  std::array<double, 256> lut;
  std::array<bool, 256> present{};
  for (const auto& [phase, value] : table.entries()) {
    lut[phase] = value;
    present[phase] = true;
  }
  double* o = out.data();
  for (std::size_t v = 0; v < map.phase.size(); ++v) {
    const std::uint8_t ph = map.phase[v];
    if (!present[ph]) {
      throw ValueError("phase id " + std::to_string(ph) +
                       " has no crack-resistance entry");
    }
    o[v] = lut[ph];
  }
  return out;
}

double volume_fraction(const PhaseMap& map, std::uint8_t phase) {
  std::size_t count = 0;
  for (const auto ph : map.phase) count += ph == phase ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(map.voxel_count());
}

void save_voxel(const PhaseMap& map, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_header(os, map.dims, VoxelDType::phase_u8);
  os.write(reinterpret_cast<const char*>(map.phase.data()),
           static_cast<std::streamsize>(map.phase.size()));
  if (!os) throw IoError("short write to '" + path + "'");
}

void save_voxel(const ScalarField& field, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_header(os, field.dims(), VoxelDType::scalar_f32);
  const std::size_t n = field.voxel_count();
  std::vector<unsigned char> payload(4 * n);
  const double* d = field.data();
  for (std::size_t v = 0; v < n; ++v) {
    const float f = static_cast<float>(d[v]);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    payload[4 * v] = static_cast<unsigned char>(bits & 0xff);
    payload[4 * v + 1] = static_cast<unsigned char>((bits >> 8) & 0xff);
    payload[4 * v + 2] = static_cast<unsigned char>((bits >> 16) & 0xff);
    payload[4 * v + 3] = static_cast<unsigned char>((bits >> 24) & 0xff);
  }
  os.write(reinterpret_cast<const char*>(payload.data()),
           static_cast<std::streamsize>(payload.size()));
  if (!os) throw IoError("short write to '" + path + "'");
}

VoxelFile load_voxel(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");

  unsigned char header[24];
  is.read(reinterpret_cast<char*>(header), 24);
  if (is.gcount() != 24) {
    throw IoError("'" + path + "' is truncated: expected a 24-byte header, got " +
                  std::to_string(is.gcount()) + " bytes");
  }
  if (std::memcmp(header, "FFVX", 4) != 0) {
    throw IoError("'" + path + "' is not an FFVX file (bad magic)");
  }
  const std::uint32_t version = read_u32_le(header + 4);
  if (version != 1) {
    throw IoError("'" + path + "' has unsupported FFVX version " +
                  std::to_string(version));
  }
  GridDims dims;
  dims.n1 = static_cast<int>(read_u32_le(header + 8));
  dims.n2 = static_cast<int>(read_u32_le(header + 12));
  dims.n3 = static_cast<int>(read_u32_le(header + 16));
  validate_dims(dims);
  const std::uint8_t dtype = header[20];
  if (dtype > 1) {
    throw IoError("'" + path + "' has unknown FFVX dtype " + std::to_string(dtype));
  }

  VoxelFile out;
  out.dtype = static_cast<VoxelDType>(dtype);
  const std::size_t n = dims.voxel_count();
  if (out.dtype == VoxelDType::phase_u8) {
    out.phases.dims = dims;
    out.phases.phase.resize(n);
    is.read(reinterpret_cast<char*>(out.phases.phase.data()),
            static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n) {
      throw IoError("'" + path + "' is truncated: expected " + std::to_string(n) +
                    " payload bytes, got " + std::to_string(is.gcount()));
    }
  } else {
    std::vector<unsigned char> payload(4 * n);
    is.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
    if (static_cast<std::size_t>(is.gcount()) != 4 * n) {
      throw IoError("'" + path + "' is truncated: expected " +
                    std::to_string(4 * n) + " payload bytes, got " +
                    std::to_string(is.gcount()));
    }
    out.scalars = ScalarField(dims);
    double* d = out.scalars.data();
    for (std::size_t v = 0; v < n; ++v) {
      std::uint32_t bits = read_u32_le(payload.data() + 4 * v);
      float f;
      std::memcpy(&f, &bits, 4);
      if (!std::isfinite(f)) {
        throw IoError("'" + path + "' contains a non-finite scalar at voxel " +
                      std::to_string(v));
      }
      d[v] = static_cast<double>(f);
    }
  }
  return out;
}

}  // namespace fracflow
