#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fracflow/grid.hpp"

namespace fracflow {

/// Phase id per voxel, same layout as the fields (i fastest).
struct PhaseMap {
  GridDims dims;
  std::vector<std::uint8_t> phase;

  std::size_t voxel_count() const { return dims.voxel_count(); }
};

/// Map phase id -> crack resistance (units are the caller's, e.g. MPa*um).
class GammaTable {
 public:
  void set(std::uint8_t phase, double gamma);
  double at(std::uint8_t phase) const;
  bool contains(std::uint8_t phase) const;
  const std::map<std::uint8_t, double>& entries() const { return entries_; }

  /// Parses "0=1.0,1=10.0".
  static GammaTable parse(const std::string& text);

 private:
  std::map<std::uint8_t, double> entries_;
};

struct LayerSpec {
  int thickness = 0;
  std::uint8_t phase = 0;
};

/// Periodic laminate along `axis` (0,1,2). Thicknesses must sum to the axis
/// dimension; layers thinner than 2 voxels are legal but warned about.
PhaseMap gen_laminate(const GridDims& dims, int axis,
                      std::span<const LayerSpec> layers);

/// Single sphere: a voxel belongs to the inclusion iff its center lies
/// within diameter/2 of `center` (periodic distance, voxel units).
PhaseMap gen_sphere(const GridDims& dims, const std::array<double, 3>& center,
                    double diameter, std::uint8_t matrix = 0,
                    std::uint8_t inclusion = 1);

struct SpherePackParams {
  double diameter = 16.0;
  /// Place exactly `count` spheres when count > 0; otherwise fill towards
  /// `target_fraction` (inclusion volume fraction in [0,1)).
  int count = 0;
  double target_fraction = -1.0;
  /// Minimum center distance between spheres in units of the diameter.
  /// 1 gives hard non-overlapping spheres; sequential adsorption of hard
  /// monodisperse spheres saturates near 38% volume fraction, so denser
  /// targets need exclusion < 1.
  double exclusion = 1.0;
  std::uint64_t seed = 0;
  int max_rejections = 20000;
  std::uint8_t matrix = 0;
  std::uint8_t inclusion = 1;
};

struct SpherePackResult {
  PhaseMap map;
  std::vector<std::array<double, 3>> centers;
  double fraction = 0.0;  // achieved inclusion volume fraction (exact count)
};

/// Random sequential adsorption with periodic rejection sampling.
/// Throws JammingError when max_rejections candidates in a row fail.
SpherePackResult gen_sphere_pack(const GridDims& dims,
                                 const SpherePackParams& params);

struct CapsuleParams {
  int count = 0;
  double diameter = 6.0;
  /// Total capsule length over diameter.
  double aspect_ratio = 5.0;
  /// Orientation sampling: axis = normalize(weights * gaussian3). A single
  /// nonzero weight pins every axis to that coordinate direction.
  std::array<double, 3> axis_weights{1.0, 1.0, 1.0};
  std::uint64_t seed = 0;
  std::uint8_t matrix = 0;
  std::uint8_t inclusion = 1;
};

struct CapsuleResult {
  PhaseMap map;
  std::vector<std::array<double, 3>> axes;
  double fraction = 0.0;
};

/// Overlap-permitting placement of spherocylinders with axis-weighted
/// random orientations.
CapsuleResult gen_capsules(const GridDims& dims, const CapsuleParams& params);

/// Per-voxel lookup; throws ValueError when a phase id is missing.
ScalarField phases_to_gamma(const PhaseMap& map, const GammaTable& table);

/// Exact voxel count of `phase` over the total.
double volume_fraction(const PhaseMap& map, std::uint8_t phase);

// --- FFVX voxel container -------------------------------------------------
//
// Little-endian layout, i fastest:
//   bytes 0-3   magic "FFVX"
//   bytes 4-7   u32 version (1)
//   bytes 8-19  u32 n1, n2, n3
//   byte  20    u8 dtype: 0 = u8 phase ids, 1 = f32 scalars
//   bytes 21-23 reserved (zero)
//   payload     n1*n2*n3 u8, or n1*n2*n3 f32

enum class VoxelDType : std::uint8_t { phase_u8 = 0, scalar_f32 = 1 };

struct VoxelFile {
  VoxelDType dtype = VoxelDType::phase_u8;
  PhaseMap phases;      // valid when dtype == phase_u8
  ScalarField scalars;  // valid when dtype == scalar_f32 (widened to double)

  const GridDims& dims() const {
    return dtype == VoxelDType::phase_u8 ? phases.dims : scalars.dims();
  }
};

void save_voxel(const PhaseMap& map, const std::string& path);
/// Scalar payloads are stored as f32; doubles are narrowed on write.
void save_voxel(const ScalarField& field, const std::string& path);
VoxelFile load_voxel(const std::string& path);

}  // namespace fracflow
