#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fracflow/microstructure.hpp"

using namespace fracflow;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("laminate generation") {
  const GridDims dims{8, 4, 4, 1.0};
  const PhaseMap map =
      gen_laminate(dims, 0, std::vector<LayerSpec>{{4, 0}, {4, 1}});
  for (int k = 0; k < 4; ++k) {
    for (int j = 0; j < 4; ++j) {
      for (int i = 0; i < 8; ++i) {
        CHECK(map.phase[dims.index(i, j, k)] == (i < 4 ? 0 : 1));
      }
    }
  }
  CHECK(volume_fraction(map, 0) == 0.5);

  const PhaseMap homo =
      gen_laminate(dims, 0, std::vector<LayerSpec>{{8, 3}});
  CHECK(volume_fraction(homo, 3) == 1.0);

  CHECK_THROWS_AS(gen_laminate(dims, 0, std::vector<LayerSpec>{{4, 0}, {3, 1}}),
                  ValueError);
}

TEST_CASE("sphere generation and voxel fractions") {
  const GridDims dims{64, 64, 64, 1.0};
  const PhaseMap map = gen_sphere(dims, {32.0, 32.0, 32.0}, 32.0);
  const double analytic = M_PI / 6.0 * 32.0 * 32.0 * 32.0 / (64.0 * 64.0 * 64.0);
  const double voxels = volume_fraction(map, 1);
  CHECK(std::abs(voxels - analytic) / analytic <= 0.02);

  // Zero diameter keeps the matrix homogeneous.
  const PhaseMap empty = gen_sphere(dims, {32.0, 32.0, 32.0}, 0.0);
  CHECK(volume_fraction(empty, 0) == 1.0);

  // Shifting the center by a full period is invisible.
  const PhaseMap moved = gen_sphere(dims, {32.0 + 64.0, 32.0 - 64.0, 32.0}, 32.0);
  CHECK(moved.phase == map.phase);
}

TEST_CASE("sphere pack determinism and porosity targeting") {
  const GridDims dims{64, 64, 64, 1.0};
  SpherePackParams params;
  params.diameter = 16.0;
  params.target_fraction = 0.05;
  params.seed = 42;
  const auto a = gen_sphere_pack(dims, params);
  CHECK(std::abs(a.fraction - 0.05) <= 0.005);
  CHECK(a.fraction == volume_fraction(a.map, 1));

  const auto b = gen_sphere_pack(dims, params);
  CHECK(a.map.phase == b.map.phase);
  CHECK(a.centers == b.centers);
}

TEST_CASE("sphere pack with count one equals a single sphere") {
  const GridDims dims{32, 32, 32, 1.0};
  SpherePackParams params;
  params.diameter = 10.0;
  params.count = 1;
  params.seed = 7;
  const auto pack = gen_sphere_pack(dims, params);
  REQUIRE(pack.centers.size() == 1);
  const PhaseMap direct = gen_sphere(dims, pack.centers[0], 10.0);
  CHECK(pack.map.phase == direct.phase);
}

TEST_CASE("sphere pack jams on impossible targets") {
  const GridDims dims{16, 16, 16, 1.0};
  SpherePackParams params;
  params.diameter = 8.0;
  params.target_fraction = 0.9;
  params.seed = 1;
  params.max_rejections = 500;
  CHECK_THROWS_AS(gen_sphere_pack(dims, params), JammingError);
}

TEST_CASE("capsule generation") {
  const GridDims dims{32, 32, 32, 1.0};

  CapsuleParams none;
  none.count = 0;
  const auto empty = gen_capsules(dims, none);
  CHECK(volume_fraction(empty.map, 0) == 1.0);

  CapsuleParams pinned;
  pinned.count = 5;
  pinned.diameter = 4.0;
  pinned.aspect_ratio = 5.0;
  pinned.axis_weights = {1.0, 0.0, 0.0};
  pinned.seed = 3;
  const auto along_x = gen_capsules(dims, pinned);
  for (const auto& axis : along_x.axes) {
    CHECK(std::abs(std::abs(axis[0]) - 1.0) <= 1e-12);
    CHECK(std::abs(axis[1]) <= 1e-12);
    CHECK(std::abs(axis[2]) <= 1e-12);
  }
  CHECK(along_x.fraction > 0.0);

  const auto again = gen_capsules(dims, pinned);
  CHECK(along_x.map.phase == again.map.phase);

  CapsuleParams too_long = pinned;
  too_long.aspect_ratio = 10.0;  // length 40 > 32
  CHECK_THROWS_AS(gen_capsules(dims, too_long), ValueError);
}

TEST_CASE("phase to gamma mapping") {
  const GridDims dims{4, 2, 2, 1.0};
  PhaseMap map{dims, std::vector<std::uint8_t>(dims.voxel_count(), 0)};
  map.phase[3] = 1;
  GammaTable table;
  table.set(0, 1.0);
  table.set(1, 10.0);
  const ScalarField gamma = phases_to_gamma(map, table);
  CHECK(gamma.at(0, 3) == 10.0);
  CHECK(gamma.at(0, 0) == 1.0);

  GammaTable pores;
  pores.set(0, 1.0);
  pores.set(1, 0.0);
  const ScalarField with_pores = phases_to_gamma(map, pores);
  CHECK(with_pores.at(0, 3) == 0.0);

  GammaTable missing;
  missing.set(0, 1.0);
  CHECK_THROWS_AS(phases_to_gamma(map, missing), ValueError);

  CHECK_THROWS_AS(GammaTable::parse("0=-1"), ValueError);
  CHECK_THROWS_AS(GammaTable::parse("garbage"), ValueError);
  const GammaTable parsed = GammaTable::parse("0=1.5,2=0.25");
  CHECK(parsed.at(0) == 1.5);
  CHECK(parsed.at(2) == 0.25);

  // Relabeling phases consistently yields the same field.
  PhaseMap relabeled = map;
  for (auto& ph : relabeled.phase) ph = ph == 0 ? 7 : 9;
  GammaTable permuted;
  permuted.set(7, 1.0);
  permuted.set(9, 10.0);
  const ScalarField same = phases_to_gamma(relabeled, permuted);
  for (std::size_t v = 0; v < dims.voxel_count(); ++v) {
    CHECK(same.at(0, v) == gamma.at(0, v));
  }
}

TEST_CASE("voxel container round trips") {
  const GridDims dims{5, 6, 7, 1.0};
  PhaseMap map{dims, {}};
  map.phase.resize(dims.voxel_count());
  for (std::size_t v = 0; v < map.phase.size(); ++v) {
    map.phase[v] = static_cast<std::uint8_t>((v * 37) % 251);
  }
  const std::string path = temp_path("roundtrip.ffvx");
  save_voxel(map, path);
  const VoxelFile loaded = load_voxel(path);
  REQUIRE(loaded.dtype == VoxelDType::phase_u8);
  CHECK(loaded.phases.dims.same_shape(dims));
  CHECK(loaded.phases.phase == map.phase);

  ScalarField field(dims);
  for (std::size_t v = 0; v < field.voxel_count(); ++v) {
    field.at(0, v) = static_cast<double>(static_cast<float>(0.125 * v));
  }
  const std::string spath = temp_path("roundtrip_scalar.ffvx");
  save_voxel(field, spath);
  const VoxelFile sloaded = load_voxel(spath);
  REQUIRE(sloaded.dtype == VoxelDType::scalar_f32);
  for (std::size_t v = 0; v < field.voxel_count(); ++v) {
    CHECK(sloaded.scalars.at(0, v) == field.at(0, v));
  }

  std::remove(path.c_str());
  std::remove(spath.c_str());
}

TEST_CASE("voxel container structured errors") {
  const GridDims dims{4, 4, 4, 1.0};
  PhaseMap map{dims, std::vector<std::uint8_t>(dims.voxel_count(), 1)};
  const std::string path = temp_path("broken.ffvx");
  save_voxel(map, path);

  // Truncate the payload and expect the byte count in the message.
  {
    std::ifstream in(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    bytes.resize(24 + 10);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  try {
    load_voxel(path);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("64") != std::string::npos);
  }

  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write("NOPE", 4);
  }
  CHECK_THROWS_AS(load_voxel(path), IoError);
  CHECK_THROWS_AS(load_voxel(temp_path("missing_file.ffvx")), IoError);
  std::remove(path.c_str());
}
