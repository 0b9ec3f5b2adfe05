#include <doctest.h>

#include <cmath>
#include <vector>

#include "fracflow/grid.hpp"
#include "fracflow/operators.hpp"
#include "test_util.hpp"

using namespace fracflow;

namespace {

const std::vector<GridDims> kGrids = {
    {2, 1, 1, 1.0}, {1, 1, 1, 1.0}, {4, 4, 4, 1.0}, {8, 8, 8, 1.0},
    {5, 3, 7, 1.0}, {8, 1, 4, 1.0}, {6, 5, 1, 1.0},
};

}  // namespace

TEST_CASE("div_minus on simple fields") {
  VectorField3 v(GridDims{2, 1, 1, 1.0});
  v.at(0, 0) = 1.0;
  v.at(0, 1) = -1.0;
  const auto d = div_minus(v);
  CHECK(d.at(0, 0) == doctest::Approx(2.0));
  CHECK(d.at(0, 1) == doctest::Approx(-2.0));

  VectorField3 c(GridDims{4, 3, 2, 1.0});
  for (int comp = 0; comp < 3; ++comp) {
    for (std::size_t p = 0; p < c.voxel_count(); ++p) c.at(comp, p) = comp + 1.0;
  }
  const auto dc = div_minus(c);
  CHECK(testutil::max_abs(dc) == 0.0);
}

TEST_CASE("div_minus telescopes to zero total") {
  Xoshiro256pp rng(11);
  for (const auto& dims : kGrids) {
    const auto v = testutil::random_field<3>(dims, rng);
    const auto d = div_minus(v);
    CHECK(std::abs(mean_field(d)[0]) <= 1e-12);
  }
}

TEST_CASE("grad_plus on simple fields") {
  ScalarField phi(GridDims{2, 1, 1, 1.0});
  phi.at(0, 1) = 1.0;
  const auto g = grad_plus(phi);
  CHECK(g.at(0, 0) == doctest::Approx(1.0));
  CHECK(g.at(0, 1) == doctest::Approx(-1.0));

  ScalarField c(GridDims{3, 3, 3, 1.0});
  c.fill(4.2);
  CHECK(testutil::max_abs(grad_plus(c)) == 0.0);
}

TEST_CASE("grad_plus and div_minus are an adjoint pair") {
  Xoshiro256pp rng(12);
  const GridDims dims{3, 4, 5, 1.0};
  const auto phi = testutil::random_field<1>(dims, rng);
  const auto v = testutil::random_field<3>(dims, rng);
  const double lhs = inner_product(grad_plus(phi), v);
  ScalarField dv = div_minus(v);
  const double rhs = inner_product(phi, dv);
  CHECK(std::abs(lhs + rhs) <= 1e-12 * (std::abs(lhs) + norm_l2(phi) * norm_l2(v)));
}

TEST_CASE("shifts on two voxels and constants") {
  VectorField3 v(GridDims{2, 1, 1, 1.0});
  v.at(0, 0) = 3.0;
  v.at(0, 1) = 7.0;
  const auto sb = shift_back(v);
  CHECK(sb.at(0, 0) == 7.0);
  CHECK(sb.at(0, 1) == 3.0);
  const auto sf = shift_forward(v);
  CHECK(sf.at(0, 0) == 7.0);
  CHECK(sf.at(0, 1) == 3.0);

  VectorField3 c(GridDims{3, 2, 4, 1.0});
  for (int comp = 0; comp < 3; ++comp) {
    for (std::size_t p = 0; p < c.voxel_count(); ++p) c.at(comp, p) = comp - 0.5;
  }
  CHECK(testutil::max_abs_diff(shift_back(c), c) == 0.0);

  const VectorField3 zero(GridDims{4, 4, 4, 1.0});
  CHECK(testutil::max_abs(shift_forward(zero)) == 0.0);
}

TEST_CASE("shift_back and shift_forward are mutual inverses and adjoints") {
  Xoshiro256pp rng(13);
  for (const auto& dims : kGrids) {
    const auto v = testutil::random_field<3>(dims, rng);
    CHECK(testutil::max_abs_diff(shift_forward(shift_back(v)), v) == 0.0);
    CHECK(testutil::max_abs_diff(shift_back(shift_forward(v)), v) == 0.0);

    const auto w = testutil::random_field<3>(dims, rng);
    const double lhs = inner_product(shift_back(v), w);
    const double rhs = inner_product(v, shift_forward(w));
    CHECK(std::abs(lhs - rhs) <= 1e-13 * (1.0 + norm_l2(v) * norm_l2(w)));
  }
}

TEST_CASE("extend_A basics") {
  VectorField3 c(GridDims{3, 3, 3, 1.0});
  for (std::size_t p = 0; p < c.voxel_count(); ++p) {
    c.at(0, p) = 1.0;
    c.at(1, p) = 2.0;
    c.at(2, p) = -2.0;
  }
  const auto a = extend_A(c);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (std::size_t p = 0; p < a.voxel_count(); ++p) {
    CHECK(a.at(0, p) == doctest::Approx(inv_sqrt2));
    CHECK(a.at(3, p) == doctest::Approx(inv_sqrt2));
    CHECK(a.at(1, p) == doctest::Approx(2.0 * inv_sqrt2));
  }
  // per-voxel norm of A(c) equals |c|
  const auto norms = pointwise_norm(a);
  const double expect = std::sqrt(1.0 + 4.0 + 4.0);
  for (std::size_t p = 0; p < norms.voxel_count(); ++p) {
    CHECK(norms.at(0, p) == doctest::Approx(expect).epsilon(1e-14));
  }

  const VectorField3 zero(GridDims{2, 2, 2, 1.0});
  CHECK(testutil::max_abs(extend_A(zero)) == 0.0);
}

TEST_CASE("extend_A is an isometry and restrict_Astar its left inverse") {
  Xoshiro256pp rng(14);
  for (const auto& dims : kGrids) {
    const auto v = testutil::random_field<3>(dims, rng);
    const auto av = extend_A(v);
    CHECK(std::abs(inner_product(av, av) - inner_product(v, v)) <=
          1e-13 * (1.0 + inner_product(v, v)));
    CHECK(testutil::max_abs_diff(restrict_Astar(av), v) <= 1e-13);

    const auto w = testutil::random_field<6>(dims, rng);
    const double lhs = inner_product(av, w);
    const double rhs = inner_product(v, restrict_Astar(w));
    CHECK(std::abs(lhs - rhs) <= 1e-13 * (1.0 + norm_l2(v) * norm_l2(w)));
  }
}

TEST_CASE("restrict_Astar of a constant pair") {
  Field6 w(GridDims{3, 2, 2, 1.0});
  for (int c = 0; c < 6; ++c) {
    for (std::size_t p = 0; p < w.voxel_count(); ++p) w.at(c, p) = 1.0 + (c % 3);
  }
  const auto r = restrict_Astar(w);
  for (std::size_t p = 0; p < r.voxel_count(); ++p) {
    CHECK(r.at(0, p) == doctest::Approx(std::sqrt(2.0) * 1.0).epsilon(1e-14));
    CHECK(r.at(1, p) == doctest::Approx(std::sqrt(2.0) * 2.0).epsilon(1e-14));
    CHECK(r.at(2, p) == doctest::Approx(std::sqrt(2.0) * 3.0).epsilon(1e-14));
  }
}

TEST_CASE("A A* is an orthogonal projector") {
  Xoshiro256pp rng(15);
  const GridDims dims{6, 5, 4, 1.0};
  const auto w = testutil::random_field<6>(dims, rng);
  const auto once = extend_A(restrict_Astar(w));
  const auto twice = extend_A(restrict_Astar(once));
  CHECK(testutil::max_abs_diff(once, twice) <= 1e-13);
}

TEST_CASE("div grad equals the 7-point periodic stencil") {
  Xoshiro256pp rng(16);
  const GridDims dims{4, 4, 4, 1.0};
  const auto phi = testutil::random_field<1>(dims, rng);
  const auto lap = div_minus(grad_plus(phi));
  for (int k = 0; k < 4; ++k) {
    for (int j = 0; j < 4; ++j) {
      for (int i = 0; i < 4; ++i) {
        const auto wrap = [](int a) { return (a + 4) % 4; };
        const double stencil =
            phi.at(0, wrap(i + 1), j, k) + phi.at(0, wrap(i - 1), j, k) +
            phi.at(0, i, wrap(j + 1), k) + phi.at(0, i, wrap(j - 1), k) +
            phi.at(0, i, j, wrap(k + 1)) + phi.at(0, i, j, wrap(k - 1)) -
            6.0 * phi.at(0, i, j, k);
        CHECK(lap.at(0, i, j, k) == doctest::Approx(stencil).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("constraint_violation") {
  const GridDims dims{4, 4, 4, 1.0};
  ScalarField gamma(dims);
  gamma.fill(2.0);

  // v = gamma * unit direction: |v|^2 + |Sv|^2 = 2 gamma^2 exactly.
  VectorField3 tight(dims);
  for (std::size_t p = 0; p < tight.voxel_count(); ++p) tight.at(1, p) = 2.0;
  CHECK(testutil::max_abs(constraint_violation(tight, gamma)) == 0.0);

  // v = 2 gamma * unit direction: excess 8 gamma^2 - 2 gamma^2 = 6 gamma^2.
  VectorField3 loose(dims);
  for (std::size_t p = 0; p < loose.voxel_count(); ++p) loose.at(0, p) = 4.0;
  const auto excess = constraint_violation(loose, gamma);
  for (std::size_t p = 0; p < excess.voxel_count(); ++p) {
    CHECK(excess.at(0, p) == doctest::Approx(24.0).epsilon(1e-14));
  }

  Xoshiro256pp rng(17);
  const auto v = testutil::random_field<3>(dims, rng);
  const auto sv = shift_back(v);
  const auto got = constraint_violation(v, gamma);
  for (std::size_t p = 0; p < got.voxel_count(); ++p) {
    double direct = 0.0;
    for (int c = 0; c < 3; ++c) {
      direct += v.at(c, p) * v.at(c, p) + sv.at(c, p) * sv.at(c, p);
    }
    const double expect = std::max(0.0, direct - 8.0);
    CHECK(got.at(0, p) == doctest::Approx(expect).epsilon(1e-13));
  }

  ScalarField bad(dims);
  bad.fill(-1.0);
  CHECK_THROWS_AS(constraint_violation(v, bad), ValueError);
}

TEST_CASE("operators reject shape mismatches") {
  const VectorField3 v(GridDims{4, 4, 4, 1.0});
  ScalarField out(GridDims{4, 4, 2, 1.0});
  CHECK_THROWS_AS(div_minus_into(v, out), DimensionMismatchError);
  const ScalarField phi(GridDims{2, 2, 2, 1.0});
  VectorField3 g(GridDims{4, 4, 4, 1.0});
  CHECK_THROWS_AS(grad_plus_into(phi, g), DimensionMismatchError);
}

TEST_CASE("single-voxel axes degenerate to the identity shift") {
  Xoshiro256pp rng(18);
  const GridDims dims{1, 6, 1, 1.0};
  const auto v = testutil::random_field<3>(dims, rng);
  const auto s = shift_back(v);
  // x and z components are untouched, y moves.
  for (std::size_t p = 0; p < v.voxel_count(); ++p) {
    CHECK(s.at(0, p) == v.at(0, p));
    CHECK(s.at(2, p) == v.at(2, p));
  }
}
