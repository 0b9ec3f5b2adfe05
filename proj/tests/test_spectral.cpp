#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fracflow/grid.hpp"
#include "fracflow/operators.hpp"
#include "fracflow/spectral.hpp"
#include "test_util.hpp"

using namespace fracflow;

namespace {

// Dense matrices of the stencil operators, assembled by probing basis
// vectors. Test-only; nothing in the library assembles matrices.
Eigen::MatrixXd dense_grad(const GridDims& dims) {
  const std::size_t n = dims.voxel_count();
  Eigen::MatrixXd m(3 * n, n);
  for (std::size_t col = 0; col < n; ++col) {
    ScalarField phi(dims);
    phi.at(0, col) = 1.0;
    const auto g = grad_plus(phi);
    for (std::size_t row = 0; row < 3 * n; ++row) m(row, col) = g.data()[row];
  }
  return m;
}

Eigen::MatrixXd dense_div(const GridDims& dims) {
  const std::size_t n = dims.voxel_count();
  Eigen::MatrixXd m(n, 3 * n);
  for (std::size_t col = 0; col < 3 * n; ++col) {
    VectorField3 v(dims);
    v.data()[col] = 1.0;
    const auto d = div_minus(v);
    for (std::size_t row = 0; row < n; ++row) m(row, col) = d.data()[row];
  }
  return m;
}

// Columns of [A grad | Id - A A*] acting on (phi, eta).
Eigen::MatrixXd dense_compat_basis(const GridDims& dims) {
  const std::size_t n = dims.voxel_count();
  Eigen::MatrixXd m(6 * n, n + 6 * n);
  for (std::size_t col = 0; col < n; ++col) {
    ScalarField phi(dims);
    phi.at(0, col) = 1.0;
    const auto a = extend_A(grad_plus(phi));
    for (std::size_t row = 0; row < 6 * n; ++row) m(row, col) = a.data()[row];
  }
  for (std::size_t col = 0; col < 6 * n; ++col) {
    Field6 eta(dims);
    eta.data()[col] = 1.0;
    const auto proj = extend_A(restrict_Astar(eta));
    for (std::size_t row = 0; row < 6 * n; ++row) {
      m(row, n + col) = eta.data()[row] - proj.data()[row];
    }
  }
  return m;
}

Field6 make_axibar(const GridDims& dims, const Direction& xb) {
  VectorField3 c(dims);
  for (std::size_t p = 0; p < c.voxel_count(); ++p) {
    c.at(0, p) = xb.x();
    c.at(1, p) = xb.y();
    c.at(2, p) = xb.z();
  }
  return extend_A(c);
}

}  // namespace

TEST_CASE("gamma fixes discrete gradients") {
  Xoshiro256pp rng(21);
  for (const GridDims dims : {GridDims{4, 3, 5, 1.0}, GridDims{8, 8, 8, 1.0},
                              GridDims{6, 4, 1, 1.0}}) {
    SpectralPlan plan(dims);
    const auto phi = testutil::random_field<1>(dims, rng);
    const auto g = grad_plus(phi);
    const auto fixed = plan.gamma_apply(g);
    CHECK(testutil::max_abs_diff(fixed, g) <= 1e-10 * (1.0 + testutil::max_abs(g)));
  }
}

TEST_CASE("gamma kills constants") {
  const GridDims dims{4, 4, 4, 1.0};
  SpectralPlan plan(dims);
  VectorField3 c(dims);
  for (std::size_t p = 0; p < c.voxel_count(); ++p) {
    c.at(0, p) = 1.0;
    c.at(1, p) = -2.0;
    c.at(2, p) = 0.5;
  }
  CHECK(testutil::max_abs(plan.gamma_apply(c)) <= 1e-12);
}

TEST_CASE("gamma is idempotent and matches the dense pseudo-inverse oracle") {
  Xoshiro256pp rng(22);
  const GridDims dims{4, 4, 4, 1.0};
  SpectralPlan plan(dims);
  const auto w = testutil::random_field<3>(dims, rng);
  const auto gw = plan.gamma_apply(w);
  const auto ggw = plan.gamma_apply(gw);
  CHECK(testutil::max_abs_diff(gw, ggw) <= 1e-10 * (1.0 + testutil::max_abs(gw)));

  const Eigen::MatrixXd G = dense_grad(dims);
  const Eigen::MatrixXd D = dense_div(dims);
  const Eigen::MatrixXd L = D * G;
  const Eigen::MatrixXd Ldag =
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(L).pseudoInverse();
  const Eigen::MatrixXd Gamma = G * Ldag * D;

  Eigen::VectorXd x(3 * dims.voxel_count());
  for (std::size_t i = 0; i < static_cast<std::size_t>(x.size()); ++i) {
    x(i) = w.data()[i];
  }
  const Eigen::VectorXd y = Gamma * x;
  double max_diff = 0.0;
  for (std::size_t i = 0; i < static_cast<std::size_t>(y.size()); ++i) {
    max_diff = std::max(max_diff, std::abs(y(i) - gw.data()[i]));
  }
  CHECK(max_diff <= 1e-10);
}

TEST_CASE("real transform path agrees with the complex reference") {
  Xoshiro256pp rng(23);
  for (const GridDims dims : {GridDims{4, 4, 4, 1.0}, GridDims{5, 3, 2, 1.0},
                              GridDims{6, 1, 4, 1.0}}) {
    SpectralPlan fast(dims, TransformPath::real);
    SpectralPlan ref(dims, TransformPath::complex_reference);
    const auto w = testutil::random_field<3>(dims, rng);
    CHECK(testutil::max_abs_diff(fast.gamma_apply(w), ref.gamma_apply(w)) <= 1e-12);
  }
}

TEST_CASE("gamma rejects bad input") {
  const GridDims dims{4, 4, 4, 1.0};
  SpectralPlan plan(dims);
  VectorField3 wrong(GridDims{2, 2, 2, 1.0});
  CHECK_THROWS_AS(plan.gamma_apply(wrong), DimensionMismatchError);
  VectorField3 nan_field(dims);
  nan_field.at(0, 3) = std::nan("");
  CHECK_THROWS_AS(plan.gamma_apply(nan_field), ValueError);
}

TEST_CASE("project_compatible fixed points") {
  const GridDims dims{4, 4, 4, 1.0};
  SpectralPlan plan(dims);
  const Direction xb = Direction::normalized(1.0, 2.0, -1.0);
  const auto axibar = make_axibar(dims, xb);

  const Field6 zero(dims);
  CHECK(testutil::max_abs_diff(plan.project_compatible(zero, xb), axibar) <= 1e-12);
  CHECK(testutil::max_abs_diff(plan.project_compatible(axibar, xb), axibar) <=
        1e-12);
}

TEST_CASE("project_compatible is idempotent with compatible residual") {
  Xoshiro256pp rng(24);
  const GridDims dims{6, 5, 4, 1.0};
  SpectralPlan plan(dims);
  const Direction xb(0.0, 1.0, 0.0);
  const auto w = testutil::random_field<6>(dims, rng);
  const auto p1 = plan.project_compatible(w, xb);
  const auto p2 = plan.project_compatible(p1, xb);
  CHECK(testutil::max_abs_diff(p1, p2) <= 1e-10 * (1.0 + testutil::max_abs(p1)));

  // A* P(w) - xibar must be a discrete gradient, hence fixed by gamma.
  auto residual = restrict_Astar(p1);
  for (std::size_t p = 0; p < residual.voxel_count(); ++p) {
    residual.at(0, p) -= xb.x();
    residual.at(1, p) -= xb.y();
    residual.at(2, p) -= xb.z();
  }
  const auto fixed = plan.gamma_apply(residual);
  CHECK(testutil::max_abs_diff(fixed, residual) <=
        1e-10 * (1.0 + testutil::max_abs(residual)));
}

TEST_CASE("project_compatible is the metric projection (dense oracle)") {
  Xoshiro256pp rng(25);
  const GridDims dims{2, 2, 2, 1.0};
  const std::size_t n = dims.voxel_count();
  SpectralPlan plan(dims);
  const Direction xb = Direction::normalized(1.0, 1.0, 1.0);
  const auto w = testutil::random_field<6>(dims, rng);
  const auto projected = plan.project_compatible(w, xb);
  const auto axibar = make_axibar(dims, xb);

  const Eigen::MatrixXd M = dense_compat_basis(dims);
  Eigen::VectorXd rhs(6 * n);
  for (std::size_t i = 0; i < 6 * n; ++i) rhs(i) = w.data()[i] - axibar.data()[i];
  const Eigen::VectorXd coeffs =
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(M).solve(rhs);
  const Eigen::VectorXd best = M * coeffs;
  for (std::size_t i = 0; i < 6 * n; ++i) {
    CHECK(projected.data()[i] ==
          doctest::Approx(axibar.data()[i] + best(i)).epsilon(1e-9));
  }

  // No sampled compatible candidate does better than the projection.
  const double dist_proj = norm_l2([&] {
    Field6 diff(dims);
    for (std::size_t i = 0; i < diff.size(); ++i) {
      diff.data()[i] = projected.data()[i] - w.data()[i];
    }
    return diff;
  }());
  for (int trial = 0; trial < 100; ++trial) {
    const auto phi = testutil::random_field<1>(dims, rng);
    const auto eta = testutil::random_field<6>(dims, rng);
    const auto a_grad = extend_A(grad_plus(phi));
    const auto eta_proj = extend_A(restrict_Astar(eta));
    Field6 candidate(dims);
    for (std::size_t i = 0; i < candidate.size(); ++i) {
      candidate.data()[i] = axibar.data()[i] + a_grad.data()[i] +
                            (eta.data()[i] - eta_proj.data()[i]);
    }
    Field6 diff(dims);
    for (std::size_t i = 0; i < diff.size(); ++i) {
      diff.data()[i] = candidate.data()[i] - w.data()[i];
    }
    CHECK(dist_proj <= norm_l2(diff) + 1e-12);
  }
}

TEST_CASE("project_compatible is affine in w") {
  Xoshiro256pp rng(26);
  const GridDims dims{4, 3, 2, 1.0};
  SpectralPlan plan(dims);
  const Direction xb(1.0, 0.0, 0.0);
  const auto w1 = testutil::random_field<6>(dims, rng);
  const auto w2 = testutil::random_field<6>(dims, rng);
  const double alpha = -1.7;

  Field6 combo(dims);
  for (std::size_t i = 0; i < combo.size(); ++i) {
    combo.data()[i] = w1.data()[i] + alpha * w2.data()[i];
  }
  const auto p_combo = plan.project_compatible(combo, xb);
  const auto p1 = plan.project_compatible(w1, xb);
  const auto p2 = plan.project_compatible(w2, xb);
  const auto axibar = make_axibar(dims, xb);

  double max_diff = 0.0;
  for (std::size_t i = 0; i < combo.size(); ++i) {
    const double lin = (p1.data()[i] - axibar.data()[i]) +
                       alpha * (p2.data()[i] - axibar.data()[i]);
    max_diff = std::max(std::abs(p_combo.data()[i] - axibar.data()[i] - lin),
                        max_diff);
  }
  CHECK(max_diff <= 1e-11);
}
