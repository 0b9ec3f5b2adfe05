#include "fracflow/operators.hpp"

#include <cmath>

namespace fracflow {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// Runs fn(v, vxm, vym, vzm) for every voxel v with the three backward
// periodic neighbor indices (one step back along each axis).
template <class Fn>
void for_each_with_back(const GridDims& d, Fn&& fn) {
  const int n1 = d.n1, n2 = d.n2, n3 = d.n3;
  const std::size_t s2 = static_cast<std::size_t>(n1);
  const std::size_t s3 = s2 * static_cast<std::size_t>(n2);
#pragma omp parallel for collapse(2) schedule(static)
  for (int k = 0; k < n3; ++k) {
    for (int j = 0; j < n2; ++j) {
      const std::size_t row = s2 * static_cast<std::size_t>(j) +
                              s3 * static_cast<std::size_t>(k);
      const std::size_t jm = s2 * static_cast<std::size_t>(j == 0 ? n2 - 1 : j - 1) +
                             s3 * static_cast<std::size_t>(k);
      const std::size_t km = s2 * static_cast<std::size_t>(j) +
                             s3 * static_cast<std::size_t>(k == 0 ? n3 - 1 : k - 1);
      for (int i = 0; i < n1; ++i) {
        const std::size_t im = static_cast<std::size_t>(i == 0 ? n1 - 1 : i - 1);
        const std::size_t v = row + static_cast<std::size_t>(i);
        fn(v, row + im, jm + static_cast<std::size_t>(i),
           km + static_cast<std::size_t>(i));
      }
    }
  }
}

// Same with forward periodic neighbors.
template <class Fn>
void for_each_with_fwd(const GridDims& d, Fn&& fn) {
  const int n1 = d.n1, n2 = d.n2, n3 = d.n3;
  const std::size_t s2 = static_cast<std::size_t>(n1);
  const std::size_t s3 = s2 * static_cast<std::size_t>(n2);
#pragma omp parallel for collapse(2) schedule(static)
  for (int k = 0; k < n3; ++k) {
    for (int j = 0; j < n2; ++j) {
      const std::size_t row = s2 * static_cast<std::size_t>(j) +
                              s3 * static_cast<std::size_t>(k);
      const std::size_t jp = s2 * static_cast<std::size_t>(j == n2 - 1 ? 0 : j + 1) +
                             s3 * static_cast<std::size_t>(k);
      const std::size_t kp = s2 * static_cast<std::size_t>(j) +
                             s3 * static_cast<std::size_t>(k == n3 - 1 ? 0 : k + 1);
      for (int i = 0; i < n1; ++i) {
        const std::size_t ip = static_cast<std::size_t>(i == n1 - 1 ? 0 : i + 1);
        const std::size_t v = row + static_cast<std::size_t>(i);
        fn(v, row + ip, jp + static_cast<std::size_t>(i),
           kp + static_cast<std::size_t>(i));
      }
    }
  }
}

}  // namespace

void div_minus_into(const VectorField3& v, ScalarField& out) {
  require_same_shape(v.dims(), out.dims(), "div_minus");
  const std::size_t n = v.voxel_count();
  const double* vx = v.data();
  const double* vy = vx + n;
  const double* vz = vy + n;
  double* o = out.data();
  for_each_with_back(v.dims(), [&](std::size_t p, std::size_t xm, std::size_t ym,
                                   std::size_t zm) {
    o[p] = vx[p] - vx[xm] + vy[p] - vy[ym] + vz[p] - vz[zm];
  });
}

ScalarField div_minus(const VectorField3& v) {
  ScalarField out(v.dims());
  div_minus_into(v, out);
  return out;
}

void grad_plus_into(const ScalarField& phi, VectorField3& out) {
  require_same_shape(phi.dims(), out.dims(), "grad_plus");
  const std::size_t n = phi.voxel_count();
  const double* p = phi.data();
  double* ox = out.data();
  double* oy = ox + n;
  double* oz = oy + n;
  for_each_with_fwd(phi.dims(), [&](std::size_t v, std::size_t xp, std::size_t yp,
                                    std::size_t zp) {
    ox[v] = p[xp] - p[v];
    oy[v] = p[yp] - p[v];
    oz[v] = p[zp] - p[v];
  });
}

VectorField3 grad_plus(const ScalarField& phi) {
  VectorField3 out(phi.dims());
  grad_plus_into(phi, out);
  return out;
}

void shift_back_into(const VectorField3& v, VectorField3& out) {
  require_same_shape(v.dims(), out.dims(), "shift_back");
  const std::size_t n = v.voxel_count();
  const double* vx = v.data();
  const double* vy = vx + n;
  const double* vz = vy + n;
  double* ox = out.data();
  double* oy = ox + n;
  double* oz = oy + n;
  for_each_with_back(v.dims(), [&](std::size_t p, std::size_t xm, std::size_t ym,
                                   std::size_t zm) {
    ox[p] = vx[xm];
    oy[p] = vy[ym];
    oz[p] = vz[zm];
  });
}

VectorField3 shift_back(const VectorField3& v) {
  VectorField3 out(v.dims());
  shift_back_into(v, out);
  return out;
}

void shift_forward_into(const VectorField3& v, VectorField3& out) {
  require_same_shape(v.dims(), out.dims(), "shift_forward");
  const std::size_t n = v.voxel_count();
  const double* vx = v.data();
  const double* vy = vx + n;
  const double* vz = vy + n;
  double* ox = out.data();
  double* oy = ox + n;
  double* oz = oy + n;
  for_each_with_fwd(v.dims(), [&](std::size_t p, std::size_t xp, std::size_t yp,
                                  std::size_t zp) {
    ox[p] = vx[xp];
    oy[p] = vy[yp];
    oz[p] = vz[zp];
  });
}

VectorField3 shift_forward(const VectorField3& v) {
  VectorField3 out(v.dims());
  shift_forward_into(v, out);
  return out;
}

void extend_A_into(const VectorField3& v, Field6& out) {
  require_same_shape(v.dims(), out.dims(), "extend_A");
  const std::size_t n = v.voxel_count();
  const double* vx = v.data();
  const double* vy = vx + n;
  const double* vz = vy + n;
  double* o = out.data();
  for_each_with_back(v.dims(), [&](std::size_t p, std::size_t xm, std::size_t ym,
                                   std::size_t zm) {
    o[p] = kInvSqrt2 * vx[p];
    o[n + p] = kInvSqrt2 * vy[p];
    o[2 * n + p] = kInvSqrt2 * vz[p];
    o[3 * n + p] = kInvSqrt2 * vx[xm];
    o[4 * n + p] = kInvSqrt2 * vy[ym];
    o[5 * n + p] = kInvSqrt2 * vz[zm];
  });
}

Field6 extend_A(const VectorField3& v) {
  Field6 out(v.dims());
  extend_A_into(v, out);
  return out;
}

void restrict_Astar_into(const Field6& w, VectorField3& out) {
  require_same_shape(w.dims(), out.dims(), "restrict_Astar");
  const std::size_t n = w.voxel_count();
  const double* d = w.data();
  double* ox = out.data();
  double* oy = ox + n;
  double* oz = oy + n;
  for_each_with_fwd(w.dims(), [&](std::size_t p, std::size_t xp, std::size_t yp,
                                  std::size_t zp) {
    ox[p] = kInvSqrt2 * (d[p] + d[3 * n + xp]);
    oy[p] = kInvSqrt2 * (d[n + p] + d[4 * n + yp]);
    oz[p] = kInvSqrt2 * (d[2 * n + p] + d[5 * n + zp]);
  });
}

VectorField3 restrict_Astar(const Field6& w) {
  VectorField3 out(w.dims());
  restrict_Astar_into(w, out);
  return out;
}

ScalarField constraint_violation(const VectorField3& v, const ScalarField& gamma) {
  require_same_shape(v.dims(), gamma.dims(), "constraint_violation");
  const std::size_t n = v.voxel_count();
  const double* g = gamma.data();
  for (std::size_t p = 0; p < n; ++p) {
    if (!(g[p] >= 0.0)) {
      throw ValueError("constraint_violation: gamma must be non-negative");
    }
  }
  ScalarField out(v.dims());
  const double* vx = v.data();
  const double* vy = vx + n;
  const double* vz = vy + n;
  double* o = out.data();
  for_each_with_back(v.dims(), [&](std::size_t p, std::size_t xm, std::size_t ym,
                                   std::size_t zm) {
    const double direct = vx[p] * vx[p] + vy[p] * vy[p] + vz[p] * vz[p];
    const double shifted = vx[xm] * vx[xm] + vy[ym] * vy[ym] + vz[zm] * vz[zm];
    const double excess = direct + shifted - 2.0 * g[p] * g[p];
    o[p] = excess > 0.0 ? excess : 0.0;
  });
  return out;
}

}  // namespace fracflow
