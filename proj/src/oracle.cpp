#include "fracflow/oracle.hpp"

#include <cmath>
#include <limits>

#include "fracflow/detail/reduce.hpp"
#include "fracflow/operators.hpp"
#include "fracflow/solver.hpp"

namespace fracflow {

namespace {

constexpr std::size_t kOracleMaxVoxels = 32 * 32 * 32;

// xi = A xibar + A (grad+ phi - A* eta) + eta, written into `xi`.
void candidate_normal(const ScalarField& phi, const Field6& eta,
                      const Direction& xibar, VectorField3& g3,
                      VectorField3& t3, Field6& xi) {
  grad_plus_into(phi, g3);
  restrict_Astar_into(eta, t3);
  const std::size_t n3 = g3.size();
  double* g = g3.data();
  const double* t = t3.data();
  for (std::size_t i = 0; i < n3; ++i) g[i] -= t[i];
  extend_A_into(g3, xi);
  const double* ev = eta.data();
  double* x = xi.data();
  const auto& xb = xibar.as_array();
  const std::size_t n = xi.voxel_count();
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  for (int c = 0; c < 6; ++c) {
    const double base = inv_sqrt2 * xb[static_cast<std::size_t>(c % 3)];
    double* xc = x + static_cast<std::size_t>(c) * n;
    const double* ec = ev + static_cast<std::size_t>(c) * n;
    for (std::size_t v = 0; v < n; ++v) xc[v] += base + ec[v];
  }
}

double objective(const ScalarField& gamma, const Field6& xi) {
  const std::size_t n = xi.voxel_count();
  const double* g = gamma.data();
  const double* d = xi.data();
  const auto sum = detail::blocked_reduce<1>(
      n, [&](std::size_t b, std::size_t e, std::array<double, 1>& acc) {
        double s = 0.0;
        for (std::size_t p = b; p < e; ++p) {
          double q = 0.0;
          for (int c = 0; c < 6; ++c) {
            const double x = d[static_cast<std::size_t>(c) * n + p];
            q += x * x;
          }
          s += g[p] * std::sqrt(q);
        }
        acc[0] = s;
      });
  return sum[0] / static_cast<double>(n);
}

}  // namespace

void PdhgConfig::validate() const {
  if (!(sigma > 0.0) || !(tau > 0.0)) {
    throw ValueError("pdhg step sizes must be positive");
  }
  if (sigma * tau * 12.0 >= 1.0) {
    throw ValueError("pdhg step sizes violate sigma*tau*|B|^2 < 1");
  }
  if (max_iter < 1) throw ValueError("pdhg max_iter must be positive");
  if (min_iter < 0) throw ValueError("pdhg min_iter must be non-negative");
  if (!(stagnation_tol > 0.0)) throw ValueError("pdhg stagnation_tol must be positive");
  if (check_window < 1) throw ValueError("pdhg check_window must be positive");
}

PdhgResult pdhg_solve(const ScalarField& gamma, const Direction& xibar,
                      const PdhgConfig& cfg) {
  cfg.validate();
  if (gamma.voxel_count() > kOracleMaxVoxels) {
    throw ValueError("pdhg oracle is limited to 32^3 voxels, got " +
                     gamma.dims().to_string());
  }
  {
    const double* g = gamma.data();
    for (std::size_t p = 0; p < gamma.voxel_count(); ++p) {
      if (!(g[p] >= 0.0) || !std::isfinite(g[p])) {
        throw ValueError("crack resistance must be finite and non-negative");
      }
    }
  }

  const GridDims& dims = gamma.dims();
  ScalarField phi(dims), phi_bar(dims), gphi(dims);
  Field6 eta(dims), eta_bar(dims), y(dims), z(dims), ay(dims);
  VectorField3 g3(dims), t3(dims);
  const std::size_t n = dims.voxel_count();
  const std::size_t sz6 = 6 * n;
  const auto& xb = xibar.as_array();
  constexpr double inv_sqrt2 = 0.70710678118654752440;

  PdhgResult res;
  double last_obj = std::numeric_limits<double>::infinity();
  long it = 0;
  while (it < cfg.max_iter) {
    // Dual ascent: z = y + sigma (A xibar + B(phi_bar, eta_bar)).
    candidate_normal(phi_bar, eta_bar, xibar, g3, t3, z);
    {
      double* zp = z.data();
      const double* yp = y.data();
      for (std::size_t i = 0; i < sz6; ++i) zp[i] = yp[i] + cfg.sigma * zp[i];
    }
    project_ball_into(z, gamma, y);

    // Primal descent: x <- x - tau B* y, with
    // B* y = (-div-(A* y), y - A A* y).
    restrict_Astar_into(y, t3);
    div_minus_into(t3, gphi);
    extend_A_into(t3, ay);
    {
      double* ph = phi.data();
      double* phb = phi_bar.data();
      const double* gp = gphi.data();
      for (std::size_t i = 0; i < n; ++i) {
        const double next = ph[i] + cfg.tau * gp[i];
        phb[i] = 2.0 * next - ph[i];
        ph[i] = next;
      }
      double* et = eta.data();
      double* etb = eta_bar.data();
      const double* yp = y.data();
      const double* ap = ay.data();
      for (std::size_t i = 0; i < sz6; ++i) {
        const double next = et[i] - cfg.tau * (yp[i] - ap[i]);
        etb[i] = 2.0 * next - et[i];
        et[i] = next;
      }
    }
    ++it;

    if (it % cfg.check_window == 0) {
      candidate_normal(phi, eta, xibar, g3, t3, z);
      const double obj = objective(gamma, z);
      res.objective_history.push_back(obj);
      if (!std::isfinite(obj)) {
        throw DivergenceError("pdhg objective became non-finite at iteration " +
                                  std::to_string(it),
                              it);
      }
      if (it >= cfg.min_iter &&
          std::abs(obj - last_obj) <=
              cfg.stagnation_tol * std::max(std::abs(obj), 1e-12)) {
        res.converged = true;
        last_obj = obj;
        break;
      }
      last_obj = obj;
    }
  }

  candidate_normal(phi, eta, xibar, g3, t3, z);
  res.gamma_eff = objective(gamma, z);
  res.iterations = it;
  return res;
}

double planar_cut_bound(const ScalarField& gamma, int axis) {
  if (axis < 0 || axis > 2) throw ValueError("axis must be 0, 1 or 2");
  const GridDims& d = gamma.dims();
  const int extent = axis == 0 ? d.n1 : (axis == 1 ? d.n2 : d.n3);
  std::vector<double> slice_sum(static_cast<std::size_t>(extent), 0.0);
  const double* g = gamma.data();
  for (int k = 0; k < d.n3; ++k) {
    for (int j = 0; j < d.n2; ++j) {
      for (int i = 0; i < d.n1; ++i) {
        const int s = axis == 0 ? i : (axis == 1 ? j : k);
        slice_sum[static_cast<std::size_t>(s)] += g[d.index(i, j, k)];
      }
    }
  }
  const double per_slice = static_cast<double>(d.voxel_count()) / extent;
  double best = std::numeric_limits<double>::infinity();
  for (const double s : slice_sum) best = std::min(best, s / per_slice);
  return best;
}

}  // namespace fracflow
