#pragma once

#include <vector>

#include "fracflow/grid.hpp"

namespace fracflow {

/// First-order saddle-point reference solver for the same discrete minimum
/// cut. Shares the low-level operators with the main solver but none of its
/// iteration logic, and needs no transforms.
///
/// The primal variable is (phi, eta) with the candidate normal field
/// xi = A xibar + B(phi, eta), B(phi, eta) = A grad+ phi + (Id - A A*) eta.
struct PdhgConfig {
  /// Step sizes; sigma*tau*|B|^2 < 1 is required. |grad+| <= 2 sqrt(3) and
  /// |A| = |Id - A A*| = 1 give |B|^2 <= 12, so the default
  /// sigma = tau = 1/(2 sqrt(3) + 1) is admissible. Validation uses the
  /// conservative bound sigma*tau*12 < 1.
  double sigma = 0.22474487139158905;
  double tau = 0.22474487139158905;
  long max_iter = 400000;
  /// Stop when the primal objective moves less than stagnation_tol
  /// (relative) between successive checks.
  double stagnation_tol = 1e-6;
  long check_window = 1000;
  /// Stagnation may only fire from this iteration on. The dual variable
  /// needs about gamma_max/sigma iterations before the ball constraint
  /// binds anywhere; until then the objective is exactly constant.
  long min_iter = 2000;

  void validate() const;
};

struct PdhgResult {
  double gamma_eff = 0.0;
  long iterations = 0;
  bool converged = false;  // false when max_iter hit before stagnation
  /// Primal objective sampled every check_window iterations.
  std::vector<double> objective_history;
};

/// Runs the saddle-point iteration
///   y   <- project_ball(y + sigma (A xibar + B xbar), gamma)
///   x   <- x - tau B* y
///   xbar = 2 x' - x
/// and returns the primal objective (1/N) sum gamma |A xibar + B x|.
/// Restricted to oracle scale: at most 32^3 voxels.
PdhgResult pdhg_solve(const ScalarField& gamma, const Direction& xibar,
                      const PdhgConfig& cfg = {});

/// Minimum over slice positions along `axis` of the slice-mean crack
/// resistance: the cost of a flat cut, an upper bound on gamma_eff for the
/// Cartesian normal along that axis.
double planar_cut_bound(const ScalarField& gamma, int axis);

}  // namespace fracflow
