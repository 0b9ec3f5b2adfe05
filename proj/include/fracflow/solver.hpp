#pragma once

#include <string>
#include <vector>

#include "fracflow/grid.hpp"
#include "fracflow/spectral.hpp"

namespace fracflow {

enum class PenaltyStrategy {
  constant,
  barzilai_borwein,
  lorenz_tran_dinh,
  residual_balancing,
};

PenaltyStrategy penalty_strategy_from_string(const std::string& name);
std::string to_string(PenaltyStrategy s);

struct SolverConfig {
  /// Damping delta in (0,1); 1/4 is the recommended over-relaxation.
  double damping = 0.25;
  double tol = 1e-4;
  long max_iter = 10000;
  PenaltyStrategy penalty = PenaltyStrategy::barzilai_borwein;

  /// Initial penalty and clamp bounds. Values <= 0 are resolved from the
  /// crack-resistance field: rho0 = max(rho_min, smallest positive gamma),
  /// rho_min = 1e-6 * mean(gamma), rho_max = 1e6 * mean(gamma).
  double rho0 = 0.0;
  double rho_min = 0.0;
  double rho_max = 0.0;

  /// Residual evaluation cadence in iterations.
  long check_every = 1;

  /// Barzilai-Borwein safeguard: the quotient is accepted only when the
  /// correlation <dv,de>/(|dv||de|) exceeds this threshold; otherwise the
  /// previous penalty is kept.
  double bb_safeguard = 0.2;

  /// Residual balancing: multiply/divide rho by rb_tau when the primal/dual
  /// residual ratio exceeds rb_mu.
  double rb_mu = 10.0;
  double rb_tau = 2.0;

  void validate() const;
};

/// Scalar reductions produced by the last iterate; all norms are in the
/// normalized L2 sense of inner_product.
struct IterateScalars {
  double residual_num = 0.0;    // |e - xi_half|
  double mean_v_norm = 0.0;     // |<v>| (Euclidean norm of the 6 means)
  double objective = 0.0;       // (1/N) sum gamma |e|
  double primal_residual = 0.0; // |xi - e|
  double dual_residual = 0.0;   // rho_used * |e - e_prev|
};

struct AdmmState {
  Field6 xi;
  Field6 e;
  Field6 v;
  Field6 xi_half;  // pre-damping half step of the last iterate
  Field6 e_prev;   // iterate snapshots for the penalty quotients
  Field6 v_prev;

  double rho = 0.0;       // penalty for the next iterate
  double rho_used = 0.0;  // penalty the last iterate ran with
  double rho_min = 0.0;
  double rho_max = 0.0;
  long iter = 0;

  IterateScalars last;
};

struct Diagnostics {
  double primal_value = 0.0;           // (1/N) sum gamma |e|
  double dual_value = 0.0;             // <xibar, A* v> as constant-field pairing
  double duality_gap = 0.0;            // |primal - dual|
  double divergence_norm = 0.0;        // |div- u|
  double feasibility_violation = 0.0;  // max voxel excess of the flow bound
};

struct SolveResult {
  double gamma_eff = 0.0;
  long iterations = 0;
  bool converged = false;
  double residual = 0.0;

  std::vector<double> residual_history;
  std::vector<double> penalty_history;
  std::vector<double> objective_history;

  Field6 xi;
  Field6 e;
  Field6 v;
  VectorField3 flow;  // physical flow u = A* v
  Diagnostics diagnostics;
};

/// Per-voxel projection onto the ball of radius gamma (6-component norm):
/// w if |w| <= gamma, else gamma * w / |w|. gamma = 0 maps to 0.
Field6 project_ball(const Field6& w, const ScalarField& gamma);
void project_ball_into(const Field6& w, const ScalarField& gamma, Field6& out);

/// Initializes the canonical starting point: e0 = xi0 = A xibar,
/// v0 = mean(gamma) * A xibar, and resolved penalty bounds.
AdmmState admm_init(const ScalarField& gamma, const Direction& xibar,
                    const SolverConfig& cfg);

/// Executes one damped iterate:
///   xi_half = A xibar - (1/rho) (Id - A A* + A Gamma A*) (v - rho e)
///   xi      = 2 (1-delta) xi_half - (1-2 delta) e
///   e'      = [v + rho xi - P_ball(v + rho xi)] / rho
///   v'      = v + rho (xi - e')
/// followed by the penalty update. Throws DivergenceError when an iterate
/// stops being finite.
void admm_iterate(AdmmState& state, const ScalarField& gamma,
                  const Direction& xibar, const SolverConfig& cfg,
                  SpectralPlan& plan);

/// Next penalty per the configured strategy, clamped to the state's bounds;
/// degenerate quotients keep the previous value.
double penalty_next(const AdmmState& state, const SolverConfig& cfg);

/// |e - xi_half| / max(|<v>|, guard) with the pre-damping half step of the
/// last iterate. Converged when <= cfg.tol.
double convergence_residual(const AdmmState& state);

/// Runs the damped scheme from the canonical initialization until the
/// residual criterion or max_iter. A non-converged run is still returned,
/// flagged; only non-finite iterates throw.
SolveResult solve(const ScalarField& gamma, const Direction& xibar,
                  const SolverConfig& cfg = {});
SolveResult solve(const ScalarField& gamma, const Direction& xibar,
                  const SolverConfig& cfg, SpectralPlan& plan);

/// Duality and feasibility diagnostics of a state (usually the final one).
Diagnostics compute_diagnostics(const AdmmState& state, const ScalarField& gamma,
                                const Direction& xibar);

}  // namespace fracflow
