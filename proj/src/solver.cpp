#include "fracflow/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fracflow/detail/reduce.hpp"
#include "fracflow/operators.hpp"

namespace fracflow {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kMeanGuard = 1e-30;

double clamp_rho(double rho, const AdmmState& s) {
  return std::min(std::max(rho, s.rho_min), s.rho_max);
}

/// (1/N) sum_v gamma[v] * |field[v]|, the cut energy carried by a 6-field.
double cut_energy(const ScalarField& gamma, const Field6& f) {
  const std::size_t n = f.voxel_count();
  const double* g = gamma.data();
  const double* d = f.data();
  const auto sum = detail::blocked_reduce<1>(
      n, [&](std::size_t begin, std::size_t end, std::array<double, 1>& acc) {
        double s = 0.0;
        for (std::size_t p = begin; p < end; ++p) {
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

void validate_gamma(const ScalarField& gamma) {
  const std::size_t n = gamma.voxel_count();
  const double* g = gamma.data();
  bool any_positive = false;
  for (std::size_t p = 0; p < n; ++p) {
    if (!std::isfinite(g[p]) || g[p] < 0.0) {
      throw ValueError("crack resistance must be finite and non-negative");
    }
    any_positive |= g[p] > 0.0;
  }
  if (!any_positive) {
    throw ValueError("crack resistance must be positive somewhere");
  }
}

}  // namespace

PenaltyStrategy penalty_strategy_from_string(const std::string& name) {
  if (name == "constant") return PenaltyStrategy::constant;
  if (name == "bb" || name == "barzilai-borwein" || name == "barzilai_borwein") {
    return PenaltyStrategy::barzilai_borwein;
  }
  if (name == "ltd" || name == "lorenz-tran-dinh" || name == "lorenz_tran_dinh") {
    return PenaltyStrategy::lorenz_tran_dinh;
  }
  if (name == "rb" || name == "residual-balancing" || name == "residual_balancing") {
    return PenaltyStrategy::residual_balancing;
  }
  throw ValueError("unknown penalty strategy '" + name + "'");
}

std::string to_string(PenaltyStrategy s) {
  switch (s) {
    case PenaltyStrategy::constant: return "constant";
    case PenaltyStrategy::barzilai_borwein: return "bb";
    case PenaltyStrategy::lorenz_tran_dinh: return "ltd";
    case PenaltyStrategy::residual_balancing: return "rb";
  }
  return "?";
}

void SolverConfig::validate() const {
  if (!(damping > 0.0) || !(damping < 1.0)) {
    throw ValueError("damping must lie in (0,1)");
  }
  if (!(tol > 0.0)) throw ValueError("tol must be positive");
  if (max_iter < 1) throw ValueError("max_iter must be positive");
  if (check_every < 1) throw ValueError("check_every must be positive");
  if (rho_min > 0.0 && rho_max > 0.0 && rho_min > rho_max) {
    throw ValueError("rho_min must not exceed rho_max");
  }
  if (!(rb_mu > 1.0) || !(rb_tau > 1.0)) {
    throw ValueError("residual balancing needs mu > 1 and tau > 1");
  }
}

void project_ball_into(const Field6& w, const ScalarField& gamma, Field6& out) {
  require_same_shape(w.dims(), gamma.dims(), "project_ball");
  require_same_shape(w.dims(), out.dims(), "project_ball");
  const std::size_t n = w.voxel_count();
  const double* g = gamma.data();
  for (std::size_t p = 0; p < n; ++p) {
    if (!(g[p] >= 0.0)) {
      throw ValueError("project_ball: gamma must be non-negative");
    }
  }
  const double* d = w.data();
  double* o = out.data();
#pragma omp parallel for schedule(static)
  for (long long p = 0; p < static_cast<long long>(n); ++p) {
    double q = 0.0;
    for (int c = 0; c < 6; ++c) {
      const double x = d[static_cast<std::size_t>(c) * n + p];
      q += x * x;
    }
    const double nq = std::sqrt(q);
    const double scale = nq > g[p] ? g[p] / nq : 1.0;
    for (int c = 0; c < 6; ++c) {
      const std::size_t idx = static_cast<std::size_t>(c) * n + p;
      o[idx] = scale * d[idx];
    }
  }
}

Field6 project_ball(const Field6& w, const ScalarField& gamma) {
  Field6 out(w.dims());
  project_ball_into(w, gamma, out);
  return out;
}

AdmmState admm_init(const ScalarField& gamma, const Direction& xibar,
                    const SolverConfig& cfg) {
  cfg.validate();
  validate_gamma(gamma);

  const std::size_t n = gamma.voxel_count();
  const double* g = gamma.data();
  double gbar = 0.0;
  double min_pos = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < n; ++p) {
    gbar += g[p];
    if (g[p] > 0.0 && g[p] < min_pos) min_pos = g[p];
  }
  gbar /= static_cast<double>(n);

  AdmmState s;
  s.rho_min = cfg.rho_min > 0.0 ? cfg.rho_min : 1e-6 * gbar;
  s.rho_max = cfg.rho_max > 0.0 ? cfg.rho_max : 1e6 * gbar;
  if (s.rho_min > s.rho_max) {
    throw ValueError("resolved penalty bounds are inconsistent");
  }
  s.rho = cfg.rho0 > 0.0 ? cfg.rho0 : std::max(s.rho_min, min_pos);
  s.rho = std::min(std::max(s.rho, s.rho_min), s.rho_max);
  s.rho_used = s.rho;

  // e0 = xi0 = A xibar; v0 = mean(gamma) * A xibar. A of a constant field
  // duplicates it, so both halves carry xibar / sqrt(2).
  const auto& xb = xibar.as_array();
  Field6 axi(gamma.dims());
  for (int c = 0; c < 3; ++c) {
    const double val = kInvSqrt2 * xb[static_cast<std::size_t>(c)];
    auto first = axi.component(c);
    auto second = axi.component(3 + c);
    std::fill(first.begin(), first.end(), val);
    std::fill(second.begin(), second.end(), val);
  }
  s.e = axi;
  s.xi = axi;
  s.xi_half = axi;
  s.e_prev = axi;
  s.v = axi;
  for (std::size_t i = 0; i < s.v.size(); ++i) s.v.data()[i] *= gbar;
  s.v_prev = s.v;
  s.iter = 0;
  return s;
}

double penalty_next(const AdmmState& state, const SolverConfig& cfg) {
  const std::size_t sz = state.e.size();
  switch (cfg.penalty) {
    case PenaltyStrategy::constant:
      return state.rho;

    case PenaltyStrategy::barzilai_borwein: {
      if (state.iter < 1) return state.rho;
      const double* e = state.e.data();
      const double* ep = state.e_prev.data();
      const double* v = state.v.data();
      const double* vp = state.v_prev.data();
      const auto r = detail::blocked_reduce<3>(
          sz, [&](std::size_t b, std::size_t en, std::array<double, 3>& acc) {
            double num = 0.0, den = 0.0, dv2 = 0.0;
            for (std::size_t i = b; i < en; ++i) {
              const double de = e[i] - ep[i];
              const double dv = v[i] - vp[i];
              num += dv * de;
              den += de * de;
              dv2 += dv * dv;
            }
            acc = {num, den, dv2};
          });
      const double num = r[0], den = r[1], dv2 = r[2];
      if (!(den > 0.0)) return state.rho;
      // Safeguard: only trust the quotient when the increments correlate.
      if (num <= cfg.bb_safeguard * std::sqrt(dv2 * den)) return state.rho;
      return clamp_rho(num / den, state);
    }

    case PenaltyStrategy::lorenz_tran_dinh: {
      const double* e = state.e.data();
      const double* v = state.v.data();
      const auto r = detail::blocked_reduce<2>(
          sz, [&](std::size_t b, std::size_t en, std::array<double, 2>& acc) {
            double v2 = 0.0, e2 = 0.0;
            for (std::size_t i = b; i < en; ++i) {
              v2 += v[i] * v[i];
              e2 += e[i] * e[i];
            }
            acc = {v2, e2};
          });
      if (!(r[1] > 0.0)) return state.rho;
      return clamp_rho(std::sqrt(r[0] / r[1]), state);
    }

    case PenaltyStrategy::residual_balancing: {
      if (state.iter < 1) return state.rho;
      const double* xi = state.xi.data();
      const double* e = state.e.data();
      const double* ep = state.e_prev.data();
      const auto r = detail::blocked_reduce<2>(
          sz, [&](std::size_t b, std::size_t en, std::array<double, 2>& acc) {
            double r2 = 0.0, s2 = 0.0;
            for (std::size_t i = b; i < en; ++i) {
              const double pr = xi[i] - e[i];
              const double du = e[i] - ep[i];
              r2 += pr * pr;
              s2 += du * du;
            }
            acc = {r2, s2};
          });
      const double primal = std::sqrt(r[0]);
      const double dual = state.rho_used * std::sqrt(r[1]);
      if (primal > cfg.rb_mu * dual) return clamp_rho(state.rho * cfg.rb_tau, state);
      if (dual > cfg.rb_mu * primal) return clamp_rho(state.rho / cfg.rb_tau, state);
      return state.rho;
    }
  }
  return state.rho;
}

double convergence_residual(const AdmmState& state) {
  const std::size_t sz = state.e.size();
  const double* e = state.e.data();
  const double* xh = state.xi_half.data();
  const auto r = detail::blocked_reduce<1>(
      sz, [&](std::size_t b, std::size_t en, std::array<double, 1>& acc) {
        double s = 0.0;
        for (std::size_t i = b; i < en; ++i) {
          const double d = e[i] - xh[i];
          s += d * d;
        }
        acc[0] = s;
      });
  const double num = std::sqrt(r[0] / static_cast<double>(state.e.voxel_count()));
  const auto mv = mean_field(state.v);
  double m2 = 0.0;
  for (double c : mv) m2 += c * c;
  return num / std::max(std::sqrt(m2), kMeanGuard);
}

void admm_iterate(AdmmState& state, const ScalarField& gamma,
                  const Direction& xibar, const SolverConfig& cfg,
                  SpectralPlan& plan) {
  cfg.validate();
  require_same_shape(state.e.dims(), gamma.dims(), "admm_iterate");
  require_same_shape(state.e.dims(), plan.dims(), "admm_iterate");
  const std::size_t n = state.e.voxel_count();
  const std::size_t sz = state.e.size();
  const double rho = state.rho;
  const double inv_rho = 1.0 / rho;
  state.rho_used = rho;

  // xi_half = P_K(e - v / rho), reusing e_prev as the w scratch before the
  // snapshot swap below.
  {
    double* w = state.e_prev.data();
    const double* e = state.e.data();
    const double* v = state.v.data();
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(sz); ++i) {
      w[i] = e[i] - inv_rho * v[i];
    }
    plan.project_compatible_into(state.e_prev, xibar, state.xi_half);
  }

  // The swaps leave e_prev = e^k and v_prev = v^k; the buffers now in e and
  // v (the w scratch and v^{k-1}) are fully overwritten below.
  std::swap(state.e, state.e_prev);
  std::swap(state.v, state.v_prev);

  const double c_half = 2.0 * (1.0 - cfg.damping);
  const double c_prev = 1.0 - 2.0 * cfg.damping;
  const double* g = gamma.data();
  const double* xh = state.xi_half.data();
  const double* ep = state.e_prev.data();
  const double* vp = state.v_prev.data();
  double* xi = state.xi.data();
  double* e = state.e.data();
  double* v = state.v.data();

  const auto flags = detail::blocked_reduce<2>(
      n, [&](std::size_t begin, std::size_t end, std::array<double, 2>& acc) {
        double bad = 0.0, neg = 0.0;
        for (std::size_t p = begin; p < end; ++p) {
          const double gv = g[p];
          if (!(gv >= 0.0)) neg = 1.0;
          double q[6];
          double q2 = 0.0;
          for (int c = 0; c < 6; ++c) {
            const std::size_t idx = static_cast<std::size_t>(c) * n + p;
            const double x = c_half * xh[idx] - c_prev * ep[idx];
            xi[idx] = x;
            q[c] = vp[idx] + rho * x;
            q2 += q[c] * q[c];
          }
          const double nq = std::sqrt(q2);
          const double scale = nq > gv ? gv / nq : 1.0;
          for (int c = 0; c < 6; ++c) {
            const std::size_t idx = static_cast<std::size_t>(c) * n + p;
            const double proj = scale * q[c];
            v[idx] = proj;
            e[idx] = (q[c] - proj) * inv_rho;
            if (!std::isfinite(proj) || !std::isfinite(e[idx])) bad = 1.0;
          }
        }
        acc = {bad, neg};
      });
  if (flags[1] != 0.0) {
    throw ValueError("admm_iterate: gamma must be non-negative");
  }
  state.iter += 1;
  if (flags[0] != 0.0) {
    throw DivergenceError("solver iterate became non-finite at iteration " +
                              std::to_string(state.iter),
                          state.iter);
  }
  state.rho = penalty_next(state, cfg);
}

Diagnostics compute_diagnostics(const AdmmState& state, const ScalarField& gamma,
                                const Direction& xibar) {
  Diagnostics d;
  const VectorField3 u = restrict_Astar(state.v);
  d.primal_value = cut_energy(gamma, state.e);
  const auto mu = mean_field(u);
  const auto& xb = xibar.as_array();
  d.dual_value = xb[0] * mu[0] + xb[1] * mu[1] + xb[2] * mu[2];
  d.duality_gap = std::abs(d.primal_value - d.dual_value);
  d.divergence_norm = norm_l2(div_minus(u));
  const ScalarField excess = constraint_violation(u, gamma);
  double feas = 0.0;
  const double* x = excess.data();
  for (std::size_t p = 0; p < excess.voxel_count(); ++p) feas = std::max(feas, x[p]);
  d.feasibility_violation = feas;
  return d;
}

SolveResult solve(const ScalarField& gamma, const Direction& xibar,
                  const SolverConfig& cfg) {
  SpectralPlan plan(gamma.dims());
  return solve(gamma, xibar, cfg, plan);
}

SolveResult solve(const ScalarField& gamma, const Direction& xibar,
                  const SolverConfig& cfg, SpectralPlan& plan) {
  require_same_shape(gamma.dims(), plan.dims(), "solve");
  AdmmState state = admm_init(gamma, xibar, cfg);

  SolveResult res;
  bool converged = false;
  double residual = std::numeric_limits<double>::infinity();
  while (state.iter < cfg.max_iter) {
    admm_iterate(state, gamma, xibar, cfg, plan);
    if (state.iter % cfg.check_every == 0) {
      residual = convergence_residual(state);
      res.residual_history.push_back(residual);
      res.penalty_history.push_back(state.rho_used);
      res.objective_history.push_back(cut_energy(gamma, state.e));
      if (residual <= cfg.tol) {
        converged = true;
        break;
      }
    }
  }
  if (!std::isfinite(residual)) {
    residual = convergence_residual(state);
  }

  res.gamma_eff = cut_energy(gamma, state.e);
  res.iterations = state.iter;
  res.converged = converged;
  res.residual = residual;
  res.diagnostics = compute_diagnostics(state, gamma, xibar);
  res.flow = restrict_Astar(state.v);
  res.xi = std::move(state.xi);
  res.e = std::move(state.e);
  res.v = std::move(state.v);
  return res;
}

}  // namespace fracflow
