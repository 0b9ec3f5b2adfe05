#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "fracflow/microstructure.hpp"
#include "fracflow/oracle.hpp"
#include "fracflow/solver.hpp"
#include "fracflow/volume_export.hpp"

using json = nlohmann::json;
using namespace fracflow;

namespace {

std::vector<double> parse_doubles(const std::string& text, std::size_t expect,
                                  const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ValueError(std::string("bad ") + what + " '" + text + "'");
    }
  }
  if (out.size() != expect) {
    throw ValueError(std::string(what) + " needs " + std::to_string(expect) +
                     " comma-separated values, got '" + text + "'");
  }
  return out;
}

int resolve_threads() {
#ifdef _OPENMP
  if (const char* env = std::getenv("FRACFLOW_THREADS")) {
    const int requested = std::atoi(env);
    if (requested > 0) omp_set_num_threads(requested);
  }
  return omp_get_max_threads();
#else
  return 1;
#endif
}

struct SolverFlags {
  double tol = 1e-4;
  long max_iter = 10000;
  double damping = 0.25;
  std::string penalty = "bb";
  double rho0 = 0.0;
  double rho_min = 0.0;
  double rho_max = 0.0;
  long check_every = 1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--tol", tol, "Convergence tolerance");
    cmd->add_option("--max-iter", max_iter, "Iteration cap");
    cmd->add_option("--damping", damping, "Damping factor in (0,1)");
    cmd->add_option("--penalty", penalty,
                    "Penalty strategy: constant, bb, ltd or rb");
    cmd->add_option("--rho", rho0, "Initial penalty (default: smallest positive gamma)");
    cmd->add_option("--rho-min", rho_min, "Penalty lower clamp");
    cmd->add_option("--rho-max", rho_max, "Penalty upper clamp");
    cmd->add_option("--check-every", check_every, "Residual check cadence");
  }

  SolverConfig to_config() const {
    SolverConfig cfg;
    cfg.tol = tol;
    cfg.max_iter = max_iter;
    cfg.damping = damping;
    cfg.penalty = penalty_strategy_from_string(penalty);
    cfg.rho0 = rho0;
    cfg.rho_min = rho_min;
    cfg.rho_max = rho_max;
    cfg.check_every = check_every;
    return cfg;
  }
};

ScalarField load_gamma(const std::string& input, const std::string& gamma_table) {
  const VoxelFile file = load_voxel(input);
  if (file.dtype == VoxelDType::phase_u8) {
    if (gamma_table.empty()) {
      throw ValueError("phase-map input needs --gamma id=value[,...]");
    }
    return phases_to_gamma(file.phases, GammaTable::parse(gamma_table));
  }
  if (!gamma_table.empty()) {
    throw ValueError("scalar input already carries crack resistance; drop --gamma");
  }
  return file.scalars;
}

json config_echo(const SolverFlags& flags, const std::string& input,
                 const std::string& gamma_table, const Direction& normal,
                 bool deterministic, int threads) {
  json cfg;
  cfg["check_every"] = flags.check_every;
  cfg["damping"] = flags.damping;
  cfg["deterministic"] = deterministic;
  cfg["gamma_table"] = gamma_table.empty() ? json(nullptr) : json(gamma_table);
  cfg["input"] = input;
  cfg["max_iter"] = flags.max_iter;
  cfg["normal"] = {normal.x(), normal.y(), normal.z()};
  cfg["penalty"] = flags.penalty;
  cfg["rho0"] = flags.rho0;
  cfg["rho_max"] = flags.rho_max;
  cfg["rho_min"] = flags.rho_min;
  cfg["threads"] = threads;
  cfg["tol"] = flags.tol;
  return cfg;
}

void write_history_csv(const std::string& path, const SolveResult& result,
                       long check_every) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << "iteration,residual,rho,objective\n";
  char buf[128];
  for (std::size_t i = 0; i < result.residual_history.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g\n",
                  static_cast<long>(i + 1) * check_every,
                  result.residual_history[i], result.penalty_history[i],
                  result.objective_history[i]);
    os << buf;
  }
  if (!os) throw IoError("short write to '" + path + "'");
}

void write_volume(const std::string& path, const SolveResult& result,
                  const GridDims& dims) {
  const ScalarField crack = pointwise_norm(result.e);
  const ScalarField mult = pointwise_norm(result.v);
  write_structured_points(path, dims,
                          {{"crack_indicator", &crack}, {"multiplier_norm", &mult}},
                          {{"flow", &result.flow}});
}

std::vector<Direction> parse_normals(const std::string& spec) {
  if (spec == "axes") {
    return {Direction(1, 0, 0), Direction(0, 1, 0), Direction(0, 0, 1)};
  }
  if (spec.rfind("fibonacci:", 0) == 0) {
    int count = 0;
    try {
      count = std::stoi(spec.substr(10));
    } catch (const std::exception&) {
      count = 0;
    }
    if (count < 1) throw ValueError("bad normals spec '" + spec + "'");
    std::vector<Direction> dirs;
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double theta = golden * i;
      dirs.push_back(Direction::normalized(r * std::cos(theta),
                                           r * std::sin(theta), z));
    }
    return dirs;
  }
  throw ValueError("unknown normals spec '" + spec + "' (axes or fibonacci:K)");
}

int run_generate(const std::string& kind, int n, const std::string& dims_text,
                 const std::string& out, const std::string& axis,
                 const std::string& layers_text, double diameter,
                 const std::string& center_text, int count, double porosity,
                 double exclusion, double aspect, const std::string& weights_text,
                 std::uint64_t seed) {
  GridDims dims;
  if (!dims_text.empty()) {
    const auto v = parse_doubles(dims_text, 3, "--dims");
    dims = {static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]), 1.0};
  } else {
    dims = {n, n, n, 1.0};
  }
  validate_dims(dims);

  PhaseMap map;
  std::uint64_t used_seed = seed;
  if (kind == "laminate") {
    int ax = axis == "x" ? 0 : (axis == "y" ? 1 : (axis == "z" ? 2 : -1));
    if (ax < 0) throw ValueError("laminate axis must be x, y or z");
    std::vector<LayerSpec> layers;
    std::stringstream ss(layers_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) {
        throw ValueError("bad --layers entry '" + item + "', expected thickness:phase");
      }
      LayerSpec l;
      try {
        l.thickness = std::stoi(item.substr(0, colon));
        l.phase = static_cast<std::uint8_t>(std::stoi(item.substr(colon + 1)));
      } catch (const std::exception&) {
        throw ValueError("bad --layers entry '" + item + "'");
      }
      layers.push_back(l);
    }
    if (layers.empty()) throw ValueError("--layers is required for laminate");
    map = gen_laminate(dims, ax, layers);
  } else if (kind == "sphere") {
    std::array<double, 3> center = {dims.n1 / 2.0, dims.n2 / 2.0, dims.n3 / 2.0};
    if (!center_text.empty()) {
      const auto v = parse_doubles(center_text, 3, "--center");
      center = {v[0], v[1], v[2]};
    }
    map = gen_sphere(dims, center, diameter);
  } else if (kind == "sphere-pack" || kind == "sphere_pack") {
    SpherePackParams params;
    params.diameter = diameter;
    params.count = count;
    params.target_fraction = porosity;
    params.exclusion = exclusion;
    params.seed = seed;
    auto res = gen_sphere_pack(dims, params);
    map = std::move(res.map);
    std::printf("placed %zu spheres, inclusion fraction %.6f\n",
                res.centers.size(), res.fraction);
  } else if (kind == "capsules") {
    CapsuleParams params;
    params.count = count;
    params.diameter = diameter;
    params.aspect_ratio = aspect;
    params.seed = seed;
    if (!weights_text.empty()) {
      const auto v = parse_doubles(weights_text, 3, "--weights");
      params.axis_weights = {v[0], v[1], v[2]};
    }
    auto res = gen_capsules(dims, params);
    map = std::move(res.map);
    std::printf("placed %d capsules, inclusion fraction %.6f\n", params.count,
                res.fraction);
  } else {
    throw ValueError("unknown generator kind '" + kind + "'");
  }

  save_voxel(map, out);
  std::printf("wrote %s (%dx%dx%d, u8 phases, seed %llu)\n", out.c_str(), dims.n1,
              dims.n2, dims.n3, static_cast<unsigned long long>(used_seed));
  std::map<int, std::size_t> counts;
  for (const auto ph : map.phase) counts[ph]++;
  for (const auto& [ph, cnt] : counts) {
    std::printf("phase %d: fraction %.6f\n", ph,
                static_cast<double>(cnt) / static_cast<double>(map.voxel_count()));
  }
  return 0;
}

int run_solve(const std::string& input, const std::string& gamma_table,
              const std::string& normal_text, const SolverFlags& flags,
              const std::string& out, const std::string& history,
              const std::string& volume, const std::string& unit,
              bool deterministic) {
  const int threads = resolve_threads();
  const ScalarField gamma = load_gamma(input, gamma_table);
  const auto nv = parse_doubles(normal_text, 3, "--normal");
  const Direction normal = Direction::normalized(nv[0], nv[1], nv[2]);

  const auto t0 = std::chrono::steady_clock::now();
  const SolveResult result = solve(gamma, normal, flags.to_config());
  const double wall = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();

  json report;
  report["config"] = config_echo(flags, input, gamma_table, normal, deterministic,
                                 threads);
  report["converged"] = result.converged;
  report["divergence_norm"] = result.diagnostics.divergence_norm;
  report["dual_value"] = result.diagnostics.dual_value;
  report["duality_gap"] = result.diagnostics.duality_gap;
  report["feasibility_violation"] = result.diagnostics.feasibility_violation;
  report["gamma_eff"] = result.gamma_eff;
  report["iterations"] = result.iterations;
  report["residual"] = result.residual;
  report["unit"] = unit.empty() ? json(nullptr) : json(unit);
  report["wall_time_s"] = deterministic ? 0.0 : wall;

  if (out.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    std::ofstream os(out);
    if (!os) throw IoError("cannot open '" + out + "' for writing");
    os << report.dump(2) << "\n";
    if (!os) throw IoError("short write to '" + out + "'");
  }
  if (!history.empty()) write_history_csv(history, result, flags.check_every);
  if (!volume.empty()) write_volume(volume, result, gamma.dims());

  if (!result.converged) {
    std::cerr << "warning: not converged after " << result.iterations
              << " iterations (residual " << result.residual << ")\n";
  }
  return 0;
}

int run_sweep(const std::string& input, const std::string& gamma_table,
              const std::string& normals_text, const SolverFlags& flags,
              const std::string& out, int jobs) {
  resolve_threads();
  const ScalarField gamma = load_gamma(input, gamma_table);
  const std::vector<Direction> dirs = parse_normals(normals_text);
  if (jobs < 1) jobs = 1;

  std::vector<SolveResult> results(dirs.size());
  std::size_t next = 0;
  for (;;) {
    const std::size_t begin = next;
    if (begin >= dirs.size()) break;
    const std::size_t end = std::min(dirs.size(), begin + static_cast<std::size_t>(jobs));
    std::vector<std::future<SolveResult>> batch;
    for (std::size_t d = begin; d < end; ++d) {
      batch.push_back(std::async(std::launch::async, [&gamma, &flags, &dirs, d] {
        return solve(gamma, dirs[d], flags.to_config());
      }));
    }
    for (std::size_t d = begin; d < end; ++d) {
      results[d] = batch[d - begin].get();
    }
    next = end;
  }

  std::ofstream os(out);
  if (!os) throw IoError("cannot open '" + out + "' for writing");
  os << "xi_x,xi_y,xi_z,gamma_eff,iterations,converged,residual\n";
  char buf[192];
  for (std::size_t d = 0; d < dirs.size(); ++d) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%ld,%d,%.17g\n",
                  dirs[d].x(), dirs[d].y(), dirs[d].z(), results[d].gamma_eff,
                  results[d].iterations, results[d].converged ? 1 : 0,
                  results[d].residual);
    os << buf;
  }
  if (!os) throw IoError("short write to '" + out + "'");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective crack energy of periodic voxel microstructures"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a voxel structure file");
  std::string g_kind, g_dims, g_out, g_axis = "x", g_layers, g_center, g_weights;
  int g_n = 0, g_count = 0;
  double g_diameter = 0.0, g_porosity = -1.0, g_exclusion = 1.0, g_aspect = 5.0;
  std::uint64_t g_seed = 0;
  gen->add_option("--kind", g_kind, "laminate, sphere, sphere-pack or capsules")
      ->required();
  gen->add_option("--n", g_n, "Cubic grid extent");
  gen->add_option("--dims", g_dims, "Grid extents n1,n2,n3");
  gen->add_option("--out", g_out, "Output FFVX path")->required();
  gen->add_option("--axis", g_axis, "Laminate axis (x, y or z)");
  gen->add_option("--layers", g_layers, "Laminate layers thickness:phase,...");
  gen->add_option("--diameter", g_diameter, "Sphere/capsule diameter in voxels");
  gen->add_option("--center", g_center, "Sphere center x,y,z in voxels");
  gen->add_option("--count", g_count, "Number of inclusions");
  gen->add_option("--porosity", g_porosity, "Target inclusion volume fraction");
  gen->add_option("--exclusion", g_exclusion,
                  "Minimum center distance in diameters (sphere packs)");
  gen->add_option("--aspect", g_aspect, "Capsule length over diameter");
  gen->add_option("--weights", g_weights, "Capsule axis weights wx,wy,wz");
  gen->add_option("--seed", g_seed, "Generator seed");

  // solve
  auto* sol = app.add_subcommand("solve", "Compute gamma_eff for one normal");
  std::string s_input, s_gamma, s_normal = "1,0,0", s_out, s_history, s_volume,
              s_unit;
  bool s_det = false;
  SolverFlags s_flags;
  sol->add_option("--input", s_input, "FFVX structure file")->required();
  sol->add_option("--gamma", s_gamma, "Phase table id=value,...");
  sol->add_option("--normal", s_normal, "Mean crack normal x,y,z");
  sol->add_option("--out", s_out, "Report JSON path (stdout when absent)");
  sol->add_option("--history", s_history, "Residual history CSV path");
  sol->add_option("--export-volume", s_volume, "Structured-points volume path");
  sol->add_option("--unit", s_unit, "Unit string echoed into the report");
  sol->add_flag("--deterministic", s_det,
                "Reproducible reports (zeroes wall time)");
  s_flags.attach(sol);

  // sweep
  auto* swp = app.add_subcommand("sweep", "Solve a set of crack normals");
  std::string w_input, w_gamma, w_normals = "axes", w_out;
  int w_jobs = 1;
  SolverFlags w_flags;
  swp->add_option("--input", w_input, "FFVX structure file")->required();
  swp->add_option("--gamma", w_gamma, "Phase table id=value,...");
  swp->add_option("--normals", w_normals, "axes or fibonacci:K");
  swp->add_option("--out", w_out, "Sweep CSV path")->required();
  swp->add_option("--jobs", w_jobs, "Concurrent direction solves");
  w_flags.attach(swp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      return run_generate(g_kind, g_n, g_dims, g_out, g_axis, g_layers, g_diameter,
                          g_center, g_count, g_porosity, g_exclusion, g_aspect,
                          g_weights, g_seed);
    }
    if (sol->parsed()) {
      return run_solve(s_input, s_gamma, s_normal, s_flags, s_out, s_history,
                       s_volume, s_unit, s_det);
    }
    if (swp->parsed()) {
      return run_sweep(w_input, w_gamma, w_normals, w_flags, w_out, w_jobs);
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const ValueError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
