#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "thbheat/adaptivity/marking.hpp"
#include "thbheat/adaptivity/refine_coarsen.hpp"
#include "thbheat/adaptivity/transfer.hpp"
#include "thbheat/assembly/assemble.hpp"
#include "thbheat/driver/config.hpp"
#include "thbheat/io/field_output.hpp"
#include "thbheat/solver/time_stepping.hpp"

namespace thbheat {

/// Fixed problem data shared by every step of a run.
struct ProblemContext {
  Geometry geom;
  Material mat;
  HeatSource src;
  TimeStepper stepper;
  int n_gauss = 0;
  double alpha_r = 0.1;
  int m = 2;

  static ProblemContext from(const SimulationConfig &c) {
    return {Geometry(c.side_length), c.material, c.source, TimeStepper{c.dt, c.solver_tol, 0}, c.n_gauss, c.alpha_r,
            c.effective_m()};
  }
};

/// Outcome of one solve-estimate-mark-refine cycle set.
struct IterateResult {
  HierarchicalSpace space;
  StateVector theta_old; ///< previous state transferred to `space`
  StateVector theta_new;
  SystemMatrices sys;
  Estimate est;
  int iterations = 0;
  int marked = 0;
  int capacity_skipped = 0;
};

/// Solve, estimate, and while fewer than `imax` refinement rounds were done
/// and the estimate is at least `tol`: mark, refine, transfer the previous
/// state by knot insertion, and solve again. With `until_depth`, iteration
/// stops as soon as the deepest level of the hierarchy holds active cells
/// (`imax` then only bounds the work).
inline IterateResult adaptive_iterate(HierarchicalSpace space, StateVector theta_t, const ProblemContext &ctx,
                                      double t_new, int imax, double tol, bool until_depth = false) {
  const double dt = ctx.stepper.dt;
  auto solve = [&](IterateResult &r) {
    r.sys = assemble(r.space, ctx.geom, ctx.mat, ctx.src, t_new, ctx.n_gauss);
    r.theta_new = advance(r.sys, r.theta_old, ctx.stepper);
    r.est = estimate(*r.sys.cache, ctx.mat, ctx.src, r.theta_new, r.theta_old, dt, t_new);
  };
  IterateResult r{std::move(space), std::move(theta_t), {}, {}, {}, 0, 0, 0};
  solve(r);
  const int deepest = r.space.max_levels() - 1;
  while (r.iterations < imax && r.est.total >= tol) {
    if (until_depth && r.space.mesh().deepest_active_level() == deepest) break;
    const auto marked = mark_max(r.est, ctx.alpha_r);
    if (marked.cells.empty()) break;
    HierarchicalSpace before = r.space;
    const auto rep = refine(r.space, marked, ctx.m);
    r.marked += static_cast<int>(marked.cells.size());
    r.capacity_skipped += rep.capacity_skipped;
    ++r.iterations;
    if (rep.subdivided == 0) break; // everything marked already sits on the deepest level
    r.theta_old = transfer_refine(before, r.space, r.theta_old);
    solve(r);
  }
  return r;
}

struct StepRecord {
  int step = 0;
  double t = 0.0;
  int n_dofs = 0;
  std::vector<int> cells_per_level; ///< active cells of the solve mesh (before coarsening)
  double eps_total = 0.0;
  double E_i = 0.0;
  double E_T = 0.0;
  double wall_ms = 0.0;
  int marked_r = 0;
  int marked_c = 0;
  int reactivated = 0;
  // Diagnostics kept in memory only.
  int cells_before_coarsen = 0;
  int cells_after_coarsen = 0;
  int max_level = 0;
  bool admissible = true;
  double heat_injected = 0.0; ///< dt * 1^T f
  double heat_stored = 0.0;   ///< 1^T M (theta_new - theta_old)
  int capacity_skipped = 0;
};

inline void write_steps_header(std::ostream &os, int levels) {
  os << "step,t,n_dofs";
  for (int l = 0; l < levels; ++l) os << ",cells_l" << l;
  os << ",eps_total,E_i,E_T,wall_ms,marked_r,marked_c,reactivated\n";
}

inline void write_step_row(std::ostream &os, const StepRecord &r) {
  os << std::setprecision(17) << r.step << "," << r.t << "," << r.n_dofs;
  for (int c : r.cells_per_level) os << "," << c;
  os << "," << r.eps_total << "," << r.E_i << "," << r.E_T << "," << r.wall_ms << "," << r.marked_r << ","
     << r.marked_c << "," << r.reactivated << "\n";
}

/// Where and what a run writes; an empty directory disables file output.
struct OutputOptions {
  std::filesystem::path dir;
  bool fields = true;
};

/// Per-step hook: record, solve space, solution, and the system it solved.
using StepObserver =
    std::function<void(const StepRecord &, const HierarchicalSpace &, const StateVector &, const SystemMatrices &)>;

struct RunResult {
  SimulationConfig config;
  std::vector<StepRecord> records;
};

namespace detail {

inline std::string numbered(const std::string &stem, int k, const std::string &ext) {
  std::ostringstream os;
  os << stem << "_" << std::setw(4) << std::setfill('0') << k << ext;
  return os.str();
}

inline HierarchicalSpace initial_space(const SimulationConfig &c) {
  const auto base = TensorSpace::uniform(c.degree, c.base_cells, c.base_cells);
  if (c.mode != RunMode::uniform) return build_initial(base, c.max_levels);
  auto sp = build_initial(base, std::max(c.max_levels, c.uniform_level + 1));
  for (int l = 0; l < c.uniform_level; ++l) {
    const std::vector<CellIndex> cells(sp.mesh().active_cells().begin(), sp.mesh().active_cells().end());
    for (const auto &q : cells) sp.subdivide(q);
  }
  return sp;
}

} // namespace detail

/// Time loop: per step, adaptive_iterate (deep on the first step), then from
/// the second step on mark_min, coarsen and L2-project the new solution onto
/// the coarsened space.
inline RunResult run(const SimulationConfig &config, const OutputOptions &out = {}, const StepObserver &observer = {}) {
  config.validate();
  const auto ctx = ProblemContext::from(config);
  const bool adaptive = config.mode != RunMode::uniform;
  auto space = detail::initial_space(config);
  const int levels = space.max_levels();
  auto theta = StateVector::constant(space, config.material.theta0);
  RunResult result{config, {}};

  std::ofstream steps;
  if (!out.dir.empty()) {
    std::filesystem::create_directories(out.dir);
    steps.open(out.dir / "steps.csv");
    if (!steps) throw ConfigError("cannot write " + (out.dir / "steps.csv").string());
    write_steps_header(steps, levels);
  }

  const int n = config.steps();
  for (int s = 0; s < n; ++s) {
    const auto t0 = std::chrono::steady_clock::now();
    const double t_new = (s + 1) * config.dt;
    const bool deep = adaptive && s == 0 && config.imax_first < 0;
    const int imax = adaptive ? (s == 0 ? config.first_iterations() : config.imax_rest) : 0;
    auto it = adaptive_iterate(std::move(space), std::move(theta), ctx, t_new, imax, config.tol, deep);

    StepRecord rec;
    rec.step = s;
    rec.t = t_new;
    rec.n_dofs = it.space.num_dofs();
    rec.cells_per_level = it.space.mesh().active_cells_per_level();
    rec.cells_per_level.resize(static_cast<std::size_t>(levels), 0);
    rec.eps_total = it.est.total;
    rec.E_i = internal_energy(it.sys, it.theta_new);
    rec.E_T = total_energy(it.sys, it.theta_new, it.theta_old, config.dt);
    rec.marked_r = it.marked;
    rec.capacity_skipped = it.capacity_skipped;
    rec.cells_before_coarsen = static_cast<int>(it.space.mesh().active_cells().size());
    rec.max_level = it.space.mesh().deepest_active_level();
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(it.space.num_dofs());
    rec.heat_injected = config.dt * one.dot(it.sys.f);
    rec.heat_stored = one.dot(it.sys.M * (it.theta_new.coeffs - it.theta_old.coeffs));

    space = std::move(it.space);
    theta = it.theta_new;
    if (observer) observer(rec, space, theta, it.sys);
    const HierarchicalSpace solve_space = out.dir.empty() ? HierarchicalSpace{} : space;
    const StateVector solve_theta = theta;

    if (adaptive && config.coarsen && s >= 1) {
      const auto mc = mark_min(it.est, config.alpha_c);
      rec.marked_c = static_cast<int>(mc.cells.size());
      HierarchicalSpace before = space;
      const auto rep = coarsen(space, mc, ctx.m);
      rec.reactivated = rep.reactivated;
      if (rep.reactivated > 0) theta = project_l2(space, before, theta);
    }
    rec.cells_after_coarsen = static_cast<int>(space.mesh().active_cells().size());
    rec.admissible = is_admissible(space, ctx.m);
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    if (!out.dir.empty()) {
      write_step_row(steps, rec);
      steps.flush();
      if (out.fields) {
        std::ofstream mesh(out.dir / detail::numbered("mesh", s, ".jsonl"));
        write_mesh_jsonl(solve_space.mesh(), mesh);
        const auto field = sample_field(solve_space, solve_theta, ctx.geom, config.sample_n);
        std::ofstream vtk(out.dir / detail::numbered("field", s, ".vtk"));
        write_vtk(vtk, field);
        std::ofstream csv(out.dir / detail::numbered("field", s, ".csv"));
        write_field_csv(csv, field);
      }
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

/// Per-step relative energy errors of one run against a reference run.
struct ComparisonRow {
  std::string mode;
  StepRecord record;
  RelativeError err_i;
  RelativeError err_T;
};

inline std::vector<ComparisonRow> compare_runs(const std::vector<RunResult> &runs, std::size_t reference) {
  if (reference >= runs.size()) throw ConfigError("compare: reference index out of range");
  const auto &ref = runs[reference].records;
  std::vector<ComparisonRow> rows;
  for (const auto &r : runs) {
    if (r.records.size() != ref.size()) throw ConfigError("compare: runs have different step counts");
    for (std::size_t s = 0; s < r.records.size(); ++s) {
      const auto &rec = r.records[s];
      rows.push_back({r.config.label.empty() ? to_string(r.config.mode) : r.config.label, rec,
                      relative_error(rec.E_i, ref[s].E_i), relative_error(rec.E_T, ref[s].E_T)});
    }
  }
  return rows;
}

inline void write_comparison_csv(std::ostream &os, const std::vector<ComparisonRow> &rows) {
  os << "mode,step,t,n_dofs,eps_total,E_i,E_T,rel_err_i,rel_err_T,wall_ms\n" << std::setprecision(17);
  for (const auto &r : rows) {
    os << r.mode << "," << r.record.step << "," << r.record.t << "," << r.record.n_dofs << "," << r.record.eps_total
       << "," << r.record.E_i << "," << r.record.E_T << "," << r.err_i.value << "," << r.err_T.value << ","
       << r.record.wall_ms << "\n";
  }
}

/// Check that configs describe the same physical problem and time grid.
inline void check_comparable(const std::vector<SimulationConfig> &configs) {
  auto physics = [](const SimulationConfig &c) {
    std::ostringstream os;
    write_config(os, c);
    const auto s = os.str();
    return s.substr(0, s.find("[run]"));
  };
  for (const auto &c : configs) {
    if (c.dt != configs.front().dt || c.steps() != configs.front().steps()) {
      throw ConfigError("compare: configs must share dt and the number of steps");
    }
    if (c.side_length != configs.front().side_length || physics(c) != physics(configs.front())) {
      throw ConfigError("compare: configs must share material, source, path and geometry");
    }
  }
}

/// Run every config (outputs in <dir>/<label>/) and write <dir>/comparison.csv.
inline std::vector<ComparisonRow> run_comparison(std::vector<SimulationConfig> configs, std::size_t reference,
                                                 const std::filesystem::path &dir, bool fields = true) {
  if (configs.empty()) throw ConfigError("compare: no configs");
  check_comparable(configs);
  std::map<std::string, int> seen;
  for (auto &c : configs) {
    if (c.label.empty()) c.label = to_string(c.mode);
    if (seen[c.label]++) c.label += "_" + std::to_string(seen[c.label] - 1);
  }
  std::vector<RunResult> runs;
  for (const auto &c : configs) runs.push_back(run(c, {dir.empty() ? dir : dir / c.label, fields}));
  auto rows = compare_runs(runs, reference);
  if (!dir.empty()) {
    std::filesystem::create_directories(dir);
    std::ofstream os(dir / "comparison.csv");
    write_comparison_csv(os, rows);
  }
  return rows;
}

} // namespace thbheat
