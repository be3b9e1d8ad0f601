#pragma once

// The two evaluation campaigns: Peclet sweep (H2 and POD ROMs against the FOM
// on the same grid) and the 48 h water-quality run (ROM against the refined
// oracle, ROM against FOM for timing).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "adrmor/bilinear.hpp"
#include "adrmor/config.hpp"
#include "adrmor/io.hpp"
#include "adrmor/metrics.hpp"
#include "adrmor/reduction.hpp"
#include "adrmor/scenarios.hpp"
#include "adrmor/simulate.hpp"
#include "adrmor/waterquality.hpp"

namespace adrmor {

/// A configured scenario in scaled coordinates, sampled at the configured step.
struct PreparedScenario {
  ScaledProblem problem;
  InputSchedule inputs;
  std::optional<WqScenarioResult> wq;
};

inline PreparedScenario prepare_scenario(const RunConfig& c, Index nodes) {
  PreparedScenario out;
  GridSpec physical;
  CoefficientSignals sig;
  if (c.scenario.kind == ScenarioKind::WaterQuality) {
    out.wq = make_wq_scenario(c.scenario);
    physical = GridSpec::uniform(out.wq->params.L, nodes);
    sig = out.wq->signals;
  } else {
    physical = GridSpec::uniform(c.scenario.length, nodes);
    sig = make_sweep_signals(c.scenario);
  }
  out.problem = scale_system(physical, sig, default_t_ref(physical, sig));
  const CoefficientSignals& s = out.problem.signals;
  out.inputs = sample_inputs(s, out.problem.grid.dx(), s.t0, s.t_end, c.scenario.dt / out.problem.map.t_ref);
  return out;
}

struct SweepRow {
  double Pe = 0.0;
  ScenarioKind kind = ScenarioKind::Step;
  std::string method;  // "H2" or "POD"
  Index full_order = 0;
  Index reduced_order = 0;
  bool ok = false;
  ComparisonReport report;
  int iterations = 0;
  std::string message;
};

inline constexpr const char* kSweepHeader =
    "Pe,kind,method,N,n,status,nmse_percent,max_abs_error,wall_time_fom_s,wall_time_rom_s,speedup,iterations,message";

inline void write_sweep_row(std::ostream& os, const SweepRow& r) {
  std::string msg = r.message;
  std::replace(msg.begin(), msg.end(), ',', ';');
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  os << format_double(r.Pe) << ',' << to_string(r.kind) << ',' << r.method << ',' << r.full_order << ','
     << r.reduced_order << ',' << (r.ok ? "ok" : "failed") << ',';
  if (r.ok) {
    os << format_double(r.report.nmse_percent) << ',' << format_double(r.report.max_abs_error) << ','
       << format_double(r.report.wall_time_fom) << ',' << format_double(r.report.wall_time_rom) << ','
       << format_double(r.report.speedup);
  } else {
    os << ",,,,";
  }
  os << ',' << r.iterations << ',' << msg << '\n';
}

inline int method_rank(const std::string& m) { return m == "H2" ? 0 : 1; }

inline void sort_sweep_rows(std::vector<SweepRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.Pe != b.Pe) return a.Pe < b.Pe;
    if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    return method_rank(a.method) < method_rank(b.method);
  });
}

struct SweepSettings {
  ScenarioConfig base;  // horizon, dt, amplitudes, seed
  Index nodes = 200;
  H2Options h2;
  Index record_every = 10;
  std::vector<ScenarioKind> kinds{ScenarioKind::Step, ScenarioKind::Pulse, ScenarioKind::Random};
};

/// Scaled FOM of a sweep scenario. All kinds at one Pe share the grid and t_ref.
struct SweepModel {
  GridSpec grid;
  double t_ref = 1.0;
  BilinearSystem fom;
};

inline SweepModel sweep_model(const SweepSettings& s, double Pe) {
  ScenarioConfig cfg = s.base;
  cfg.Pe_target = Pe;
  cfg.kind = ScenarioKind::Step;
  const GridSpec physical = GridSpec::uniform(cfg.length, s.nodes);
  const double t_ref = default_t_ref(physical, make_sweep_signals(cfg));
  const ScaledProblem p = scale_system(physical, make_sweep_signals(cfg), t_ref);
  return {p.grid, t_ref, assemble_fom(p.grid)};
}

inline InputSchedule sweep_schedule(const SweepSettings& s, const SweepModel& m, const CoefficientSignals& physical) {
  const ScaledProblem p = scale_system(GridSpec::uniform(s.base.length, s.nodes), physical, m.t_ref);
  return sample_inputs(p.signals, m.grid.dx(), p.signals.t0, p.signals.t_end, s.base.dt / m.t_ref);
}

/// One Peclet number: H2 ROM from the step-input statistics, POD ROM from the
/// chirp-source training run, both evaluated on every kind against the FOM.
inline std::vector<SweepRow> run_sweep_pe(const SweepSettings& s, double Pe) {
  ScenarioConfig cfg = s.base;
  cfg.Pe_target = Pe;
  cfg.kind = ScenarioKind::Step;
  const SweepModel model = sweep_model(s, Pe);
  const Index n = s.h2.order;
  const IntegrateOptions rec{s.record_every, true};

  std::optional<ReductionResult> h2, pod;
  std::string h2_err, pod_err;
  try {
    H2Options o = s.h2;
    o.statistics = InputStatistics::from_samples(sweep_schedule(s, model, make_sweep_signals(cfg)).u);
    h2 = reduce_h2(model.fom, o);
  } catch (const std::exception& e) {
    h2_err = e.what();
  }
  try {
    const InputSchedule train = sweep_schedule(s, model, make_pod_training_signals(cfg));
    const Trajectory tr = integrate(model.fom, train, Eigen::VectorXd::Zero(model.fom.state_dim()), rec);
    pod = pod_galerkin(model.fom, tr.states.transpose(), n);
  } catch (const std::exception& e) {
    pod_err = e.what();
  }

  std::vector<SweepRow> rows;
  for (ScenarioKind kind : s.kinds) {
    ScenarioConfig kc = cfg;
    kc.kind = kind;
    std::optional<Trajectory> ref;
    std::string ref_err;
    InputSchedule in;
    try {
      in = sweep_schedule(s, model, make_sweep_signals(kc));
      ref = integrate(model.fom, in, Eigen::VectorXd::Zero(model.fom.state_dim()), rec);
    } catch (const std::exception& e) {
      ref_err = e.what();
    }
    for (const char* method : {"H2", "POD"}) {
      const bool is_h2 = std::string(method) == "H2";
      SweepRow row;
      row.Pe = Pe;
      row.kind = kind;
      row.method = method;
      row.full_order = model.fom.state_dim();
      row.reduced_order = n;
      const std::optional<ReductionResult>& red = is_h2 ? h2 : pod;
      try {
        if (!ref) throw NumericalError("reference FOM run failed: " + ref_err);
        if (!red) throw NumericalError("reduction failed: " + (is_h2 ? h2_err : pod_err));
        const Trajectory y = integrate(red->rom, in, Eigen::VectorXd::Zero(n), rec);
        row.report = compare(*ref, y, {std::string(to_string(kind)) + " Pe=" + format_double(Pe), method,
                                       model.fom.state_dim(), n});
        row.iterations = red->iterations;
        row.ok = true;
        if (is_h2 && !red->converged) row.message = "not converged";
      } catch (const std::exception& e) {
        row.message = e.what();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

/// Runs every decade, optionally on several worker threads; rows come back
/// sorted by (Pe, kind, method) whatever the completion order.
inline std::vector<SweepRow> run_sweep(const SweepSettings& s, const std::vector<double>& pes, int jobs = 1) {
  std::vector<std::vector<SweepRow>> parts(pes.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < pes.size(); i = next++) parts[i] = run_sweep_pe(s, pes[i]);
  };
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(pes.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::vector<SweepRow> rows;
  for (auto& p : parts) rows.insert(rows.end(), p.begin(), p.end());
  sort_sweep_rows(rows);
  return rows;
}

inline SweepSettings sweep_settings(const RunConfig& c) {
  SweepSettings s;
  s.base = c.scenario;
  if (s.base.kind == ScenarioKind::WaterQuality) {
    const ScenarioConfig d;
    s.base.kind = ScenarioKind::Step;
    s.base.horizon = d.horizon;
    s.base.dt = d.dt;
  }
  s.nodes = c.sweep.nodes;
  s.h2 = c.h2_options();
  s.record_every = c.sweep.record_every;
  s.kinds = c.sweep.kinds;
  return s;
}

struct WqOptions {
  Index nodes = 500;
  H2Options h2;
  Index record_every = 60;      // coarse steps between recorded samples
  bool oracle = true;
  Index oracle_refinement = 4;
  Index oracle_substeps = 4;
  int timing_repeats = 3;       // FOM and ROM integration timed as the minimum over repeats
};

struct WqRun {
  WqScenarioResult scenario;
  ScaledProblem problem;
  BilinearSystem fom;
  ReductionResult reduction;
  Trajectory fom_traj;
  Trajectory rom_traj;
  std::optional<Trajectory> oracle_traj;
  ComparisonReport rom_vs_fom;
  std::optional<ComparisonReport> rom_vs_oracle;
  RegimeJump jump;
  double dt_scaled = 0.0;
};

namespace detail {

inline ComparisonReport compare_allow_zero(const Trajectory& ref, const Trajectory& y, ComparisonMeta meta) {
  if (ref.outputs.size() > 0 && ref.outputs.isZero(0.0) && y.outputs.isZero(0.0)) {
    Trajectory r2 = ref;
    r2.outputs(0, 0) = 1.0;
    Trajectory y2 = y;
    y2.outputs(0, 0) = 1.0;
    ComparisonReport rep = compare(r2, y2, std::move(meta));
    rep.max_abs_error = 0.0;
    return rep;
  }
  return compare(ref, y, std::move(meta));
}

inline Trajectory timed_integrate(const BilinearSystem& sys, const InputSchedule& in, Index n, Index every,
                                  int repeats) {
  Trajectory best = integrate(sys, in, Eigen::VectorXd::Zero(n), {every, true});
  for (int r = 1; r < repeats; ++r) {
    const Trajectory t = integrate(sys, in, Eigen::VectorXd::Zero(n), {every, false});
    best.wall_time = std::min(best.wall_time, t.wall_time);
  }
  return best;
}

}  // namespace detail

/// Full water-quality case in scaled coordinates with t_ref = L / peak velocity.
inline WqRun run_wq(const ScenarioConfig& cfg, const WqOptions& opt) {
  detail::require(cfg.wq_params.has_value(), "water-quality run needs wq_params");
  WqRun run;
  run.scenario = make_wq_scenario(cfg);
  const WaterQualityParams& p = run.scenario.params;
  const GridSpec physical = GridSpec::uniform(p.L, opt.nodes);
  run.problem = scale_system(physical, run.scenario.signals, default_t_ref(physical, run.scenario.signals));
  const double t_ref = run.problem.map.t_ref;
  run.fom = assemble_fom(run.problem.grid);
  run.dt_scaled = cfg.dt / t_ref;
  const CoefficientSignals& sig = run.problem.signals;
  const InputSchedule in = sample_inputs(sig, run.problem.grid.dx(), sig.t0, sig.t_end, run.dt_scaled);

  H2Options h2 = opt.h2;
  h2.statistics = InputStatistics::from_samples(in.u);
  run.reduction = reduce_h2(run.fom, h2);

  const int reps = std::max(1, opt.timing_repeats);
  run.fom_traj = detail::timed_integrate(run.fom, in, opt.nodes, opt.record_every, reps);
  run.rom_traj = detail::timed_integrate(run.reduction.rom, in, run.reduction.rom.state_dim(), opt.record_every, reps);
  run.rom_vs_fom = detail::compare_allow_zero(run.fom_traj, run.rom_traj,
                                              {"waterquality", "H2", opt.nodes, run.reduction.rom.state_dim()});
  if (opt.oracle) {
    OracleConfig oc;
    oc.coarse = run.problem.grid;
    oc.fine_nodes = (opt.nodes - 1) * opt.oracle_refinement + 1;
    oc.t0 = sig.t0;
    oc.t_end = sig.t_end;
    oc.dt = run.dt_scaled;
    oc.dt_fine = run.dt_scaled / static_cast<double>(opt.oracle_substeps);
    oc.record_every = opt.record_every;
    run.oracle_traj = fine_grid_oracle(oc, sig);
    run.rom_vs_oracle = detail::compare_allow_zero(*run.oracle_traj, run.rom_traj,
                                                   {"waterquality", "H2 vs oracle", oc.fine_nodes,
                                                    run.reduction.rom.state_dim()});
  }
  const double v_max = *std::max_element(run.scenario.hourly_velocity.begin(), run.scenario.hourly_velocity.end());
  run.jump = regime_jump(p.L / v_max, p);
  return run;
}

inline WqOptions wq_options(const RunConfig& c) {
  WqOptions o;
  o.nodes = c.grid.nodes;
  o.h2 = c.h2_options();
  o.record_every = c.output.record_every;
  o.oracle = c.oracle.enabled;
  o.oracle_refinement = c.oracle.refinement;
  o.oracle_substeps = c.oracle.substeps;
  return o;
}

/// Row of a recorded trajectory at physical time `seconds`; the time must be
/// one of the recorded instants.
inline Index profile_row(const WqRun& run, double seconds) {
  const double tau = run.problem.map.time_to_scaled(seconds);
  const auto& ts = run.rom_traj.times;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    if (std::abs(ts[k] - tau) <= 1e-9 * std::max(1.0, std::abs(tau))) return static_cast<Index>(k);
  }
  throw ValidationError("profile time " + format_double(seconds / 3600.0) +
                        " h is not a recorded instant (adjust output.record_every)");
}

}  // namespace adrmor
