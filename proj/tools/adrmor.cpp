// adrmor command-line driver: build, reduce, simulate, sweep, wq, compare.
// Exit codes: 0 success, 1 validation error, 2 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "adrmor/campaign.hpp"
#include "adrmor/config.hpp"
#include "adrmor/io.hpp"
#include "adrmor/metrics.hpp"
#include "adrmor/reduction.hpp"
#include "adrmor/simulate.hpp"

namespace fs = std::filesystem;
using namespace adrmor;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "adrmor 1.0.0";

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int order = 0;
  double tol = 0.0;
  int jobs = 1;
};

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? parse_config("", "<defaults>") : load_config(c.config);
  if (c.seed) cfg.scenario.seed = *c.seed;
  if (c.order > 0) cfg.reduction.order = c.order;
  if (c.tol > 0.0) cfg.reduction.tol = c.tol;
  if (!c.out.empty()) cfg.output.dir = c.out;
  return cfg;
}

Provenance provenance(const RunConfig& cfg, const std::string& command, const std::string& units) {
  return {{"generator", kVersion},
          {"command", command},
          {"config", cfg.source},
          {"config_hash", cfg.hash},
          {"seed", std::to_string(cfg.scenario.seed)},
          {"units", units}};
}

fs::path out_dir(const RunConfig& cfg) {
  fs::path d(cfg.output.dir);
  fs::create_directories(d);
  return d;
}

void write_manifest(const RunConfig& cfg, const std::string& command, const std::vector<std::string>& argv,
                    double seconds, const ordered_json& extra) {
  ordered_json m;
  m["command"] = command;
  m["argv"] = argv;
  m["version"] = kVersion;
  m["config_path"] = cfg.source;
  m["config_hash"] = cfg.hash;
  m["seed"] = cfg.scenario.seed;
  m["output_dir"] = cfg.output.dir;
  m["wall_clock_seconds"] = seconds;
  m["results"] = extra;
  std::ofstream os(fs::path(cfg.output.dir) / "manifest.json");
  os << m.dump(2) << '\n';
}

BilinearSystem load_model(const std::string& path, bool* is_reduction = nullptr) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open model '" + path + "'");
  std::string first;
  std::getline(is, first);
  is.seekg(0);
  if (first == kReductionMagic) {
    if (is_reduction) *is_reduction = true;
    return read_file(path, [](std::istream& s) { return read_reduction(s).rom; });
  }
  if (is_reduction) *is_reduction = false;
  return read_file(path, [](std::istream& s) { return read_system(s); });
}

ordered_json report_json(const ComparisonReport& r) {
  return {{"nmse_percent", r.nmse_percent},
          {"nmse_definition", ComparisonReport::nmse_definition},
          {"max_abs_error", r.max_abs_error},
          {"wall_time_reference_s", r.wall_time_fom},
          {"wall_time_rom_s", r.wall_time_rom},
          {"speedup", r.speedup},
          {"reference_order", r.meta.full_order},
          {"reduced_order", r.meta.reduced_order}};
}

ordered_json cmd_build(const RunConfig& cfg) {
  const BilinearSystem fom = assemble_fom(GridSpec::uniform(1.0, cfg.grid.nodes, true));
  const fs::path file = out_dir(cfg) / "fom.txt";
  write_file(file.string(), [&](std::ostream& os) {
    write_system(os, fom, provenance(cfg, "build", "scaled domain x/L in [0,1], time t/t_ref"));
  });
  std::cout << "wrote " << file.string() << " (N=" << fom.state_dim() << ", " << fom.slices.size() << " slices)\n";
  return {{"fom", file.string()}, {"N", fom.state_dim()}};
}

ordered_json cmd_reduce(const RunConfig& cfg, const std::string& fom_path) {
  const BilinearSystem fom = load_model(fom_path);
  const PreparedScenario sc = prepare_scenario(cfg, fom.state_dim());
  H2Options o = cfg.h2_options();
  o.statistics = InputStatistics::from_samples(sc.inputs.u);
  const ReductionResult r = reduce_h2(fom, o);
  const fs::path dir = out_dir(cfg);
  const Provenance prov = provenance(cfg, "reduce", "scaled");
  write_file((dir / "rom.txt").string(), [&](std::ostream& os) { write_reduction(os, r, prov); });
  write_file((dir / "error_history.csv").string(),
             [&](std::ostream& os) { write_error_history_csv(os, r.error_history, prov); });
  write_file((dir / "modes.csv").string(), [&](std::ostream& os) {
    write_modes_csv(os, r.V, GridSpec::uniform(1.0, fom.state_dim(), true).coordinates(), prov);
  });
  std::cout << "reduced N=" << fom.state_dim() << " -> n=" << r.rom.state_dim() << " in " << r.iterations
            << " iterations (converged=" << r.converged << ", restarts=" << r.restarts << ")\n";
  return {{"rom", (dir / "rom.txt").string()},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"restarts", r.restarts},
          {"final_error", r.error_history.empty() ? 0.0 : r.error_history.back()}};
}

ordered_json cmd_simulate(const RunConfig& cfg, const std::string& model_path) {
  bool is_rom = false;
  const BilinearSystem sys = load_model(model_path, &is_rom);
  const Index nodes = is_rom ? cfg.grid.nodes : sys.state_dim();
  const PreparedScenario sc = prepare_scenario(cfg, nodes);
  detail::require(std::abs(sys.dx - sc.problem.grid.dx()) <= 1e-12 * sc.problem.grid.dx(),
                  "model grid spacing does not match grid.nodes of the config");
  const Trajectory tr = integrate(sys, sc.inputs, Eigen::VectorXd::Zero(sys.state_dim()), {cfg.output.record_every, false});
  const fs::path file = out_dir(cfg) / (is_rom ? "rom_trajectory.csv" : "fom_trajectory.csv");
  write_file(file.string(), [&](std::ostream& os) {
    Provenance p = provenance(cfg, "simulate", "t scaled by t_ref, x scaled by L, concentration as injected");
    p.emplace_back("t_ref_s", format_double(sc.problem.map.t_ref));
    write_trajectory_csv(os, tr, sc.problem.grid.coordinates(), p);
  });
  std::cout << "wrote " << file.string() << " (" << tr.times.size() << " samples, " << tr.wall_time << " s)\n";
  return {{"trajectory", file.string()}, {"wall_time_s", tr.wall_time}};
}

ordered_json cmd_sweep(const RunConfig& cfg, int jobs) {
  const SweepSettings s = sweep_settings(cfg);
  std::vector<double> pes;
  for (int d : cfg.sweep.decades) pes.push_back(std::pow(10.0, d));
  const std::vector<SweepRow> rows = run_sweep(s, pes, jobs);
  const fs::path file = out_dir(cfg) / "sweep.csv";
  int failed = 0;
  write_file(file.string(), [&](std::ostream& os) {
    detail::write_provenance(os, provenance(cfg, "sweep", "nmse in percent, times in seconds"));
    os << kSweepHeader << '\n';
    for (const auto& r : rows) {
      write_sweep_row(os, r);
      failed += r.ok ? 0 : 1;
    }
  });
  for (const auto& r : rows) {
    std::cout << "Pe=" << format_double(r.Pe) << ' ' << to_string(r.kind) << ' ' << r.method << ": "
              << (r.ok ? format_double(r.report.nmse_percent) + " %" : "failed (" + r.message + ")") << '\n';
  }
  return {{"results", file.string()}, {"rows", rows.size()}, {"failed_rows", failed}};
}

ordered_json cmd_wq(const RunConfig& cfg) {
  detail::require(cfg.scenario.kind == ScenarioKind::WaterQuality, "wq needs scenario.kind = waterquality");
  const WqRun run = run_wq(cfg.scenario, wq_options(cfg));
  const fs::path dir = out_dir(cfg);
  Provenance prov = provenance(cfg, "wq", "t in h, x in m, concentration in mg/L");
  prov.emplace_back("t_ref_s", format_double(run.problem.map.t_ref));
  const double L = run.problem.map.length;
  const Eigen::VectorXd x = run.problem.grid.coordinates() * L;

  auto hours = [&](const Trajectory& t) {
    Trajectory h = t;
    for (double& v : h.times) v = run.problem.map.time_to_physical(v) / 3600.0;
    return h;
  };
  write_file((dir / "rom_surface.csv").string(), [&](std::ostream& os) { write_trajectory_csv(os, hours(run.rom_traj), x, prov); });
  write_file((dir / "fom_surface.csv").string(), [&](std::ostream& os) { write_trajectory_csv(os, hours(run.fom_traj), x, prov); });
  if (run.oracle_traj) {
    write_file((dir / "oracle_surface.csv").string(),
               [&](std::ostream& os) { write_trajectory_csv(os, hours(*run.oracle_traj), x, prov); });
  }
  ordered_json profiles = ordered_json::array();
  for (double h : cfg.output.profile_hours) {
    const Index k = profile_row(run, h * 3600.0);
    std::vector<std::string> names{"x_m", "rom", "fom"};
    std::vector<Eigen::VectorXd> cols{x, run.rom_traj.outputs.row(k).transpose(), run.fom_traj.outputs.row(k).transpose()};
    if (run.oracle_traj) {
      names.push_back("oracle");
      cols.emplace_back(run.oracle_traj->outputs.row(k).transpose());
    }
    const std::string name = "profile_" + format_double(h) + "h.csv";
    write_file((dir / name).string(), [&](std::ostream& os) { write_columns_csv(os, names, cols, prov); });
    profiles.push_back(name);
  }
  write_file((dir / "error_history.csv").string(),
             [&](std::ostream& os) { write_error_history_csv(os, run.reduction.error_history, prov); });
  write_file((dir / "modes.csv").string(), [&](std::ostream& os) { write_modes_csv(os, run.reduction.V, x, prov); });
  {
    std::vector<std::string> names{"t_h", "velocity_m_s", "reynolds", "laminar"};
    std::vector<Eigen::VectorXd> cols(4, Eigen::VectorXd(static_cast<Index>(run.scenario.hourly_velocity.size())));
    for (std::size_t k = 0; k < run.scenario.hourly_velocity.size(); ++k) {
      const double v = run.scenario.hourly_velocity[k];
      cols[0](static_cast<Index>(k)) = static_cast<double>(k);
      cols[1](static_cast<Index>(k)) = v;
      cols[2](static_cast<Index>(k)) = reynolds(v, run.scenario.params);
      cols[3](static_cast<Index>(k)) = is_laminar(v, run.scenario.params) ? 1.0 : 0.0;
    }
    write_file((dir / "demand.csv").string(), [&](std::ostream& os) { write_columns_csv(os, names, cols, prov); });
  }

  ordered_json rep;
  rep["rom_vs_fom"] = report_json(run.rom_vs_fom);
  if (run.rom_vs_oracle) rep["rom_vs_oracle"] = report_json(*run.rom_vs_oracle);
  rep["laminar_fraction"] = run.scenario.laminar_fraction;
  rep["turbulent_fraction"] = run.scenario.turbulent_fraction;
  rep["demand_attempts"] = run.scenario.attempts;
  rep["t_ref_s"] = run.problem.map.t_ref;
  rep["reduction"] = {{"iterations", run.reduction.iterations},
                      {"converged", run.reduction.converged},
                      {"restarts", run.reduction.restarts}};
  rep["regime_jump"] = {{"velocity_m_s", run.jump.velocity},
                        {"dispersion_laminar", run.jump.dispersion_laminar},
                        {"dispersion_turbulent", run.jump.dispersion_turbulent},
                        {"reaction_laminar", run.jump.reaction_laminar},
                        {"reaction_turbulent", run.jump.reaction_turbulent}};
  rep["profiles"] = profiles;
  {
    std::ofstream os(dir / "report.json");
    os << rep.dump(2) << '\n';
  }
  std::cout << "regime jump at v=" << run.jump.velocity << " m/s: D " << run.jump.dispersion_laminar << " -> "
            << run.jump.dispersion_turbulent << " m^2/s, decay " << run.jump.reaction_laminar << " -> "
            << run.jump.reaction_turbulent << " 1/s\n";
  std::cout << "ROM vs FOM: nmse " << run.rom_vs_fom.nmse_percent << " %, speedup " << run.rom_vs_fom.speedup << "\n";
  if (run.rom_vs_oracle) std::cout << "ROM vs oracle: nmse " << run.rom_vs_oracle->nmse_percent << " %\n";
  return rep;
}

ordered_json cmd_compare(const RunConfig& cfg, const std::string& ref_path, const std::string& test_path) {
  const Trajectory ref = read_file(ref_path, [](std::istream& s) { return read_trajectory_csv(s); });
  const Trajectory test = read_file(test_path, [](std::istream& s) { return read_trajectory_csv(s); });
  detail::require(ref.times == test.times, "time grids of the two files differ");
  const double e = nmse(test.outputs, ref.outputs);
  const double m = (test.outputs - ref.outputs).cwiseAbs().maxCoeff();
  std::cout << "nmse_percent=" << format_double(e) << " max_abs_error=" << format_double(m) << '\n';
  out_dir(cfg);
  return {{"reference", ref_path}, {"candidate", test_path}, {"nmse_percent", e}, {"max_abs_error", m}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bilinear model reduction of 1-D advection-diffusion-reaction transport"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "INI configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "override scenario.seed");
    sub->add_option("--out", common.out, "output directory (overrides output.dir)");
  };
  std::string fom_path, model_path, ref_path, test_path;

  CLI::App* build = app.add_subcommand("build", "assemble the scaled full-order model");
  add_common(build);
  CLI::App* reduce = app.add_subcommand("reduce", "H2-optimal reduction of a FOM file");
  add_common(reduce);
  reduce->add_option("fom", fom_path, "FOM file from build")->required()->check(CLI::ExistingFile);
  reduce->add_option("--n", common.order, "reduced order")->check(CLI::PositiveNumber);
  reduce->add_option("--tol", common.tol, "relative error-change tolerance")->check(CLI::PositiveNumber);
  CLI::App* simulate = app.add_subcommand("simulate", "integrate a FOM or ROM file on the configured scenario");
  add_common(simulate);
  simulate->add_option("model", model_path, "FOM or ROM file")->required()->check(CLI::ExistingFile);
  CLI::App* sweep = app.add_subcommand("sweep", "Peclet sweep of H2 and POD ROMs");
  add_common(sweep);
  sweep->add_option("--n", common.order, "reduced order")->check(CLI::PositiveNumber);
  sweep->add_option("--tol", common.tol, "relative error-change tolerance")->check(CLI::PositiveNumber);
  sweep->add_option("--jobs", common.jobs, "worker threads")->check(CLI::PositiveNumber);
  CLI::App* wq = app.add_subcommand("wq", "48 h water-quality case");
  add_common(wq);
  wq->add_option("--n", common.order, "reduced order")->check(CLI::PositiveNumber);
  wq->add_option("--tol", common.tol, "relative error-change tolerance")->check(CLI::PositiveNumber);
  CLI::App* cmp = app.add_subcommand("compare", "NMSE between two trajectory CSV files");
  add_common(cmp);
  cmp->add_option("reference", ref_path, "reference trajectory CSV")->required()->check(CLI::ExistingFile);
  cmp->add_option("candidate", test_path, "candidate trajectory CSV")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::vector<std::string> args(argv, argv + argc);
  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  const auto start = std::chrono::steady_clock::now();
  try {
    const RunConfig cfg = resolve(common);
    ordered_json result;
    if (sub == build) result = cmd_build(cfg);
    else if (sub == reduce) result = cmd_reduce(cfg, fom_path);
    else if (sub == simulate) result = cmd_simulate(cfg, model_path);
    else if (sub == sweep) result = cmd_sweep(cfg, common.jobs);
    else if (sub == wq) result = cmd_wq(cfg);
    else result = cmd_compare(cfg, ref_path, test_path);
    write_manifest(cfg, command, args, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(),
                   result);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
