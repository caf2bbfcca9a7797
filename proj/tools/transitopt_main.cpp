// Batch optimizer for pandemic-aware transit reopening and timetabling.
//
// Subcommands: validate, expand, solve, evaluate, sweep, gen-toy.
// Exit codes: 0 success, 2 no penalty-free solution found, 1 error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "transit/epidemic.hpp"
#include "transit/lagrangian.hpp"
#include "transit/model.hpp"
#include "transit/sweep.hpp"
#include "transit/timexpand.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace transit;

namespace {

struct CommonOpts {
  std::string scenario_path;
  std::string out_dir = ".";
  int max_iter = 1000;
  double gap_tol = 1e-3;
  std::uint64_t seed = 0;
  int threads = 0;
  int dispatch_grid = 0;  // 0 = use the scenario's value
};

void apply_threads(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

Scenario load_with_overrides(const CommonOpts& o) {
  Scenario sc = load_scenario(o.scenario_path);
  if (o.dispatch_grid > 0) sc.params.dispatch_step = o.dispatch_grid;
  return sc;
}

LrConfig make_config(const CommonOpts& o) {
  LrConfig cfg;
  cfg.max_iter = o.max_iter;
  cfg.gap_tol = o.gap_tol;
  return cfg;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& fn) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  fn(out);
}

void write_solution_files(const fs::path& dir, const LrState& state, const Scenario& sc,
                          const SpaceTimeNetwork& net) {
  fs::create_directories(dir);
  write_file(dir / "bounds.csv", [&](std::ostream& o) { write_bounds_csv(state, o); });
  write_file(dir / "timetable.csv",
             [&](std::ostream& o) { write_timetable_csv(state.incumbent_design, sc, net, o); });
  write_file(dir / "stations.csv",
             [&](std::ostream& o) { write_stations_csv(state.incumbent_design, sc, o); });
  write_file(dir / "fleet.csv",
             [&](std::ostream& o) { write_fleet_csv(state.incumbent_design, sc, o); });
  InfectionReport report = evaluate(net, state.incumbent_flows, sc);
  write_file(dir / "infections.csv",
             [&](std::ostream& o) { write_infections_csv(report, sc, o); });
  write_file(dir / "arc_exposure.csv",
             [&](std::ostream& o) { write_arc_exposure_csv(report, net, sc, o); });
}

int cmd_validate(const CommonOpts& o) {
  Scenario sc = load_with_overrides(o);
  std::cout << "scenario ok: " << sc.net.stations.size() << " stations, " << sc.net.lines.size()
            << " lines, " << sc.demand.size() << " demand rows, total demand "
            << sc.total_demand() << "\n";
  return 0;
}

int cmd_expand(const CommonOpts& o) {
  Scenario sc = load_with_overrides(o);
  SpaceTimeNetwork net = expand(sc, make_dispatch_grid(sc));
  fs::create_directories(o.out_dir);
  write_file(fs::path(o.out_dir) / "arcs.csv",
             [&](std::ostream& out) { dump_arcs_csv(net, sc, out); });

  auto c = [&](ArcKind k) { return net.count(k); };
  long network = c(ArcKind::Travel) + c(ArcKind::Wait) + c(ArcKind::Transfer) + c(ArcKind::Os) +
                 c(ArcKind::Sd);
  std::cerr << network << " arcs (travel=" << c(ArcKind::Travel) << ", wait=" << c(ArcKind::Wait)
            << ", transfer=" << c(ArcKind::Transfer) << ", os=" << c(ArcKind::Os)
            << ", sd=" << c(ArcKind::Sd) << "); plus " << c(ArcKind::Od) << " penalty and "
            << c(ArcKind::Dd) << " sink arcs\n";
  std::cerr << "binary design variables: dispatch=" << net.runs.size()
            << " line=" << sc.net.lines.size() << " station=" << sc.net.stations.size()
            << " total="
            << net.runs.size() + sc.net.lines.size() + sc.net.stations.size() << "\n";
  if (!net.truncated_runs.empty())
    std::cerr << net.truncated_runs.size() << " candidate runs truncated (exceed the horizon)\n";
  return 0;
}

int cmd_solve(const CommonOpts& o) {
  Scenario sc = load_with_overrides(o);
  SpaceTimeNetwork net = expand(sc, make_dispatch_grid(sc));
  LrSolver solver(sc, net, make_config(o));
  LrState state = solver.run();
  write_solution_files(o.out_dir, state, sc, net);
  std::cout << "iterations=" << state.iterations << " lb=" << state.best_lb
            << " ub=" << state.best_ub << " gap="
            << (state.trace.empty() ? 0.0 : state.trace.back().gap)
            << (state.infeasible ? " (no penalty-free solution found)" : "") << "\n";
  return state.infeasible ? 2 : 0;
}

int cmd_evaluate(const CommonOpts& o, const std::string& timetable_path) {
  Scenario sc = load_with_overrides(o);
  SpaceTimeNetwork net = expand(sc, make_dispatch_grid(sc));
  std::ifstream in(timetable_path);
  if (!in) throw std::runtime_error("cannot read timetable '" + timetable_path + "'");
  DesignVector design = read_timetable_csv(in, sc, net);

  FleetCheck fc = fleet_feasible(design, sc, net);
  if (!fc.feasible)
    std::cerr << "warning: timetable is fleet-infeasible"
              << (fc.station >= 0 ? " at station " + sc.net.stations[fc.station].id + " tick " +
                                        std::to_string(fc.tick)
                                  : " (fleet total exceeded)")
              << "\n";
  double budget = budget_of(design, sc, net);
  if (budget > sc.params.budget)
    std::cerr << "warning: timetable exceeds the budget (" << budget << " > " << sc.params.budget
              << ")\n";

  LrConfig cfg = make_config(o);
  LrSolver solver(sc, net, cfg);
  RepairResult rep = solver.repair_upper_bound(design);

  fs::create_directories(o.out_dir);
  InfectionReport report = evaluate(net, rep.flows, sc);
  write_file(fs::path(o.out_dir) / "infections.csv",
             [&](std::ostream& out) { write_infections_csv(report, sc, out); });
  write_file(fs::path(o.out_dir) / "arc_exposure.csv",
             [&](std::ostream& out) { write_arc_exposure_csv(report, net, sc, out); });
  std::cout << "objective=" << rep.objective << " new_cases=" << report.total_new_cases
            << " unserved=" << rep.penalty_flow << " budget_used=" << budget << "\n";
  return rep.penalty_flow > 1e-7 ? 2 : 0;
}

int cmd_sweep(const CommonOpts& o, const std::string& axis, const std::string& points_csv) {
  SweepSpec spec;
  if (axis == "budget")
    spec.axis = SweepSpec::Axis::BudgetFraction;
  else if (axis == "capacity")
    spec.axis = SweepSpec::Axis::VehicleCapacity;
  else if (axis == "lines")
    spec.axis = SweepSpec::Axis::LinesOpened;
  else
    throw std::runtime_error("unknown sweep axis '" + axis + "'");
  std::stringstream ss(points_csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) spec.points.push_back(std::stod(tok));
  spec.base = load_with_overrides(o);
  spec.seed = o.seed;

  auto rows = run_sweep(spec, make_config(o));
  fs::create_directories(o.out_dir);
  write_file(fs::path(o.out_dir) / "sweep.csv",
             [&](std::ostream& out) { write_sweep_csv(rows, spec.base, out); });
  for (const auto& row : rows)
    std::cout << "point=" << row.point
              << (row.infeasible ? " infeasible" : " new_cases=" + std::to_string(row.new_cases))
              << "\n";
  return 0;
}

int cmd_gen_toy(int rows, int cols, double intensity, std::uint64_t seed,
                const std::string& out_path) {
  Scenario sc = generate_toy_grid(rows, cols, intensity, seed);
  save_scenario(sc, out_path);
  std::cout << "wrote " << out_path << ": " << sc.net.stations.size() << " stations, "
            << sc.net.lines.size() << " lines, " << sc.demand.size() << " demand rows\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pandemic-aware transit reopening and timetable optimizer"};
  app.require_subcommand(1);

  CommonOpts o;
  std::string timetable_path, axis, points_csv, toy_out = "scenario.json";
  int rows = 3, cols = 3;
  double intensity = 5.0 / 6.0;

  auto add_common = [&](CLI::App* cmd, bool needs_scenario = true) {
    if (needs_scenario)
      cmd->add_option("--scenario", o.scenario_path, "scenario file")->required();
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--max-iter", o.max_iter, "iteration limit");
    cmd->add_option("--gap-tol", o.gap_tol, "relative gap tolerance");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--threads", o.threads, "worker threads (0 = library default)");
    cmd->add_option("--dispatch-grid", o.dispatch_grid,
                    "candidate dispatch spacing in minutes (overrides the scenario)");
  };

  auto* validate = app.add_subcommand("validate", "check a scenario file");
  add_common(validate);
  auto* expand_cmd = app.add_subcommand("expand", "build and dump the space-time network");
  add_common(expand_cmd);
  auto* solve = app.add_subcommand("solve", "optimize the reopening plan and timetable");
  add_common(solve);
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score a fixed timetable");
  add_common(evaluate_cmd);
  evaluate_cmd->add_option("--timetable", timetable_path, "timetable csv (line,dispatch_tick)")
      ->required();
  auto* sweep_cmd = app.add_subcommand("sweep", "sensitivity sweep");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--axis", axis, "budget | capacity | lines")->required();
  sweep_cmd->add_option("--points", points_csv, "comma-separated sweep points")->required();
  auto* gen = app.add_subcommand("gen-toy", "generate the grid benchmark scenario");
  add_common(gen, false);
  gen->add_option("--rows", rows, "grid rows");
  gen->add_option("--cols", cols, "grid cols");
  gen->add_option("--intensity", intensity, "demand per origin-destination pair per minute");
  gen->add_option("--toy-out", toy_out, "output scenario path");

  CLI11_PARSE(app, argc, argv);
  apply_threads(o.threads);

  try {
    if (validate->parsed()) return cmd_validate(o);
    if (expand_cmd->parsed()) return cmd_expand(o);
    if (solve->parsed()) return cmd_solve(o);
    if (evaluate_cmd->parsed()) return cmd_evaluate(o, timetable_path);
    if (sweep_cmd->parsed()) return cmd_sweep(o, axis, points_csv);
    if (gen->parsed()) return cmd_gen_toy(rows, cols, intensity, o.seed, toy_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
