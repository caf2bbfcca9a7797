#include "transit/lagrangian.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace transit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t design_key(const DesignVector& d) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint8_t b) {
    h ^= b;
    h *= 1099511628211ull;
  };
  for (auto b : d.dispatch) mix(b);
  mix(0xff);
  for (auto b : d.station_open) mix(b);
  return h;
}

void check(bool ok, const char* what) {
  if (!ok) throw std::logic_error(std::string("invariant violated: ") + what);
}

}  // namespace

Multipliers Multipliers::zeros(const SpaceTimeNetwork& net, const Scenario& sc) {
  Multipliers m;
  m.run.assign(net.runs.size(), 0.0);
  m.station.assign(sc.net.stations.size(), 0.0);
  return m;
}

LrSolver::LrSolver(const Scenario& sc, const SpaceTimeNetwork& net, LrConfig cfg)
    : sc_(sc), net_(net), cfg_(cfg), rmp_(net, sc), pricer_(net, sc) {}

DualValue LrSolver::dual_value(const Multipliers& m) {
  static const bool trace_timing = std::getenv("TRANSIT_TRACE_TIMING") != nullptr;
  using Clock = std::chrono::steady_clock;
  auto tick = Clock::now();
  auto lap = [&](const char* what) {
    if (!trace_timing) return;
    auto now = Clock::now();
    std::fprintf(stderr, "  [dual] %s %.1f ms\n", what,
                 std::chrono::duration<double, std::milli>(now - tick).count());
    tick = now;
  };

  DualValue dv;
  PricingOptions opts;
  opts.epsilon = cfg_.pricing_epsilon;
  opts.k_max = cfg_.k_max_paths;
  opts.parallel = cfg_.parallel_pricing;

  bool truncated = false;
  bool shortcut_pending = false;  // last pass ran against all-zero capacity duals
  for (int round = 0; round < 1000; ++round) {
    dv.flow = rmp_.solve(m.run, m.station);
    lap("rmp.solve");
    bool lambda_zero = true;
    for (const auto& [arc, lam] : dv.flow.binding)
      if (lam != 0.0) {
        lambda_zero = false;
        break;
      }
    // With zero capacity duals the modified arc costs cannot have changed, so
    // the columns just absorbed already certify optimality.
    if (shortcut_pending && lambda_zero) break;

    auto priced = pricer_.price_all(dv.flow, m.run, m.station, opts);
    lap("price_all");
    std::vector<PathColumn> fresh;
    truncated = false;
    for (auto& res : priced) {
      if (res.best) {
        if (cfg_.verify)
          check(res.best->duration <= pricer_.duration_limit(res.od) + 1e-9,
                "generated column violates the detour tolerance");
        fresh.push_back(std::move(*res.best));
      } else if (res.truncated) {
        truncated = true;
      }
    }
    if (fresh.empty()) break;
    rmp_.add_columns(std::move(fresh));
    lap("add_columns");
    shortcut_pending = lambda_zero && !truncated;
    if (round == 999) truncated = true;  // column generation failed to settle
  }
  dv.exact = !truncated;
  dv.flow_objective = dv.flow.objective;

  dv.design = solve_design_subproblem(m.run, m.station, sc_, net_);
  lap("sub2");
  // The proven side of the design bound keeps the dual value a valid lower
  // bound even when branch and bound stopped at its relative gap.
  dv.design_objective = dv.design.objective.value - dv.design.bound_gap;
  dv.value = dv.flow_objective + dv.design_objective;

  if (cfg_.verify) {
    check(dv.flow.residual <= 1e-7, "flow conservation residual above 1e-7");
    FleetCheck fc = fleet_feasible(dv.design.design, sc_, net_);
    check(fc.feasible, "design subproblem returned a fleet-infeasible design");
  }
  return dv;
}

Subgradients LrSolver::subgradients(const RmpSolution& flow, const DesignVector& design) const {
  Subgradients sg;
  sg.run.assign(net_.runs.size(), 0.0);
  sg.station.assign(sc_.net.stations.size(), 0.0);
  std::vector<double> load = arc_loads(net_, rmp_.pool(), flow.flows);
  for (std::size_t a = 0; a < net_.arcs.size(); ++a) {
    const StArc& arc = net_.arcs[a];
    if (load[a] == 0.0) continue;
    if (arc.kind == ArcKind::Travel)
      sg.run[arc.run] += load[a];
    else if (arc.kind == ArcKind::Os || arc.kind == ArcKind::Sd)
      sg.station[arc.station] += load[a];
  }
  for (std::size_t r = 0; r < sg.run.size(); ++r)
    if (design.dispatch[r]) sg.run[r] -= net_.run_capacity[r];
  for (std::size_t s = 0; s < sg.station.size(); ++s)
    if (design.station_open[s]) sg.station[s] -= net_.station_gate_capacity[s];
  for (double v : sg.run) sg.norm2 += v * v;
  for (double v : sg.station) sg.norm2 += v * v;
  return sg;
}

RepairResult LrSolver::repair_upper_bound(const DesignVector& design) {
  RepairResult out;

  // Flow problem restricted to dispatched runs and open stations, zero
  // multipliers, strict per-arc capacities. Penalty arcs keep it feasible.
  std::vector<std::uint8_t> allowed(net_.arcs.size(), 1);
  for (std::size_t a = 0; a < net_.arcs.size(); ++a) {
    const StArc& arc = net_.arcs[a];
    if (arc.kind == ArcKind::Travel)
      allowed[a] = design.dispatch[arc.run];
    else if (arc.kind == ArcKind::Os || arc.kind == ArcKind::Sd)
      allowed[a] = design.station_open[arc.station];
  }

  RmpSolver solver(net_, sc_);
  std::vector<PathColumn> seed;
  for (const PathColumn& col : rmp_.pool()) {
    if (col.is_penalty) continue;
    bool ok = true;
    for (std::int32_t r : col.runs)
      if (!design.dispatch[r]) {
        ok = false;
        break;
      }
    if (ok)
      for (std::int32_t s : col.stations)
        if (!design.station_open[s]) {
          ok = false;
          break;
        }
    if (ok) seed.push_back(col);
  }
  solver.add_columns(std::move(seed));

  Multipliers zero = Multipliers::zeros(net_, sc_);
  PricingOptions opts;
  opts.epsilon = cfg_.pricing_epsilon;
  opts.k_max = cfg_.k_max_paths;
  opts.parallel = cfg_.parallel_pricing;
  opts.arc_allowed = allowed;

  RmpSolution sol;
  bool shortcut_pending = false;
  for (int round = 0; round < 1000; ++round) {
    sol = solver.solve(zero.run, zero.station);
    bool lambda_zero = true;
    for (const auto& [arc, lam] : sol.binding)
      if (lam != 0.0) {
        lambda_zero = false;
        break;
      }
    if (shortcut_pending && lambda_zero) break;
    auto priced = pricer_.price_all(sol, zero.run, zero.station, opts);
    std::vector<PathColumn> fresh;
    bool truncated = false;
    for (auto& res : priced) {
      if (res.best)
        fresh.push_back(std::move(*res.best));
      else if (res.truncated)
        truncated = true;
    }
    if (fresh.empty()) break;
    solver.add_columns(std::move(fresh));
    shortcut_pending = lambda_zero && !truncated;
  }

  if (cfg_.verify) {
    check(sol.residual <= 1e-7, "repaired flow conservation residual above 1e-7");
    std::vector<double> load = arc_loads(net_, solver.pool(), sol.flows);
    for (std::size_t a = 0; a < net_.arcs.size(); ++a)
      check(load[a] <= net_.arcs[a].capacity + 1e-7, "repaired flow exceeds an arc capacity");
  }

  out.objective = sol.objective;
  out.penalty_flow = sol.penalty_flow;
  out.flows = to_flow_vector(solver.pool(), sol.flows);

  // Fold the repaired paths back into the master pool: they are feasible
  // columns of the unrestricted problem and warm-start later iterations.
  std::vector<PathColumn> keep;
  for (const PathColumn& col : solver.pool())
    if (!col.is_penalty) keep.push_back(col);
  rmp_.add_columns(std::move(keep));

  return out;
}

LrState LrSolver::run(const std::function<void(const LrIterationInfo&)>& observer) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  auto ms_since_start = [&] {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  };

  LrState state;
  state.multipliers = Multipliers::zeros(net_, sc_);
  Multipliers& m = state.multipliers;

  // Repairs an upper bound from a design; cached designs were already probed
  // (and could not have beaten the incumbent of their time).
  auto probe_design = [&](const DesignVector& design) {
    std::uint64_t key = design_key(design);
    if (repair_cache_.count(key)) return;
    RepairResult rep = repair_upper_bound(design);
    repair_cache_.emplace(key, std::make_pair(rep.objective, rep.penalty_flow));
    if (rep.objective < state.best_ub) {
      state.best_ub = rep.objective;
      state.incumbent_design = design;
      state.incumbent_flows = std::move(rep.flows);
      state.incumbent_penalty_flow = rep.penalty_flow;
    }
  };

  DualValue cur = dual_value(m);
  double gamma = 0.0;
  double alpha = cfg_.alpha;
  int lb_stall = 0;

  for (int iter = 1; iter <= cfg_.max_iter; ++iter) {
    state.iterations = iter;
    double lb_t = cur.value;
    bool improved = cur.exact && (state.best_lb == -kInf ||
                                  lb_t > state.best_lb +
                                             1e-12 * std::max(1.0, std::abs(state.best_lb)));
    if (improved) {
      state.best_lb = std::max(state.best_lb, lb_t);
      lb_stall = 0;
    } else if (++lb_stall >= 10) {
      alpha = std::max(alpha / 2.0, 1e-5);  // damp the step scale when the dual stalls
      lb_stall = 0;
    }

    probe_design(cur.design.design);

    if (cfg_.verify) {
      for (double v : m.run) check(v >= 0.0, "run multiplier went negative");
      for (double v : m.station) check(v >= 0.0, "station multiplier went negative");
      if (cur.exact)
        check(lb_t <= state.best_ub + 1e-6 * std::max(1.0, std::abs(state.best_ub)),
              "weak duality: dual value exceeds the best upper bound");
    }

    double gap = std::abs(state.best_ub - state.best_lb) /
                 std::max(std::abs(state.best_ub), 1e-12);
    state.lb_trace.push_back(lb_t);
    state.ub_trace.push_back(state.best_ub);
    state.trace.push_back({iter, lb_t, state.best_ub, gap, gamma, ms_since_start()});

    Subgradients sg = subgradients(cur.flow, cur.design.design);

    if (observer) {
      LrIterationInfo info;
      info.iteration = iter;
      info.lb = lb_t;
      info.best_lb = state.best_lb;
      info.best_ub = state.best_ub;
      info.gap = gap;
      info.step = gamma;
      info.multipliers = &m;
      info.dual = &cur;
      info.subgradients = &sg;
      info.incumbent_design = &state.incumbent_design;
      info.incumbent_penalty_flow = state.incumbent_penalty_flow;
      observer(info);
    }

    if (gap < cfg_.gap_tol) {
      state.converged = true;
      break;
    }
    if (iter == cfg_.max_iter) break;

    if (sg.norm2 <= 0.0) break;  // relaxed constraints hold exactly; bounds cannot move
    gamma = alpha * (state.best_ub - lb_t) / sg.norm2;
    if (!(gamma > 0.0)) break;

    // Halving line search: keep the trial with the largest dual value. Every
    // trial's design is also probed for an upper bound (repairs are cached).
    Multipliers best_m;
    DualValue best_dv;
    bool have = false;
    double g = gamma;
    for (int k = 0; k <= cfg_.line_search_max_k; ++k, g /= 2.0) {
      Multipliers trial = m;
      for (std::size_t r = 0; r < trial.run.size(); ++r)
        trial.run[r] = std::max(0.0, trial.run[r] + g * sg.run[r]);
      for (std::size_t s = 0; s < trial.station.size(); ++s)
        trial.station[s] = std::max(0.0, trial.station[s] + g * sg.station[s]);
      if (have && trial.run == best_m.run && trial.station == best_m.station) continue;
      DualValue dv = dual_value(trial);
      probe_design(dv.design.design);
      if (!have || dv.value > best_dv.value) {
        have = true;
        best_m = std::move(trial);
        best_dv = std::move(dv);
        gamma = g;
      }
    }
    if (!have) break;
    m = std::move(best_m);
    cur = std::move(best_dv);
  }

  state.infeasible = state.incumbent_penalty_flow > 1e-7;
  return state;
}

// ---------------------------------------------------------------------------
// CSV plumbing.

void write_bounds_csv(const LrState& state, std::ostream& out) {
  out << "iteration,lb,ub,gap,step,wallclock_ms\n";
  char buf[256];
  for (const auto& row : state.trace) {
    std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g,%.12g,%.12g,%.3f\n", row.iteration, row.lb,
                  row.ub, row.gap, row.step, row.wallclock_ms);
    out << buf;
  }
}

void write_timetable_csv(const DesignVector& design, const Scenario& sc,
                         const SpaceTimeNetwork& net, std::ostream& out) {
  out << "line,dispatch_tick\n";
  for (std::size_t r = 0; r < net.runs.size(); ++r)
    if (design.dispatch[r])
      out << sc.net.lines[net.runs[r].line].id << "," << net.runs[r].tick << "\n";
}

void write_stations_csv(const DesignVector& design, const Scenario& sc, std::ostream& out) {
  out << "station,open\n";
  for (std::size_t s = 0; s < sc.net.stations.size(); ++s)
    out << sc.net.stations[s].id << "," << int(design.station_open[s]) << "\n";
}

void write_fleet_csv(const DesignVector& design, const Scenario& sc, std::ostream& out) {
  out << "terminal,fleet\n";
  for (std::size_t s = 0; s < sc.net.stations.size(); ++s)
    if (sc.net.stations[s].terminal) out << sc.net.stations[s].id << "," << design.fleet[s] << "\n";
}

DesignVector read_timetable_csv(std::istream& in, const Scenario& sc,
                                const SpaceTimeNetwork& net) {
  DesignVector d = DesignVector::all_closed(sc, net);
  for (auto& y : d.station_open) y = 1;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first && line.rfind("line,", 0) == 0) {
      first = false;
      continue;
    }
    first = false;
    auto comma = line.find(',');
    if (comma == std::string::npos) throw ScenarioError("timetable row missing a comma: " + line);
    std::string id = line.substr(0, comma);
    int tick = 0;
    try {
      tick = std::stoi(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw ScenarioError("timetable row has a bad tick: " + line);
    }
    int l = -1;
    for (std::size_t i = 0; i < sc.net.lines.size(); ++i)
      if (sc.net.lines[i].id == id) l = static_cast<int>(i);
    if (l < 0) throw ScenarioError("timetable references unknown line '" + id + "'");
    int r = net.run_index(l, tick);
    if (r < 0)
      throw ScenarioError("timetable tick " + std::to_string(tick) +
                          " is not on the dispatch grid for line '" + id + "'");
    d.dispatch[r] = 1;
    d.line_open[l] = 1;
  }
  d.fleet = required_fleet(d.dispatch, sc, net);
  return d;
}

}  // namespace transit
