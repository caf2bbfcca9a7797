#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "transit/epidemic.hpp"

namespace oracles {

using namespace transit;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Tableau simplex.

TableauLp::Solution TableauLp::solve() const {
  const int m = static_cast<int>(rows.size());
  const int n = static_cast<int>(cost.size());
  int n_slack = 0;
  for (auto s : sense)
    if (s == Sense::LessEqual) ++n_slack;
  const int total = n + n_slack + m;  // structural, slack, artificial

  // tableau[r] = row coefficients | rhs; last row is the phase objective.
  std::vector<std::vector<double>> t(m + 1, std::vector<double>(total + 1, 0.0));
  std::vector<int> basis(m, -1);
  int slack_at = n;
  for (int r = 0; r < m; ++r) {
    double sign = rhs[r] < 0 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) t[r][j] = sign * rows[r][j];
    t[r][total] = sign * rhs[r];
    if (sense[r] == Sense::LessEqual) {
      t[r][slack_at] = sign;
      if (sign > 0) basis[r] = slack_at;
      ++slack_at;
    }
    if (basis[r] < 0) {
      t[r][n + n_slack + r] = 1.0;
      basis[r] = n + n_slack + r;
    }
  }

  auto pivot = [&](int pr, int pc) {
    double p = t[pr][pc];
    for (double& v : t[pr]) v /= p;
    for (int r = 0; r <= m; ++r) {
      if (r == pr) continue;
      double f = t[r][pc];
      if (f == 0.0) continue;
      for (int j = 0; j <= total; ++j) t[r][j] -= f * t[pr][j];
    }
    if (pr < m) basis[pr] = pc;
  };

  auto run_phase = [&](const std::vector<double>& c, int cols) {
    // objective row holds z_j - c_j
    for (int j = 0; j <= total; ++j) t[m][j] = 0.0;
    for (int j = 0; j < static_cast<int>(c.size()) && j < total; ++j) t[m][j] = -c[j];
    for (int r = 0; r < m; ++r) {
      double cb = basis[r] < static_cast<int>(c.size()) ? c[basis[r]] : 0.0;
      if (cb == 0.0) continue;
      for (int j = 0; j <= total; ++j) t[m][j] += cb * t[r][j];
    }
    for (long guard = 0; guard < 100000; ++guard) {
      int pc = -1;
      double best = 1e-9;
      for (int j = 0; j < cols; ++j)
        if (t[m][j] > best) {
          best = t[m][j];
          pc = j;
        }
      if (pc < 0) return true;
      int pr = -1;
      double ratio = 0.0;
      for (int r = 0; r < m; ++r)
        if (t[r][pc] > 1e-9) {
          double rr = t[r][total] / t[r][pc];
          if (pr < 0 || rr < ratio - 1e-12 || (rr < ratio + 1e-12 && basis[r] < basis[pr])) {
            ratio = rr;
            pr = r;
          }
        }
      if (pr < 0) throw std::runtime_error("tableau simplex: unbounded");
      pivot(pr, pc);
    }
    throw std::runtime_error("tableau simplex: cycling");
  };

  // Phase 1: minimize the artificial sum.
  std::vector<double> c1(total, 0.0);
  for (int j = n + n_slack; j < total; ++j) c1[j] = 1.0;
  run_phase(c1, total);
  double art = 0.0;
  for (int r = 0; r < m; ++r)
    if (basis[r] >= n + n_slack) art += t[r][total];
  Solution sol;
  if (art > 1e-7) return sol;  // infeasible

  // Drive remaining artificials out of the basis where possible.
  for (int r = 0; r < m; ++r) {
    if (basis[r] < n + n_slack) continue;
    for (int j = 0; j < n + n_slack; ++j)
      if (std::abs(t[r][j]) > 1e-9) {
        pivot(r, j);
        break;
      }
  }

  // Phase 2 over structural+slack columns only.
  std::vector<double> c2(total, 0.0);
  for (int j = 0; j < n; ++j) c2[j] = cost[j];
  run_phase(c2, n + n_slack);

  sol.feasible = true;
  sol.x.assign(n, 0.0);
  for (int r = 0; r < m; ++r)
    if (basis[r] < n) sol.x[basis[r]] = t[r][total];
  sol.objective = 0.0;
  for (int j = 0; j < n; ++j) sol.objective += cost[j] * sol.x[j];
  // Duals read off the artificial columns (z_j - c_j with c_j = 0), adjusted
  // for rows that were sign-flipped.
  sol.duals.assign(m, 0.0);
  for (int r = 0; r < m; ++r) {
    double sign = rhs[r] < 0 ? -1.0 : 1.0;
    sol.duals[r] = sign * t[m][n + n_slack + r];
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Dense expansion oracle.

namespace {

std::string plat_name(const Scenario& sc, int station, int platform, int tick) {
  return "plt:" + sc.net.stations[station].id + "/" + sc.net.stations[station].platforms[platform] +
         "@" + std::to_string(tick);
}

}  // namespace

std::vector<ArcDescriptor> dense_expand_oracle(const Scenario& sc, const DispatchGrid& grid) {
  const auto& pn = sc.net;
  const auto& p = sc.params;
  const double inf = std::numeric_limits<double>::infinity();

  struct Stop {
    int station, platform, tick;
  };
  // Kept runs, dense stop times.
  std::vector<std::vector<Stop>> run_stops;
  std::vector<std::pair<int, int>> run_keys;
  for (std::size_t l = 0; l < pn.lines.size(); ++l) {
    std::set<int> ticks(grid[l].begin(), grid[l].end());
    for (int t0 : ticks) {
      if (t0 + pn.lines[l].run_duration > p.horizon) continue;
      std::vector<Stop> stops;
      int t = t0;
      for (std::size_t i = 0; i < pn.lines[l].stops.size(); ++i) {
        stops.push_back({pn.lines[l].stops[i].station, pn.lines[l].stops[i].platform, t});
        if (i + 1 < pn.lines[l].stops.size()) t += pn.lines[l].segment_times[i];
      }
      run_stops.push_back(stops);
      run_keys.push_back({static_cast<int>(l), t0});
    }
  }

  // Dense events / arrivals per (station, platform).
  std::map<std::pair<int, int>, std::set<int>> events, arrivals;
  for (const auto& stops : run_stops)
    for (std::size_t i = 0; i < stops.size(); ++i) {
      events[{stops[i].station, stops[i].platform}].insert(stops[i].tick);
      if (i > 0) arrivals[{stops[i].station, stops[i].platform}].insert(stops[i].tick);
    }

  std::vector<ArcDescriptor> out;
  auto add = [&](std::string tail, std::string head, const char* kind, int dur, double cap,
                 std::string run_key = "") {
    ArcDescriptor d;
    d.tail = std::move(tail);
    d.head = std::move(head);
    d.kind = kind;
    d.duration = dur;
    d.capacity = cap;
    d.run_key = std::move(run_key);
    out.push_back(std::move(d));
  };

  // Travel arcs.
  for (std::size_t r = 0; r < run_stops.size(); ++r) {
    const auto& stops = run_stops[r];
    for (std::size_t i = 0; i + 1 < stops.size(); ++i)
      add(plat_name(sc, stops[i].station, stops[i].platform, stops[i].tick),
          plat_name(sc, stops[i + 1].station, stops[i + 1].platform, stops[i + 1].tick), "travel",
          stops[i + 1].tick - stops[i].tick, p.vehicle_capacity,
          pn.lines[run_keys[r].first].id + "@" + std::to_string(run_keys[r].second));
  }

  // Dense wait arcs t -> t+1, then contract chains through pruned ticks: a
  // platform tick survives only if it is an event tick.
  for (const auto& [key, ev] : events) {
    std::vector<int> kept(ev.begin(), ev.end());
    for (std::size_t i = 0; i + 1 < kept.size(); ++i)
      add(plat_name(sc, key.first, key.second, kept[i]),
          plat_name(sc, key.first, key.second, kept[i + 1]), "wait", kept[i + 1] - kept[i],
          p.platform_capacity);
  }

  // Transfer arcs from arrivals, dense over ticks, pruned to surviving nodes.
  for (std::size_t s = 0; s < pn.stations.size(); ++s) {
    int np = static_cast<int>(pn.stations[s].platforms.size());
    if (np < 2) continue;
    for (int p1 = 0; p1 < np; ++p1)
      for (int p2 = 0; p2 < np; ++p2) {
        if (p1 == p2) continue;
        auto a1 = arrivals.find({static_cast<int>(s), p1});
        if (a1 == arrivals.end()) continue;
        for (int tick : a1->second) {
          auto e2 = events.find({static_cast<int>(s), p2});
          if (e2 != events.end() && e2->second.count(tick))
            add(plat_name(sc, static_cast<int>(s), p1, tick),
                plat_name(sc, static_cast<int>(s), p2, tick), "transfer", 0, p.platform_capacity);
        }
      }
  }

  // Walking access: dense over every entry tick in the shifted window, pruned
  // to event ticks.
  std::set<std::pair<int, int>> sources;
  for (const auto& od : sc.demand) sources.insert({od.origin, od.depart_tick});
  for (const auto& [o, t0] : sources)
    for (const auto& w : pn.walk_os) {
      if (w.from != o) continue;
      for (int plat = 0; plat < static_cast<int>(pn.stations[w.to].platforms.size()); ++plat) {
        auto ev = events.find({w.to, plat});
        if (ev == events.end()) continue;
        for (int te = t0; te <= p.horizon; ++te) {
          int shift = te - t0 - w.minutes;
          if (shift <= p.shift_min || shift >= p.shift_max) continue;
          if (!ev->second.count(te)) continue;
          add("ori:" + pn.origins[o] + "@" + std::to_string(t0),
              plat_name(sc, w.to, plat, te), "os", te - t0, inf);
        }
      }
    }

  // Walking egress from every surviving platform tick.
  for (const auto& w : pn.walk_sd)
    for (int plat = 0; plat < static_cast<int>(pn.stations[w.from].platforms.size()); ++plat) {
      auto ev = events.find({w.from, plat});
      if (ev == events.end()) continue;
      for (int tick : ev->second) {
        if (tick + w.minutes > p.horizon) continue;
        add(plat_name(sc, w.from, plat, tick),
            "dst:" + pn.destinations[w.to] + "@" + std::to_string(tick + w.minutes), "sd",
            w.minutes, inf);
      }
    }

  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ArcDescriptor> describe_arcs(const SpaceTimeNetwork& net, const Scenario& sc) {
  std::vector<ArcDescriptor> out;
  auto name = [&](int id) {
    const StNode& n = net.nodes[id];
    switch (n.kind) {
      case NodeKind::Origin:
        return "ori:" + sc.net.origins[n.loc] + "@" + std::to_string(n.tick);
      case NodeKind::Platform:
        return plat_name(sc, n.loc, n.platform, n.tick);
      case NodeKind::Destination:
        return "dst:" + sc.net.destinations[n.loc] + "@" + std::to_string(n.tick);
      case NodeKind::Sink:
        return "sink:" + sc.net.destinations[n.loc];
    }
    return std::string("?");
  };
  for (const auto& a : net.arcs) {
    if (a.kind == ArcKind::Dd || a.kind == ArcKind::Od) continue;
    ArcDescriptor d;
    d.tail = name(a.tail);
    d.head = name(a.head);
    d.kind = to_string(a.kind);
    d.duration = a.duration;
    d.capacity = a.capacity;
    if (a.run >= 0)
      d.run_key = sc.net.lines[net.runs[a.run].line].id + "@" + std::to_string(net.runs[a.run].tick);
    out.push_back(std::move(d));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Path enumeration.

std::vector<std::vector<std::int32_t>> enumerate_paths(const SpaceTimeNetwork& net,
                                                       const Scenario& sc, int od,
                                                       const DesignVector* design,
                                                       std::size_t cap) {
  (void)sc;
  std::vector<std::vector<std::int32_t>> paths;
  std::vector<std::int32_t> stack_arcs;
  int source = net.od_source[od];
  int sink = net.od_sink[od];

  auto allowed = [&](const StArc& a) {
    if (a.kind == ArcKind::Od) return false;
    if (!design) return true;
    if (a.kind == ArcKind::Travel) return design->dispatch[a.run] != 0;
    if (a.kind == ArcKind::Os || a.kind == ArcKind::Sd)
      return design->station_open[a.station] != 0;
    return true;
  };

  std::vector<char> on_path(net.nodes.size(), 0);
  auto dfs = [&](auto&& self, int node) -> void {
    if (node == sink) {
      paths.push_back(stack_arcs);
      if (paths.size() > cap) throw std::runtime_error("path enumeration cap exceeded");
      return;
    }
    on_path[node] = 1;
    for (int e = net.out_begin[node]; e < net.out_begin[node + 1]; ++e) {
      std::int32_t a = net.out_arcs[e];
      const StArc& arc = net.arcs[a];
      if (!allowed(arc) || on_path[arc.head]) continue;
      stack_arcs.push_back(a);
      self(self, arc.head);
      stack_arcs.pop_back();
    }
    on_path[node] = 0;
  };
  dfs(dfs, source);
  return paths;
}

double physical_reference_oracle(const Scenario& sc, const SpaceTimeNetwork& net, int origin,
                                 int destination) {
  const auto& pn = sc.net;
  std::vector<char> line_live(pn.lines.size(), 0);
  for (const auto& r : net.runs) line_live[r.line] = 1;
  const std::size_t n = pn.stations.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, kInf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
  for (std::size_t l = 0; l < pn.lines.size(); ++l) {
    if (!line_live[l]) continue;
    for (std::size_t i = 0; i + 1 < pn.lines[l].stops.size(); ++i) {
      auto a = static_cast<std::size_t>(pn.lines[l].stops[i].station);
      auto b = static_cast<std::size_t>(pn.lines[l].stops[i + 1].station);
      d[a][b] = std::min(d[a][b], static_cast<double>(pn.lines[l].segment_times[i]));
    }
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];

  double best = kInf;
  for (const auto& wo : pn.walk_os) {
    if (wo.from != origin) continue;
    for (const auto& wd : pn.walk_sd) {
      if (wd.to != destination) continue;
      double v = wo.minutes + d[wo.to][wd.from] + wd.minutes;
      best = std::min(best, v);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Fleet simulation.

bool fleet_simulation_oracle(const DesignVector& design, const Scenario& sc,
                             const SpaceTimeNetwork& net) {
  long total = 0;
  for (int v : design.fleet) total += v;
  if (total > sc.params.fleet_total) return false;
  for (std::size_t s = 0; s < sc.net.stations.size(); ++s) {
    for (int t = 0; t <= sc.params.horizon; ++t) {
      long count = design.fleet[s];
      for (std::size_t r = 0; r < net.runs.size(); ++r) {
        if (!design.dispatch[r]) continue;
        const Run& run = net.runs[r];
        const Line& line = sc.net.lines[run.line];
        if (line.stops.front().station == static_cast<int>(s) && run.tick <= t) --count;
        if (line.stops.back().station == static_cast<int>(s) &&
            run.tick + line.run_duration <= t)
          ++count;
      }
      if (count < 0) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Exhaustive optimum.

double exact_flow_cost(const Scenario& sc, const SpaceTimeNetwork& net,
                       const DesignVector& design) {
  TableauLp lp;
  std::vector<double> path_cost;
  std::vector<std::vector<std::int32_t>> path_arcs;
  std::vector<int> path_od;

  const double beta = sc.params.transmission_rate;
  const double qs = sc.params.susceptible_ratio;

  for (std::size_t w = 0; w < sc.demand.size(); ++w) {
    double limit = physical_reference_oracle(sc, net, sc.demand[w].origin,
                                             sc.demand[w].destination);
    limit = limit == kInf ? kInf : limit + sc.demand[w].tolerance;
    auto all = enumerate_paths(net, sc, static_cast<int>(w), &design);
    for (auto& arcs : all) {
      double dur = 0.0, cost = 0.0;
      for (std::int32_t a : arcs) {
        dur += net.arcs[a].duration;
        if (net.arcs[a].kind == ArcKind::Travel || net.arcs[a].kind == ArcKind::Wait)
          cost += beta * qs * sc.demand[w].infection_rate * net.arcs[a].duration;
      }
      if (dur > limit + 1e-9) continue;
      path_cost.push_back(cost);
      path_arcs.push_back(std::move(arcs));
      path_od.push_back(static_cast<int>(w));
    }
    // penalty path
    path_cost.push_back(sc.params.penalty);
    path_arcs.push_back({});
    path_od.push_back(static_cast<int>(w));
  }

  const int n = static_cast<int>(path_cost.size());
  lp.cost = path_cost;

  // conservation rows
  for (std::size_t w = 0; w < sc.demand.size(); ++w) {
    std::vector<double> row(n, 0.0);
    for (int j = 0; j < n; ++j)
      if (path_od[j] == static_cast<int>(w)) row[j] = 1.0;
    lp.rows.push_back(std::move(row));
    lp.rhs.push_back(sc.demand[w].demand);
    lp.sense.push_back(TableauLp::Sense::Equal);
  }
  // capacity rows for every finitely capacitated arc used by some path
  std::set<std::int32_t> cap_arcs;
  for (const auto& arcs : path_arcs)
    for (std::int32_t a : arcs)
      if (SpaceTimeNetwork::capacitated(net.arcs[a].kind)) cap_arcs.insert(a);
  for (std::int32_t a : cap_arcs) {
    std::vector<double> row(n, 0.0);
    for (int j = 0; j < n; ++j)
      for (std::int32_t b : path_arcs[j])
        if (b == a) row[j] = 1.0;
    lp.rows.push_back(std::move(row));
    lp.rhs.push_back(net.arcs[a].capacity);
    lp.sense.push_back(TableauLp::Sense::LessEqual);
  }

  auto sol = lp.solve();
  if (!sol.feasible) return kInf;
  return sol.objective;
}

ExactResult exhaustive_optimum(const Scenario& sc, const SpaceTimeNetwork& net) {
  const std::size_t n_runs = net.runs.size();
  std::vector<std::size_t> closed_stations;
  for (std::size_t s = 0; s < sc.net.stations.size(); ++s)
    if (!sc.net.stations[s].open_initial) closed_stations.push_back(s);
  const std::size_t n_bits = n_runs + closed_stations.size();
  if (n_bits > 20) throw std::runtime_error("exhaustive_optimum: too many binaries");

  ExactResult best;
  best.objective = kInf;
  for (std::uint64_t mask = 0; mask < (1ull << n_bits); ++mask) {
    DesignVector d = DesignVector::all_closed(sc, net);
    for (std::size_t r = 0; r < n_runs; ++r)
      if (mask & (1ull << r)) {
        d.dispatch[r] = 1;
        d.line_open[net.runs[r].line] = 1;
      }
    for (std::size_t l = 0; l < sc.net.lines.size(); ++l)
      if (sc.net.lines[l].open_initial) d.line_open[l] = 1;
    for (std::size_t s = 0; s < sc.net.stations.size(); ++s)
      if (sc.net.stations[s].open_initial) d.station_open[s] = 1;
    for (std::size_t k = 0; k < closed_stations.size(); ++k)
      if (mask & (1ull << (n_runs + k))) d.station_open[closed_stations[k]] = 1;

    if (budget_of(d, sc, net) > sc.params.budget + 1e-9) continue;
    d.fleet = required_fleet(d.dispatch, sc, net);
    if (!fleet_simulation_oracle(d, sc, net)) continue;
    double obj = exact_flow_cost(sc, net, d);
    if (obj < best.objective - 1e-12) {
      best.objective = obj;
      best.design = d;
    }
  }
  best.penalty_free = best.objective < sc.params.penalty * 0.5;
  return best;
}

// ---------------------------------------------------------------------------
// Micro instances.

Scenario make_micro_scenario(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  Scenario sc;
  int n_st = pick(2, 3);
  for (int i = 0; i < n_st; ++i) {
    Station s;
    s.id = std::string(1, static_cast<char>('A' + i));
    s.platforms = {s.id + "_p"};
    s.open_cost = pick(20, 60);
    s.close_cost = 10;
    sc.net.stations.push_back(std::move(s));
  }

  int n_lines = pick(1, 2);
  for (int l = 0; l < n_lines; ++l) {
    Line line;
    line.id = "L" + std::to_string(l);
    bool fwd = l == 0 || pick(0, 1) == 0;
    std::vector<int> seq;
    for (int i = 0; i < n_st; ++i) seq.push_back(fwd ? i : n_st - 1 - i);
    for (int s : seq) line.stops.push_back({s, 0});
    for (int i = 0; i + 1 < n_st; ++i) line.segment_times.push_back(pick(3, 7));
    for (int t : line.segment_times) line.run_duration += t;
    line.dispatch_cost = pick(50, 120);
    line.open_cost = 2 * line.dispatch_cost;
    line.close_cost = line.dispatch_cost;
    sc.net.lines.push_back(std::move(line));
  }
  for (const auto& l : sc.net.lines) {
    sc.net.stations[l.stops.front().station].terminal = true;
    sc.net.stations[l.stops.back().station].terminal = true;
  }

  for (const auto& s : sc.net.stations) {
    sc.net.origins.push_back(s.id);
    sc.net.destinations.push_back(s.id);
  }
  for (int i = 0; i < n_st; ++i) {
    sc.net.walk_os.push_back({i, i, pick(0, 4)});
    sc.net.walk_sd.push_back({i, i, pick(0, 4)});
  }

  auto& p = sc.params;
  p.transmission_rate = 1.12 / (60.0 * 24.0);
  p.susceptible_ratio = 1.0;
  p.horizon = 90;
  p.dispatch_step = 10;
  p.dispatch_window = pick(2, 4) * 10;  // 2-4 candidate ticks per line
  p.shift_min = -30;
  p.shift_max = 30;
  p.penalty = 1e4;
  p.tolerance = pick(30, 50);
  p.platform_capacity = 50;
  p.fleet_total = pick(1, 3);

  int n_od = pick(1, 3);
  double total_demand = 0.0;
  for (int k = 0; k < n_od; ++k) {
    OdPair od;
    od.origin = pick(0, n_st - 1);
    od.destination = pick(0, n_st - 1);
    if (od.destination == od.origin) od.destination = (od.origin + 1) % n_st;
    od.depart_tick = pick(0, 2) * 10;
    od.demand = pick(1, 10);
    od.infection_rate = pick(1, 5) / 100.0;
    od.tolerance = p.tolerance;
    total_demand += od.demand;
    sc.demand.push_back(od);
  }

  p.vehicle_capacity = pick(0, 1) == 0 ? std::max(2.0, std::ceil(0.6 * total_demand))
                                       : 2.0 * total_demand;
  // Base cost of dispatching everything once plus opening everything.
  double everything = 0.0;
  for (const auto& l : sc.net.lines)
    everything += l.open_cost + l.dispatch_cost * (p.dispatch_window / p.dispatch_step);
  for (const auto& s : sc.net.stations) everything += s.open_cost;
  double frac[] = {0.45, 0.7, 1.0};
  p.budget = std::ceil(everything * frac[pick(0, 2)]);

  validate_scenario(sc);
  return sc;
}

}  // namespace oracles
