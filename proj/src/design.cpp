#include "transit/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>

namespace transit {

DesignVector DesignVector::all_closed(const Scenario& sc, const SpaceTimeNetwork& net) {
  DesignVector d;
  d.dispatch.assign(net.runs.size(), 0);
  d.line_open.assign(sc.net.lines.size(), 0);
  d.station_open.assign(sc.net.stations.size(), 0);
  d.fleet.assign(sc.net.stations.size(), 0);
  return d;
}

DesignVector DesignVector::all_open(const Scenario& sc, const SpaceTimeNetwork& net) {
  DesignVector d;
  d.dispatch.assign(net.runs.size(), 1);
  d.line_open.assign(sc.net.lines.size(), 1);
  d.station_open.assign(sc.net.stations.size(), 1);
  d.fleet = required_fleet(d.dispatch, sc, net);
  return d;
}

namespace {

// Vehicle events at terminals: -1 per departure from the line's first stop,
// +1 per arrival at its last stop (available from the arrival tick on).
struct TerminalEvent {
  int tick;
  int delta;  // arrivals sort before departures at the same tick only via delta order
};

std::vector<std::vector<TerminalEvent>> terminal_events(std::span<const std::uint8_t> dispatch,
                                                        const Scenario& sc,
                                                        const SpaceTimeNetwork& net) {
  std::vector<std::vector<TerminalEvent>> ev(sc.net.stations.size());
  for (std::size_t r = 0; r < net.runs.size(); ++r) {
    if (!dispatch[r]) continue;
    const Run& run = net.runs[r];
    const Line& line = sc.net.lines[run.line];
    ev[line.stops.front().station].push_back({run.tick, -1});
    ev[line.stops.back().station].push_back({run.tick + line.run_duration, +1});
  }
  for (auto& v : ev)
    std::sort(v.begin(), v.end(), [](const TerminalEvent& a, const TerminalEvent& b) {
      if (a.tick != b.tick) return a.tick < b.tick;
      return a.delta > b.delta;  // arrivals credited at their tick, before departures
    });
  return ev;
}

}  // namespace

std::vector<int> required_fleet(std::span<const std::uint8_t> dispatch, const Scenario& sc,
                                const SpaceTimeNetwork& net) {
  auto ev = terminal_events(dispatch, sc, net);
  std::vector<int> need(sc.net.stations.size(), 0);
  for (std::size_t s = 0; s < ev.size(); ++s) {
    int bal = 0, worst = 0;
    for (const auto& e : ev[s]) {
      bal += e.delta;
      worst = std::min(worst, bal);
    }
    need[s] = -worst;
  }
  return need;
}

FleetCheck fleet_feasible(const DesignVector& design, const Scenario& sc,
                          const SpaceTimeNetwork& net) {
  auto ev = terminal_events(design.dispatch, sc, net);
  long total = 0;
  for (std::size_t s = 0; s < sc.net.stations.size(); ++s) total += design.fleet[s];
  if (total > sc.params.fleet_total) return {false, -1, -1};
  for (std::size_t s = 0; s < ev.size(); ++s) {
    int bal = design.fleet[s];
    for (const auto& e : ev[s]) {
      bal += e.delta;
      if (bal < 0) return {false, static_cast<int>(s), e.tick};
    }
  }
  return {true, -1, -1};
}

double budget_of(const DesignVector& design, const Scenario& sc, const SpaceTimeNetwork& net) {
  double cost = 0.0;
  for (std::size_t r = 0; r < net.runs.size(); ++r)
    if (design.dispatch[r]) cost += sc.net.lines[net.runs[r].line].dispatch_cost;
  for (std::size_t l = 0; l < sc.net.lines.size(); ++l) {
    const Line& line = sc.net.lines[l];
    double cbar = line.open_initial ? -line.close_cost : line.open_cost;
    cost += cbar * (static_cast<int>(design.line_open[l]) - (line.open_initial ? 1 : 0));
  }
  for (std::size_t s = 0; s < sc.net.stations.size(); ++s) {
    const Station& st = sc.net.stations[s];
    double cbar = st.open_initial ? -st.close_cost : st.open_cost;
    cost += cbar * (static_cast<int>(design.station_open[s]) - (st.open_initial ? 1 : 0));
  }
  return cost;
}

// ---------------------------------------------------------------------------
// Branch and bound.

namespace {

struct Item {
  bool is_run;
  int index;       // run id or station id
  int line;        // for runs
  double benefit;  // multiplier-weighted capacity
  double cost;     // dispatch cost or opening cost; line opening charged on first use
};

struct BnbContext {
  const Scenario* sc;
  const SpaceTimeNetwork* net;
  std::vector<Item> items;
  std::vector<double> line_charge;  // opening cost of initially closed lines
  double base_budget = 0.0;         // budget left after forced commitments
  double forced_benefit = 0.0;
  bool fleet_free = false;  // even dispatching everything stays within the fleet
};

struct Node {
  std::vector<std::int8_t> state;  // -1 free, 0, 1
  double bound = 0.0;
  long id = 0;
};

struct GreedyEval {
  double bound;          // fractional relaxation value (committed + greedy)
  int frac_item = -1;    // item split by the budget, if any
  std::vector<int> taken;  // fully taken free items, in greedy order
};

// Fractional knapsack over free items; opening charges of uncommitted lines
// are ignored, which only raises the bound.
GreedyEval greedy_bound(const BnbContext& ctx, const std::vector<std::int8_t>& state) {
  GreedyEval ev;
  double budget = ctx.base_budget;
  double benefit = ctx.forced_benefit;
  std::vector<char> line_open(ctx.sc->net.lines.size(), 0);
  for (std::size_t i = 0; i < ctx.items.size(); ++i) {
    if (state[i] != 1) continue;
    const Item& it = ctx.items[i];
    budget -= it.cost;
    benefit += it.benefit;
    if (it.is_run && !line_open[it.line]) {
      line_open[it.line] = 1;
      budget -= ctx.line_charge[it.line];
    }
  }
  // Items are pre-sorted by benefit/cost ratio.
  for (std::size_t i = 0; i < ctx.items.size(); ++i) {
    if (state[i] != -1) continue;
    const Item& it = ctx.items[i];
    if (it.cost <= budget) {
      budget -= it.cost;
      benefit += it.benefit;
      ev.taken.push_back(static_cast<int>(i));
    } else {
      if (budget > 0.0 && it.cost > 0.0) {
        benefit += it.benefit * (budget / it.cost);
        ev.frac_item = static_cast<int>(i);
      }
      budget = 0.0;
      break;
    }
  }
  ev.bound = benefit;
  return ev;
}

struct Candidate {
  double benefit = -1.0;
  std::vector<std::uint8_t> dispatch;
  std::vector<std::uint8_t> stations;
};

// Feasible integral probe: the committed set first (checked as a whole), then
// greedy additions with real charges and a full fleet re-check per run; yields
// an incumbent at every node whose committed set is feasible.
Candidate greedy_probe(const BnbContext& ctx, const std::vector<std::int8_t>& state) {
  const auto& sc = *ctx.sc;
  const auto& net = *ctx.net;
  Candidate cand;
  cand.dispatch.assign(net.runs.size(), 0);
  cand.stations.assign(sc.net.stations.size(), 0);
  double budget = ctx.base_budget;
  double benefit = ctx.forced_benefit;
  std::vector<char> line_open(sc.net.lines.size(), 0);

  auto fleet_ok = [&](std::span<const std::uint8_t> dispatch) {
    if (ctx.fleet_free) return true;
    auto need = required_fleet(dispatch, sc, net);
    long total = 0;
    for (int v : need) total += v;
    return total <= sc.params.fleet_total;
  };

  for (std::size_t i = 0; i < ctx.items.size(); ++i) {
    if (state[i] != 1) continue;
    const Item& it = ctx.items[i];
    double cost = it.cost;
    if (it.is_run) {
      if (!line_open[it.line]) {
        cost += ctx.line_charge[it.line];
        line_open[it.line] = 1;
      }
      cand.dispatch[it.index] = 1;
    } else {
      cand.stations[it.index] = 1;
    }
    budget -= cost;
    benefit += it.benefit;
  }
  if (budget < -1e-9 || !fleet_ok(cand.dispatch)) return cand;  // committed set infeasible

  for (std::size_t i = 0; i < ctx.items.size(); ++i) {
    if (state[i] != -1) continue;
    const Item& it = ctx.items[i];
    double cost = it.cost;
    if (it.is_run && !line_open[it.line]) cost += ctx.line_charge[it.line];
    if (cost > budget + 1e-9) continue;
    if (it.is_run) {
      cand.dispatch[it.index] = 1;
      if (!fleet_ok(cand.dispatch)) {
        cand.dispatch[it.index] = 0;
        continue;
      }
      line_open[it.line] = 1;
    } else {
      cand.stations[it.index] = 1;
    }
    budget -= cost;
    benefit += it.benefit;
  }
  cand.benefit = benefit;
  return cand;
}

}  // namespace

DesignResult solve_design_subproblem(std::span<const double> run_price,
                                     std::span<const double> station_price, const Scenario& sc,
                                     const SpaceTimeNetwork& net, double rel_gap) {
  BnbContext ctx;
  ctx.sc = &sc;
  ctx.net = &net;
  ctx.base_budget = sc.params.budget;
  ctx.line_charge.assign(sc.net.lines.size(), 0.0);
  for (std::size_t l = 0; l < sc.net.lines.size(); ++l)
    if (!sc.net.lines[l].open_initial) ctx.line_charge[l] = sc.net.lines[l].open_cost;
  {
    std::vector<std::uint8_t> everything(net.runs.size(), 1);
    auto need = required_fleet(everything, sc, net);
    long total = 0;
    for (int v : need) total += v;
    ctx.fleet_free = total <= sc.params.fleet_total;
  }

  // Initially open facilities stay open: keeping them is free and closing
  // costs money while only losing benefit, so they are fixed outside the tree.
  for (std::size_t s = 0; s < sc.net.stations.size(); ++s)
    if (sc.net.stations[s].open_initial)
      ctx.forced_benefit += (s < station_price.size() ? station_price[s] : 0.0) *
                            net.station_gate_capacity[s];

  for (std::size_t r = 0; r < net.runs.size(); ++r) {
    double b = (r < run_price.size() ? run_price[r] : 0.0) * net.run_capacity[r];
    if (b <= 0.0) continue;  // a costly run with no benefit is never dispatched
    ctx.items.push_back({true, static_cast<int>(r), net.runs[r].line, b,
                         sc.net.lines[net.runs[r].line].dispatch_cost});
  }
  for (std::size_t s = 0; s < sc.net.stations.size(); ++s) {
    if (sc.net.stations[s].open_initial) continue;
    double b = (s < station_price.size() ? station_price[s] : 0.0) * net.station_gate_capacity[s];
    if (b <= 0.0) continue;
    ctx.items.push_back({false, static_cast<int>(s), -1, b, sc.net.stations[s].open_cost});
  }
  std::sort(ctx.items.begin(), ctx.items.end(), [](const Item& a, const Item& b) {
    double ra = a.cost > 0 ? a.benefit / a.cost : std::numeric_limits<double>::infinity();
    double rb = b.cost > 0 ? b.benefit / b.cost : std::numeric_limits<double>::infinity();
    if (ra != rb) return ra > rb;
    if (a.is_run != b.is_run) return a.is_run;
    return a.index < b.index;
  });

  auto finish = [&](const Candidate& best, long nodes, double gap) {
    DesignResult res;
    res.design = DesignVector::all_closed(sc, net);
    res.nodes = nodes;
    res.bound_gap = gap;
    if (best.benefit < 0.0) return res;  // no feasible design found (cannot normally happen)
    res.feasible = true;
    res.design.dispatch = best.dispatch;
    res.design.station_open = best.stations;
    for (std::size_t l = 0; l < sc.net.lines.size(); ++l)
      res.design.line_open[l] = sc.net.lines[l].open_initial ? 1 : 0;
    for (std::size_t r = 0; r < net.runs.size(); ++r)
      if (best.dispatch[r]) res.design.line_open[net.runs[r].line] = 1;
    for (std::size_t s = 0; s < sc.net.stations.size(); ++s)
      if (sc.net.stations[s].open_initial) res.design.station_open[s] = 1;
    res.design.fleet = required_fleet(res.design.dispatch, sc, net);
    res.objective.value = -best.benefit;
    res.objective.budget_used = budget_of(res.design, sc, net);
    return res;
  };

  const int n_items = static_cast<int>(ctx.items.size());
  std::vector<std::int8_t> root_state(n_items, -1);
  GreedyEval root = greedy_bound(ctx, root_state);
  Candidate incumbent = greedy_probe(ctx, root_state);

  auto cmp = [](const std::pair<double, long>& a, const std::pair<double, long>& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second > b.second;
  };
  std::priority_queue<std::pair<double, long>, std::vector<std::pair<double, long>>, decltype(cmp)>
      open(cmp);
  std::map<long, std::pair<std::vector<std::int8_t>, GreedyEval>> live;
  long next_id = 0;
  open.push({root.bound, next_id});
  live.emplace(next_id, std::make_pair(root_state, root));
  ++next_id;
  long nodes = 0;
  double proven = root.bound;
  bool closed_by_bound = false;

  while (!open.empty()) {
    auto [bound, id] = open.top();
    open.pop();
    auto it = live.find(id);
    if (it == live.end()) continue;
    auto [state, ev] = std::move(it->second);
    live.erase(it);
    ++nodes;
    proven = bound;

    double cutoff = incumbent.benefit + std::max(1e-12, rel_gap * std::abs(incumbent.benefit));
    if (bound <= cutoff) {
      proven = std::max(incumbent.benefit, bound);
      closed_by_bound = true;
      break;  // best-bound search: nothing better remains
    }

    // Pick the branching item: the fractional one, else the first free taken
    // item (bound and probe can diverge through line charges or the fleet).
    int branch = ev.frac_item;
    if (branch < 0)
      for (int i : ev.taken)
        if (state[i] == -1) {
          branch = i;
          break;
        }

    // Probing every node is wasted work; the incumbent only drives pruning,
    // except at exhausted nodes whose committed value must be recorded.
    if (branch < 0 || incumbent.benefit < 0.0 || nodes % 8 == 1) {
      Candidate probe = greedy_probe(ctx, state);
      if (probe.benefit > incumbent.benefit) incumbent = std::move(probe);
    }
    if (branch < 0) continue;  // bound solution fully committed: exact here
    for (int v = 1; v >= 0; --v) {
      auto child = state;
      child[branch] = static_cast<std::int8_t>(v);
      GreedyEval cev = greedy_bound(ctx, child);
      if (cev.bound <= incumbent.benefit + 1e-12) continue;
      open.push({cev.bound, next_id});
      live.emplace(next_id, std::make_pair(std::move(child), std::move(cev)));
      ++next_id;
      if (next_id > 2000000) throw std::runtime_error("design search exceeded the node limit");
    }
  }

  double gap = closed_by_bound ? std::max(0.0, proven - incumbent.benefit) : 0.0;
  return finish(incumbent, nodes, gap);
}

}  // namespace transit
