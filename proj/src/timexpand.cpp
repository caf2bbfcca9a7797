#include "transit/timexpand.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>

namespace transit {

const char* to_string(ArcKind kind) {
  switch (kind) {
    case ArcKind::Transfer: return "transfer";
    case ArcKind::Travel: return "travel";
    case ArcKind::Wait: return "wait";
    case ArcKind::Os: return "os";
    case ArcKind::Sd: return "sd";
    case ArcKind::Dd: return "dd";
    case ArcKind::Od: return "od";
  }
  return "?";
}

DispatchGrid make_dispatch_grid(const Scenario& sc) {
  const auto& p = sc.params;
  int window = p.dispatch_window > 0 ? p.dispatch_window : p.horizon;
  DispatchGrid grid(sc.net.lines.size());
  for (auto& g : grid)
    for (int t = 0; t < window; t += p.dispatch_step) g.push_back(t);
  return grid;
}

int SpaceTimeNetwork::run_index(int line, int tick) const {
  Run key{line, tick};
  auto it = std::lower_bound(runs.begin(), runs.end(), key, [](const Run& a, const Run& b) {
    return a.line != b.line ? a.line < b.line : a.tick < b.tick;
  });
  if (it == runs.end() || it->line != line || it->tick != tick) return -1;
  return static_cast<int>(it - runs.begin());
}

SpaceTimeNetwork expand(const Scenario& sc, const DispatchGrid& grid) {
  const auto& net = sc.net;
  const auto& p = sc.params;
  if (grid.size() != net.lines.size())
    throw std::invalid_argument("dispatch grid must have one tick set per line");

  SpaceTimeNetwork st;

  const int n_platforms = net.platform_count();
  std::vector<int> gid_base(net.stations.size() + 1, 0);
  for (size_t s = 0; s < net.stations.size(); ++s)
    gid_base[s + 1] = gid_base[s] + static_cast<int>(net.stations[s].platforms.size());

  // Runs, with runs that cannot finish inside the horizon truncated out.
  for (size_t l = 0; l < net.lines.size(); ++l) {
    std::vector<int> ticks(grid[l]);
    std::sort(ticks.begin(), ticks.end());
    ticks.erase(std::unique(ticks.begin(), ticks.end()), ticks.end());
    for (int t : ticks) {
      if (t < 0 || t > p.horizon)
        throw std::invalid_argument("dispatch tick outside horizon for line '" + net.lines[l].id +
                                    "'");
      if (t + net.lines[l].run_duration > p.horizon)
        st.truncated_runs.emplace_back(static_cast<int>(l), t);
      else
        st.runs.push_back({static_cast<int>(l), t});
    }
  }

  // Event ticks per platform; arrival ticks separately (transfers start at
  // arrivals only).
  std::vector<std::set<int>> events(n_platforms), arrivals(n_platforms);
  for (const auto& run : st.runs) {
    const Line& line = net.lines[run.line];
    int t = run.tick;
    for (size_t i = 0; i < line.stops.size(); ++i) {
      int gid = gid_base[line.stops[i].station] + line.stops[i].platform;
      events[gid].insert(t);
      if (i > 0) arrivals[gid].insert(t);
      if (i + 1 < line.stops.size()) t += line.segment_times[i];
    }
  }

  st.event_ticks.resize(n_platforms);
  std::vector<int> platform_node_base(n_platforms + 1, 0);
  for (int g = 0; g < n_platforms; ++g) {
    st.event_ticks[g].assign(events[g].begin(), events[g].end());
    platform_node_base[g + 1] = platform_node_base[g] + static_cast<int>(events[g].size());
  }

  std::vector<int> gid_station(n_platforms);
  for (size_t s = 0; s < net.stations.size(); ++s)
    for (int k = gid_base[s]; k < gid_base[s + 1]; ++k) gid_station[k] = static_cast<int>(s);

  for (int g = 0; g < n_platforms; ++g)
    for (int tick : st.event_ticks[g])
      st.nodes.push_back({gid_station[g], NodeKind::Platform, g - gid_base[gid_station[g]], tick});

  auto platform_node = [&](int gid, int tick) -> int {
    const auto& ev = st.event_ticks[gid];
    auto it = std::lower_bound(ev.begin(), ev.end(), tick);
    if (it == ev.end() || *it != tick) return -1;
    return platform_node_base[gid] + static_cast<int>(it - ev.begin());
  };

  // Origin nodes at demanded departure ticks; one sink per demanded destination.
  std::map<std::pair<int, int>, int> origin_node;
  std::map<int, int> sink_node;
  for (const auto& od : sc.demand) {
    origin_node.emplace(std::make_pair(od.origin, od.depart_tick), -1);
    sink_node.emplace(od.destination, -1);
  }
  for (auto& [key, id] : origin_node) {
    id = static_cast<int>(st.nodes.size());
    st.nodes.push_back({key.first, NodeKind::Origin, -1, key.second});
  }

  std::map<std::pair<int, int>, int> dest_node;  // (destination, tick) -> node

  auto add_arc = [&](StArc arc) {
    st.family_count[static_cast<size_t>(arc.kind)]++;
    st.arcs.push_back(arc);
    return static_cast<int>(st.arcs.size() - 1);
  };

  // Travel arcs, run-major so run_arcs is contiguous.
  st.run_arc_begin.assign(st.runs.size() + 1, 0);
  for (size_t r = 0; r < st.runs.size(); ++r) {
    const Run& run = st.runs[r];
    const Line& line = net.lines[run.line];
    int t = run.tick;
    for (size_t i = 0; i + 1 < line.stops.size(); ++i) {
      int gid1 = gid_base[line.stops[i].station] + line.stops[i].platform;
      int gid2 = gid_base[line.stops[i + 1].station] + line.stops[i + 1].platform;
      int dur = line.segment_times[i];
      int a = add_arc({platform_node(gid1, t), platform_node(gid2, t + dur), ArcKind::Travel,
                       dur, p.vehicle_capacity, static_cast<int>(r), -1});
      st.run_arcs.push_back(a);
      t += dur;
    }
    st.run_arc_begin[r + 1] = static_cast<int>(st.run_arcs.size());
  }
  st.run_capacity.resize(st.runs.size());
  for (size_t r = 0; r < st.runs.size(); ++r)
    st.run_capacity[r] =
        p.vehicle_capacity * (st.run_arc_begin[r + 1] - st.run_arc_begin[r]);

  // Wait arcs between consecutive event ticks on a platform.
  for (int g = 0; g < n_platforms; ++g) {
    const auto& ev = st.event_ticks[g];
    for (size_t i = 0; i + 1 < ev.size(); ++i)
      add_arc({platform_node(g, ev[i]), platform_node(g, ev[i + 1]), ArcKind::Wait,
               ev[i + 1] - ev[i], p.platform_capacity, -1, -1});
  }

  // Transfer arcs: from an arrival on one platform to any other platform of
  // the station that has an event at the same tick. Zero duration.
  for (size_t s = 0; s < net.stations.size(); ++s) {
    if (gid_base[s + 1] - gid_base[s] < 2) continue;
    for (int g1 = gid_base[s]; g1 < gid_base[s + 1]; ++g1)
      for (int tick : arrivals[g1])
        for (int g2 = gid_base[s]; g2 < gid_base[s + 1]; ++g2) {
          if (g2 == g1) continue;
          int head = platform_node(g2, tick);
          if (head >= 0)
            add_arc({platform_node(g1, tick), head, ArcKind::Transfer, 0, p.platform_capacity,
                     -1, -1});
        }
  }

  // Walking access arcs. A passenger may enter a station earlier or later
  // than desired-departure-plus-walk within (shift_min, shift_max), but never
  // before the desired departure tick itself.
  for (const auto& [key, src] : origin_node) {
    auto [o, t0] = key;
    for (const auto& w : net.walk_os) {
      if (w.from != o) continue;
      int lo = std::max(t0, t0 + w.minutes + p.shift_min + 1);
      int hi = t0 + w.minutes + p.shift_max - 1;
      for (int g = gid_base[w.to]; g < gid_base[w.to + 1]; ++g) {
        const auto& ev = st.event_ticks[g];
        for (auto it = std::lower_bound(ev.begin(), ev.end(), lo);
             it != ev.end() && *it <= hi; ++it)
          add_arc({src, platform_node(g, *it), ArcKind::Os, *it - t0, kUncapacitated, -1, w.to});
      }
    }
  }

  // Walking egress arcs from every platform event tick.
  for (const auto& w : net.walk_sd) {
    for (int g = gid_base[w.from]; g < gid_base[w.from + 1]; ++g)
      for (int tick : st.event_ticks[g]) {
        int arrive = tick + w.minutes;
        if (arrive > p.horizon) continue;
        auto [it, fresh] = dest_node.emplace(std::make_pair(w.to, arrive), -1);
        if (fresh) {
          it->second = static_cast<int>(st.nodes.size());
          st.nodes.push_back({w.to, NodeKind::Destination, -1, arrive});
        }
        add_arc({platform_node(g, tick), it->second, ArcKind::Sd, w.minutes, kUncapacitated, -1,
                 w.from});
      }
  }

  for (auto& [d, id] : sink_node) {
    id = static_cast<int>(st.nodes.size());
    st.nodes.push_back({d, NodeKind::Sink, -1, 0});
  }
  for (const auto& [key, node] : dest_node) {
    auto it = sink_node.find(key.first);
    if (it != sink_node.end())
      add_arc({node, it->second, ArcKind::Dd, 0, kUncapacitated, -1, -1});
  }

  // Penalty arcs straight to the sink keep every commodity feasible.
  std::map<std::pair<int, int>, int> penalty_arc;  // (source node, sink node) -> arc
  st.od_source.resize(sc.demand.size());
  st.od_sink.resize(sc.demand.size());
  st.od_penalty_arc.resize(sc.demand.size());
  for (size_t w = 0; w < sc.demand.size(); ++w) {
    const auto& od = sc.demand[w];
    int src = origin_node.at({od.origin, od.depart_tick});
    int snk = sink_node.at(od.destination);
    st.od_source[w] = src;
    st.od_sink[w] = snk;
    auto [it, fresh] = penalty_arc.emplace(std::make_pair(src, snk), -1);
    if (fresh) it->second = add_arc({src, snk, ArcKind::Od, 0, kUncapacitated, -1, -1});
    st.od_penalty_arc[w] = it->second;
  }

  // Gate mass for the station-opening linking constraint: a big-M that must
  // dominate any feasible walk flow through the station. Total demand is the
  // tightest uniform bound and keeps the dual subgradients well conditioned;
  // the nominal per-arc platform capacity sum is far looser.
  double demand_mass = 0.0;
  for (const auto& od : sc.demand) demand_mass += od.demand;
  st.station_gate_capacity.assign(net.stations.size(), 0.0);
  for (const auto& a : st.arcs)
    if (a.kind == ArcKind::Os || a.kind == ArcKind::Sd)
      st.station_gate_capacity[a.station] += p.platform_capacity;
  for (auto& g : st.station_gate_capacity) g = std::min(g, demand_mass);

  // CSR adjacency.
  st.out_begin.assign(st.nodes.size() + 1, 0);
  for (const auto& a : st.arcs) st.out_begin[a.tail + 1]++;
  for (size_t i = 1; i < st.out_begin.size(); ++i) st.out_begin[i] += st.out_begin[i - 1];
  st.out_arcs.resize(st.arcs.size());
  {
    std::vector<std::int32_t> cursor(st.out_begin.begin(), st.out_begin.end() - 1);
    for (size_t a = 0; a < st.arcs.size(); ++a)
      st.out_arcs[cursor[st.arcs[a].tail]++] = static_cast<int>(a);
  }

  // Label-setting sweep order: ticks ascending; origins before platforms
  // before destinations; platforms grouped by station so same-tick transfers
  // settle together.
  st.sweep_order.reserve(st.nodes.size());
  for (size_t i = 0; i < st.nodes.size(); ++i)
    if (st.nodes[i].kind != NodeKind::Sink) st.sweep_order.push_back(static_cast<int>(i));
  auto rank = [](NodeKind k) {
    switch (k) {
      case NodeKind::Origin: return 0;
      case NodeKind::Platform: return 1;
      default: return 2;
    }
  };
  std::sort(st.sweep_order.begin(), st.sweep_order.end(), [&](int a, int b) {
    const auto& na = st.nodes[a];
    const auto& nb = st.nodes[b];
    if (na.tick != nb.tick) return na.tick < nb.tick;
    int ra = rank(na.kind), rb = rank(nb.kind);
    if (ra != rb) return ra < rb;
    if (na.loc != nb.loc) return na.loc < nb.loc;
    if (na.platform != nb.platform) return na.platform < nb.platform;
    return a < b;
  });
  // Every arc outside the sink plumbing spans exactly its duration in time;
  // pricing and the detour bound rely on it.
  for (const auto& a : st.arcs)
    if (a.kind != ArcKind::Dd && a.kind != ArcKind::Od &&
        st.nodes[a.head].tick - st.nodes[a.tail].tick != a.duration)
      throw std::logic_error("expansion produced an arc whose tick span differs from its duration");

  st.sweep_group_len.assign(st.sweep_order.size(), 0);
  for (size_t i = 0; i < st.sweep_order.size();) {
    const auto& ni = st.nodes[st.sweep_order[i]];
    if (ni.kind != NodeKind::Platform) {
      ++i;
      continue;
    }
    size_t j = i + 1;
    while (j < st.sweep_order.size()) {
      const auto& nj = st.nodes[st.sweep_order[j]];
      if (nj.kind != NodeKind::Platform || nj.tick != ni.tick || nj.loc != ni.loc) break;
      ++j;
    }
    if (j - i > 1) st.sweep_group_len[i] = static_cast<int>(j - i);
    i = j;
  }

  return st;
}

std::vector<std::int32_t> arcs_of_run(const SpaceTimeNetwork& net, int line, int dispatch_tick) {
  int r = net.run_index(line, dispatch_tick);
  if (r < 0)
    throw std::invalid_argument("unknown run key: line " + std::to_string(line) + " tick " +
                                std::to_string(dispatch_tick));
  return {net.run_arcs.begin() + net.run_arc_begin[r],
          net.run_arcs.begin() + net.run_arc_begin[r + 1]};
}

namespace {

std::string node_name(const SpaceTimeNetwork& st, const Scenario& sc, int id) {
  const StNode& n = st.nodes[id];
  switch (n.kind) {
    case NodeKind::Origin:
      return "ori:" + sc.net.origins[n.loc] + "@" + std::to_string(n.tick);
    case NodeKind::Platform:
      return "plt:" + sc.net.stations[n.loc].id + "/" + sc.net.stations[n.loc].platforms[n.platform] +
             "@" + std::to_string(n.tick);
    case NodeKind::Destination:
      return "dst:" + sc.net.destinations[n.loc] + "@" + std::to_string(n.tick);
    case NodeKind::Sink:
      return "sink:" + sc.net.destinations[n.loc];
  }
  return "?";
}

}  // namespace

void dump_arcs_csv(const SpaceTimeNetwork& st, const Scenario& sc, std::ostream& out) {
  out << "tail,head,kind,duration,capacity,run_key\n";
  for (const auto& a : st.arcs) {
    out << node_name(st, sc, a.tail) << "," << node_name(st, sc, a.head) << ","
        << to_string(a.kind) << "," << a.duration << ",";
    if (a.capacity == kUncapacitated)
      out << "inf";
    else
      out << a.capacity;
    out << ",";
    if (a.run >= 0)
      out << sc.net.lines[st.runs[a.run].line].id << "@" << st.runs[a.run].tick;
    out << "\n";
  }
}

}  // namespace transit
