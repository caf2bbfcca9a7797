#include "transit/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <unordered_set>

#include "transit/epidemic.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace transit {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Physical-network reference costs.

Pricer::Pricer(const SpaceTimeNetwork& net, const Scenario& sc) : net_(net), sc_(sc) {
  const auto& pn = sc.net;
  std::vector<char> line_has_run(pn.lines.size(), 0);
  for (const auto& r : net.runs) line_has_run[r.line] = 1;

  // Physical graph: origins, platforms (global ids), destinations.
  const int n_plat = pn.platform_count();
  const int n_o = static_cast<int>(pn.origins.size());
  const int n_d = static_cast<int>(pn.destinations.size());
  const int plat0 = n_o;
  const int dest0 = n_o + n_plat;
  const int n = dest0 + n_d;

  struct Edge {
    int to;
    double w;
  };
  std::vector<std::vector<Edge>> adj(n);
  std::vector<int> gid_base(pn.stations.size() + 1, 0);
  for (size_t s = 0; s < pn.stations.size(); ++s)
    gid_base[s + 1] = gid_base[s] + static_cast<int>(pn.stations[s].platforms.size());

  for (const auto& w : pn.walk_os)
    for (int gg = gid_base[w.to]; gg < gid_base[w.to + 1]; ++gg)
      adj[w.from].push_back({plat0 + gg, static_cast<double>(w.minutes)});
  for (const auto& w : pn.walk_sd)
    for (int gg = gid_base[w.from]; gg < gid_base[w.from + 1]; ++gg)
      adj[plat0 + gg].push_back({dest0 + w.to, static_cast<double>(w.minutes)});
  for (size_t l = 0; l < pn.lines.size(); ++l) {
    if (!line_has_run[l]) continue;
    const Line& line = pn.lines[l];
    for (size_t i = 0; i + 1 < line.stops.size(); ++i) {
      int g1 = gid_base[line.stops[i].station] + line.stops[i].platform;
      int g2 = gid_base[line.stops[i + 1].station] + line.stops[i + 1].platform;
      adj[plat0 + g1].push_back({plat0 + g2, static_cast<double>(line.segment_times[i])});
    }
  }
  for (size_t s = 0; s < pn.stations.size(); ++s)
    for (int g1 = gid_base[s]; g1 < gid_base[s + 1]; ++g1)
      for (int g2 = gid_base[s]; g2 < gid_base[s + 1]; ++g2)
        if (g1 != g2) adj[plat0 + g1].push_back({plat0 + g2, 0.0});

  reference_.assign(n_o, std::vector<double>(n_d, kInf));
  std::vector<double> dist(n);
  using Item = std::pair<double, int>;
  for (int o = 0; o < n_o; ++o) {
    std::fill(dist.begin(), dist.end(), kInf);
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[o] = 0.0;
    pq.push({0.0, o});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[u]) continue;
      for (const Edge& e : adj[u])
        if (d + e.w < dist[e.to]) {
          dist[e.to] = d + e.w;
          pq.push({dist[e.to], e.to});
        }
    }
    for (int d = 0; d < n_d; ++d) reference_[o][d] = dist[dest0 + d];
  }

  // Group commodities by (source node, infectiousness).
  std::map<std::pair<int, double>, std::vector<int>> groups;
  for (size_t w = 0; w < sc.demand.size(); ++w)
    groups[{net.od_source[w], sc.demand[w].infection_rate}].push_back(static_cast<int>(w));
  for (auto& [key, ods] : groups) groups_.push_back(std::move(ods));

  sink_entries_.resize(net.nodes.size());
  for (std::size_t a = 0; a < net.arcs.size(); ++a) {
    const StArc& arc = net.arcs[a];
    if (arc.kind != ArcKind::Dd) continue;
    sink_entries_[arc.head].push_back(
        {net.nodes[arc.tail].tick, arc.tail, static_cast<std::int32_t>(a)});
  }
  for (auto& v : sink_entries_) std::sort(v.begin(), v.end());
}

double Pricer::reference_shortest_cost(int origin, int destination) const {
  return reference_[origin][destination];
}

double Pricer::duration_limit(int od) const {
  double ref = reference_[sc_.demand[od].origin][sc_.demand[od].destination];
  if (ref == kInf) return kInf;
  return ref + sc_.demand[od].tolerance;
}

// ---------------------------------------------------------------------------
// Label-setting sweep over the time-expanded DAG.

struct Pricer::Sweep {
  const SpaceTimeNetwork& net;
  const Scenario& sc;
  double q_w = 0.0;
  std::span<const double> run_price;
  std::span<const double> station_price;
  std::span<const double> dual_arc;
  std::span<const std::uint8_t> arc_allowed;

  std::vector<double> dist;
  std::vector<std::int32_t> pred;

  // Yen restrictions; empty outside enumeration.
  const std::unordered_set<std::int32_t>* banned_arcs = nullptr;
  const std::vector<char>* banned_nodes = nullptr;

  int source = -1;
  explicit Sweep(const SpaceTimeNetwork& n, const Scenario& s) : net(n), sc(s) {
    dist.assign(net.nodes.size(), kInf);
    pred.assign(net.nodes.size(), -1);
  }

  double arc_cost(std::int32_t a) const {
    const StArc& arc = net.arcs[a];
    double c = arc_cost_with_multipliers(arc, q_w, sc.params, run_price, station_price);
    if (!dual_arc.empty()) c -= dual_arc[a];
    return c < 0.0 ? 0.0 : c;  // capacity duals are nonpositive, so this only clips noise
  }

  bool allowed(std::int32_t a) const {
    const StArc& arc = net.arcs[a];
    if (arc.kind == ArcKind::Od) return false;  // penalty paths never priced
    if (!arc_allowed.empty() && !arc_allowed[a]) return false;
    if (banned_arcs && banned_arcs->count(a)) return false;
    if (banned_nodes && (*banned_nodes)[arc.head]) return false;
    return true;
  }

  void relax(std::int32_t a) {
    const StArc& arc = net.arcs[a];
    double base = dist[arc.tail];
    if (base == kInf || !allowed(a)) return;
    double nd = base + arc_cost(a);
    if (nd < dist[arc.head]) {
      dist[arc.head] = nd;
      pred[arc.head] = a;
    }
  }

  // Runs the whole sweep assuming initial labels are already placed.
  void run() {
    const auto& order = net.sweep_order;
    for (size_t i = 0; i < order.size();) {
      int len = net.sweep_group_len[i];
      if (len > 1) {
        // Same-station platform group: settle zero-duration transfers first.
        bool changed = true;
        for (int round = 0; round < len && changed; ++round) {
          changed = false;
          for (int k = 0; k < len; ++k) {
            int nid = order[i + k];
            if (dist[nid] == kInf) continue;
            for (int e = net.out_begin[nid]; e < net.out_begin[nid + 1]; ++e) {
              std::int32_t a = net.out_arcs[e];
              if (net.arcs[a].kind != ArcKind::Transfer) continue;
              double before = dist[net.arcs[a].head];
              relax(a);
              if (dist[net.arcs[a].head] < before) changed = true;
            }
          }
        }
        for (int k = 0; k < len; ++k) {
          int nid = order[i + k];
          if (dist[nid] == kInf) continue;
          for (int e = net.out_begin[nid]; e < net.out_begin[nid + 1]; ++e) {
            std::int32_t a = net.out_arcs[e];
            if (net.arcs[a].kind == ArcKind::Transfer) continue;
            relax(a);
          }
        }
        i += len;
      } else {
        int nid = order[i];
        if (dist[nid] != kInf)
          for (int e = net.out_begin[nid]; e < net.out_begin[nid + 1]; ++e) relax(net.out_arcs[e]);
        ++i;
      }
    }
  }

  void reset() {
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(pred.begin(), pred.end(), -1);
  }

  std::vector<std::int32_t> extract(int sink) const {
    std::vector<std::int32_t> arcs;
    int node = sink;
    while (pred[node] >= 0) {
      arcs.push_back(pred[node]);
      node = net.arcs[pred[node]].tail;
    }
    std::reverse(arcs.begin(), arcs.end());
    return arcs;
  }

  // Duration-indexed DP: minimum modified cost per (node, elapsed duration)
  // layer, elapsed <= max_dur. Equivalent to letting the deviation
  // enumeration run to completion, at a fixed polynomial cost.
  struct Layered {
    int max_dur = 0;
    std::vector<double> dist;        // (node * (max_dur+1)) + d
    std::vector<std::int32_t> pred;  // arc ids
    double at(int node, int d, int stride) const { return dist[node * stride + d]; }
  };

  void run_layered(Layered& out, int source, int max_dur) const {
    const int stride = max_dur + 1;
    out.max_dur = max_dur;
    out.dist.assign(net.nodes.size() * static_cast<std::size_t>(stride), kInf);
    out.pred.assign(net.nodes.size() * static_cast<std::size_t>(stride), -1);
    out.dist[source * stride + 0] = 0.0;
    std::vector<char> alive(net.nodes.size(), 0);
    alive[source] = 1;

    auto relax_layered = [&](std::int32_t a) {
      const StArc& arc = net.arcs[a];
      if (!alive[arc.tail] || !allowed(a)) return false;
      double c = arc_cost(a);
      bool changed = false;
      const double* dt = &out.dist[arc.tail * stride];
      for (int d = 0; d + arc.duration <= max_dur; ++d) {
        if (dt[d] == kInf) continue;
        double nd = dt[d] + c;
        std::size_t slot = static_cast<std::size_t>(arc.head) * stride + d + arc.duration;
        if (nd < out.dist[slot]) {
          out.dist[slot] = nd;
          out.pred[slot] = a;
          alive[arc.head] = 1;
          changed = true;
        }
      }
      return changed;
    };

    const auto& order = net.sweep_order;
    for (std::size_t i = 0; i < order.size();) {
      int len = net.sweep_group_len[i];
      if (len > 1) {
        bool changed = true;
        for (int round = 0; round < len && changed; ++round) {
          changed = false;
          for (int k = 0; k < len; ++k) {
            int nid = order[i + k];
            for (int e = net.out_begin[nid]; e < net.out_begin[nid + 1]; ++e) {
              std::int32_t a = net.out_arcs[e];
              if (net.arcs[a].kind != ArcKind::Transfer) continue;
              if (relax_layered(a)) changed = true;
            }
          }
        }
        for (int k = 0; k < len; ++k) {
          int nid = order[i + k];
          for (int e = net.out_begin[nid]; e < net.out_begin[nid + 1]; ++e) {
            std::int32_t a = net.out_arcs[e];
            if (net.arcs[a].kind == ArcKind::Transfer) continue;
            relax_layered(a);
          }
        }
        i += len;
      } else {
        int nid = order[i];
        for (int e = net.out_begin[nid]; e < net.out_begin[nid + 1]; ++e)
          relax_layered(net.out_arcs[e]);
        ++i;
      }
    }
  }

  std::vector<std::int32_t> extract_layered(const Layered& lay, int sink, int d) const {
    const int stride = lay.max_dur + 1;
    std::vector<std::int32_t> arcs;
    int node = sink;
    while (lay.pred[node * stride + d] >= 0) {
      std::int32_t a = lay.pred[node * stride + d];
      arcs.push_back(a);
      node = net.arcs[a].tail;
      d -= net.arcs[a].duration;
    }
    std::reverse(arcs.begin(), arcs.end());
    return arcs;
  }

  Layered layered;  // lazily built per sweep, shared by the group's commodities
  bool layered_built = false;
};

namespace {

double path_duration(const SpaceTimeNetwork& net, std::span<const std::int32_t> arcs) {
  double d = 0.0;
  for (std::int32_t a : arcs) d += net.arcs[a].duration;
  return d;
}

struct Candidate {
  double cost;
  std::vector<std::int32_t> arcs;
  bool operator>(const Candidate& other) const {
    if (cost != other.cost) return cost > other.cost;
    return arcs > other.arcs;  // lexicographic arc-id tie-break
  }
};

}  // namespace

PricingResult Pricer::price_in_sweep(int od, Sweep& base, int group_max_dur,
                                     const RmpSolution& duals,
                                     std::span<const double> run_price,
                                     std::span<const double> station_price,
                                     const PricingOptions& opts) const {
  PricingResult res;
  res.od = od;
  const double lambda_w = duals.dual_od[od];
  const double limit = duration_limit(od);
  const int sink = net_.od_sink[od];
  const int source = net_.od_source[od];

  if (base.dist[sink] == kInf) return res;  // only the penalty path exists

  auto finish = [&](std::vector<std::int32_t> arcs, double modified_cost) {
    PathColumn col = make_column(net_, od, arcs);
    res.best = std::move(col);
    res.reduced_cost = modified_cost - lambda_w;
  };

  if (!opts.force_enumeration) {
    // Arrival-deadline reading: arc durations equal their tick spans, so the
    // detour bound admits exactly the sink entries at tick <= source + limit.
    const long deadline =
        limit >= 1e9 ? std::numeric_limits<long>::max()
                     : net_.nodes[source].tick + static_cast<long>(limit + 1e-9);
    double best = kInf;
    std::int32_t pick_node = -1, pick_arc = -1;
    for (const auto& [tick, node, arc] : sink_entries_[sink]) {
      if (tick > deadline) break;
      ++res.paths_examined;
      if (base.dist[node] < best - 1e-15) {
        best = base.dist[node];
        pick_node = node;
        pick_arc = arc;
      }
    }
    if (pick_node < 0 || best - lambda_w >= -opts.epsilon) return res;
    std::vector<std::int32_t> arcs = base.extract(pick_node);
    arcs.push_back(pick_arc);
    finish(std::move(arcs), best);
    return res;
  }

  std::vector<std::int32_t> shortest = base.extract(sink);
  res.paths_examined = 1;
  double best_cost = base.dist[sink];
  if (best_cost - lambda_w >= -opts.epsilon) return res;
  if (path_duration(net_, shortest) <= limit + 1e-9) {
    finish(std::move(shortest), best_cost);
    return res;
  }

  // The duration-indexed DP answers "cheapest admissible path" directly; use
  // it once the deviation enumeration has burned its budget.
  auto exact_resolve = [&]() {
    if (!base.layered_built) {
      base.run_layered(base.layered, base.source, group_max_dur);
      base.layered_built = true;
    }
    const int stride = base.layered.max_dur + 1;
    int cap = std::min<int>(static_cast<int>(limit), base.layered.max_dur);
    double best = kInf;
    int best_d = -1;
    for (int d = 0; d <= cap; ++d) {
      double v = base.layered.dist[static_cast<std::size_t>(sink) * stride + d];
      if (v < best - 1e-15) {
        best = v;
        best_d = d;
      }
    }
    if (best_d >= 0 && best - lambda_w < -opts.epsilon)
      finish(base.extract_layered(base.layered, sink, best_d), best);
  };

  const int yen_budget = opts.exact_fallback ? std::min(opts.k_max, 4) : opts.k_max;

  // Deviation enumeration in ascending modified cost (Yen). Inadmissible
  // paths stay in the accepted list so their deviations are generated too.
  std::vector<Candidate> accepted;
  accepted.push_back({best_cost, std::move(shortest)});
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> heap;
  std::unordered_set<std::uint64_t> seen;
  auto hash_path = [](std::span<const std::int32_t> arcs) {
    std::uint64_t h = 1469598103934665603ull;
    for (std::int32_t a : arcs) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(a));
      h *= 1099511628211ull;
    }
    return h;
  };
  seen.insert(hash_path(accepted[0].arcs));

  Sweep spur(net_, sc_);
  spur.q_w = base.q_w;
  spur.run_price = run_price;
  spur.station_price = station_price;
  spur.dual_arc = base.dual_arc;
  spur.arc_allowed = base.arc_allowed;
  std::unordered_set<std::int32_t> banned_arcs;
  std::vector<char> banned_nodes(net_.nodes.size(), 0);
  spur.banned_arcs = &banned_arcs;
  spur.banned_nodes = &banned_nodes;

  while (static_cast<int>(accepted.size()) <= yen_budget) {
    const Candidate& last = accepted.back();
    // Root costs along the last accepted path.
    double root_cost = 0.0;
    int spur_node = source;
    for (size_t i = 0; i < last.arcs.size(); ++i) {
      banned_arcs.clear();
      std::fill(banned_nodes.begin(), banned_nodes.end(), 0);
      // Ban the next arc of every accepted path sharing this root.
      for (const Candidate& p : accepted)
        if (p.arcs.size() > i &&
            std::equal(last.arcs.begin(), last.arcs.begin() + i, p.arcs.begin()))
          banned_arcs.insert(p.arcs[i]);
      // Ban root nodes except the spur node.
      int node = source;
      for (size_t j = 0; j < i; ++j) {
        banned_nodes[node] = 1;
        node = net_.arcs[last.arcs[j]].head;
      }
      spur_node = node;

      spur.reset();
      spur.dist[spur_node] = 0.0;
      spur.run();
      if (spur.dist[sink] < kInf) {
        Candidate cand;
        cand.cost = root_cost + spur.dist[sink];
        cand.arcs.assign(last.arcs.begin(), last.arcs.begin() + i);
        auto tail = spur.extract(sink);
        cand.arcs.insert(cand.arcs.end(), tail.begin(), tail.end());
        if (seen.insert(hash_path(cand.arcs)).second) heap.push(std::move(cand));
      }
      root_cost += base.arc_cost(last.arcs[i]);
    }

    if (heap.empty()) return res;  // admissible set exhausted
    Candidate next = heap.top();
    heap.pop();
    ++res.paths_examined;
    if (next.cost - lambda_w >= -opts.epsilon) return res;  // later candidates only cost more
    if (path_duration(net_, next.arcs) <= limit + 1e-9) {
      finish(std::move(next.arcs), next.cost);
      return res;
    }
    accepted.push_back(std::move(next));
  }
  if (opts.exact_fallback) {
    exact_resolve();
    return res;
  }
  res.truncated = true;  // cap reached with improving candidates left
  return res;
}

namespace {

int finite_limit_cap(double limit) {
  constexpr double big = 1e9;
  if (limit >= big) return 0;
  return static_cast<int>(limit + 1e-9);
}

}  // namespace

PricingResult Pricer::price_od(int od, const RmpSolution& duals,
                               std::span<const double> run_price,
                               std::span<const double> station_price,
                               const PricingOptions& opts) const {
  Sweep sweep(net_, sc_);
  sweep.q_w = sc_.demand[od].infection_rate;
  sweep.run_price = run_price;
  sweep.station_price = station_price;
  sweep.dual_arc = duals.dual_arc;
  sweep.arc_allowed = opts.arc_allowed;
  sweep.source = net_.od_source[od];
  sweep.dist[sweep.source] = 0.0;
  sweep.run();
  return price_in_sweep(od, sweep, finite_limit_cap(duration_limit(od)), duals, run_price,
                        station_price, opts);
}

std::vector<PricingResult> Pricer::price_all(const RmpSolution& duals,
                                             std::span<const double> run_price,
                                             std::span<const double> station_price,
                                             const PricingOptions& opts) const {
  std::vector<PricingResult> results(sc_.demand.size());
  const int n_groups = static_cast<int>(groups_.size());

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (opts.parallel)
#endif
  for (int g = 0; g < n_groups; ++g) {
    Sweep sweep(net_, sc_);
    const auto& ods = groups_[g];
    sweep.q_w = sc_.demand[ods.front()].infection_rate;
    sweep.run_price = run_price;
    sweep.station_price = station_price;
    sweep.dual_arc = duals.dual_arc;
    sweep.arc_allowed = opts.arc_allowed;
    sweep.source = net_.od_source[ods.front()];
    sweep.dist[sweep.source] = 0.0;
    sweep.run();
    int lmax = 0;
    for (int od : ods) lmax = std::max(lmax, finite_limit_cap(duration_limit(od)));
    for (int od : ods)
      results[od] = price_in_sweep(od, sweep, lmax, duals, run_price, station_price, opts);
  }
  return results;
}

}  // namespace transit
