#include "transit/rmp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace transit {

namespace {

std::uint64_t hash_arcs(std::span<const std::int32_t> arcs) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::int32_t a : arcs) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(a));
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

double PathColumn::cost(const ScenarioParams& params, double od_infection_rate,
                        std::span<const double> run_price,
                        std::span<const double> station_price) const {
  if (is_penalty) return params.penalty;
  double c = params.transmission_rate * params.susceptible_ratio * od_infection_rate *
             exposure_minutes;
  for (std::int32_t r : runs)
    if (r < static_cast<std::int32_t>(run_price.size())) c += run_price[r];
  for (std::int32_t s : stations)
    if (s < static_cast<std::int32_t>(station_price.size())) c += station_price[s];
  return c;
}

PathColumn make_column(const SpaceTimeNetwork& net, int od, std::span<const std::int32_t> arcs) {
  PathColumn col;
  col.od = od;
  col.arcs.assign(arcs.begin(), arcs.end());
  for (std::int32_t a : arcs) {
    const StArc& arc = net.arcs[a];
    col.duration += arc.duration;
    if (arc.kind == ArcKind::Travel || arc.kind == ArcKind::Wait)
      col.exposure_minutes += arc.duration;
    if (arc.kind == ArcKind::Travel) col.runs.push_back(arc.run);
    if (arc.kind == ArcKind::Os || arc.kind == ArcKind::Sd) col.stations.push_back(arc.station);
    if (SpaceTimeNetwork::capacitated(arc.kind)) col.cap_arcs.push_back(a);
  }
  std::sort(col.runs.begin(), col.runs.end());
  col.runs.erase(std::unique(col.runs.begin(), col.runs.end()), col.runs.end());
  std::sort(col.cap_arcs.begin(), col.cap_arcs.end());
  col.key = hash_arcs(col.arcs);
  return col;
}

PathColumn make_penalty_column(const SpaceTimeNetwork& net, int od) {
  PathColumn col;
  col.od = od;
  col.is_penalty = true;
  col.arcs = {net.od_penalty_arc[od]};
  col.key = hash_arcs(col.arcs);
  return col;
}

RmpSolver::RmpSolver(const SpaceTimeNetwork& net, const Scenario& sc) : net_(net), sc_(sc) {
  const int n_od = static_cast<int>(sc.demand.size());
  od_cols_.resize(n_od);
  od_keys_.resize(n_od);
  od_penalty_col_.resize(n_od);
  od_active_.assign(n_od, 0);
  od_row_.assign(n_od, -1);
  arc_row_.assign(net.arcs.size(), -1);
  for (int w = 0; w < n_od; ++w) {
    PathColumn pen = make_penalty_column(net, w);
    od_keys_[w].insert(pen.key);
    od_cols_[w].push_back(static_cast<int>(pool_.size()));
    od_penalty_col_[w] = static_cast<int>(pool_.size());
    pool_.push_back(std::move(pen));
    col_lp_.push_back(-1);
  }
}

double RmpSolver::column_cost(int c, std::span<const double> run_price,
                              std::span<const double> station_price) const {
  const PathColumn& col = pool_[c];
  return col.cost(sc_.params, sc_.demand[col.od].infection_rate, run_price, station_price);
}

void RmpSolver::push_column_into_lp(int c) {
  const PathColumn& col = pool_[c];
  std::vector<std::pair<int, double>> entries;
  entries.emplace_back(od_row_[col.od], 1.0);
  for (std::int32_t a : col.cap_arcs)
    if (arc_row_[a] >= 0) entries.emplace_back(arc_row_[a], 1.0);
  col_lp_[c] = lp_.add_column(0.0, entries);
}

void RmpSolver::activate_commodity(int od) {
  if (od_active_[od]) return;
  od_active_[od] = 1;
  od_row_ [od] = lp_.add_row(RevisedSimplex::RowSense::Equal, sc_.demand[od].demand, {});
  for (int c : od_cols_[od]) push_column_into_lp(c);
  lp_.attach_row_basis(od_row_[od], col_lp_[od_penalty_col_[od]]);
}

int RmpSolver::ensure_capacity_row(std::int32_t arc) {
  if (arc_row_[arc] >= 0) return arc_row_[arc];
  std::vector<std::pair<int, double>> entries;
  for (std::size_t c = 0; c < pool_.size(); ++c) {
    if (col_lp_[c] < 0) continue;
    const auto& caps = pool_[c].cap_arcs;
    if (std::binary_search(caps.begin(), caps.end(), arc))
      entries.emplace_back(col_lp_[c], 1.0);
  }
  arc_row_[arc] = lp_.add_row(RevisedSimplex::RowSense::LessEqual, net_.arcs[arc].capacity, entries);
  rowed_arcs_.push_back(arc);
  return arc_row_[arc];
}

int RmpSolver::add_columns(std::vector<PathColumn> columns) {
  int added = 0;
  for (auto& col : columns) {
    if (col.od < 0 || col.od >= static_cast<int>(od_cols_.size()))
      throw std::invalid_argument("column references an unknown commodity");
    if (!od_keys_[col.od].insert(col.key).second) {
      ++duplicates_;
      continue;
    }
    int c = static_cast<int>(pool_.size());
    od_cols_[col.od].push_back(c);
    pool_.push_back(std::move(col));
    col_lp_.push_back(-1);
    const PathColumn& stored = pool_[c];
    if (od_active_[stored.od]) {
      push_column_into_lp(c);
    } else {
      // A pinned commodity must not own paths through the working set.
      bool crosses = false;
      for (std::int32_t a : stored.cap_arcs)
        if (arc_row_[a] >= 0) {
          crosses = true;
          break;
        }
      if (crosses) activate_commodity(stored.od);
    }
    ++added;
  }
  return added;
}

RmpSolution RmpSolver::solve(std::span<const double> run_price,
                             std::span<const double> station_price) {
  const int n_od = static_cast<int>(od_cols_.size());
  cost_scratch_.resize(pool_.size());
  for (std::size_t c = 0; c < pool_.size(); ++c) {
    cost_scratch_[c] = column_cost(static_cast<int>(c), run_price, station_price);
    if (col_lp_[c] >= 0) lp_.set_cost(col_lp_[c], cost_scratch_[c]);
  }

  std::vector<int> pinned_pick(n_od, -1);
  auto pick_pinned = [&](int w) {
    int best = -1;
    for (int c : od_cols_[w])
      if (best < 0 || cost_scratch_[c] < cost_scratch_[best]) best = c;
    pinned_pick[w] = best;
  };
  for (int w = 0; w < n_od; ++w)
    if (!od_active_[w]) pick_pinned(w);

  std::vector<double> load(net_.arcs.size(), 0.0);
  std::vector<std::int32_t> touched;

  while (true) {
    if (lp_.row_count() > 0) lp_.solve();

    // Arc loads from LP flows plus pinned assignments.
    for (std::int32_t a : touched) load[a] = 0.0;
    touched.clear();
    auto add_load = [&](const PathColumn& col, double f) {
      if (f <= 0.0) return;
      for (std::int32_t a : col.cap_arcs) {
        if (load[a] == 0.0) touched.push_back(a);
        load[a] += f;
      }
    };
    for (std::size_t c = 0; c < pool_.size(); ++c)
      if (col_lp_[c] >= 0) add_load(pool_[c], lp_.primal_value(col_lp_[c]));
    for (int w = 0; w < n_od; ++w)
      if (!od_active_[w] && pinned_pick[w] >= 0)
        add_load(pool_[pinned_pick[w]], sc_.demand[w].demand);

    std::vector<std::int32_t> violated;
    for (std::int32_t a : touched)
      if (load[a] > net_.arcs[a].capacity + 1e-7) violated.push_back(a);
    if (violated.empty()) break;
    std::sort(violated.begin(), violated.end());

    // Commodities owning a path across a newly cut arc join the LP first so
    // the new rows see their columns.
    for (std::int32_t a : violated)
      for (int w = 0; w < n_od; ++w) {
        if (od_active_[w]) continue;
        for (int c : od_cols_[w]) {
          const auto& caps = pool_[c].cap_arcs;
          if (std::binary_search(caps.begin(), caps.end(), a)) {
            activate_commodity(w);
            for (int cc : od_cols_[w]) lp_.set_cost(col_lp_[cc], cost_scratch_[cc]);
            break;
          }
        }
      }
    for (std::int32_t a : violated) ensure_capacity_row(a);
  }

  RmpSolution sol;
  sol.flows.assign(pool_.size(), 0.0);
  sol.dual_od.assign(n_od, 0.0);
  sol.dual_arc.assign(net_.arcs.size(), 0.0);
  for (std::size_t c = 0; c < pool_.size(); ++c)
    if (col_lp_[c] >= 0) sol.flows[c] = std::max(lp_.primal_value(col_lp_[c]), 0.0);
  for (int w = 0; w < n_od; ++w) {
    if (od_active_[w]) {
      sol.dual_od[w] = lp_.duals()[od_row_[w]];
    } else if (pinned_pick[w] >= 0) {
      sol.flows[pinned_pick[w]] = sc_.demand[w].demand;
      sol.dual_od[w] = cost_scratch_[pinned_pick[w]];
    }
  }
  for (std::int32_t a : rowed_arcs_) {
    double lam = std::min(lp_.duals()[arc_row_[a]], 0.0);
    sol.dual_arc[a] = lam;
    sol.binding.emplace_back(a, lam);
  }
  double obj = 0.0;
  for (std::size_t c = 0; c < pool_.size(); ++c) {
    if (sol.flows[c] == 0.0) continue;
    obj += sol.flows[c] * cost_scratch_[c];
    if (pool_[c].is_penalty) sol.penalty_flow += sol.flows[c];
  }
  sol.objective = obj;
  sol.residual = lp_.row_count() > 0 ? lp_.residual() : 0.0;
  return sol;
}

void RmpSolver::dump_lp(std::ostream& out) const {
  out << "\\ restricted master (active part); costs from the last solve\n";
  out << "Minimize\n obj:";
  bool first = true;
  for (std::size_t c = 0; c < pool_.size(); ++c) {
    if (col_lp_[c] < 0) continue;
    double cost = c < cost_scratch_.size() ? cost_scratch_[c] : 0.0;
    out << (first ? " " : " + ") << cost << " f" << c;
    first = false;
  }
  out << "\nSubject To\n";
  for (std::size_t w = 0; w < od_cols_.size(); ++w) {
    if (!od_active_[w]) continue;
    out << " demand_" << w << ":";
    for (int c : od_cols_[w]) out << " + f" << c;
    out << " = " << sc_.demand[w].demand << "\n";
  }
  for (std::int32_t a : rowed_arcs_) {
    out << " cap_" << a << ":";
    for (std::size_t c = 0; c < pool_.size(); ++c) {
      if (col_lp_[c] < 0) continue;
      const auto& caps = pool_[c].cap_arcs;
      if (std::binary_search(caps.begin(), caps.end(), a)) out << " + f" << c;
    }
    out << " <= " << net_.arcs[a].capacity << "\n";
  }
  out << "End\n";
}

// The flow vector may be a prefix of the pool: columns added after a solve
// carry no flow.
FlowVector to_flow_vector(const std::vector<PathColumn>& pool, std::span<const double> flows) {
  FlowVector fv;
  std::size_t n = std::min(pool.size(), flows.size());
  for (std::size_t c = 0; c < n; ++c) {
    if (flows[c] <= 0.0) continue;
    for (std::int32_t a : pool[c].arcs) fv.push_back({pool[c].od, a, flows[c]});
  }
  return fv;
}

std::vector<double> arc_loads(const SpaceTimeNetwork& net, const std::vector<PathColumn>& pool,
                              std::span<const double> flows) {
  std::vector<double> load(net.arcs.size(), 0.0);
  std::size_t n = std::min(pool.size(), flows.size());
  for (std::size_t c = 0; c < n; ++c) {
    if (flows[c] <= 0.0) continue;
    for (std::int32_t a : pool[c].arcs) load[a] += flows[c];
  }
  return load;
}

}  // namespace transit
