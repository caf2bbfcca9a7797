#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <unordered_set>
#include <vector>

#include "transit/epidemic.hpp"
#include "transit/model.hpp"
#include "transit/simplex.hpp"
#include "transit/timexpand.hpp"

namespace transit {

// One space-time path of a commodity, with everything pricing and the master
// LP need precomputed: exposure minutes (infection cost per unit infectiousness
// factor), total duration (detour-tolerance metric), the runs and gated
// stations it touches, and its finitely capacitated arcs.
struct PathColumn {
  std::int32_t od = -1;
  std::vector<std::int32_t> arcs;
  bool is_penalty = false;

  double exposure_minutes = 0.0;        // sum of travel+wait durations
  std::int32_t duration = 0;            // sum of all arc durations
  std::vector<std::int32_t> runs;       // dispatch candidates used, ascending
  std::vector<std::int32_t> stations;   // os/sd stations crossed, with multiplicity
  std::vector<std::int32_t> cap_arcs;   // arcs with finite capacity, ascending
  std::uint64_t key = 0;                // arc-set hash for deduplication

  double cost(const ScenarioParams& params, double od_infection_rate,
              std::span<const double> run_price, std::span<const double> station_price) const;
};

PathColumn make_column(const SpaceTimeNetwork& net, int od, std::span<const std::int32_t> arcs);
PathColumn make_penalty_column(const SpaceTimeNetwork& net, int od);

struct RmpSolution {
  double objective = 0.0;
  std::vector<double> flows;     // per pool column
  std::vector<double> dual_od;   // conservation dual per commodity
  std::vector<double> dual_arc;  // capacity dual per arc (<= 0, zero off the binding set)
  std::vector<std::pair<std::int32_t, double>> binding;  // arcs with a capacity row
  double residual = 0.0;
  double penalty_flow = 0.0;
};

// Path-flow restricted master problem: conservation per commodity, per-arc
// capacities handled lazily through a growing working set (most are never
// tight). Commodities none of whose pool paths touch a working-set arc are
// "pinned" to their cheapest path outside the LP; since capacity duals are
// nonpositive, no such path can price negatively, so the shortcut is exact.
class RmpSolver {
 public:
  RmpSolver(const SpaceTimeNetwork& net, const Scenario& scenario);

  // Deduplicates by arc-set hash; duplicates are ignored. Returns the number
  // actually added.
  int add_columns(std::vector<PathColumn> columns);
  int duplicates_ignored() const { return duplicates_; }

  RmpSolution solve(std::span<const double> run_price, std::span<const double> station_price);

  const std::vector<PathColumn>& pool() const { return pool_; }
  const std::vector<std::vector<int>>& columns_of() const { return od_cols_; }

  // Text dump of the active LP for external cross-checking.
  void dump_lp(std::ostream& out) const;

 private:
  void activate_commodity(int od);
  int ensure_capacity_row(std::int32_t arc);
  void push_column_into_lp(int pool_col);
  double column_cost(int pool_col, std::span<const double> run_price,
                     std::span<const double> station_price) const;

  const SpaceTimeNetwork& net_;
  const Scenario& sc_;
  std::vector<PathColumn> pool_;
  std::vector<std::vector<int>> od_cols_;
  std::vector<std::unordered_set<std::uint64_t>> od_keys_;
  std::vector<int> od_penalty_col_;

  RevisedSimplex lp_;
  std::vector<char> od_active_;
  std::vector<int> od_row_;
  std::vector<int> col_lp_;             // pool column -> LP column (-1 when pinned side)
  std::vector<int> arc_row_;            // arc -> LP row (-1 when uncut)
  std::vector<std::int32_t> rowed_arcs_;
  std::vector<double> cost_scratch_;
  int duplicates_ = 0;
};

// Expands pool flows into the sparse per-commodity arc flows used by the
// epidemic evaluator.
FlowVector to_flow_vector(const std::vector<PathColumn>& pool, std::span<const double> flows);

// Total flow per arc (dense).
std::vector<double> arc_loads(const SpaceTimeNetwork& net, const std::vector<PathColumn>& pool,
                              std::span<const double> flows);

}  // namespace transit
