#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "transit/model.hpp"
#include "transit/rmp.hpp"
#include "transit/timexpand.hpp"

namespace transit {

struct PricingResult {
  std::int32_t od = -1;
  std::optional<PathColumn> best;
  double reduced_cost = 0.0;
  int paths_examined = 0;
  bool truncated = false;  // enumeration cap hit with candidates still improving
};

struct PricingOptions {
  double epsilon = 1e-9;  // reduced-cost cutoff
  int k_max = 200;        // enumeration cap per commodity
  bool parallel = true;
  // Every arc of the expanded network spans exactly its duration in time, so
  // a path's duration is its arrival tick minus the desired departure and the
  // detour bound is an arrival deadline: the cheapest admissible path falls
  // out of one sweep by reading sink entries with admissible ticks. That
  // shortcut is the default; forcing enumeration exercises the deviation-
  // based k-shortest-path search instead (same results, slower).
  bool force_enumeration = false;
  // Under forced enumeration: when the cap is hit with improving candidates
  // left, resolve the commodity exactly with a duration-indexed DP instead of
  // reporting a truncated result.
  bool exact_fallback = true;
  std::span<const std::uint8_t> arc_allowed;  // optional mask (empty = everything)
};

// Column-generation pricing over the time-expanded network. Commodities
// sharing an origin node and infectiousness factor share one shortest-path
// sweep; a commodity whose cheapest path exceeds its detour allowance falls
// back to deviation-based k-shortest-path enumeration in ascending modified
// cost, which keeps the search exact: candidates arrive in cost order, so the
// first admissible one is the admissible minimum.
class Pricer {
 public:
  Pricer(const SpaceTimeNetwork& net, const Scenario& scenario);

  // Zero-wait shortest travel time on the physical network (walk, ride,
  // transfer; no waiting), restricted to lines with at least one candidate
  // run. Infinity when unreachable.
  double reference_shortest_cost(int origin, int destination) const;

  // reference + tolerance; the admissibility bound on path duration.
  double duration_limit(int od) const;

  PricingResult price_od(int od, const RmpSolution& duals, std::span<const double> run_price,
                         std::span<const double> station_price,
                         const PricingOptions& opts = {}) const;

  // Prices every commodity; results indexed by commodity. Parallel over
  // origin groups with a deterministic merge.
  std::vector<PricingResult> price_all(const RmpSolution& duals,
                                       std::span<const double> run_price,
                                       std::span<const double> station_price,
                                       const PricingOptions& opts = {}) const;

 private:
  struct Sweep;
  PricingResult price_in_sweep(int od, Sweep& sweep, int group_max_dur, const RmpSolution& duals,
                               std::span<const double> run_price,
                               std::span<const double> station_price,
                               const PricingOptions& opts) const;

  const SpaceTimeNetwork& net_;
  const Scenario& sc_;
  std::vector<std::vector<double>> reference_;  // [origin][destination]
  // Commodities grouped by (source node, infectiousness), deterministic order.
  std::vector<std::vector<int>> groups_;
  // Per sink node: (destination tick, destination node, sink-entry arc),
  // ascending tick, for the deadline shortcut.
  std::vector<std::vector<std::array<std::int32_t, 3>>> sink_entries_;
};

}  // namespace transit
