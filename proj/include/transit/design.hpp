#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "transit/model.hpp"
#include "transit/timexpand.hpp"

namespace transit {

struct DesignVector {
  std::vector<std::uint8_t> dispatch;      // per candidate run
  std::vector<std::uint8_t> line_open;     // per line
  std::vector<std::uint8_t> station_open;  // per station
  std::vector<int> fleet;                  // vehicles staged per station at time zero

  static DesignVector all_closed(const Scenario& scenario, const SpaceTimeNetwork& net);
  static DesignVector all_open(const Scenario& scenario, const SpaceTimeNetwork& net);
};

struct DesignObjective {
  double value = 0.0;        // multiplier-weighted capacity objective (minimization form, <= 0)
  double budget_used = 0.0;
};

struct FleetCheck {
  bool feasible = true;
  int station = -1;  // first violation
  int tick = -1;
};

// Vehicle-count feasibility: every terminal keeps a nonnegative vehicle count
// through the horizon (departures draw from the first stop's pool, arrivals
// return to the last stop's pool after the run), and staged vehicles respect
// the total fleet.
FleetCheck fleet_feasible(const DesignVector& design, const Scenario& scenario,
                          const SpaceTimeNetwork& net);

// Cheapest feasible staging: per-terminal peak deficit. Ignores the fleet
// total; callers compare the sum against it.
std::vector<int> required_fleet(std::span<const std::uint8_t> dispatch, const Scenario& scenario,
                                const SpaceTimeNetwork& net);

// Dispatch costs plus opening charges (and closing charges for initially open
// facilities that get shut).
double budget_of(const DesignVector& design, const Scenario& scenario,
                 const SpaceTimeNetwork& net);

struct DesignResult {
  DesignVector design;
  DesignObjective objective;
  bool feasible = false;
  long nodes = 0;
  double bound_gap = 0.0;  // proven optimality gap (absolute)
};

// Chooses the design maximizing multiplier-weighted capacity subject to the
// budget, dispatch-implies-open and fleet constraints, by branch and bound
// with a fractional-knapsack bound (fleet relaxed, checked on integral
// candidates). Deterministic: best-bound search with node-id tie-breaks.
DesignResult solve_design_subproblem(std::span<const double> run_price,
                                     std::span<const double> station_price,
                                     const Scenario& scenario, const SpaceTimeNetwork& net,
                                     double rel_gap = 1e-6);

}  // namespace transit
