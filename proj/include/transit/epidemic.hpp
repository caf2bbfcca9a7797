#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "transit/model.hpp"
#include "transit/timexpand.hpp"

namespace transit {

// Sparse per-commodity arc flow.
struct FlowEntry {
  std::int32_t od = -1;
  std::int32_t arc = -1;
  double flow = 0.0;
};
using FlowVector = std::vector<FlowEntry>;

struct ArcExposure {
  std::int32_t arc = -1;
  double exposure_minutes = 0.0;  // susceptible person-minutes, all origins
  double infection_rate = 0.0;    // infectious share of the arc's riders; 0 on empty arcs
};

struct InfectionReport {
  double total_new_cases = 0.0;
  std::vector<double> per_origin;    // indexed like PhysicalNetwork::origins
  std::vector<ArcExposure> per_arc;  // arcs carrying flow, ascending arc id
};

// Cost of one arc in the multiplier-priced flow subproblem: infection exposure
// on travel/wait arcs plus the dualized run price, the dualized station price
// on walking arcs, the penalty on unserved-demand arcs, zero elsewhere.
double arc_cost_with_multipliers(const StArc& arc, double od_infection_rate,
                                 const ScenarioParams& params,
                                 std::span<const double> run_price,
                                 std::span<const double> station_price);

// Expected new infections caused by the given flows. Parallel over arcs; the
// result is identical for any thread count.
InfectionReport evaluate(const SpaceTimeNetwork& net, const FlowVector& flows,
                         const Scenario& scenario);

// Single-threaded reference implementation with the same contract.
InfectionReport evaluate_serial(const SpaceTimeNetwork& net, const FlowVector& flows,
                                const Scenario& scenario);

// Independent check: explicit per-origin, per-arc accumulation of exposure
// times infection share, without the algebraic shortcut used by evaluate().
// Guarded to small instances (<= 10^4 flow entries).
double brute_force_oracle(const SpaceTimeNetwork& net, const FlowVector& flows,
                          const Scenario& scenario);

void write_infections_csv(const InfectionReport& report, const Scenario& scenario,
                          std::ostream& out);
void write_arc_exposure_csv(const InfectionReport& report, const SpaceTimeNetwork& net,
                            const Scenario& scenario, std::ostream& out);

}  // namespace transit
