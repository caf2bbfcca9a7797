#pragma once

// Test-side oracles, deliberately independent of the library's algorithms:
// a dense tableau simplex, a dense network expander, exhaustive path
// enumeration, a tick-by-tick fleet simulation, and exhaustive design
// enumeration with a full-path LP.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "transit/design.hpp"
#include "transit/model.hpp"
#include "transit/timexpand.hpp"

namespace oracles {

// ---------------------------------------------------------------------------
// Textbook two-phase dense tableau simplex: min c x, A x (sense) b, x >= 0.
struct TableauLp {
  enum class Sense { Equal, LessEqual };
  std::vector<double> cost;
  std::vector<std::vector<double>> rows;  // dense coefficients
  std::vector<double> rhs;
  std::vector<Sense> sense;

  struct Solution {
    bool feasible = false;
    double objective = 0.0;
    std::vector<double> x;
    std::vector<double> duals;
  };
  Solution solve() const;
};

// ---------------------------------------------------------------------------
// Dense expansion oracle: builds the time-expanded network over every tick,
// then prunes platform ticks without events (contracting wait chains), and
// returns sorted arc descriptors comparable with the sparse expander.
struct ArcDescriptor {
  std::string tail, head;
  std::string kind;
  int duration = 0;
  double capacity = 0.0;
  std::string run_key;
  auto operator<=>(const ArcDescriptor&) const = default;
};
std::vector<ArcDescriptor> dense_expand_oracle(const transit::Scenario& sc,
                                               const transit::DispatchGrid& grid);
std::vector<ArcDescriptor> describe_arcs(const transit::SpaceTimeNetwork& net,
                                         const transit::Scenario& sc);

// ---------------------------------------------------------------------------
// All space-time paths of one commodity (penalty arc excluded), restricted to
// a design when given. Throws if more than `cap` paths exist.
std::vector<std::vector<std::int32_t>> enumerate_paths(const transit::SpaceTimeNetwork& net,
                                                       const transit::Scenario& sc, int od,
                                                       const transit::DesignVector* design,
                                                       std::size_t cap = 200000);

// Zero-wait physical shortest time, by Floyd-Warshall over stations.
double physical_reference_oracle(const transit::Scenario& sc, const transit::SpaceTimeNetwork& net,
                                 int origin, int destination);

// ---------------------------------------------------------------------------
// Tick-by-tick vehicle-count simulation (independent of the library's
// event-sorted check).
bool fleet_simulation_oracle(const transit::DesignVector& design, const transit::Scenario& sc,
                             const transit::SpaceTimeNetwork& net);

// ---------------------------------------------------------------------------
// Exact optimum by exhaustive design enumeration plus a full-path LP per
// design. Only sensible for micro instances.
struct ExactResult {
  double objective = 0.0;
  transit::DesignVector design;
  bool penalty_free = false;
};
ExactResult exhaustive_optimum(const transit::Scenario& sc, const transit::SpaceTimeNetwork& net);

// Exact flow cost for one fixed design (full-path LP, zero multipliers).
double exact_flow_cost(const transit::Scenario& sc, const transit::SpaceTimeNetwork& net,
                       const transit::DesignVector& design);

// ---------------------------------------------------------------------------
// Randomized micro instances: <= 2 lines, <= 4 dispatch ticks, <= 3 commodities.
transit::Scenario make_micro_scenario(std::uint64_t seed);

}  // namespace oracles
