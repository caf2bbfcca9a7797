#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "transit/design.hpp"
#include "transit/epidemic.hpp"
#include "transit/model.hpp"
#include "transit/pricing.hpp"
#include "transit/rmp.hpp"
#include "transit/timexpand.hpp"

namespace transit {

struct Multipliers {
  std::vector<double> run;      // price per candidate run, >= 0
  std::vector<double> station;  // price per station gate, >= 0

  static Multipliers zeros(const SpaceTimeNetwork& net, const Scenario& scenario);
};

struct LrConfig {
  int max_iter = 1000;
  double gap_tol = 1e-3;
  double alpha = 0.1;          // step scale in the subgradient step-length rule
  int line_search_max_k = 5;   // halvings tried per iteration
  double pricing_epsilon = 1e-9;
  int k_max_paths = 200;
  bool parallel_pricing = true;
  bool verify = true;  // per-iteration invariant assertions
};

struct DualValue {
  double value = 0.0;  // flow part plus proven design bound; a valid lower bound when exact
  bool exact = true;   // false when pricing hit its enumeration cap
  double flow_objective = 0.0;
  double design_objective = 0.0;
  RmpSolution flow;
  DesignResult design;
};

struct Subgradients {
  std::vector<double> run;
  std::vector<double> station;
  double norm2 = 0.0;
};

struct RepairResult {
  double objective = std::numeric_limits<double>::infinity();
  double penalty_flow = 0.0;
  FlowVector flows;
};

struct BoundsRow {
  int iteration = 0;
  double lb = 0.0;  // dual value at this iteration's multipliers
  double ub = 0.0;  // best upper bound so far
  double gap = 0.0;
  double step = 0.0;
  double wallclock_ms = 0.0;
};

struct LrIterationInfo {
  int iteration = 0;
  double lb = 0.0, best_lb = 0.0, best_ub = 0.0, gap = 0.0, step = 0.0;
  const Multipliers* multipliers = nullptr;
  const DualValue* dual = nullptr;
  const Subgradients* subgradients = nullptr;
  const DesignVector* incumbent_design = nullptr;
  double incumbent_penalty_flow = 0.0;
};

struct LrState {
  int iterations = 0;
  double best_lb = -std::numeric_limits<double>::infinity();
  double best_ub = std::numeric_limits<double>::infinity();
  Multipliers multipliers;
  DesignVector incumbent_design;
  FlowVector incumbent_flows;
  double incumbent_penalty_flow = 0.0;
  bool infeasible = false;  // incumbent still carries penalty flow at termination
  bool converged = false;
  std::vector<double> lb_trace, ub_trace;
  std::vector<BoundsRow> trace;
};

// Alternates the column-generation flow subproblem and the design subproblem,
// updates the multipliers by projected subgradient steps with a halving line
// search that keeps the trial with the largest dual value, and repairs an
// upper bound from the accepted design each iteration.
class LrSolver {
 public:
  LrSolver(const Scenario& scenario, const SpaceTimeNetwork& net, LrConfig config);

  DualValue dual_value(const Multipliers& multipliers);
  Subgradients subgradients(const RmpSolution& flow, const DesignVector& design) const;
  RepairResult repair_upper_bound(const DesignVector& design);
  LrState run(const std::function<void(const LrIterationInfo&)>& observer = {});

  const RmpSolver& master() const { return rmp_; }
  const Pricer& pricer() const { return pricer_; }

 private:
  const Scenario& sc_;
  const SpaceTimeNetwork& net_;
  LrConfig cfg_;
  RmpSolver rmp_;
  Pricer pricer_;
  std::unordered_map<std::uint64_t, std::pair<double, double>> repair_cache_;  // obj, penalty
};

void write_bounds_csv(const LrState& state, std::ostream& out);
void write_timetable_csv(const DesignVector& design, const Scenario& scenario,
                         const SpaceTimeNetwork& net, std::ostream& out);
void write_stations_csv(const DesignVector& design, const Scenario& scenario, std::ostream& out);
void write_fleet_csv(const DesignVector& design, const Scenario& scenario, std::ostream& out);

// Reads rows of (line_id, dispatch_tick) into a design with every station
// open and every listed line open. Throws ScenarioError on unknown lines or
// off-grid ticks.
DesignVector read_timetable_csv(std::istream& in, const Scenario& scenario,
                                const SpaceTimeNetwork& net);

}  // namespace transit
