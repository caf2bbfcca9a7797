#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "transit/lagrangian.hpp"
#include "transit/model.hpp"

namespace transit {

struct SweepSpec {
  enum class Axis { BudgetFraction, VehicleCapacity, LinesOpened };
  Axis axis = Axis::BudgetFraction;
  std::vector<double> points;  // strictly monotone; budget fractions in (0,1]
  Scenario base;
  std::uint64_t seed = 0;
};

struct SweepRow {
  double point = 0.0;
  bool infeasible = false;  // incumbent still carries penalty flow after max_iter
  double new_cases = 0.0;
  double best_ub = 0.0;
  double travel_in_system = 0.0;   // passenger-minutes on travel+wait arcs
  double travel_out_system = 0.0;  // passenger-minutes on walking arcs
  std::vector<int> runs_per_line;
};

// One full optimization per point. For the LinesOpened axis, lines are
// grouped by the id prefix before the first underscore, point k opens the
// first k groups, and demand walks to the nearest station covered by an open
// line (walking arcs augmented before expansion when needed).
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const LrConfig& config);

void write_sweep_csv(const std::vector<SweepRow>& rows, const Scenario& scenario,
                     std::ostream& out);

}  // namespace transit
