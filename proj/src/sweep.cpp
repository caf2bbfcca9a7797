#include "transit/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

namespace transit {

namespace {

constexpr double kWalkPerRailMinute = 3.0;  // walking surrogate for station-to-station legs

std::vector<std::string> line_groups(const Scenario& sc) {
  std::vector<std::string> order;
  for (const auto& l : sc.net.lines) {
    std::string g = l.id.substr(0, l.id.find('_'));
    if (std::find(order.begin(), order.end(), g) == order.end()) order.push_back(g);
  }
  return order;
}

// In-vehicle shortest times between stations over the full candidate line set,
// used as the geometry behind the walking surrogate.
std::vector<std::vector<double>> station_rail_minutes(const Scenario& sc) {
  const auto& pn = sc.net;
  const std::size_t n = pn.stations.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
  for (const auto& l : pn.lines)
    for (std::size_t i = 0; i + 1 < l.stops.size(); ++i) {
      auto a = static_cast<std::size_t>(l.stops[i].station);
      auto b = static_cast<std::size_t>(l.stops[i + 1].station);
      d[a][b] = std::min(d[a][b], static_cast<double>(l.segment_times[i]));
      d[b][a] = std::min(d[b][a], static_cast<double>(l.segment_times[i]));
    }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

// Restricts the scenario to the first `groups` line groups and walks every
// origin/destination to its nearest covered station.
Scenario restrict_lines(const Scenario& base, int groups) {
  Scenario sc = base;
  auto order = line_groups(base);
  if (groups < 1 || groups > static_cast<int>(order.size()))
    throw std::invalid_argument("lines_opened point outside the group count");
  std::vector<std::string> open(order.begin(), order.begin() + groups);

  std::vector<std::size_t> keep;
  for (std::size_t l = 0; l < base.net.lines.size(); ++l) {
    std::string g = base.net.lines[l].id.substr(0, base.net.lines[l].id.find('_'));
    if (std::find(open.begin(), open.end(), g) != open.end()) keep.push_back(l);
  }
  std::vector<Line> lines;
  for (std::size_t l : keep) lines.push_back(base.net.lines[l]);
  sc.net.lines = std::move(lines);
  for (auto& s : sc.net.stations) s.terminal = false;
  for (const auto& l : sc.net.lines) {
    sc.net.stations[l.stops.front().station].terminal = true;
    sc.net.stations[l.stops.back().station].terminal = true;
  }

  std::vector<char> covered(sc.net.stations.size(), 0);
  for (const auto& l : sc.net.lines)
    for (const auto& st : l.stops) covered[st.station] = 1;

  auto rail = station_rail_minutes(base);
  auto nearest = [&](const std::vector<WalkTime>& walks, int loc, bool from_side) {
    // direct walks first, then walk + scaled rail as the surrogate
    double best = std::numeric_limits<double>::infinity();
    int best_s = -1;
    for (const auto& w : walks) {
      int area = from_side ? w.from : w.to;
      int s0 = from_side ? w.to : w.from;
      if (area != loc) continue;
      for (std::size_t s = 0; s < covered.size(); ++s) {
        if (!covered[s]) continue;
        double t = w.minutes + (s == static_cast<std::size_t>(s0)
                                    ? 0.0
                                    : kWalkPerRailMinute * rail[s0][s]);
        if (t < best - 1e-9 || (std::abs(t - best) <= 1e-9 && static_cast<int>(s) < best_s)) {
          best = t;
          best_s = static_cast<int>(s);
        }
      }
    }
    return std::make_pair(best_s, best);
  };

  std::vector<WalkTime> os, sd;
  for (std::size_t o = 0; o < sc.net.origins.size(); ++o) {
    auto [s, t] = nearest(base.net.walk_os, static_cast<int>(o), true);
    if (s >= 0) os.push_back({static_cast<int>(o), s, static_cast<int>(std::lround(t))});
  }
  for (std::size_t dzn = 0; dzn < sc.net.destinations.size(); ++dzn) {
    auto [s, t] = nearest(base.net.walk_sd, static_cast<int>(dzn), false);
    if (s >= 0) sd.push_back({s, static_cast<int>(dzn), static_cast<int>(std::lround(t))});
  }
  sc.net.walk_os = std::move(os);
  sc.net.walk_sd = std::move(sd);
  return sc;
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const LrConfig& config) {
  for (std::size_t i = 0; i + 1 < spec.points.size(); ++i)
    if (spec.points[i] >= spec.points[i + 1])
      throw std::invalid_argument("sweep points must be strictly increasing");
  if (spec.axis == SweepSpec::Axis::BudgetFraction)
    for (double p : spec.points)
      if (p <= 0.0 || p > 1.0)
        throw std::invalid_argument("budget fractions must lie in (0, 1]");

  const int n = static_cast<int>(spec.points.size());
  std::vector<SweepRow> rows(n);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int i = 0; i < n; ++i) {
    Scenario sc = spec.base;
    switch (spec.axis) {
      case SweepSpec::Axis::BudgetFraction:
        sc.params.budget *= spec.points[i];
        break;
      case SweepSpec::Axis::VehicleCapacity:
        sc.params.vehicle_capacity = spec.points[i];
        break;
      case SweepSpec::Axis::LinesOpened:
        sc = restrict_lines(spec.base, static_cast<int>(spec.points[i]));
        break;
    }
    SpaceTimeNetwork net = expand(sc, make_dispatch_grid(sc));
    LrSolver solver(sc, net, config);
    LrState state = solver.run();

    SweepRow& row = rows[i];
    row.point = spec.points[i];
    row.infeasible = state.infeasible;
    row.best_ub = state.best_ub;
    row.runs_per_line.assign(spec.base.net.lines.size(), 0);
    for (std::size_t r = 0; r < net.runs.size(); ++r) {
      if (!state.incumbent_design.dispatch.empty() && state.incumbent_design.dispatch[r]) {
        const std::string& id = sc.net.lines[net.runs[r].line].id;
        for (std::size_t l = 0; l < spec.base.net.lines.size(); ++l)
          if (spec.base.net.lines[l].id == id) ++row.runs_per_line[l];
      }
    }
    row.new_cases = evaluate(net, state.incumbent_flows, sc).total_new_cases;
    for (const auto& e : state.incumbent_flows) {
      const StArc& arc = net.arcs[e.arc];
      if (arc.kind == ArcKind::Travel || arc.kind == ArcKind::Wait)
        row.travel_in_system += e.flow * arc.duration;
      else if (arc.kind == ArcKind::Os || arc.kind == ArcKind::Sd)
        row.travel_out_system += e.flow * arc.duration;
    }
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const Scenario& sc, std::ostream& out) {
  out << "point,status,new_cases,best_ub,travel_in_system,travel_out_system";
  for (const auto& l : sc.net.lines) out << ",runs_" << l.id;
  out << "\n";
  char buf[128];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof buf, "%.12g,%s,", row.point,
                  row.infeasible ? "infeasible" : "feasible");
    out << buf;
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g", row.new_cases, row.best_ub,
                  row.travel_in_system, row.travel_out_system);
    out << buf;
    for (int v : row.runs_per_line) out << "," << v;
    out << "\n";
  }
}

}  // namespace transit
