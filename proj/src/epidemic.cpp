#include "transit/epidemic.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace transit {

double arc_cost_with_multipliers(const StArc& arc, double od_infection_rate,
                                 const ScenarioParams& params,
                                 std::span<const double> run_price,
                                 std::span<const double> station_price) {
  switch (arc.kind) {
    case ArcKind::Travel:
      return params.transmission_rate * params.susceptible_ratio * arc.duration *
                 od_infection_rate +
             (arc.run >= 0 && arc.run < static_cast<int>(run_price.size())
                  ? run_price[arc.run]
                  : 0.0);
    case ArcKind::Wait:
      return params.transmission_rate * params.susceptible_ratio * arc.duration *
             od_infection_rate;
    case ArcKind::Os:
    case ArcKind::Sd:
      return arc.station >= 0 && arc.station < static_cast<int>(station_price.size())
                 ? station_price[arc.station]
                 : 0.0;
    case ArcKind::Od:
      return params.penalty;
    case ArcKind::Transfer:
    case ArcKind::Dd:
      return 0.0;
  }
  return 0.0;
}

namespace {

bool infectious(ArcKind kind) {
  return kind == ArcKind::Travel || kind == ArcKind::Wait || kind == ArcKind::Transfer;
}

struct ArcGroup {
  std::int32_t arc;
  std::int32_t first, last;  // range into the sorted entry index
};

// Shared implementation; the parallel loop is over arc groups, and all
// cross-group accumulation happens in a fixed serial order afterwards so the
// result does not depend on the thread count.
InfectionReport evaluate_impl(const SpaceTimeNetwork& net, const FlowVector& flows,
                              const Scenario& sc, bool parallel) {
  InfectionReport report;
  report.per_origin.assign(sc.net.origins.size(), 0.0);
  if (flows.empty()) return report;

  std::vector<std::int32_t> idx(flows.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (flows[a].arc != flows[b].arc) return flows[a].arc < flows[b].arc;
    return flows[a].od < flows[b].od;
  });

  std::vector<ArcGroup> groups;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && flows[idx[j]].arc == flows[idx[i]].arc) ++j;
    groups.push_back({flows[idx[i]].arc, static_cast<std::int32_t>(i), static_cast<std::int32_t>(j)});
    i = j;
  }

  const double beta = sc.params.transmission_rate;
  const double qs = sc.params.susceptible_ratio;
  const int n = static_cast<int>(groups.size());
  std::vector<ArcExposure> exposure(n);
  std::vector<double> group_cases(n, 0.0);

#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#else
  (void)parallel;
#endif
  for (int g = 0; g < n; ++g) {
    const ArcGroup& grp = groups[g];
    const StArc& arc = net.arcs[grp.arc];
    double total = 0.0, weighted = 0.0;
    for (int k = grp.first; k < grp.last; ++k) {
      const FlowEntry& e = flows[idx[k]];
      total += e.flow;
      weighted += e.flow * sc.demand[e.od].infection_rate;
    }
    double rate = total > 0.0 ? weighted / total : 0.0;
    exposure[g] = {grp.arc, qs * arc.duration * total, rate};
    if (infectious(arc.kind)) group_cases[g] = beta * qs * arc.duration * weighted;
  }

  for (int g = 0; g < n; ++g) {
    const ArcGroup& grp = groups[g];
    const StArc& arc = net.arcs[grp.arc];
    if (exposure[g].exposure_minutes > 0.0 || grp.last > grp.first)
      report.per_arc.push_back(exposure[g]);
    if (!infectious(arc.kind)) continue;
    double rate = exposure[g].infection_rate;
    for (int k = grp.first; k < grp.last; ++k) {
      const FlowEntry& e = flows[idx[k]];
      report.per_origin[sc.demand[e.od].origin] += beta * qs * e.flow * arc.duration * rate;
    }
  }
  for (double v : report.per_origin) report.total_new_cases += v;
  return report;
}

}  // namespace

InfectionReport evaluate(const SpaceTimeNetwork& net, const FlowVector& flows,
                         const Scenario& sc) {
  return evaluate_impl(net, flows, sc, true);
}

InfectionReport evaluate_serial(const SpaceTimeNetwork& net, const FlowVector& flows,
                                const Scenario& sc) {
  return evaluate_impl(net, flows, sc, false);
}

double brute_force_oracle(const SpaceTimeNetwork& net, const FlowVector& flows,
                          const Scenario& sc) {
  if (flows.size() > 10000)
    throw std::invalid_argument("brute_force_oracle: instance too large");
  const double beta = sc.params.transmission_rate;
  const double qs = sc.params.susceptible_ratio;

  std::vector<std::int32_t> arcs;
  for (const auto& e : flows) arcs.push_back(e.arc);
  std::sort(arcs.begin(), arcs.end());
  arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());

  double total = 0.0;
  for (std::size_t o = 0; o < sc.net.origins.size(); ++o) {
    double origin_cases = 0.0;
    for (std::int32_t a : arcs) {
      const StArc& arc = net.arcs[a];
      if (!infectious(arc.kind)) continue;
      double time_from_o = 0.0;   // susceptible person-minutes from origin o
      double riders = 0.0, infected_riders = 0.0;
      for (const auto& e : flows) {
        if (e.arc != a) continue;
        riders += e.flow;
        infected_riders += e.flow * sc.demand[e.od].infection_rate;
        if (sc.demand[e.od].origin == static_cast<int>(o))
          time_from_o += e.flow * arc.duration * qs;
      }
      if (riders <= 0.0) continue;
      origin_cases += beta * time_from_o * (infected_riders / riders);
    }
    total += origin_cases;
  }
  return total;
}

void write_infections_csv(const InfectionReport& report, const Scenario& sc, std::ostream& out) {
  out << "origin,new_cases\n";
  for (std::size_t o = 0; o < report.per_origin.size(); ++o)
    out << sc.net.origins[o] << "," << report.per_origin[o] << "\n";
}

void write_arc_exposure_csv(const InfectionReport& report, const SpaceTimeNetwork& net,
                            const Scenario& sc, std::ostream& out) {
  (void)sc;
  out << "arc,kind,exposure_person_minutes,infection_rate\n";
  for (const auto& e : report.per_arc)
    out << e.arc << "," << to_string(net.arcs[e.arc].kind) << "," << e.exposure_minutes << ","
        << e.infection_rate << "\n";
}

}  // namespace transit
