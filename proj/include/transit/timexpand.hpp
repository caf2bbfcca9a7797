#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "transit/model.hpp"

namespace transit {

enum class NodeKind : std::uint8_t { Origin, Platform, Destination, Sink };
enum class ArcKind : std::uint8_t { Transfer, Travel, Wait, Os, Sd, Dd, Od };

const char* to_string(ArcKind kind);

struct StNode {
  std::int32_t loc = -1;  // origin / station / destination index, by kind
  NodeKind kind = NodeKind::Platform;
  std::int32_t platform = -1;  // platform index within the station (Platform only)
  std::int32_t tick = 0;
};

struct StArc {
  std::int32_t tail = -1;
  std::int32_t head = -1;
  ArcKind kind = ArcKind::Wait;
  std::int32_t duration = 0;  // minutes; equals head.tick - tail.tick except dd/od
  double capacity = 0.0;      // +inf for os/sd/dd/od
  std::int32_t run = -1;      // travel arcs: index into runs
  std::int32_t station = -1;  // os/sd arcs: gated station
};

struct Run {
  std::int32_t line = -1;
  std::int32_t tick = -1;  // dispatch tick at the first stop
};

// Candidate dispatch ticks per line (same order as Scenario lines).
using DispatchGrid = std::vector<std::vector<int>>;

// Ticks 0, step, 2*step, ... below the dispatch window (or the horizon when
// no window is set), identical for every line.
DispatchGrid make_dispatch_grid(const Scenario& scenario);

// Sparse time-expanded transit network. Platform nodes exist only at event
// ticks (some candidate run arrives or departs there); origin nodes exist at
// demanded departure ticks; one aggregated sink per destination replaces the
// all-pairs destination-to-destination arcs so the graph stays acyclic.
struct SpaceTimeNetwork {
  std::vector<StNode> nodes;
  std::vector<StArc> arcs;
  std::vector<Run> runs;
  std::vector<std::pair<int, int>> truncated_runs;  // (line, tick) dropped: run exceeds horizon

  // CSR adjacency: out_arcs[out_begin[n] .. out_begin[n+1]) are arc ids with tail n.
  std::vector<std::int32_t> out_arcs;
  std::vector<std::int32_t> out_begin;

  // CSR from run id to its travel arcs, ordered along the stop sequence.
  std::vector<std::int32_t> run_arcs;
  std::vector<std::int32_t> run_arc_begin;

  std::vector<double> run_capacity;           // total capacity of a run's travel arcs
  std::vector<double> station_gate_capacity;  // nominal walk capacity gated by opening a station

  std::vector<std::vector<int>> event_ticks;  // per platform gid, sorted ascending

  // Demand plumbing, aligned with Scenario::demand.
  std::vector<std::int32_t> od_source;
  std::vector<std::int32_t> od_sink;
  std::vector<std::int32_t> od_penalty_arc;

  std::array<std::int64_t, 7> family_count{};  // indexed by ArcKind

  // Topological processing order for label-setting sweeps: non-sink nodes by
  // (tick, origin < platform < destination); platform runs of equal
  // (tick, station) are contiguous so intra-station transfers settle as a group.
  std::vector<std::int32_t> sweep_order;
  // sweep_group[i] marks the first position of each (tick, station) platform
  // group that has outgoing transfer arcs (group length follows); 0 otherwise.
  std::vector<std::int32_t> sweep_group_len;

  std::int64_t count(ArcKind kind) const { return family_count[static_cast<size_t>(kind)]; }
  // Arc families that carry a finite capacity row in the flow LP.
  static bool capacitated(ArcKind kind) {
    return kind == ArcKind::Travel || kind == ArcKind::Wait || kind == ArcKind::Transfer;
  }
  int run_index(int line, int tick) const;  // -1 when absent
};

SpaceTimeNetwork expand(const Scenario& scenario, const DispatchGrid& grid);

// Travel arcs of one run, ordered along the stop sequence. Throws
// std::invalid_argument for an unknown (line, dispatch_tick) key.
std::vector<std::int32_t> arcs_of_run(const SpaceTimeNetwork& net, int line, int dispatch_tick);

// Debug dump: tail,head,kind,duration,capacity,run_key rows.
void dump_arcs_csv(const SpaceTimeNetwork& net, const Scenario& scenario, std::ostream& out);

inline constexpr double kUncapacitated = std::numeric_limits<double>::infinity();

}  // namespace transit
