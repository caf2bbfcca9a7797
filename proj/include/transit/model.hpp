#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace transit {

// Error raised by scenario loading/validation. Messages name the offending
// entity so CLI users can fix the file.
class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

struct Station {
  std::string id;
  std::vector<std::string> platforms;  // at least one
  bool terminal = false;               // first/last stop of some line
  bool open_initial = false;
  double open_cost = 0.0;
  double close_cost = 0.0;
};

struct LineStop {
  int station = -1;   // index into PhysicalNetwork::stations
  int platform = -1;  // index into Station::platforms
};

struct Line {
  std::string id;
  std::vector<LineStop> stops;    // length >= 2
  std::vector<int> segment_times; // minutes, one per consecutive stop pair, all > 0
  int run_duration = 0;           // sum of segment_times
  double dispatch_cost = 0.0;     // cost of one run (may later vary by tick)
  bool open_initial = false;
  double open_cost = 0.0;
  double close_cost = 0.0;
};

// Time-dependent demand: passengers wanting to leave `origin` for
// `destination` around `depart_tick`.
struct OdPair {
  int origin = -1;       // index into PhysicalNetwork::origins
  int destination = -1;  // index into PhysicalNetwork::destinations
  int depart_tick = 0;
  double demand = 0.0;
  double infection_rate = 0.0;  // probability a traveller from this OD is infectious
  int tolerance = 0;            // minutes of acceptable detour over the reference path
};

struct ScenarioParams {
  double transmission_rate = 0.0;   // per minute (files may give per day)
  double susceptible_ratio = 1.0;
  double budget = 0.0;
  int fleet_total = 0;
  double vehicle_capacity = 0.0;    // per travel arc
  double platform_capacity = 0.0;   // per wait/transfer arc
  int horizon = 0;                  // ticks
  int tick_minutes = 1;
  int dispatch_step = 10;           // spacing of candidate dispatch ticks
  int dispatch_window = 0;          // candidate dispatches lie in [0, window); 0 = horizon
  int shift_min = -30;              // earliest station-entry shift relative to desired departure
  int shift_max = 30;               // latest such shift
  double penalty = 1e4;             // cost per passenger left unserved
  int tolerance = 30;               // default detour tolerance, minutes
};

struct WalkTime {
  int from = -1;
  int to = -1;
  int minutes = 0;
};

struct PhysicalNetwork {
  std::vector<Station> stations;
  std::vector<Line> lines;
  std::vector<std::string> origins;
  std::vector<std::string> destinations;
  std::vector<WalkTime> walk_os;  // origin -> station
  std::vector<WalkTime> walk_sd;  // station -> destination

  int station_index(const std::string& id) const;
  int origin_index(const std::string& id) const;
  int destination_index(const std::string& id) const;
  // Global platform numbering: platforms of station 0 first, then station 1, ...
  int platform_count() const;
  int platform_gid(int station, int platform) const;
};

struct Scenario {
  PhysicalNetwork net;
  ScenarioParams params;
  std::vector<OdPair> demand;

  double total_demand() const;
};

// Parses and validates a scenario file (JSON). Throws ScenarioError naming the
// offending entity on parse failures, dangling references or invariant
// violations.
Scenario load_scenario(const std::filesystem::path& path);

void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

// Full invariant check; load_scenario runs this automatically.
void validate_scenario(const Scenario& scenario);

// Builds the square-grid benchmark scenario: rows x cols stations, one line
// per row and column in each direction, 5-minute segments, 25-minute walks
// between neighbouring areas, Poisson(demand_intensity) demand per origin,
// destination and minute. Deterministic for a fixed seed.
Scenario generate_toy_grid(int rows, int cols, double demand_intensity, std::uint64_t seed);

}  // namespace transit
