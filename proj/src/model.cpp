#include "transit/model.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace transit {

using nlohmann::json;

int PhysicalNetwork::station_index(const std::string& id) const {
  for (size_t i = 0; i < stations.size(); ++i)
    if (stations[i].id == id) return static_cast<int>(i);
  return -1;
}

int PhysicalNetwork::origin_index(const std::string& id) const {
  auto it = std::find(origins.begin(), origins.end(), id);
  return it == origins.end() ? -1 : static_cast<int>(it - origins.begin());
}

int PhysicalNetwork::destination_index(const std::string& id) const {
  auto it = std::find(destinations.begin(), destinations.end(), id);
  return it == destinations.end() ? -1 : static_cast<int>(it - destinations.begin());
}

int PhysicalNetwork::platform_count() const {
  int n = 0;
  for (const auto& s : stations) n += static_cast<int>(s.platforms.size());
  return n;
}

int PhysicalNetwork::platform_gid(int station, int platform) const {
  int base = 0;
  for (int i = 0; i < station; ++i) base += static_cast<int>(stations[i].platforms.size());
  return base + platform;
}

double Scenario::total_demand() const {
  double d = 0.0;
  for (const auto& od : demand) d += od.demand;
  return d;
}

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ScenarioError(msg); }

const json& require(const json& j, const char* key, const char* where) {
  auto it = j.find(key);
  if (it == j.end()) fail(std::string("missing '") + key + "' in " + where);
  return *it;
}

}  // namespace

void validate_scenario(const Scenario& sc) {
  const auto& net = sc.net;
  const auto& p = sc.params;

  std::set<std::string> seen;
  for (const auto& s : net.stations) {
    if (s.id.empty()) fail("station with empty id");
    if (!seen.insert(s.id).second) fail("duplicate station id '" + s.id + "'");
    if (s.platforms.empty()) fail("station '" + s.id + "' has no platforms");
    std::set<std::string> plt(s.platforms.begin(), s.platforms.end());
    if (plt.size() != s.platforms.size()) fail("station '" + s.id + "' has duplicate platform ids");
  }

  // Lines: references in range, segment times positive, duration consistent.
  std::vector<char> line_starts_or_ends(net.stations.size(), 0);
  seen.clear();
  for (const auto& l : net.lines) {
    if (!seen.insert(l.id).second) fail("duplicate line id '" + l.id + "'");
    if (l.stops.size() < 2) fail("line '" + l.id + "' has fewer than 2 stops");
    if (l.segment_times.size() + 1 != l.stops.size())
      fail("line '" + l.id + "': segment_times length must be stops-1");
    for (const auto& st : l.stops) {
      if (st.station < 0 || st.station >= static_cast<int>(net.stations.size()))
        fail("line '" + l.id + "' references an unknown station");
      const auto& s = net.stations[st.station];
      if (st.platform < 0 || st.platform >= static_cast<int>(s.platforms.size()))
        fail("line '" + l.id + "' references unknown platform at station '" + s.id + "'");
    }
    for (int t : l.segment_times)
      if (t <= 0) fail("line '" + l.id + "' has a non-positive segment time");
    int sum = std::accumulate(l.segment_times.begin(), l.segment_times.end(), 0);
    if (sum != l.run_duration)
      fail("line '" + l.id + "': run_duration does not equal the sum of segment times");
    line_starts_or_ends[l.stops.front().station] = 1;
    line_starts_or_ends[l.stops.back().station] = 1;
  }
  for (size_t i = 0; i < net.stations.size(); ++i) {
    if (net.stations[i].terminal != static_cast<bool>(line_starts_or_ends[i]))
      fail("station '" + net.stations[i].id +
           "': terminal flag must be set iff some line starts or ends there");
  }

  seen.clear();
  for (const auto& o : net.origins)
    if (!seen.insert(o).second) fail("duplicate origin id '" + o + "'");
  seen.clear();
  for (const auto& d : net.destinations)
    if (!seen.insert(d).second) fail("duplicate destination id '" + d + "'");

  std::vector<char> origin_has_walk(net.origins.size(), 0);
  std::vector<char> dest_has_walk(net.destinations.size(), 0);
  for (const auto& w : net.walk_os) {
    if (w.from < 0 || w.from >= static_cast<int>(net.origins.size()))
      fail("walk_times.os references an unknown origin");
    if (w.to < 0 || w.to >= static_cast<int>(net.stations.size()))
      fail("walk_times.os references an unknown station");
    if (w.minutes < 0) fail("negative walking time from origin '" + net.origins[w.from] + "'");
    origin_has_walk[w.from] = 1;
  }
  for (const auto& w : net.walk_sd) {
    if (w.from < 0 || w.from >= static_cast<int>(net.stations.size()))
      fail("walk_times.sd references an unknown station");
    if (w.to < 0 || w.to >= static_cast<int>(net.destinations.size()))
      fail("walk_times.sd references an unknown destination");
    if (w.minutes < 0) fail("negative walking time to destination '" + net.destinations[w.to] + "'");
    dest_has_walk[w.to] = 1;
  }

  for (const auto& od : sc.demand) {
    if (od.origin < 0 || od.origin >= static_cast<int>(net.origins.size()))
      fail("demand row references an unknown origin");
    if (od.destination < 0 || od.destination >= static_cast<int>(net.destinations.size()))
      fail("demand row references an unknown destination");
    if (od.demand < 0) fail("negative demand for origin '" + net.origins[od.origin] + "'");
    if (od.infection_rate < 0 || od.infection_rate > 1)
      fail("infection rate outside [0,1] for origin '" + net.origins[od.origin] + "'");
    if (od.tolerance < 0) fail("negative tolerance for origin '" + net.origins[od.origin] + "'");
    if (od.depart_tick < 0 || od.depart_tick >= p.horizon)
      fail("demand row departure tick outside the horizon for origin '" +
           net.origins[od.origin] + "'");
    if (!origin_has_walk[od.origin])
      fail("origin '" + net.origins[od.origin] + "' has demand but no walking arc");
    if (!dest_has_walk[od.destination])
      fail("destination '" + net.destinations[od.destination] + "' has demand but no walking arc");
  }

  if (p.transmission_rate <= 0) fail("params: transmission_rate must be > 0");
  if (p.susceptible_ratio < 0 || p.susceptible_ratio > 1)
    fail("params: susceptible_ratio outside [0,1]");
  if (p.horizon <= 0) fail("params: horizon must be > 0");
  if (p.tick_minutes != 1) fail("params: only 1-minute ticks are supported");
  if (p.dispatch_step <= 0) fail("params: dispatch_step must be > 0");
  if (p.dispatch_window < 0 || p.dispatch_window > p.horizon)
    fail("params: dispatch_window outside [0, horizon]");
  if (p.shift_min > 0 || p.shift_max < 0) fail("params: need shift_min <= 0 <= shift_max");
  if (p.penalty <= 0) fail("params: penalty must be > 0");
  if (p.vehicle_capacity <= 0) fail("params: vehicle_capacity must be > 0");
  if (p.platform_capacity <= 0) fail("params: platform_capacity must be > 0");
  if (p.fleet_total < 0) fail("params: fleet_total must be >= 0");
  if (p.budget < 0) fail("params: budget must be >= 0");
  if (p.tolerance < 0) fail("params: tolerance must be >= 0");
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open scenario file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail("scenario parse failure in '" + path.string() + "': " + e.what());
  }

  Scenario sc;
  auto& net = sc.net;

  for (const auto& js : require(j, "stations", "scenario")) {
    Station s;
    s.id = require(js, "id", "station").get<std::string>();
    for (const auto& pj : require(js, "platforms", ("station '" + s.id + "'").c_str()))
      s.platforms.push_back(pj.get<std::string>());
    s.open_initial = js.value("open", 0) != 0;
    s.open_cost = js.value("open_cost", 0.0);
    s.close_cost = js.value("close_cost", 0.0);
    // terminal flag recomputed below
    net.stations.push_back(std::move(s));
  }

  for (const auto& jl : require(j, "lines", "scenario")) {
    Line l;
    l.id = require(jl, "id", "line").get<std::string>();
    for (const auto& stop : require(jl, "stops", ("line '" + l.id + "'").c_str())) {
      const std::string sid = stop.at(0).get<std::string>();
      const std::string pid = stop.at(1).get<std::string>();
      int si = net.station_index(sid);
      if (si < 0) fail("line '" + l.id + "' references undefined station '" + sid + "'");
      const auto& plats = net.stations[si].platforms;
      auto pit = std::find(plats.begin(), plats.end(), pid);
      if (pit == plats.end())
        fail("line '" + l.id + "' references undefined platform '" + pid + "' at station '" +
             sid + "'");
      l.stops.push_back({si, static_cast<int>(pit - plats.begin())});
    }
    for (const auto& t : require(jl, "segment_times", ("line '" + l.id + "'").c_str()))
      l.segment_times.push_back(t.get<int>());
    l.run_duration = std::accumulate(l.segment_times.begin(), l.segment_times.end(), 0);
    l.dispatch_cost = jl.value("dispatch_cost", 0.0);
    l.open_initial = jl.value("open", 0) != 0;
    l.open_cost = jl.value("open_cost", 0.0);
    l.close_cost = jl.value("close_cost", 0.0);
    net.lines.push_back(std::move(l));
  }

  for (const auto& jo : require(j, "origins", "scenario")) net.origins.push_back(jo.get<std::string>());
  for (const auto& jd : require(j, "destinations", "scenario"))
    net.destinations.push_back(jd.get<std::string>());

  const auto& jw = require(j, "walk_times", "scenario");
  for (const auto& row : require(jw, "os", "walk_times")) {
    const std::string o = row.at(0).get<std::string>();
    const std::string s = row.at(1).get<std::string>();
    int oi = net.origin_index(o);
    if (oi < 0) fail("walk_times.os references undefined origin '" + o + "'");
    int si = net.station_index(s);
    if (si < 0) fail("walk_times.os references undefined station '" + s + "'");
    net.walk_os.push_back({oi, si, row.at(2).get<int>()});
  }
  for (const auto& row : require(jw, "sd", "walk_times")) {
    const std::string s = row.at(0).get<std::string>();
    const std::string d = row.at(1).get<std::string>();
    int si = net.station_index(s);
    if (si < 0) fail("walk_times.sd references undefined station '" + s + "'");
    int di = net.destination_index(d);
    if (di < 0) fail("walk_times.sd references undefined destination '" + d + "'");
    net.walk_sd.push_back({si, di, row.at(2).get<int>()});
  }

  const auto& jp = require(j, "params", "scenario");
  auto& p = sc.params;
  if (jp.contains("transmission_rate_per_min"))
    p.transmission_rate = jp["transmission_rate_per_min"].get<double>();
  else if (jp.contains("transmission_rate_per_day"))
    p.transmission_rate = jp["transmission_rate_per_day"].get<double>() / (60.0 * 24.0);
  else
    fail("params: need transmission_rate_per_min or transmission_rate_per_day");
  p.susceptible_ratio = require(jp, "susceptible_ratio", "params").get<double>();
  p.budget = require(jp, "budget", "params").get<double>();
  p.fleet_total = require(jp, "fleet_total", "params").get<int>();
  p.vehicle_capacity = require(jp, "vehicle_capacity", "params").get<double>();
  p.platform_capacity = require(jp, "platform_capacity", "params").get<double>();
  p.horizon = require(jp, "horizon", "params").get<int>();
  p.tick_minutes = jp.value("tick_minutes", 1);
  p.dispatch_step = jp.value("dispatch_step", 10);
  p.dispatch_window = jp.value("dispatch_window", 0);
  p.shift_min = jp.value("shift_min", -30);
  p.shift_max = jp.value("shift_max", 30);
  p.penalty = jp.value("penalty", 1e4);
  p.tolerance = jp.value("tolerance", 30);

  for (const auto& row : require(j, "demand", "scenario")) {
    OdPair od;
    const std::string o = row.at(0).get<std::string>();
    const std::string d = row.at(1).get<std::string>();
    od.origin = net.origin_index(o);
    if (od.origin < 0) fail("demand row references undefined origin '" + o + "'");
    od.destination = net.destination_index(d);
    if (od.destination < 0) fail("demand row references undefined destination '" + d + "'");
    od.depart_tick = row.at(2).get<int>();
    od.demand = row.at(3).get<double>();
    od.infection_rate = row.at(4).get<double>();
    od.tolerance = row.size() > 5 ? row.at(5).get<int>() : p.tolerance;
    sc.demand.push_back(od);
  }

  // Recompute terminal flags from the line set; a stored flag would be
  // redundant and easy to get wrong by hand.
  for (auto& s : net.stations) s.terminal = false;
  for (const auto& l : net.lines) {
    net.stations[l.stops.front().station].terminal = true;
    net.stations[l.stops.back().station].terminal = true;
  }

  validate_scenario(sc);
  return sc;
}

void save_scenario(const Scenario& sc, const std::filesystem::path& path) {
  const auto& net = sc.net;
  json j;
  j["stations"] = json::array();
  for (const auto& s : net.stations) {
    json js;
    js["id"] = s.id;
    js["platforms"] = s.platforms;
    js["open"] = s.open_initial ? 1 : 0;
    js["open_cost"] = s.open_cost;
    js["close_cost"] = s.close_cost;
    j["stations"].push_back(js);
  }
  j["lines"] = json::array();
  for (const auto& l : net.lines) {
    json jl;
    jl["id"] = l.id;
    jl["stops"] = json::array();
    for (const auto& st : l.stops)
      jl["stops"].push_back({net.stations[st.station].id,
                             net.stations[st.station].platforms[st.platform]});
    jl["segment_times"] = l.segment_times;
    jl["dispatch_cost"] = l.dispatch_cost;
    jl["open"] = l.open_initial ? 1 : 0;
    jl["open_cost"] = l.open_cost;
    jl["close_cost"] = l.close_cost;
    j["lines"].push_back(jl);
  }
  j["origins"] = net.origins;
  j["destinations"] = net.destinations;
  j["walk_times"]["os"] = json::array();
  for (const auto& w : net.walk_os)
    j["walk_times"]["os"].push_back({net.origins[w.from], net.stations[w.to].id, w.minutes});
  j["walk_times"]["sd"] = json::array();
  for (const auto& w : net.walk_sd)
    j["walk_times"]["sd"].push_back({net.stations[w.from].id, net.destinations[w.to], w.minutes});
  j["demand"] = json::array();
  for (const auto& od : sc.demand)
    j["demand"].push_back({net.origins[od.origin], net.destinations[od.destination],
                           od.depart_tick, od.demand, od.infection_rate, od.tolerance});
  const auto& p = sc.params;
  json jp;
  jp["transmission_rate_per_min"] = p.transmission_rate;
  jp["susceptible_ratio"] = p.susceptible_ratio;
  jp["budget"] = p.budget;
  jp["fleet_total"] = p.fleet_total;
  jp["vehicle_capacity"] = p.vehicle_capacity;
  jp["platform_capacity"] = p.platform_capacity;
  jp["horizon"] = p.horizon;
  jp["tick_minutes"] = p.tick_minutes;
  jp["dispatch_step"] = p.dispatch_step;
  jp["dispatch_window"] = p.dispatch_window;
  jp["shift_min"] = p.shift_min;
  jp["shift_max"] = p.shift_max;
  jp["penalty"] = p.penalty;
  jp["tolerance"] = p.tolerance;
  j["params"] = jp;

  std::ofstream out(path);
  if (!out) fail("cannot write scenario file '" + path.string() + "'");
  out << j.dump(1) << "\n";
}

namespace {

std::string grid_station_id(int r, int c, int cols) {
  int idx = r * cols + c;
  if (idx < 26) return std::string(1, static_cast<char>('A' + idx));
  return "S" + std::to_string(r) + "_" + std::to_string(c);
}

// Area infectiousness rates in lieu of published county numbers; one value
// per area, cycled for larger grids.
constexpr double kAreaRates[] = {0.020, 0.032, 0.015, 0.027, 0.043,
                                 0.011, 0.036, 0.024, 0.018};

}  // namespace

Scenario generate_toy_grid(int rows, int cols, double demand_intensity, std::uint64_t seed) {
  if (rows < 2 || cols < 2) fail("toy grid needs rows, cols >= 2");
  if (demand_intensity < 0) fail("toy grid needs a nonnegative demand intensity");

  constexpr int kSegmentMinutes = 5;
  constexpr int kWalkMinutes = 25;
  constexpr double kRunCost = 100.0;
  constexpr double kLineOpenCost = 2 * kRunCost;  // opening = two runs
  constexpr double kStationOpenCost = 2000.0;
  constexpr int kDemandWindow = 60;  // demand departs within the first hour

  Scenario sc;
  auto& net = sc.net;

  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      Station s;
      s.id = grid_station_id(r, c, cols);
      s.platforms = {s.id + "_p"};
      s.open_initial = false;
      s.open_cost = kStationOpenCost;
      s.close_cost = kStationOpenCost / 2;
      net.stations.push_back(std::move(s));
    }

  auto add_line = [&](const std::string& id, const std::vector<int>& stations) {
    Line l;
    l.id = id;
    for (int si : stations) l.stops.push_back({si, 0});
    l.segment_times.assign(stations.size() - 1, kSegmentMinutes);
    l.run_duration = kSegmentMinutes * static_cast<int>(stations.size() - 1);
    l.dispatch_cost = kRunCost;
    l.open_initial = false;
    l.open_cost = kLineOpenCost;
    l.close_cost = kLineOpenCost / 2;
    net.lines.push_back(std::move(l));
  };

  for (int r = 0; r < rows; ++r) {
    std::vector<int> fwd;
    for (int c = 0; c < cols; ++c) fwd.push_back(r * cols + c);
    std::vector<int> rev(fwd.rbegin(), fwd.rend());
    add_line("row" + std::to_string(r) + "_f", fwd);
    add_line("row" + std::to_string(r) + "_r", rev);
  }
  for (int c = 0; c < cols; ++c) {
    std::vector<int> fwd;
    for (int r = 0; r < rows; ++r) fwd.push_back(r * cols + c);
    std::vector<int> rev(fwd.rbegin(), fwd.rend());
    add_line("col" + std::to_string(c) + "_f", fwd);
    add_line("col" + std::to_string(c) + "_r", rev);
  }
  for (const auto& l : net.lines) {
    net.stations[l.stops.front().station].terminal = true;
    net.stations[l.stops.back().station].terminal = true;
  }

  // Every station doubles as an origin and a destination area, each a
  // 25-minute walk from its own station; trips between areas ride trains.
  for (const auto& s : net.stations) {
    net.origins.push_back(s.id);
    net.destinations.push_back(s.id);
  }
  int n = rows * cols;
  for (int i = 0; i < n; ++i) {
    net.walk_os.push_back({i, i, kWalkMinutes});
    net.walk_sd.push_back({i, i, kWalkMinutes});
  }

  auto& p = sc.params;
  p.transmission_rate = 1.12 / (60.0 * 24.0);
  p.susceptible_ratio = 1.0;
  p.fleet_total = 50;
  p.vehicle_capacity = 600;
  p.platform_capacity = 900;
  p.horizon = 160;
  p.dispatch_step = 10;
  p.dispatch_window = 120;
  p.shift_min = -30;
  p.shift_max = 30;
  p.penalty = 1e4;
  p.tolerance = 30;
  // Base budget: the unconstrained optimum fits at 70% of it, while minimal
  // feasible service costs more than 45% of it.
  p.budget = 48000.0;

  std::mt19937_64 rng(seed);
  std::poisson_distribution<int> pois(demand_intensity);
  for (int o = 0; o < n; ++o)
    for (int d = 0; d < n; ++d) {
      if (o == d) continue;
      for (int t = 0; t < kDemandWindow; ++t) {
        int draw = demand_intensity > 0 ? pois(rng) : 0;
        if (draw > 0) {
          OdPair od;
          od.origin = o;
          od.destination = d;
          od.depart_tick = t;
          od.demand = draw;
          od.infection_rate = kAreaRates[o % 9];
          od.tolerance = p.tolerance;
          sc.demand.push_back(od);
        }
      }
    }

  validate_scenario(sc);
  return sc;
}

}  // namespace transit
