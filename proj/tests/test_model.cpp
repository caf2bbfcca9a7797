#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "transit/model.hpp"

using namespace transit;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
  fs::path p = fs::temp_directory_path() / name;
  return p;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("toy 3x3 grid has 9 stations and 12 candidate lines") {
  Scenario sc = generate_toy_grid(3, 3, 5.0 / 6.0, 1);
  CHECK(sc.net.stations.size() == 9);
  CHECK(sc.net.lines.size() == 12);
  CHECK(sc.params.vehicle_capacity == 600);
  CHECK(sc.params.fleet_total == 50);
  for (const auto& l : sc.net.lines) {
    for (int t : l.segment_times) CHECK(t == 5);
    CHECK(l.open_cost == doctest::Approx(2 * l.dispatch_cost));
  }
}

TEST_CASE("toy grid with zero intensity has zero demand") {
  Scenario sc = generate_toy_grid(3, 3, 0.0, 5);
  CHECK(sc.demand.empty());
}

TEST_CASE("toy generator is deterministic in the seed") {
  Scenario a = generate_toy_grid(2, 2, 0.5, 42);
  Scenario b = generate_toy_grid(2, 2, 0.5, 42);
  REQUIRE(a.demand.size() == b.demand.size());
  for (size_t i = 0; i < a.demand.size(); ++i) {
    CHECK(a.demand[i].origin == b.demand[i].origin);
    CHECK(a.demand[i].demand == b.demand[i].demand);
  }
  Scenario c = generate_toy_grid(2, 2, 0.5, 43);
  bool same = a.demand.size() == c.demand.size();
  if (same)
    for (size_t i = 0; i < a.demand.size(); ++i)
      if (a.demand[i].demand != c.demand[i].demand || a.demand[i].depart_tick != c.demand[i].depart_tick)
        same = false;
  CHECK_FALSE(same);
}

TEST_CASE("expected hourly demand per od matches the generator intensity") {
  // Mean of 1000 regenerations of a 2x2 grid at intensity 5/6: each ordered
  // pair accumulates Poisson(5/6) per minute over an hour, so 50 expected.
  const int reps = 1000;
  double total = 0.0;
  long cells = 0;
  for (int rep = 0; rep < reps; ++rep) {
    Scenario sc = generate_toy_grid(2, 2, 5.0 / 6.0, 1000 + rep);
    double sum = 0.0;
    for (const auto& od : sc.demand) sum += od.demand;
    total += sum;
    cells += 4 * 3;  // ordered pairs in a 2x2 grid
  }
  double mean_per_od_hour = total / cells;
  CHECK(mean_per_od_hour == doctest::Approx(50.0).epsilon(0.02));
}

TEST_CASE("round trip: save then load reproduces the scenario") {
  Scenario sc = generate_toy_grid(2, 3, 0.4, 9);
  fs::path p = temp_file("transit_roundtrip.json");
  save_scenario(sc, p);
  Scenario back = load_scenario(p);
  fs::remove(p);

  CHECK(back.net.stations.size() == sc.net.stations.size());
  CHECK(back.net.lines.size() == sc.net.lines.size());
  REQUIRE(back.demand.size() == sc.demand.size());
  for (size_t i = 0; i < sc.demand.size(); ++i) {
    CHECK(back.demand[i].origin == sc.demand[i].origin);
    CHECK(back.demand[i].destination == sc.demand[i].destination);
    CHECK(back.demand[i].depart_tick == sc.demand[i].depart_tick);
    CHECK(back.demand[i].demand == sc.demand[i].demand);
    CHECK(back.demand[i].infection_rate == sc.demand[i].infection_rate);
  }
  CHECK(back.params.transmission_rate == sc.params.transmission_rate);
  CHECK(back.params.budget == sc.params.budget);
  for (size_t l = 0; l < sc.net.lines.size(); ++l) {
    CHECK(back.net.lines[l].id == sc.net.lines[l].id);
    CHECK(back.net.lines[l].segment_times == sc.net.lines[l].segment_times);
    CHECK(back.net.lines[l].run_duration == sc.net.lines[l].run_duration);
  }
  // and a second save is byte-identical
  fs::path p2 = temp_file("transit_roundtrip2.json");
  save_scenario(back, p2);
  save_scenario(sc, p);
  std::ifstream f1(p), f2(p2);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  fs::remove(p);
  fs::remove(p2);
}

TEST_CASE("dangling references are reported with the entity name") {
  Scenario sc = generate_toy_grid(2, 2, 0.2, 3);
  fs::path p = temp_file("transit_bad.json");
  save_scenario(sc, p);

  // Patch the file to reference an undefined station Z.
  std::ifstream in(p);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  auto pos = text.find("\"A\"");
  REQUIRE(pos != std::string::npos);
  // replace a line stop's station with Z
  pos = text.find("\"stops\"");
  REQUIRE(pos != std::string::npos);
  auto a_pos = text.find("\"A\"", pos);
  REQUIRE(a_pos != std::string::npos);
  text.replace(a_pos, 3, "\"Z\"");
  std::ofstream out(p);
  out << text;
  out.close();

  try {
    load_scenario(p);
    FAIL("expected a ScenarioError");
  } catch (const ScenarioError& e) {
    CHECK(std::string(e.what()).find("Z") != std::string::npos);
  }
  fs::remove(p);
}

TEST_CASE("empty demand section is a valid scenario") {
  Scenario sc = generate_toy_grid(2, 2, 0.3, 4);
  sc.demand.clear();
  fs::path p = temp_file("transit_nodemand.json");
  save_scenario(sc, p);
  Scenario back = load_scenario(p);
  CHECK(back.demand.empty());
  fs::remove(p);
}

TEST_CASE("validation rejects broken invariants with named entities") {
  Scenario sc = generate_toy_grid(2, 2, 0.3, 4);
  SUBCASE("run duration mismatch") {
    sc.net.lines[0].run_duration += 1;
    CHECK_THROWS_WITH_AS(validate_scenario(sc),
                         doctest::Contains(sc.net.lines[0].id.c_str()), ScenarioError);
  }
  SUBCASE("negative segment time") {
    sc.net.lines[1].segment_times[0] = -5;
    sc.net.lines[1].run_duration = -5 + sc.net.lines[1].segment_times[0] * 0;
    CHECK_THROWS_AS(validate_scenario(sc), ScenarioError);
  }
  SUBCASE("bad infection rate") {
    REQUIRE(!sc.demand.empty());
    sc.demand[0].infection_rate = 1.5;
    CHECK_THROWS_AS(validate_scenario(sc), ScenarioError);
  }
  SUBCASE("terminal flag must match the line set") {
    sc.net.stations[0].terminal = !sc.net.stations[0].terminal;
    CHECK_THROWS_AS(validate_scenario(sc), ScenarioError);
  }
}

}  // TEST_SUITE
