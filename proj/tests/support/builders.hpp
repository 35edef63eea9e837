#pragma once

// Small hand-built networks, fleets and scenarios shared by the test suites.

#include <string>
#include <vector>

#include "evcs/model.hpp"

namespace evcs::testing {

inline Generator single_segment_gen(const std::string& id, const std::string& bus, double cap, double cost) {
  return Generator{id, bus, 0.0, cap, {CostSegment{0.0, cap, cost}}};
}

// One bus, one generator (cap 100, 10 $/MWh), one demand.
inline Network one_bus(double demand, std::size_t T = 1) {
  Network n;
  n.horizon = T;
  n.buses = {Bus{"b1", -3.14, 3.14, true}};
  n.generators = {single_segment_gen("g1", "b1", 100.0, 10.0)};
  n.demands = {Demand{"d1", "b1", Series(T, demand)}};
  return n;
}

// Cheap generator at b1, expensive at b2, load 20 MW at b2.
inline Network two_bus(double line_limit) {
  Network n;
  n.horizon = 1;
  n.buses = {Bus{"b1", -3.14, 3.14, true}, Bus{"b2", -3.14, 3.14, false}};
  n.lines = {Line{"l1", "b1", "b2", 0.1, -line_limit, line_limit}};
  n.generators = {single_segment_gen("g1", "b1", 100.0, 10.0), single_segment_gen("g2", "b2", 100.0, 30.0)};
  n.demands = {Demand{"d2", "b2", Series{20.0}}};
  return n;
}

// T=2 fleet that must recover 10 MWh of driving discharge in period 2,
// station and home caps 10 MW, always connected, TOU 20 $/MWh.
inline EvFleet toy_fleet(const std::string& id = "f1", const std::string& bus = "b1") {
  EvFleet f;
  f.id = id;
  f.bus = bus;
  f.max_charge = 10.0;
  f.home_cap = 10.0;
  f.home_connectivity = {1.0, 1.0};
  f.stations = {StationAccess{"c1", 10.0, {1.0, 1.0}}};
  f.energy_min = 0.0;
  f.energy_max = 20.0;
  f.energy_initial = 0.0;
  f.discharge = {0.0, 10.0};
  f.tou_rate = {20.0, 20.0};
  return f;
}

inline StationTerms toy_terms(const std::string& fleet, std::size_t T, double lo, double hi) {
  StationTerms s;
  s.fleet = fleet;
  s.offer_min = Series(T, lo);
  s.offer_max = Series(T, hi);
  s.segments = {WtpSegment{10.0, Series(T, 20.0), Series(T, 40.0)}};
  return s;
}

// One bus with the toy fleet and one station.
inline Scenario toy_scenario(double offer_min = 0.0, double offer_max = 40.0) {
  Scenario s;
  s.name = "toy";
  s.network = one_bus(50.0, 2);
  s.fleets = {toy_fleet()};
  ChargingStation c{"c1", "b1", {toy_terms("f1", 2, offer_min, offer_max)}};
  s.stations = {c};
  return s;
}

}  // namespace evcs::testing
