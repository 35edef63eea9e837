#include <gtest/gtest.h>

#include "evcs/dam.hpp"
#include "evcs/fleet.hpp"
#include "evcs/model.hpp"
#include "support/builders.hpp"

namespace evcs {
namespace {

// Two buses, one fleet with one station on bus b2.
Scenario two_bus_scenario() {
  Scenario s;
  s.network = testing::two_bus(100.0);
  s.network.horizon = 2;
  s.network.demands[0].load = {20.0, 20.0};
  auto f = testing::toy_fleet("f1", "b2");
  s.fleets = {f};
  s.stations = {ChargingStation{"c1", "b2", {testing::toy_terms("f1", 2, 0.0, 40.0)}}};
  return s;
}

// Base with 100 MWh of EV charge demand and 900 MWh of other load.
Scenario hundred_nine_hundred() {
  auto s = two_bus_scenario();
  s.network.demands[0].load = {450.0, 450.0};
  s.fleets[0].discharge = {0.0, 100.0};
  s.fleets[0].energy_max = 200.0;
  s.fleets[0].max_charge = 200.0;
  s.fleets[0].home_cap = 200.0;
  return s;
}

TEST(ValidateTest, WellFormedTwoBusScenario) {
  auto rep = validate(two_bus_scenario());
  EXPECT_TRUE(rep.ok()) << rep.to_string();
}

TEST(ValidateTest, TwoReferenceBuses) {
  auto s = two_bus_scenario();
  s.network.buses[1].reference = true;
  auto rep = validate(s);
  EXPECT_TRUE(rep.mentions("multiple reference buses")) << rep.to_string();
}

TEST(ValidateTest, InitialEnergyAboveCeiling) {
  auto s = two_bus_scenario();
  s.fleets[0].energy_initial = 25.0;
  auto rep = validate(s);
  EXPECT_TRUE(rep.mentions("initial energy outside energy bounds")) << rep.to_string();
}

TEST(ValidateTest, StructuralIssuesAreReportedWithPaths) {
  auto s = two_bus_scenario();
  s.network.lines[0].to = "nowhere";
  s.network.lines[0].reactance = 0.0;
  s.network.generators[0].segments.push_back(CostSegment{0.0, 10.0, 5.0});
  s.fleets[0].stations[0].connectivity = {1.0};
  s.stations[0].terms[0].segments[0].width = 2.0;
  auto rep = validate(s);
  EXPECT_TRUE(rep.mentions("unknown to-bus nowhere"));
  EXPECT_TRUE(rep.mentions("reactance must be positive"));
  EXPECT_TRUE(rep.mentions("marginal costs must be non-decreasing"));
  EXPECT_TRUE(rep.mentions("series has length 1, expected 2"));
  EXPECT_TRUE(rep.mentions("WTP segment widths do not cover the station cap"));
  bool path_found = false;
  for (const auto& i : rep.issues) path_found = path_found || i.path == "network.lines[l1]";
  EXPECT_TRUE(path_found) << rep.to_string();
}

TEST(ValidateTest, StationMustShareItsFleetBus) {
  auto s = two_bus_scenario();
  s.stations[0].bus = "b1";
  auto rep = validate(s);
  EXPECT_TRUE(rep.mentions("hosts no fleet")) << rep.to_string();
  EXPECT_TRUE(rep.mentions("station bus differs from fleet bus")) << rep.to_string();
}

TEST(ValidateTest, UncoverableDischargeIsFlagged) {
  auto s = two_bus_scenario();
  s.fleets[0].discharge = {0.0, 30.0};
  auto rep = validate(s);
  EXPECT_TRUE(rep.mentions("cumulative discharge exceeds charging capability in period 1")) << rep.to_string();
}

TEST(ValidateTest, ValidScenarioBuildsWithoutStructuralErrors) {
  auto s = two_bus_scenario();
  ASSERT_TRUE(validate(s).ok());
  AccessSeries offers = {{s.stations[0].terms[0].offer_max}};
  auto fin = make_fleet_input(s, offers);
  EXPECT_NO_THROW(build_fleet(fin));
  EXPECT_NO_THROW(build_fleet_explicit_dual(fin));
  DamInput din{s.network, {}, {}};
  EXPECT_NO_THROW(build_dam(din));
  EXPECT_NO_THROW(build_dam_explicit_dual(din));
}

TEST(PenetrationTest, BaseLevelIsIdentity) {
  auto s = hundred_nine_hundred();
  EXPECT_NEAR(ev_penetration(s), 0.10, 1e-12);
  EXPECT_NEAR(penetration_factor(s, 0.10), 1.0, 1e-12);
}

TEST(PenetrationTest, TwentyPercent) {
  auto s = scale_penetration(hundred_nine_hundred(), 0.20);
  EXPECT_NEAR(ev_charge_demand(s), 225.0, 1e-9);
  EXPECT_NEAR(ev_penetration(s), 0.20, 1e-12);
  EXPECT_NEAR(non_ev_demand(s), 900.0, 1e-12);
}

TEST(PenetrationTest, TwentyFivePercent) {
  auto s = scale_penetration(hundred_nine_hundred(), 0.25);
  EXPECT_NEAR(ev_charge_demand(s), 300.0, 1e-9);
}

TEST(PenetrationTest, MonotoneAndFeasibilityPreserving) {
  auto base = hundred_nine_hundred();
  double prev = 0.0;
  for (double level : {0.05, 0.10, 0.15, 0.20, 0.25, 0.5, 0.9}) {
    auto s = scale_penetration(base, level);
    EXPECT_GT(ev_charge_demand(s), prev);
    prev = ev_charge_demand(s);
    EXPECT_TRUE(validate(s).ok()) << validate(s).to_string();
  }
}

TEST(PenetrationTest, RejectsBadLevels) {
  auto s = hundred_nine_hundred();
  EXPECT_THROW(scale_penetration(s, 0.0), std::invalid_argument);
  EXPECT_THROW(scale_penetration(s, 1.0), std::invalid_argument);
  s.fleets[0].discharge = {0.0, 0.0};
  EXPECT_THROW(scale_penetration(s, 0.2), std::invalid_argument);
}

TEST(SolarScaleTest, MultipliesAvailability) {
  auto s = two_bus_scenario();
  s.network.solar.push_back(SolarUnit{"s1", "b1", {2.0, 3.0}});
  auto d = scale_solar(s, 2.0);
  EXPECT_EQ(d.network.solar[0].available, (Series{4.0, 6.0}));
  EXPECT_THROW(scale_solar(s, -1.0), std::invalid_argument);
}

TEST(UnitsTest, CentsPerKwh) {
  EXPECT_DOUBLE_EQ(cents_per_kwh_to_usd_per_mwh(2.5), 25.0);
  EXPECT_DOUBLE_EQ(usd_per_mwh_to_cents_per_kwh(206.0), 20.6);
}

}  // namespace
}  // namespace evcs
