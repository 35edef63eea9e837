#include <gtest/gtest.h>

#include <random>

#include "evcs/bilevel.hpp"
#include "support/builders.hpp"

namespace evcs {
namespace {

// One bus priced at 10 $/MWh, TOU 30 $/MWh, offers within [lo, hi].
Scenario toy(double lo, double hi) {
  auto s = testing::toy_scenario(lo, hi);
  s.fleets[0].tou_rate = {30.0, 30.0};
  s.settings.threads = 2;
  return s;
}

AccessSeries flat(double v) { return {{{v, v}}}; }

// Profit recomputed from raw outputs.
double raw_profit(const Scenario& s, const EquilibriumOutcome& out) {
  double p = 0.0;
  for (std::size_t f = 0; f < s.fleets.size(); ++f) {
    const std::size_t b = *s.network.bus_index(s.fleets[f].bus);
    for (std::size_t a = 0; a < out.schedule.plans[f].station.size(); ++a) {
      for (std::size_t t = 0; t < s.horizon(); ++t) {
        p += out.schedule.plans[f].station[a][t] * (out.offers[f][a][t] - out.market.lmp[b][t]);
      }
    }
  }
  return p;
}

TEST(EvaluateTest, OffersAboveTouSendFleetsHome) {
  auto s = toy(0.0, 40.0);
  auto out = evaluate(s, flat(40.0));
  EXPECT_EQ(out.revenue, 0.0);
  EXPECT_EQ(out.profit, 0.0);
  double home = 0.0;
  for (double v : out.schedule.plans[0].home) home += v;
  EXPECT_NEAR(home, 10.0, 1e-9);
}

TEST(EvaluateTest, HandComputedToyProfit) {
  auto s = toy(0.0, 40.0);
  auto out = evaluate(s, flat(20.0));
  EXPECT_NEAR(out.revenue, 200.0, 1e-9);
  EXPECT_NEAR(out.cost, 100.0, 1e-9);
  EXPECT_NEAR(out.profit, 100.0, 1e-9);
  EXPECT_NEAR(out.profit, raw_profit(s, out), 1e-9);
}

TEST(EvaluateTest, RejectsOffersOutsideBounds) {
  auto s = toy(0.0, 40.0);
  EXPECT_THROW(evaluate(s, flat(41.0)), std::invalid_argument);
}

TEST(EvaluateTest, ReportedAggregatesArithmetic) {
  // Station sales of $60,596 against purchases of $4,974.
  const double profit = 60596.0 - 4974.0;
  EXPECT_DOUBLE_EQ(profit, 55622.0);
  // The margin of 11.35 follows from the rounded thousands (55.6 / 4.9); the
  // unrounded figures give 11.18.
  EXPECT_NEAR(55.6 / 4.9, 11.35, 0.005);
  EXPECT_NEAR(profit / 4974.0, 11.18, 0.005);
}

TEST(StrategyTest, ParameterizationsExpandDeterministically) {
  auto s = toy(0.0, 40.0);
  Strategy full(s, Parameterization::full);
  Strategy shared(s, Parameterization::per_station_period);
  Strategy block(s, Parameterization::per_station_block, 2);
  EXPECT_EQ(full.size(), 2u);
  EXPECT_EQ(shared.size(), 2u);
  EXPECT_EQ(block.size(), 1u);
  EXPECT_EQ(block.expand({12.5}), flat(12.5));
  EXPECT_EQ(shared.expand({1.0, 2.0}), (AccessSeries{{{1.0, 2.0}}}));
  EXPECT_EQ(shared.midpoint(), (std::vector<double>{20.0, 20.0}));
}

TEST(StrategyTest, SharedCoordinateClampsToEachFleet) {
  auto s = toy(0.0, 40.0);
  auto f2 = testing::toy_fleet("f2", "b1");
  s.fleets.push_back(f2);
  s.stations[0].terms.push_back(testing::toy_terms("f2", 2, 10.0, 20.0));
  Strategy st(s, Parameterization::per_station_period);
  ASSERT_EQ(st.size(), 2u);
  EXPECT_EQ(st.dimensions()[0].lower, 0.0);
  EXPECT_EQ(st.dimensions()[0].upper, 40.0);
  auto offers = st.expand({35.0, 5.0});
  EXPECT_EQ(offers[0][0], (Series{35.0, 5.0}));
  EXPECT_EQ(offers[1][0], (Series{20.0, 10.0}));
}

TEST(OptimizeTest, FindsTheIndifferenceEdge) {
  auto s = toy(0.0, 50.0);
  s.settings.parameterization = Parameterization::per_station_block;
  s.settings.block_width = 2;
  auto grid = brute_force(s, 101);  // 0.5 $/MWh resolution
  EXPECT_EQ(grid.evaluations, 101u);
  EXPECT_NEAR(grid.offers[0][0][0], 30.0, 1e-9);
  auto best = optimize(s, s.settings.budget);
  EXPECT_NEAR(best.offers[0][0][0], 30.0, 0.5);
  EXPECT_GE(best.profit, grid.profit - 1e-6);
  EXPECT_NEAR(best.profit, 200.0, 1e-6);
}

TEST(OptimizeTest, SellingBelowCostSettlesOnBoundary) {
  auto s = toy(0.0, 8.0);
  auto at_lo = evaluate(s, flat(0.0));
  auto at_hi = evaluate(s, flat(8.0));
  auto best = optimize(s, 200);
  EXPECT_LE(best.profit, 0.0);
  EXPECT_NEAR(best.profit, std::max(at_lo.profit, at_hi.profit), 1e-6);
  EXPECT_EQ(best.offers, flat(8.0));
}

TEST(OptimizeTest, BudgetOneEvaluatesMidpoint) {
  auto s = toy(0.0, 40.0);
  auto out = optimize(s, 1);
  EXPECT_EQ(out.offers, flat(20.0));
  EXPECT_EQ(out.evaluations, 1u);
  EXPECT_NEAR(out.profit, evaluate(s, flat(20.0)).profit, 1e-12);
}

TEST(OptimizeTest, NeverWorseThanItsFixedStarts) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 10; ++k) {
    auto s = toy(std::round(20.0 * u(rng)), 20.0 + std::round(30.0 * u(rng)));
    s.fleets[0].tou_rate = {std::round(10.0 + 30.0 * u(rng)), std::round(10.0 + 30.0 * u(rng))};
    Strategy st(s, s.settings.parameterization);
    const double floor = std::max({evaluate(s, st, st.lower()).profit, evaluate(s, st, st.upper()).profit,
                                   evaluate(s, st, st.midpoint()).profit});
    auto best = optimize(s, 300);
    EXPECT_GE(best.profit, floor - 1e-9) << "instance " << k;
    EXPECT_NEAR(best.profit, raw_profit(s, best), 1e-9);
  }
}

TEST(OptimizeTest, DeterministicAcrossThreadCounts) {
  auto s = toy(0.0, 45.0);
  s.fleets[0].tou_rate = {25.0, 35.0};
  s.settings.threads = 1;
  auto a = optimize(s, 400);
  s.settings.threads = 6;
  auto b = optimize(s, 400);
  EXPECT_EQ(a.offers, b.offers);
  EXPECT_EQ(a.profit, b.profit);
  EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(BruteForceTest, FiveLevelsTwoPeriods) {
  auto s = toy(0.0, 40.0);
  s.fleets[0].tou_rate = {25.0, 35.0};
  auto grid = brute_force(s, 5);
  EXPECT_EQ(grid.evaluations, 25u);
  // Independent enumeration of the same grid.
  double best = -1e300;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      AccessSeries o{{{10.0 * i, 10.0 * j}}};
      best = std::max(best, evaluate(s, o).profit);
    }
  }
  EXPECT_NEAR(grid.profit, best, 1e-9);
  auto opt = optimize(s, 200);
  EXPECT_GE(opt.profit, grid.profit - 1e-6);
}

TEST(BruteForceTest, DegenerateBoundsGiveOneEvaluation) {
  auto s = toy(15.0, 15.0);
  auto grid = brute_force(s, 7);
  EXPECT_EQ(grid.evaluations, 1u);
  EXPECT_NEAR(grid.profit, evaluate(s, flat(15.0)).profit, 1e-12);
}

TEST(BruteForceTest, RefusesGridsOverTheCap) {
  auto s = toy(0.0, 40.0);
  s.settings.brute_force_cap = 24;
  EXPECT_THROW(brute_force(s, 5), std::invalid_argument);
}

TEST(CertifyTest, EvaluationsPass) {
  auto s = toy(0.0, 40.0);
  for (double tau : {0.0, 10.0, 20.0, 30.0, 40.0}) {
    auto c = certify(s, evaluate(s, flat(tau)), 1e-6);
    EXPECT_TRUE(c.pass) << c.summary();
    EXPECT_FALSE(c.market_dual.empty());
    EXPECT_FALSE(c.fleet_dual.empty());
  }
}

TEST(CertifyTest, CorruptedPriceIsCaught) {
  auto s = toy(0.0, 40.0);
  auto out = evaluate(s, flat(20.0));
  out.market.lmp[0][1] += 3.0;
  auto c = certify(s, out, 1e-6);
  EXPECT_FALSE(c.pass);
  const auto* r = c.find("market_strong_duality");
  ASSERT_NE(r, nullptr);
  EXPECT_GT(r->value, 1e-6) << c.summary();
}

TEST(CertifyTest, CorruptedScheduleIsCaught) {
  auto s = toy(0.0, 40.0);
  auto out = evaluate(s, flat(20.0));
  out.schedule.plans[0].station[0][0] += 1.0;
  auto c = certify(s, out, 1e-6);
  EXPECT_FALSE(c.pass);
  EXPECT_FALSE(c.find("fleet_primal_feasibility")->pass()) << c.summary();
}

TEST(CertifyTest, RefusesMissingOutcome) {
  auto s = toy(0.0, 40.0);
  auto c = certify(s, std::optional<EquilibriumOutcome>{}, 1e-6);
  EXPECT_FALSE(c.pass);
  EXPECT_EQ(c.refusal, "no outcome");
}

}  // namespace
}  // namespace evcs
