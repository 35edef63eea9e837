#pragma once

// Report files: outcome and certificate JSON, fleet schedules and plot data.

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evcs/bilevel.hpp"
#include "evcs/scenario_json.hpp"
#include "evcs/scenarios.hpp"

namespace evcs {

inline constexpr int kOutcomeSchemaVersion = 1;

namespace detail {

inline Json matrix(const std::vector<Series>& m) {
  Json j = Json::array();
  for (const auto& row : m) j.push_back(row);
  return j;
}

inline std::vector<Series> read_matrix(const Json& j) { return j.get<std::vector<Series>>(); }

}  // namespace detail

// Everything certify needs, keyed by scenario ids so a stored outcome can be
// re-checked against its scenario file.
inline Json outcome_to_json(const Scenario& s, const EquilibriumOutcome& out) {
  Json j;
  j["schema_version"] = kOutcomeSchemaVersion;
  j["scenario"] = s.name;
  j["seed"] = s.settings.seed;
  j["evaluations"] = out.evaluations;
  j["revenue"] = out.revenue;
  j["cost"] = out.cost;
  j["profit"] = out.profit;
  j["fleets"] = Json::array();
  for (std::size_t f = 0; f < s.fleets.size(); ++f) {
    const auto& plan = out.schedule.plans.at(f);
    Json access = Json::array();
    for (std::size_t a = 0; a < s.fleets[f].stations.size(); ++a) {
      access.push_back({{"station", s.fleets[f].stations[a].station},
                        {"offer", out.offers.at(f).at(a)},
                        {"power", plan.station.at(a)},
                        {"segments", detail::matrix(plan.segment.at(a))}});
    }
    j["fleets"].push_back({{"fleet", plan.fleet},
                           {"total", plan.total},
                           {"home", plan.home},
                           {"energy", plan.energy},
                           {"stations", access},
                           {"station_payment", plan.station_payment},
                           {"home_payment", plan.home_payment},
                           {"cost", plan.cost}});
  }
  j["fleet_total_cost"] = out.schedule.total_cost;
  const auto& m = out.market;
  Json market;
  market["welfare"] = m.welfare;
  market["lmp"] = detail::matrix(m.lmp);
  market["angle"] = detail::matrix(m.angle);
  market["dispatch"] = detail::matrix(m.dispatch);
  market["segment"] = Json::array();
  for (const auto& g : m.segment) market["segment"].push_back(detail::matrix(g));
  market["solar"] = detail::matrix(m.solar);
  market["flow"] = detail::matrix(m.flow);
  market["wtp"] = detail::matrix(m.wtp);
  market["gen_link_dual"] = detail::matrix(m.gen_link_dual);
  market["flow_dual"] = detail::matrix(m.flow_dual);
  j["market"] = market;
  return j;
}

// Throws ScenarioError when the document does not fit the scenario's shape.
inline EquilibriumOutcome outcome_from_json(const Scenario& s, const Json& j) {
  try {
    if (j.at("schema_version").get<int>() != kOutcomeSchemaVersion) {
      throw ScenarioError("outcome: unsupported schema_version");
    }
    EquilibriumOutcome out;
    out.evaluations = j.at("evaluations").get<std::size_t>();
    out.revenue = j.at("revenue").get<double>();
    out.cost = j.at("cost").get<double>();
    out.profit = j.at("profit").get<double>();
    const Json& fleets = j.at("fleets");
    if (fleets.size() != s.fleets.size()) throw ScenarioError("outcome: fleet count differs from scenario");
    for (std::size_t f = 0; f < s.fleets.size(); ++f) {
      const Json& jf = fleets[f];
      FleetPlan plan;
      plan.fleet = jf.at("fleet").get<std::string>();
      if (plan.fleet != s.fleets[f].id) throw ScenarioError("outcome: fleet " + plan.fleet + " out of order");
      plan.total = jf.at("total").get<Series>();
      plan.home = jf.at("home").get<Series>();
      plan.energy = jf.at("energy").get<Series>();
      plan.station_payment = jf.at("station_payment").get<double>();
      plan.home_payment = jf.at("home_payment").get<double>();
      plan.cost = jf.at("cost").get<double>();
      std::vector<Series> offers;
      for (const auto& ja : jf.at("stations")) {
        offers.push_back(ja.at("offer").get<Series>());
        plan.station.push_back(ja.at("power").get<Series>());
        plan.segment.push_back(detail::read_matrix(ja.at("segments")));
      }
      out.offers.push_back(offers);
      out.schedule.plans.push_back(plan);
    }
    out.schedule.total_cost = j.at("fleet_total_cost").get<double>();
    const Json& m = j.at("market");
    out.market.welfare = m.at("welfare").get<double>();
    out.market.lmp = detail::read_matrix(m.at("lmp"));
    out.market.angle = detail::read_matrix(m.at("angle"));
    out.market.dispatch = detail::read_matrix(m.at("dispatch"));
    for (const auto& g : m.at("segment")) out.market.segment.push_back(detail::read_matrix(g));
    out.market.solar = detail::read_matrix(m.at("solar"));
    out.market.flow = detail::read_matrix(m.at("flow"));
    out.market.wtp = detail::read_matrix(m.at("wtp"));
    out.market.gen_link_dual = detail::read_matrix(m.at("gen_link_dual"));
    out.market.flow_dual = detail::read_matrix(m.at("flow_dual"));
    return out;
  } catch (const Json::exception& e) {
    throw ScenarioError(std::string("outcome: ") + e.what());
  }
}

inline Json certificate_to_json(const Certificate& c) {
  Json j;
  j["schema_version"] = kOutcomeSchemaVersion;
  j["pass"] = c.pass;
  if (!c.refusal.empty()) j["refusal"] = c.refusal;
  j["max_violation"] = c.max_violation;
  j["max_violation_where"] = c.max_violation_where;
  j["residuals"] = Json::array();
  for (const auto& r : c.residuals) {
    Json jr{{"name", r.name}, {"value", std::isfinite(r.value) ? Json(r.value) : Json("inf")},
            {"limit", r.limit}, {"pass", r.pass()}};
    if (!r.where.empty()) jr["where"] = r.where;
    j["residuals"].push_back(jr);
  }
  j["market_primal"] = c.market_primal;
  j["market_dual"] = c.market_dual;
  j["fleet_primal"] = c.fleet_primal;
  j["fleet_dual"] = c.fleet_dual;
  return j;
}

// Long format: one row per fleet, source and period.
inline void write_schedule_csv(std::ostream& os, const Scenario& s, const EquilibriumOutcome& out) {
  os << "fleet,source,period,power_mw,price_usd_per_mwh,payment_usd\n";
  for (std::size_t f = 0; f < s.fleets.size(); ++f) {
    const auto& fl = s.fleets[f];
    const auto& plan = out.schedule.plans.at(f);
    for (std::size_t t = 0; t < s.horizon(); ++t) {
      os << fl.id << ",home," << t << ',' << fixed(plan.home[t], 6) << ',' << fixed(fl.tou_rate[t], 2) << ','
         << fixed(plan.home[t] * fl.tou_rate[t], 2) << '\n';
      for (std::size_t a = 0; a < fl.stations.size(); ++a) {
        const double q = plan.station[a][t], price = out.offers[f][a][t];
        os << fl.id << ',' << fl.stations[a].station << ',' << t << ',' << fixed(q, 6) << ',' << fixed(price, 2)
           << ',' << fixed(q * price, 2) << '\n';
      }
    }
  }
}

// Hourly offering, bidding and charging trends. Offer and retail prices in
// cents/kWh, WTP in $/MWh. Retail price and the quantity-weighted WTP are
// blank in hours without station charging.
inline void write_hourly_trends_csv(std::ostream& os, const Scenario& s, const EquilibriumOutcome& out) {
  os << "hour,avg_offer_cents_per_kwh,retail_price_cents_per_kwh,avg_wtp_usd_per_mwh,station_charged_mw,"
        "home_charged_mw\n";
  const auto din = detail::market_input(s, out.schedule);
  for (std::size_t t = 0; t < s.horizon(); ++t) {
    double offer_sum = 0.0, paid = 0.0, station = 0.0, home = 0.0;
    std::size_t offers = 0;
    for (std::size_t f = 0; f < s.fleets.size(); ++f) {
      home += out.schedule.plans[f].home[t];
      for (std::size_t a = 0; a < s.fleets[f].stations.size(); ++a) {
        offer_sum += out.offers[f][a][t];
        ++offers;
        const double q = out.schedule.plans[f].station[a][t];
        station += q;
        paid += q * out.offers[f][a][t];
      }
    }
    double wq = 0.0, wsum = 0.0;
    for (std::size_t k = 0; k < din.bids.size(); ++k) {
      wq += din.bids[k].quantity[t];
      wsum += din.bids[k].quantity[t] * out.market.wtp[k][t];
    }
    os << t << ',' << (offers ? fixed(usd_per_mwh_to_cents_per_kwh(offer_sum / offers), 1) : "") << ','
       << (station > 0.0 ? fixed(usd_per_mwh_to_cents_per_kwh(paid / station), 1) : "") << ','
       << (wq > 0.0 ? fixed(wsum / wq, 2) : "") << ','
       << fixed(station, 3) << ',' << fixed(home, 3) << '\n';
  }
}

// Per-bus LMP against the charging power of fleets located at the bus.
inline void write_bus_lmp_charging_csv(std::ostream& os, const Scenario& s, const EquilibriumOutcome& out) {
  os << "bus,hour,lmp_usd_per_mwh,fleet_charged_mw,station_charged_mw\n";
  for (std::size_t b = 0; b < s.network.buses.size(); ++b) {
    const auto& bus = s.network.buses[b].id;
    for (std::size_t t = 0; t < s.horizon(); ++t) {
      double total = 0.0, station = 0.0;
      for (std::size_t f = 0; f < s.fleets.size(); ++f) {
        if (s.fleets[f].bus != bus) continue;
        total += out.schedule.plans[f].total[t];
        for (const auto& a : out.schedule.plans[f].station) station += a[t];
      }
      os << bus << ',' << t << ',' << fixed(out.market.lmp[b][t], 2) << ',' << fixed(total, 3) << ','
         << fixed(station, 3) << '\n';
    }
  }
}

}  // namespace evcs
