#pragma once

// Study harnesses: a certified baseline run with a no-station counterfactual,
// and sweeps over EV penetration and solar capacity.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "evcs/bilevel.hpp"
#include "evcs/fleet.hpp"
#include "evcs/model.hpp"

namespace evcs {

struct MetricsRow {
  std::string label;
  double parameter = std::numeric_limits<double>::quiet_NaN();
  double revenue = 0.0;                 // $
  double cost = 0.0;                    // $
  double profit = 0.0;                  // $
  double profit_percent = 0.0;          // profit / cost * 100, NaN when cost is 0
  double retail_price = 0.0;            // cents/kWh, revenue per station energy
  double purchased_price = 0.0;         // $/MWh, purchase cost per station energy
  double max_lmp = 0.0;                 // $/MWh
  double min_lmp = 0.0;                 // $/MWh
  double station_energy = 0.0;          // MWh
  double home_energy = 0.0;             // MWh
  double solar_available = 0.0;         // MWh
  double solar_utilized = 0.0;          // MWh
  double solar_curtailment = 0.0;       // %, 0 when nothing is available
  double owner_payment = 0.0;           // $, station plus home
  double owner_payment_without = 0.0;   // $, stations unavailable
  double owner_savings = 0.0;           // $
  bool certified = false;
  std::string error;

  bool ok() const { return error.empty(); }
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Metrics of one outcome; the counterfactual fields are left at zero.
inline MetricsRow compute_metrics(const Scenario& s, const EquilibriumOutcome& out) {
  MetricsRow r;
  r.revenue = out.revenue;
  r.cost = out.cost;
  r.profit = out.profit;
  r.profit_percent = out.cost != 0.0 ? out.profit / out.cost * 100.0 : kNaN;
  for (const auto& plan : out.schedule.plans) {
    for (const auto& a : plan.station) {
      for (double v : a) r.station_energy += v;
    }
    for (double v : plan.home) r.home_energy += v;
    r.owner_payment += plan.station_payment + plan.home_payment;
  }
  r.retail_price = r.station_energy > 0.0 ? usd_per_mwh_to_cents_per_kwh(out.revenue / r.station_energy) : kNaN;
  r.purchased_price = r.station_energy > 0.0 ? out.cost / r.station_energy : kNaN;
  r.max_lmp = -std::numeric_limits<double>::infinity();
  r.min_lmp = std::numeric_limits<double>::infinity();
  for (const auto& bus : out.market.lmp) {
    for (double v : bus) {
      r.max_lmp = std::max(r.max_lmp, v);
      r.min_lmp = std::min(r.min_lmp, v);
    }
  }
  for (const auto& u : s.network.solar) {
    for (double v : u.available) r.solar_available += v;
  }
  for (const auto& u : out.market.solar) {
    for (double v : u) r.solar_utilized += v;
  }
  r.solar_curtailment = r.solar_available > 0.0 ? 100.0 * (1.0 - r.solar_utilized / r.solar_available) : 0.0;
  return r;
}

// The scenario with every station access switched off.
inline Scenario without_stations(const Scenario& s) {
  Scenario out = s;
  for (auto& f : out.fleets) {
    for (auto& a : f.stations) std::fill(a.connectivity.begin(), a.connectivity.end(), 0.0);
  }
  return out;
}

// EV-owner payment when fleets can only charge at home.
inline double owner_payment_without_stations(const Scenario& s, const AccessSeries& offers) {
  const Scenario bare = without_stations(s);
  return solve_fleet(make_fleet_input(bare, offers), detail::solver_options(s)).total_cost;
}

// Positive when stations lower what EV owners pay.
inline double owner_savings(double payment_with, double payment_without) { return payment_without - payment_with; }

struct BaselineResult {
  MetricsRow metrics;
  EquilibriumOutcome outcome;
  Certificate certificate;
};

inline BaselineResult run_baseline(const Scenario& s, std::size_t budget) {
  require_valid(s);
  BaselineResult r;
  r.outcome = optimize(s, budget);
  r.certificate = certify(s, r.outcome, s.settings.duality_tol);
  r.metrics = compute_metrics(s, r.outcome);
  r.metrics.owner_payment_without = owner_payment_without_stations(s, r.outcome.offers);
  r.metrics.owner_savings = owner_savings(r.metrics.owner_payment, r.metrics.owner_payment_without);
  r.metrics.certified = r.certificate.pass;
  return r;
}

inline BaselineResult run_baseline(const Scenario& s) { return run_baseline(s, s.settings.budget); }

namespace detail {

template <class Transform>
std::vector<MetricsRow> sweep(const Scenario& s, const std::vector<double>& params, const std::string& prefix,
                              Transform transform) {
  const std::size_t workers = worker_count(s);
  const std::size_t outer = std::max<std::size_t>(1, std::min(params.size(), workers));
  return parallel_map(params.size(), outer, [&](std::size_t i) {
    MetricsRow row;
    try {
      Scenario level = transform(s, params[i]);
      level.settings.threads = std::max<std::size_t>(1, workers / outer);
      row = run_baseline(level).metrics;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s=%g", prefix.c_str(), params[i]);
    row.label = buf;
    row.parameter = params[i];
    return row;
  });
}

}  // namespace detail

// One row per level, in input order. A failing level yields a row carrying
// the error instead of aborting the sweep.
inline std::vector<MetricsRow> sweep_penetration(const Scenario& s, const std::vector<double>& levels) {
  return detail::sweep(s, levels, "penetration", [](const Scenario& base, double level) {
    return scale_penetration(base, level);
  });
}

inline std::vector<MetricsRow> sweep_pv(const Scenario& s, const std::vector<double>& multipliers) {
  return detail::sweep(s, multipliers, "pv", [](const Scenario& base, double m) { return scale_solar(base, m); });
}

// ---------------------------------------------------------------------------
// Trends

struct TrendVerdict {
  std::string metric;
  std::string direction;  // "non-increasing" or "non-decreasing"
  bool holds = false;
  bool required = true;  // informational verdicts do not decide a study
  std::string values;
};

namespace detail {

inline TrendVerdict trend(const std::vector<MetricsRow>& rows, const std::string& metric, double MetricsRow::*field,
                          bool increasing, bool required = true) {
  TrendVerdict v{metric, increasing ? "non-decreasing" : "non-increasing", true, required, {}};
  std::optional<double> prev;
  for (const auto& r : rows) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2f", r.*field);
    if (!v.values.empty()) v.values += " -> ";
    v.values += r.ok() ? buf : "error";
    const double x = r.*field;
    if (!r.ok() || std::isnan(x)) {
      v.holds = false;
      continue;
    }
    if (prev) {
      const double slack = 1e-6 * std::max(1.0, std::abs(*prev));
      if (increasing ? x < *prev - slack : x > *prev + slack) v.holds = false;
    }
    prev = x;
  }
  return v;
}

}  // namespace detail

// Rows must be ordered by increasing penetration.
inline std::vector<TrendVerdict> penetration_trends(const std::vector<MetricsRow>& rows) {
  return {detail::trend(rows, "profit_percent", &MetricsRow::profit_percent, false),
          detail::trend(rows, "purchased_price_usd_per_mwh", &MetricsRow::purchased_price, true),
          detail::trend(rows, "revenue_usd", &MetricsRow::revenue, true, false)};
}

// Rows must be ordered by increasing solar multiplier.
inline std::vector<TrendVerdict> pv_trends(const std::vector<MetricsRow>& rows) {
  return {detail::trend(rows, "purchased_price_usd_per_mwh", &MetricsRow::purchased_price, false),
          detail::trend(rows, "profit_usd", &MetricsRow::profit, true)};
}

inline bool required_trends_hold(const std::vector<TrendVerdict>& verdicts) {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const TrendVerdict& v) { return v.holds || !v.required; });
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kMetricsHeader =
    "case,parameter,revenue_usd,cost_usd,profit_usd,profit_percent,retail_price_cents_per_kwh,"
    "purchased_price_usd_per_mwh,max_lmp_usd_per_mwh,min_lmp_usd_per_mwh,station_energy_mwh,home_energy_mwh,"
    "solar_available_mwh,solar_utilized_mwh,solar_curtailment_percent,owner_payment_usd,"
    "owner_payment_without_stations_usd,owner_savings_usd,certified,error";

// Fixed-precision number; NaN prints as "nan" and negative zero as zero.
inline std::string fixed(double v, int decimals) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

inline void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  os << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    os << csv_escape(r.label) << ',' << (std::isnan(r.parameter) ? "" : fixed(r.parameter, 4)) << ','
       << fixed(r.revenue, 2) << ',' << fixed(r.cost, 2) << ',' << fixed(r.profit, 2) << ','
       << fixed(r.profit_percent, 1) << ',' << fixed(r.retail_price, 1) << ',' << fixed(r.purchased_price, 2)
       << ',' << fixed(r.max_lmp, 2) << ',' << fixed(r.min_lmp, 2) << ',' << fixed(r.station_energy, 3) << ','
       << fixed(r.home_energy, 3) << ',' << fixed(r.solar_available, 3) << ',' << fixed(r.solar_utilized, 3)
       << ',' << fixed(r.solar_curtailment, 1) << ',' << fixed(r.owner_payment, 2) << ','
       << fixed(r.owner_payment_without, 2) << ',' << fixed(r.owner_savings, 2) << ','
       << (r.certified ? "yes" : "no") << ',' << csv_escape(r.error) << '\n';
  }
}

inline void write_trends(std::ostream& os, const std::vector<TrendVerdict>& verdicts) {
  for (const auto& v : verdicts) {
    const char* tag = v.holds ? "holds " : v.required ? "FAILS " : "differs (informational) ";
    os << tag << v.metric << ' ' << v.direction << ": " << v.values << '\n';
  }
}

}  // namespace evcs
