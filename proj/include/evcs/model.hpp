#pragma once

// Domain data for the charging-station market: transmission network, EV
// fleets, charging stations and the scenario that bundles them.
//
// Units: power in MW, energy in MWh, one-hour periods (so MW and MWh convert
// with factor 1), money in $ and prices in $/MWh. Retail prices may be given
// in cents/kWh at the file boundary; 1 cent/kWh = 10 $/MWh.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace evcs {

using Series = std::vector<double>;

inline constexpr double kUsdPerMwhPerCentPerKwh = 10.0;
inline double cents_per_kwh_to_usd_per_mwh(double v) { return v * kUsdPerMwhPerCentPerKwh; }
inline double usd_per_mwh_to_cents_per_kwh(double v) { return v / kUsdPerMwhPerCentPerKwh; }

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Bus {
  std::string id;
  double angle_min = -std::numbers::pi;  // rad
  double angle_max = std::numbers::pi;
  bool reference = false;
};

struct Line {
  std::string id;
  std::string from;
  std::string to;
  double reactance = 0.1;  // p.u.
  double flow_min = -1e3;  // MW
  double flow_max = 1e3;
};

// One block of a piecewise-linear generation cost curve.
struct CostSegment {
  double width_min = 0.0;  // MW
  double width_max = 0.0;
  double cost = 0.0;  // $/MWh
};

struct Generator {
  std::string id;
  std::string bus;
  double p_min = 0.0;
  double p_max = 0.0;
  std::vector<CostSegment> segments;
};

struct SolarUnit {
  std::string id;
  std::string bus;
  Series available;  // MW per period
};

struct Demand {
  std::string id;
  std::string bus;
  Series load;  // MW per period
};

struct Network {
  std::size_t horizon = 24;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Generator> generators;
  std::vector<SolarUnit> solar;
  std::vector<Demand> demands;

  std::optional<std::size_t> bus_index(const std::string& id) const {
    for (std::size_t b = 0; b < buses.size(); ++b) {
      if (buses[b].id == id) return b;
    }
    return std::nullopt;
  }
  std::size_t require_bus(const std::string& id) const {
    auto b = bus_index(id);
    if (!b) throw ScenarioError("unknown bus " + id);
    return *b;
  }
  // First bus flagged as reference.
  std::optional<std::size_t> reference_bus() const {
    for (std::size_t b = 0; b < buses.size(); ++b) {
      if (buses[b].reference) return b;
    }
    return std::nullopt;
  }
};

// A fleet's access to one charging station.
struct StationAccess {
  std::string station;
  double cap = 0.0;       // MW
  Series connectivity;    // share of the fleet plugged in at the station, [0,1]
};

struct EvFleet {
  std::string id;
  std::string bus;
  double max_charge = 0.0;  // MW, fleet battery charge rate
  double home_cap = 0.0;    // MW
  Series home_connectivity;
  std::vector<StationAccess> stations;
  double energy_min = 0.0;  // MWh
  double energy_max = 0.0;
  double energy_initial = 0.0;
  // End-of-horizon energy free by default; when set it must return to the
  // initial level.
  bool terminal_equals_initial = false;
  double eta_charge = 1.0;
  double eta_discharge = 1.0;
  Series discharge;  // MW drawn by driving, exogenous
  Series tou_rate;   // $/MWh

  std::optional<std::size_t> access_index(const std::string& station) const {
    for (std::size_t a = 0; a < stations.size(); ++a) {
      if (stations[a].station == station) return a;
    }
    return std::nullopt;
  }
};

struct WtpSegment {
  double width = 0.0;  // MW
  Series wtp_min;      // $/MWh
  Series wtp_max;
};

// Pricing terms a station offers to one fleet.
struct StationTerms {
  std::string fleet;
  Series offer_min;  // $/MWh
  Series offer_max;
  std::vector<WtpSegment> segments;
};

struct ChargingStation {
  std::string id;
  std::string bus;
  std::vector<StationTerms> terms;

  const StationTerms* terms_for(const std::string& fleet) const {
    for (const auto& t : terms) {
      if (t.fleet == fleet) return &t;
    }
    return nullptr;
  }
};

// How the upper-level search parameterises offer prices.
enum class Parameterization {
  full,                // one price per (fleet, station, period)
  per_station_period,  // shared by all fleets of a station in a period
  per_station_block,   // shared by all fleets of a station over a block of periods
};

struct SolverSettings {
  double feas_tol = 1e-8;
  double duality_tol = 1e-6;
  std::size_t budget = 3000;  // upper-level evaluations
  std::uint64_t seed = 1;
  std::size_t starts = 8;
  double min_step = 0.01;  // $/MWh
  Parameterization parameterization = Parameterization::per_station_period;
  std::size_t block_width = 1;
  // Home-charging cost perturbation that makes fleets prefer a station when
  // offer price and TOU rate tie.
  double tie_break = 1e-6;  // $/MWh
  // Adds the WTP price times segment quantity to the fleet objective.
  bool wtp_in_fleet_objective = false;
  std::size_t brute_force_cap = 1'000'000;
  std::size_t threads = 0;  // 0: hardware concurrency
};

struct SweepSpec {
  std::vector<double> penetration;
  std::vector<double> pv;
};

struct Scenario {
  int schema_version = 1;
  std::string name;
  Network network;
  std::vector<EvFleet> fleets;
  std::vector<ChargingStation> stations;
  SolverSettings settings;
  SweepSpec sweeps;

  std::size_t horizon() const { return network.horizon; }

  std::optional<std::size_t> fleet_index(const std::string& id) const {
    for (std::size_t f = 0; f < fleets.size(); ++f) {
      if (fleets[f].id == id) return f;
    }
    return std::nullopt;
  }
  std::optional<std::size_t> station_index(const std::string& id) const {
    for (std::size_t c = 0; c < stations.size(); ++c) {
      if (stations[c].id == id) return c;
    }
    return std::nullopt;
  }
  // Terms of the station behind access `a` of fleet `f`.
  const StationTerms& terms(std::size_t f, std::size_t a) const {
    const auto& acc = fleets.at(f).stations.at(a);
    auto c = station_index(acc.station);
    if (!c) throw ScenarioError("fleet " + fleets[f].id + " uses unknown station " + acc.station);
    const StationTerms* t = stations[*c].terms_for(fleets[f].id);
    if (!t) {
      throw ScenarioError("station " + acc.station + " has no terms for fleet " + fleets[f].id);
    }
    return *t;
  }
};

// ---------------------------------------------------------------------------
// Validation

struct Issue {
  std::string path;
  std::string message;
};

struct ValidationReport {
  std::vector<Issue> issues;

  bool ok() const { return issues.empty(); }
  bool mentions(const std::string& text) const {
    for (const auto& i : issues) {
      if (i.message.find(text) != std::string::npos) return true;
    }
    return false;
  }
  std::string to_string() const {
    std::ostringstream os;
    for (const auto& i : issues) os << i.path << ": " << i.message << '\n';
    return os.str();
  }
};

namespace detail {

class Validator {
 public:
  explicit Validator(const Scenario& s) : s_(s), T_(s.network.horizon) {}

  ValidationReport run() {
    if (T_ == 0) add("network.horizon", "horizon must be at least one period");
    network();
    fleets();
    stations();
    settings();
    return std::move(rep_);
  }

 private:
  const Scenario& s_;
  std::size_t T_;
  ValidationReport rep_;

  void add(std::string path, std::string msg) { rep_.issues.push_back({std::move(path), std::move(msg)}); }

  void series(const std::string& path, const Series& v, double lo, double hi) {
    if (v.size() != T_) {
      add(path, "series has length " + std::to_string(v.size()) + ", expected " + std::to_string(T_));
    }
    for (std::size_t t = 0; t < v.size(); ++t) {
      if (!std::isfinite(v[t]) || v[t] < lo || v[t] > hi) {
        add(path + "[" + std::to_string(t) + "]", "value out of range");
        return;
      }
    }
  }

  template <typename Items>
  void unique_ids(const std::string& path, const Items& items) {
    std::set<std::string> seen;
    for (const auto& it : items) {
      if (it.id.empty()) add(path, "empty id");
      if (!seen.insert(it.id).second) add(path, "duplicate id " + it.id);
    }
  }

  bool has_bus(const std::string& id) const { return s_.network.bus_index(id).has_value(); }

  void network() {
    const auto& n = s_.network;
    unique_ids("network.buses", n.buses);
    unique_ids("network.lines", n.lines);
    unique_ids("network.generators", n.generators);
    unique_ids("network.solar", n.solar);
    unique_ids("network.demands", n.demands);
    std::size_t refs = 0;
    for (std::size_t b = 0; b < n.buses.size(); ++b) {
      const auto& bus = n.buses[b];
      const std::string p = "network.buses[" + bus.id + "]";
      if (!(bus.angle_min <= bus.angle_max)) add(p, "angle bounds inverted");
      if (bus.reference) {
        ++refs;
        if (bus.angle_min > 0.0 || bus.angle_max < 0.0) add(p, "reference angle 0 outside bounds");
      }
    }
    if (refs == 0) add("network.buses", "no reference bus");
    if (refs > 1) add("network.buses", "multiple reference buses");
    for (const auto& l : n.lines) {
      const std::string p = "network.lines[" + l.id + "]";
      if (!has_bus(l.from)) add(p, "unknown from-bus " + l.from);
      if (!has_bus(l.to)) add(p, "unknown to-bus " + l.to);
      if (l.from == l.to) add(p, "line connects a bus to itself");
      if (!(l.reactance > 0.0) || !std::isfinite(l.reactance)) add(p, "reactance must be positive");
      if (!std::isfinite(l.flow_min) || !std::isfinite(l.flow_max) || l.flow_min > l.flow_max) {
        add(p, "flow bounds must be finite and ordered");
      }
    }
    for (const auto& g : n.generators) {
      const std::string p = "network.generators[" + g.id + "]";
      if (!has_bus(g.bus)) add(p, "unknown bus " + g.bus);
      if (!std::isfinite(g.p_min) || !std::isfinite(g.p_max) || g.p_min > g.p_max) {
        add(p, "output bounds must be finite and ordered");
      }
      if (g.segments.empty()) add(p, "needs at least one cost segment");
      double wmin = 0.0, wmax = 0.0;
      for (std::size_t k = 0; k < g.segments.size(); ++k) {
        const auto& seg = g.segments[k];
        const std::string sp = p + ".segments[" + std::to_string(k) + "]";
        if (!(seg.width_min >= 0.0) || !(seg.width_max >= seg.width_min) || !std::isfinite(seg.width_max)) {
          add(sp, "segment widths must be non-negative and ordered");
        }
        if (!std::isfinite(seg.cost)) add(sp, "non-finite marginal cost");
        if (k > 0 && seg.cost < g.segments[k - 1].cost) add(sp, "marginal costs must be non-decreasing");
        wmin += seg.width_min;
        wmax += seg.width_max;
      }
      if (!g.segments.empty()) {
        if (wmax < g.p_max - g.p_min) add(p, "segments do not cover the output range");
        if (wmin > g.p_max || wmax < g.p_min) add(p, "segment widths incompatible with output bounds");
      }
    }
    for (const auto& s : n.solar) {
      const std::string p = "network.solar[" + s.id + "]";
      if (!has_bus(s.bus)) add(p, "unknown bus " + s.bus);
      series(p + ".available", s.available, 0.0, 1e12);
    }
    for (const auto& d : n.demands) {
      const std::string p = "network.demands[" + d.id + "]";
      if (!has_bus(d.bus)) add(p, "unknown bus " + d.bus);
      series(p + ".load", d.load, -1e12, 1e12);
    }
  }

  void fleets() {
    unique_ids("fleets", s_.fleets);
    for (const auto& f : s_.fleets) {
      const std::string p = "fleets[" + f.id + "]";
      if (!has_bus(f.bus)) add(p, "unknown bus " + f.bus);
      if (!(f.max_charge >= 0.0) || !std::isfinite(f.max_charge)) add(p, "max_charge must be non-negative");
      if (!(f.home_cap >= 0.0) || !std::isfinite(f.home_cap)) add(p, "home_cap must be non-negative");
      series(p + ".home_connectivity", f.home_connectivity, 0.0, 1.0);
      series(p + ".discharge", f.discharge, -1e12, 1e12);
      series(p + ".tou_rate", f.tou_rate, -1e12, 1e12);
      if (!(f.energy_min <= f.energy_max)) add(p, "energy bounds inverted");
      if (!(f.energy_initial >= f.energy_min && f.energy_initial <= f.energy_max)) {
        add(p, "initial energy outside energy bounds");
      }
      if (!(f.eta_charge > 0.0 && f.eta_charge <= 1.0)) add(p, "charge efficiency must be in (0,1]");
      if (!(f.eta_discharge > 0.0 && f.eta_discharge <= 1.0)) add(p, "discharge efficiency must be in (0,1]");
      std::set<std::string> seen;
      for (const auto& a : f.stations) {
        const std::string ap = p + ".stations[" + a.station + "]";
        if (!seen.insert(a.station).second) add(ap, "duplicate station access");
        auto c = s_.station_index(a.station);
        if (!c) {
          add(ap, "unknown station " + a.station);
        } else if (!s_.stations[*c].terms_for(f.id)) {
          add(ap, "station offers no terms to this fleet");
        }
        if (!(a.cap >= 0.0) || !std::isfinite(a.cap)) add(ap, "cap must be non-negative");
        series(ap + ".connectivity", a.connectivity, 0.0, 1.0);
      }
      bool shaped = f.home_connectivity.size() == T_ && f.discharge.size() == T_;
      for (const auto& a : f.stations) shaped = shaped && a.connectivity.size() == T_;
      if (shaped) energy_reachability(f, p);
    }
  }

  // Greedy maximal-charge trajectory: if even charging flat out cannot keep
  // the battery above its floor, no schedule can.
  void energy_reachability(const EvFleet& f, const std::string& p) {
    double e = f.energy_initial;
    for (std::size_t t = 0; t < T_; ++t) {
      double cap = f.home_connectivity[t] * f.home_cap;
      for (const auto& a : f.stations) cap += a.connectivity[t] * a.cap;
      cap = std::min(cap, f.max_charge);
      e = std::min(f.energy_max, e + f.eta_charge * cap - f.discharge[t] / f.eta_discharge);
      if (e < f.energy_min - 1e-9) {
        add(p, "cumulative discharge exceeds charging capability in period " + std::to_string(t));
        return;
      }
    }
    if (f.terminal_equals_initial && e < f.energy_initial - 1e-9) {
      add(p, "terminal energy cannot return to the initial level");
    }
  }

  void stations() {
    unique_ids("stations", s_.stations);
    for (const auto& c : s_.stations) {
      const std::string p = "stations[" + c.id + "]";
      bool hosts_fleet = false;
      for (const auto& f : s_.fleets) hosts_fleet = hosts_fleet || f.bus == c.bus;
      if (!has_bus(c.bus)) add(p, "unknown bus " + c.bus);
      else if (!hosts_fleet) add(p, "bus " + c.bus + " hosts no fleet");
      std::set<std::string> seen;
      for (const auto& t : c.terms) {
        const std::string tp = p + ".terms[" + t.fleet + "]";
        if (!seen.insert(t.fleet).second) add(tp, "duplicate terms for fleet");
        auto fi = s_.fleet_index(t.fleet);
        if (!fi) {
          add(tp, "unknown fleet " + t.fleet);
          continue;
        }
        const auto& f = s_.fleets[*fi];
        if (f.bus != c.bus) add(tp, "station bus differs from fleet bus " + f.bus);
        auto a = f.access_index(c.id);
        if (!a) add(tp, "fleet has no access entry for this station");
        series(tp + ".offer_min", t.offer_min, -1e12, 1e12);
        series(tp + ".offer_max", t.offer_max, -1e12, 1e12);
        for (std::size_t k = 0; k < std::min(t.offer_min.size(), t.offer_max.size()); ++k) {
          if (t.offer_min[k] > t.offer_max[k]) {
            add(tp, "offer bounds inverted in period " + std::to_string(k));
            break;
          }
        }
        double width = 0.0;
        for (std::size_t m = 0; m < t.segments.size(); ++m) {
          const auto& seg = t.segments[m];
          const std::string sp = tp + ".segments[" + std::to_string(m) + "]";
          if (!(seg.width >= 0.0) || !std::isfinite(seg.width)) add(sp, "width must be non-negative");
          series(sp + ".wtp_min", seg.wtp_min, -1e12, 1e12);
          series(sp + ".wtp_max", seg.wtp_max, -1e12, 1e12);
          for (std::size_t k = 0; k < std::min(seg.wtp_min.size(), seg.wtp_max.size()); ++k) {
            if (seg.wtp_min[k] > seg.wtp_max[k]) {
              add(sp, "WTP bounds inverted in period " + std::to_string(k));
              break;
            }
          }
          width += seg.width;
        }
        if (a && width < f.stations[*a].cap - 1e-12) {
          add(tp, "WTP segment widths do not cover the station cap");
        }
      }
    }
  }

  void settings() {
    const auto& st = s_.settings;
    if (!(st.feas_tol > 0.0)) add("settings.feas_tol", "must be positive");
    if (!(st.duality_tol > 0.0)) add("settings.duality_tol", "must be positive");
    if (st.budget < 1) add("settings.budget", "must be at least 1");
    if (st.starts < 1) add("settings.starts", "must be at least 1");
    if (!(st.min_step > 0.0)) add("settings.min_step", "must be positive");
    if (st.block_width < 1) add("settings.block_width", "must be at least 1");
    if (!(st.tie_break >= 0.0)) add("settings.tie_break", "must be non-negative");
    for (double l : s_.sweeps.penetration) {
      if (!(l > 0.0 && l < 1.0)) add("sweeps.penetration", "levels must lie in (0,1)");
    }
    for (double m : s_.sweeps.pv) {
      if (!(m >= 0.0)) add("sweeps.pv", "multipliers must be non-negative");
    }
  }
};

}  // namespace detail

// Every invariant violation of the scenario, with a path to the offending item.
inline ValidationReport validate(const Scenario& scenario) {
  return detail::Validator(scenario).run();
}

inline void require_valid(const Scenario& scenario) {
  auto rep = validate(scenario);
  if (!rep.ok()) throw ScenarioError("invalid scenario:\n" + rep.to_string());
}

// ---------------------------------------------------------------------------
// Scaling

// Grid energy needed to replace driving consumption, summed over fleets (MWh).
inline double ev_charge_demand(const Scenario& s) {
  double total = 0.0;
  for (const auto& f : s.fleets) {
    for (double p : f.discharge) total += p / (f.eta_discharge * f.eta_charge);
  }
  return total;
}

inline double non_ev_demand(const Scenario& s) {
  double total = 0.0;
  for (const auto& d : s.network.demands) {
    for (double p : d.load) total += p;
  }
  return total;
}

// EV charge demand over total demand including EVs.
inline double ev_penetration(const Scenario& s) {
  const double ev = ev_charge_demand(s);
  return ev / (ev + non_ev_demand(s));
}

// Multiplies every energy and power quantity of the fleets by `factor`:
// driving discharge, energy window, charge-rate caps and WTP segment widths.
inline Scenario scale_fleets(const Scenario& s, double factor) {
  Scenario out = s;
  for (auto& f : out.fleets) {
    for (auto& p : f.discharge) p *= factor;
    f.energy_min *= factor;
    f.energy_max *= factor;
    f.energy_initial *= factor;
    f.max_charge *= factor;
    f.home_cap *= factor;
    for (auto& a : f.stations) a.cap *= factor;
  }
  for (auto& c : out.stations) {
    for (auto& t : c.terms) {
      for (auto& seg : t.segments) seg.width *= factor;
    }
  }
  return out;
}

// Factor that moves the EV share of total demand to `level` with non-EV
// demand fixed: level/(1-level) * non_ev / ev.
inline double penetration_factor(const Scenario& s, double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("penetration level must lie in (0,1)");
  }
  const double ev = ev_charge_demand(s);
  if (!(ev > 0.0)) throw std::invalid_argument("base EV demand is zero");
  return level / (1.0 - level) * non_ev_demand(s) / ev;
}

inline Scenario scale_penetration(const Scenario& s, double level) {
  return scale_fleets(s, penetration_factor(s, level));
}

// Multiplies every solar availability profile.
inline Scenario scale_solar(const Scenario& s, double multiplier) {
  if (!(multiplier >= 0.0)) throw std::invalid_argument("solar multiplier must be non-negative");
  Scenario out = s;
  for (auto& u : out.network.solar) {
    for (auto& p : u.available) p *= multiplier;
  }
  return out;
}

}  // namespace evcs
