#pragma once

// Scenario files: JSON with a schema_version field, plus CSV series tables.
//
// A series field accepts a number (repeated over the horizon), an array, or
// {"csv": "relative/path.csv", "row": "id"} naming a row of a CSV table whose
// header is `id,t0,t1,...`. Fleet TOU rates and station offer bounds are read
// in the unit named by `retail_price_unit` and stored in $/MWh.

#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evcs/model.hpp"

namespace evcs {

using Json = nlohmann::ordered_json;

inline constexpr int kScenarioSchemaVersion = 1;

// Rows of a series table keyed by id.
inline std::map<std::string, Series> read_series_csv(std::istream& in, const std::string& source = "series table") {
  std::map<std::string, Series> rows;
  std::string line;
  std::size_t lineno = 0, width = 0;
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      while (!cell.empty() && cell.front() == ' ') cell.erase(0, 1);
      cells.push_back(cell);
    }
    return cells;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split(line);
    if (width == 0) {
      if (cells.empty() || cells[0] != "id") throw ScenarioError(source + ": header must start with id");
      width = cells.size();
      continue;
    }
    const std::string where = source + ":" + std::to_string(lineno);
    if (cells.size() != width) throw ScenarioError(where + ": expected " + std::to_string(width) + " cells");
    Series s;
    for (std::size_t k = 1; k < cells.size(); ++k) {
      try {
        std::size_t used = 0;
        s.push_back(std::stod(cells[k], &used));
        if (used != cells[k].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw ScenarioError(where + ": not a number: " + cells[k]);
      }
    }
    if (!rows.emplace(cells[0], std::move(s)).second) throw ScenarioError(where + ": duplicate id " + cells[0]);
  }
  if (width == 0) throw ScenarioError(source + ": empty table");
  return rows;
}

namespace detail {

class ScenarioReader {
 public:
  explicit ScenarioReader(std::filesystem::path base) : base_(std::move(base)) {}

  Scenario read(const Json& j) {
    object(j, "", {"schema_version", "name", "horizon", "retail_price_unit", "buses", "lines", "generators",
                   "solar", "demands", "fleets", "stations", "settings", "sweeps"});
    Scenario s;
    s.schema_version = integer(j, "schema_version", "", -1);
    if (s.schema_version != kScenarioSchemaVersion) {
      throw ScenarioError("schema_version: unsupported version " + std::to_string(s.schema_version));
    }
    s.name = text(j, "name", "", "");
    s.network.horizon = static_cast<std::size_t>(integer(j, "horizon", "", -1));
    if (s.network.horizon < 1) throw ScenarioError("horizon: must be at least 1");
    T_ = s.network.horizon;
    const std::string unit = text(j, "retail_price_unit", "", "usd_per_mwh");
    if (unit == "usd_per_mwh") {
      retail_scale_ = 1.0;
    } else if (unit == "cents_per_kwh") {
      retail_scale_ = kUsdPerMwhPerCentPerKwh;
    } else {
      throw ScenarioError("retail_price_unit: expected usd_per_mwh or cents_per_kwh");
    }

    for_each(j, "buses", [&](const Json& b, const std::string& p) {
      object(b, p, {"id", "angle_min", "angle_max", "reference"});
      Bus bus;
      bus.id = text(b, "id", p);
      bus.angle_min = number(b, "angle_min", p, bus.angle_min);
      bus.angle_max = number(b, "angle_max", p, bus.angle_max);
      bus.reference = flag(b, "reference", p, false);
      s.network.buses.push_back(bus);
    });
    for_each(j, "lines", [&](const Json& l, const std::string& p) {
      object(l, p, {"id", "from", "to", "reactance", "flow_min", "flow_max", "flow_limit"});
      Line line;
      line.id = text(l, "id", p);
      line.from = text(l, "from", p);
      line.to = text(l, "to", p);
      line.reactance = number(l, "reactance", p, line.reactance);
      if (l.contains("flow_limit")) {
        line.flow_max = number(l, "flow_limit", p);
        line.flow_min = -line.flow_max;
      }
      line.flow_min = number(l, "flow_min", p, line.flow_min);
      line.flow_max = number(l, "flow_max", p, line.flow_max);
      s.network.lines.push_back(line);
    });
    for_each(j, "generators", [&](const Json& g, const std::string& p) {
      object(g, p, {"id", "bus", "p_min", "p_max", "segments"});
      Generator gen;
      gen.id = text(g, "id", p);
      gen.bus = text(g, "bus", p);
      gen.p_min = number(g, "p_min", p, 0.0);
      gen.p_max = number(g, "p_max", p);
      for_each(g, "segments", [&](const Json& k, const std::string& kp) {
        object(k, kp, {"width_min", "width_max", "cost"});
        gen.segments.push_back({number(k, "width_min", kp, 0.0), number(k, "width_max", kp), number(k, "cost", kp)});
      }, p);
      s.network.generators.push_back(gen);
    });
    for_each(j, "solar", [&](const Json& u, const std::string& p) {
      object(u, p, {"id", "bus", "available"});
      s.network.solar.push_back({text(u, "id", p), text(u, "bus", p), series(u, "available", p)});
    });
    for_each(j, "demands", [&](const Json& d, const std::string& p) {
      object(d, p, {"id", "bus", "load"});
      s.network.demands.push_back({text(d, "id", p), text(d, "bus", p), series(d, "load", p)});
    });
    for_each(j, "fleets", [&](const Json& f, const std::string& p) { s.fleets.push_back(fleet(f, p)); });
    for_each(j, "stations", [&](const Json& c, const std::string& p) { s.stations.push_back(station(c, p)); });
    if (j.contains("settings")) s.settings = settings(j.at("settings"), "settings");
    if (j.contains("sweeps")) {
      const Json& w = j.at("sweeps");
      object(w, "sweeps", {"penetration", "pv"});
      s.sweeps.penetration = list(w, "penetration", "sweeps");
      s.sweeps.pv = list(w, "pv", "sweeps");
    }
    return s;
  }

 private:
  std::filesystem::path base_;
  std::size_t T_ = 0;
  double retail_scale_ = 1.0;
  std::map<std::string, std::map<std::string, Series>> tables_;

  static std::string join(const std::string& p, const std::string& key) { return p.empty() ? key : p + "." + key; }

  static void object(const Json& j, const std::string& p, std::set<std::string> keys) {
    if (!j.is_object()) throw ScenarioError((p.empty() ? "document" : p) + ": expected an object");
    for (const auto& [k, v] : j.items()) {
      if (!keys.count(k)) throw ScenarioError(join(p, k) + ": unknown key");
    }
  }

  static const Json& field(const Json& j, const std::string& key, const std::string& p) {
    if (!j.contains(key)) throw ScenarioError(join(p, key) + ": missing");
    return j.at(key);
  }

  static double number(const Json& j, const std::string& key, const std::string& p) {
    const Json& v = field(j, key, p);
    if (!v.is_number()) throw ScenarioError(join(p, key) + ": expected a number");
    return v.get<double>();
  }
  static double number(const Json& j, const std::string& key, const std::string& p, double fallback) {
    return j.contains(key) ? number(j, key, p) : fallback;
  }

  static long long integer(const Json& j, const std::string& key, const std::string& p, long long fallback) {
    if (!j.contains(key)) {
      if (fallback < 0) throw ScenarioError(join(p, key) + ": missing");
      return fallback;
    }
    const Json& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ScenarioError(join(p, key) + ": expected a non-negative integer");
    }
    return v.get<long long>();
  }

  static std::string text(const Json& j, const std::string& key, const std::string& p) {
    const Json& v = field(j, key, p);
    if (!v.is_string()) throw ScenarioError(join(p, key) + ": expected a string");
    return v.get<std::string>();
  }
  static std::string text(const Json& j, const std::string& key, const std::string& p, const std::string& fallback) {
    return j.contains(key) ? text(j, key, p) : fallback;
  }

  static bool flag(const Json& j, const std::string& key, const std::string& p, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_boolean()) throw ScenarioError(join(p, key) + ": expected true or false");
    return j.at(key).get<bool>();
  }

  static Series list(const Json& j, const std::string& key, const std::string& p) {
    Series out;
    if (!j.contains(key)) return out;
    const Json& v = j.at(key);
    if (!v.is_array()) throw ScenarioError(join(p, key) + ": expected an array");
    for (const auto& x : v) {
      if (!x.is_number()) throw ScenarioError(join(p, key) + ": expected numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  template <class Fn>
  static void for_each(const Json& j, const std::string& key, Fn fn, const std::string& p = "") {
    if (!j.contains(key)) return;
    const Json& v = j.at(key);
    const std::string kp = join(p, key);
    if (!v.is_array()) throw ScenarioError(kp + ": expected an array");
    for (std::size_t i = 0; i < v.size(); ++i) fn(v[i], kp + "[" + std::to_string(i) + "]");
  }

  Series series(const Json& j, const std::string& key, const std::string& p, double scale = 1.0) {
    const Json& v = field(j, key, p);
    const std::string kp = join(p, key);
    Series out;
    if (v.is_number()) {
      out.assign(T_, v.get<double>());
    } else if (v.is_array()) {
      out = list(j, key, p);
    } else if (v.is_object()) {
      object(v, kp, {"csv", "row"});
      const auto& rows = table(text(v, "csv", kp), kp);
      const std::string row = text(v, "row", kp);
      auto it = rows.find(row);
      if (it == rows.end()) throw ScenarioError(kp + ": row " + row + " not found");
      out = it->second;
    } else {
      throw ScenarioError(kp + ": expected a number, an array or a csv reference");
    }
    for (auto& x : out) x *= scale;
    return out;
  }

  const std::map<std::string, Series>& table(const std::string& rel, const std::string& p) {
    auto it = tables_.find(rel);
    if (it != tables_.end()) return it->second;
    const auto path = base_ / rel;
    std::ifstream in(path);
    if (!in) throw ScenarioError(p + ": cannot read " + path.string());
    return tables_.emplace(rel, read_series_csv(in, path.string())).first->second;
  }

  EvFleet fleet(const Json& f, const std::string& p) {
    object(f, p, {"id", "bus", "max_charge", "home_cap", "home_connectivity", "stations", "energy_min", "energy_max",
                  "energy_initial", "terminal_equals_initial", "eta_charge", "eta_discharge", "discharge",
                  "tou_rate"});
    EvFleet out;
    out.id = text(f, "id", p);
    out.bus = text(f, "bus", p);
    out.max_charge = number(f, "max_charge", p);
    out.home_cap = number(f, "home_cap", p);
    out.home_connectivity = f.contains("home_connectivity") ? series(f, "home_connectivity", p) : Series(T_, 1.0);
    for_each(f, "stations", [&](const Json& a, const std::string& ap) {
      object(a, ap, {"station", "cap", "connectivity"});
      out.stations.push_back({text(a, "station", ap), number(a, "cap", ap),
                              a.contains("connectivity") ? series(a, "connectivity", ap) : Series(T_, 1.0)});
    }, p);
    out.energy_min = number(f, "energy_min", p, 0.0);
    out.energy_max = number(f, "energy_max", p);
    out.energy_initial = number(f, "energy_initial", p, out.energy_min);
    out.terminal_equals_initial = flag(f, "terminal_equals_initial", p, false);
    out.eta_charge = number(f, "eta_charge", p, 1.0);
    out.eta_discharge = number(f, "eta_discharge", p, 1.0);
    out.discharge = series(f, "discharge", p);
    out.tou_rate = series(f, "tou_rate", p, retail_scale_);
    return out;
  }

  ChargingStation station(const Json& c, const std::string& p) {
    object(c, p, {"id", "bus", "terms"});
    ChargingStation out;
    out.id = text(c, "id", p);
    out.bus = text(c, "bus", p);
    for_each(c, "terms", [&](const Json& t, const std::string& tp) {
      object(t, tp, {"fleet", "offer_min", "offer_max", "segments"});
      StationTerms terms;
      terms.fleet = text(t, "fleet", tp);
      terms.offer_min = series(t, "offer_min", tp, retail_scale_);
      terms.offer_max = series(t, "offer_max", tp, retail_scale_);
      for_each(t, "segments", [&](const Json& m, const std::string& mp) {
        object(m, mp, {"width", "wtp_min", "wtp_max"});
        terms.segments.push_back({number(m, "width", mp), series(m, "wtp_min", mp), series(m, "wtp_max", mp)});
      }, tp);
      out.terms.push_back(terms);
    }, p);
    return out;
  }

  static SolverSettings settings(const Json& j, const std::string& p) {
    object(j, p, {"feas_tol", "duality_tol", "budget", "seed", "starts", "min_step", "parameterization",
                  "block_width", "tie_break", "wtp_in_fleet_objective", "brute_force_cap", "threads"});
    SolverSettings s;
    s.feas_tol = number(j, "feas_tol", p, s.feas_tol);
    s.duality_tol = number(j, "duality_tol", p, s.duality_tol);
    s.budget = static_cast<std::size_t>(integer(j, "budget", p, static_cast<long long>(s.budget)));
    s.seed = static_cast<std::uint64_t>(integer(j, "seed", p, static_cast<long long>(s.seed)));
    s.starts = static_cast<std::size_t>(integer(j, "starts", p, static_cast<long long>(s.starts)));
    s.min_step = number(j, "min_step", p, s.min_step);
    const std::string mode = text(j, "parameterization", p, "per_station_period");
    if (mode == "full") {
      s.parameterization = Parameterization::full;
    } else if (mode == "per_station_period") {
      s.parameterization = Parameterization::per_station_period;
    } else if (mode == "per_station_block") {
      s.parameterization = Parameterization::per_station_block;
    } else {
      throw ScenarioError(join(p, "parameterization") + ": expected full, per_station_period or per_station_block");
    }
    s.block_width = static_cast<std::size_t>(integer(j, "block_width", p, static_cast<long long>(s.block_width)));
    s.tie_break = number(j, "tie_break", p, s.tie_break);
    s.wtp_in_fleet_objective = flag(j, "wtp_in_fleet_objective", p, s.wtp_in_fleet_objective);
    s.brute_force_cap =
        static_cast<std::size_t>(integer(j, "brute_force_cap", p, static_cast<long long>(s.brute_force_cap)));
    s.threads = static_cast<std::size_t>(integer(j, "threads", p, static_cast<long long>(s.threads)));
    return s;
  }
};

inline const char* parameterization_name(Parameterization p) {
  switch (p) {
    case Parameterization::full: return "full";
    case Parameterization::per_station_block: return "per_station_block";
    default: return "per_station_period";
  }
}

}  // namespace detail

// Throws ScenarioError naming the offending field. CSV references resolve
// against `base_dir`.
inline Scenario scenario_from_json(const Json& j, const std::filesystem::path& base_dir = ".") {
  return detail::ScenarioReader(base_dir).read(j);
}

inline Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir = ".") {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ScenarioError(std::string("malformed JSON: ") + e.what());
  }
  return scenario_from_json(j, base_dir);
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.parent_path().empty() ? "." : path.parent_path());
}

// Canonical form: series as arrays, prices in $/MWh.
inline Json scenario_to_json(const Scenario& s) {
  Json j;
  j["schema_version"] = s.schema_version;
  j["name"] = s.name;
  j["horizon"] = s.network.horizon;
  j["retail_price_unit"] = "usd_per_mwh";
  j["buses"] = Json::array();
  for (const auto& b : s.network.buses) {
    j["buses"].push_back({{"id", b.id}, {"angle_min", b.angle_min}, {"angle_max", b.angle_max},
                          {"reference", b.reference}});
  }
  j["lines"] = Json::array();
  for (const auto& l : s.network.lines) {
    j["lines"].push_back({{"id", l.id}, {"from", l.from}, {"to", l.to}, {"reactance", l.reactance},
                          {"flow_min", l.flow_min}, {"flow_max", l.flow_max}});
  }
  j["generators"] = Json::array();
  for (const auto& g : s.network.generators) {
    Json segs = Json::array();
    for (const auto& k : g.segments) {
      segs.push_back({{"width_min", k.width_min}, {"width_max", k.width_max}, {"cost", k.cost}});
    }
    j["generators"].push_back({{"id", g.id}, {"bus", g.bus}, {"p_min", g.p_min}, {"p_max", g.p_max},
                               {"segments", segs}});
  }
  j["solar"] = Json::array();
  for (const auto& u : s.network.solar) j["solar"].push_back({{"id", u.id}, {"bus", u.bus}, {"available", u.available}});
  j["demands"] = Json::array();
  for (const auto& d : s.network.demands) j["demands"].push_back({{"id", d.id}, {"bus", d.bus}, {"load", d.load}});
  j["fleets"] = Json::array();
  for (const auto& f : s.fleets) {
    Json acc = Json::array();
    for (const auto& a : f.stations) {
      acc.push_back({{"station", a.station}, {"cap", a.cap}, {"connectivity", a.connectivity}});
    }
    j["fleets"].push_back({{"id", f.id},
                           {"bus", f.bus},
                           {"max_charge", f.max_charge},
                           {"home_cap", f.home_cap},
                           {"home_connectivity", f.home_connectivity},
                           {"stations", acc},
                           {"energy_min", f.energy_min},
                           {"energy_max", f.energy_max},
                           {"energy_initial", f.energy_initial},
                           {"terminal_equals_initial", f.terminal_equals_initial},
                           {"eta_charge", f.eta_charge},
                           {"eta_discharge", f.eta_discharge},
                           {"discharge", f.discharge},
                           {"tou_rate", f.tou_rate}});
  }
  j["stations"] = Json::array();
  for (const auto& c : s.stations) {
    Json terms = Json::array();
    for (const auto& t : c.terms) {
      Json segs = Json::array();
      for (const auto& m : t.segments) {
        segs.push_back({{"width", m.width}, {"wtp_min", m.wtp_min}, {"wtp_max", m.wtp_max}});
      }
      terms.push_back({{"fleet", t.fleet}, {"offer_min", t.offer_min}, {"offer_max", t.offer_max},
                       {"segments", segs}});
    }
    j["stations"].push_back({{"id", c.id}, {"bus", c.bus}, {"terms", terms}});
  }
  const auto& st = s.settings;
  j["settings"] = {{"feas_tol", st.feas_tol},
                   {"duality_tol", st.duality_tol},
                   {"budget", st.budget},
                   {"seed", st.seed},
                   {"starts", st.starts},
                   {"min_step", st.min_step},
                   {"parameterization", detail::parameterization_name(st.parameterization)},
                   {"block_width", st.block_width},
                   {"tie_break", st.tie_break},
                   {"wtp_in_fleet_objective", st.wtp_in_fleet_objective},
                   {"brute_force_cap", st.brute_force_cap},
                   {"threads", st.threads}};
  j["sweeps"] = {{"penetration", s.sweeps.penetration}, {"pv", s.sweeps.pv}};
  return j;
}

}  // namespace evcs
