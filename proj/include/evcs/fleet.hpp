#pragma once

// EV fleet charging-cost minimisation for given station offer prices.
//
// Per fleet f and period t the program chooses total charge pf, home charge
// ph, station charge pc(a) per station access a, the split of pc over the
// station's WTP segments pm(a,m), and the end-of-period energy e(t):
//
//   min  sum pc * offer + sum ph * tou
//   0 <= pf <= max_charge,  0 <= pc <= conn * cap,  0 <= ph <= home_conn * home_cap
//   pf = ph + sum_a pc,  pc = sum_m pm,  0 <= pm <= width
//   e(t) = e(t-1) - discharge / eta_dc + eta_ch * pf,  e(-1) = initial energy
//   energy_min <= e(t) <= energy_max

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "evcs/errors.hpp"
#include "evcs/lp.hpp"
#include "evcs/model.hpp"
#include "evcs/naming.hpp"

namespace evcs {

// Prices and quantities indexed [fleet][access][period] (access = position
// in EvFleet::stations).
using AccessSeries = std::vector<std::vector<Series>>;

struct FleetInput {
  std::vector<EvFleet> fleets;
  AccessSeries offers;
  // WTP segment widths [fleet][access][segment].
  std::vector<std::vector<std::vector<double>>> segment_widths;
  // WTP prices [fleet][access][segment][period]. Read only by the variant
  // objective and the explicit dual; empty means zero.
  std::vector<std::vector<std::vector<Series>>> wtp;
  double tie_break = 0.0;
  bool wtp_in_objective = false;
};

struct FleetPlan {
  std::string fleet;
  Series total;
  Series home;
  std::vector<Series> station;               // [access][t]
  std::vector<std::vector<Series>> segment;  // [access][m][t]
  Series energy;                             // end of period
  double station_payment = 0.0;
  double home_payment = 0.0;
  double cost = 0.0;  // objective value without the tie-break perturbation
};

struct FleetSchedule {
  std::vector<FleetPlan> plans;
  double total_cost = 0.0;
};

// Segment widths and WTP upper bounds of a scenario laid out as a FleetInput
// around the given offers.
inline FleetInput make_fleet_input(const Scenario& s, AccessSeries offers) {
  FleetInput in;
  in.fleets = s.fleets;
  in.offers = std::move(offers);
  in.tie_break = s.settings.tie_break;
  in.wtp_in_objective = s.settings.wtp_in_fleet_objective;
  for (std::size_t f = 0; f < s.fleets.size(); ++f) {
    auto& widths = in.segment_widths.emplace_back();
    auto& wtp = in.wtp.emplace_back();
    for (std::size_t a = 0; a < s.fleets[f].stations.size(); ++a) {
      auto& w = widths.emplace_back();
      auto& p = wtp.emplace_back();
      for (const auto& seg : s.terms(f, a).segments) {
        w.push_back(seg.width);
        p.push_back(seg.wtp_max);
      }
    }
  }
  return in;
}

namespace detail {

inline std::size_t horizon_of(const EvFleet& f) { return f.tou_rate.size(); }

inline double wtp_at(const FleetInput& in, std::size_t f, std::size_t a, std::size_t m, std::size_t t) {
  if (in.wtp.empty()) return 0.0;
  return in.wtp.at(f).at(a).at(m).at(t);
}

inline void check_fleet_shapes(const FleetInput& in) {
  if (in.offers.size() != in.fleets.size() || in.segment_widths.size() != in.fleets.size()) {
    throw ScenarioError("fleet input: offers/widths do not match the fleet list");
  }
  for (std::size_t f = 0; f < in.fleets.size(); ++f) {
    const auto& fl = in.fleets[f];
    const std::size_t T = horizon_of(fl);
    if (in.offers[f].size() != fl.stations.size() || in.segment_widths[f].size() != fl.stations.size()) {
      throw ScenarioError("fleet " + fl.id + ": offers/widths do not match its stations");
    }
    for (const auto& o : in.offers[f]) {
      if (o.size() != T) throw ScenarioError("fleet " + fl.id + ": offer series has wrong length");
    }
  }
}

// Maximal-charge trajectory; throws naming the first period that cannot be covered.
inline void check_energy_reachable(const EvFleet& f) {
  const std::size_t T = horizon_of(f);
  double e = f.energy_initial;
  for (std::size_t t = 0; t < T; ++t) {
    double cap = f.home_connectivity.at(t) * f.home_cap;
    for (const auto& a : f.stations) cap += a.connectivity.at(t) * a.cap;
    cap = std::min(cap, f.max_charge);
    e = std::min(f.energy_max, e + f.eta_charge * cap - f.discharge.at(t) / f.eta_discharge);
    if (e < f.energy_min - 1e-9) {
      throw LowerLevelError("fleet " + f.id, "cumulative discharge exceeds charging capability in period " +
                                                 std::to_string(t));
    }
  }
}

struct FleetIndex {
  std::vector<std::size_t> pf, ph, e;
  std::vector<std::vector<std::size_t>> pc;               // [a][t]
  std::vector<std::vector<std::vector<std::size_t>>> pm;  // [a][m][t]
};

inline FleetIndex append_fleet(lp::LinearProgram& prog, const FleetInput& in, std::size_t f) {
  const auto& fl = in.fleets[f];
  const std::size_t T = horizon_of(fl);
  const std::size_t A = fl.stations.size();
  FleetIndex ix;
  ix.pc.assign(A, {});
  ix.pm.resize(A);
  for (std::size_t a = 0; a < A; ++a) ix.pm[a].assign(in.segment_widths[f][a].size(), {});

  for (std::size_t t = 0; t < T; ++t) {
    ix.pf.push_back(prog.add_variable(label("pf", fl.id, t), 0.0, fl.max_charge, 0.0));
    ix.ph.push_back(prog.add_variable(label("ph", fl.id, t), 0.0,
                                      fl.home_connectivity[t] * fl.home_cap,
                                      fl.tou_rate[t] + in.tie_break));
    for (std::size_t a = 0; a < A; ++a) {
      const auto& acc = fl.stations[a];
      ix.pc[a].push_back(prog.add_variable(label("pc", fl.id, acc.station, t), 0.0,
                                           acc.connectivity[t] * acc.cap, in.offers[f][a][t]));
      for (std::size_t m = 0; m < in.segment_widths[f][a].size(); ++m) {
        const double c = in.wtp_in_objective ? wtp_at(in, f, a, m, t) : 0.0;
        ix.pm[a][m].push_back(prog.add_variable(label("pm", fl.id, acc.station, m, t), 0.0,
                                                in.segment_widths[f][a][m], c));
      }
    }
    double lo = fl.energy_min, up = fl.energy_max;
    if (fl.terminal_equals_initial && t + 1 == T) lo = up = fl.energy_initial;
    ix.e.push_back(prog.add_variable(label("e", fl.id, t), lo, up, 0.0));
  }
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<lp::Term> split{{ix.pf[t], 1.0}, {ix.ph[t], -1.0}};
    for (std::size_t a = 0; a < A; ++a) split.push_back({ix.pc[a][t], -1.0});
    prog.add_constraint(label("fleet_split", fl.id, t), std::move(split), lp::Relation::equal, 0.0);
    for (std::size_t a = 0; a < A; ++a) {
      std::vector<lp::Term> seg{{ix.pc[a][t], 1.0}};
      for (std::size_t m = 0; m < ix.pm[a].size(); ++m) seg.push_back({ix.pm[a][m][t], -1.0});
      prog.add_constraint(label("station_split", fl.id, fl.stations[a].station, t), std::move(seg),
                          lp::Relation::equal, 0.0);
    }
    std::vector<lp::Term> energy{{ix.e[t], 1.0}, {ix.pf[t], -fl.eta_charge}};
    double rhs = -fl.discharge[t] / fl.eta_discharge;
    if (t == 0) rhs += fl.energy_initial;
    else energy.push_back({ix.e[t - 1], -1.0});
    prog.add_constraint(label("energy", fl.id, t), std::move(energy), lp::Relation::equal, rhs);
  }
  return ix;
}

// Lowest segment index fills first; the split carries no cost so any
// distribution with the same station total is equally optimal.
inline void fill_segments(const std::vector<double>& widths, double total, std::vector<double>& out) {
  out.assign(widths.size(), 0.0);
  double left = std::max(total, 0.0);
  for (std::size_t m = 0; m < widths.size() && left > 0.0; ++m) {
    out[m] = std::min(widths[m], left);
    left -= out[m];
  }
  if (left > 1e-9 && !out.empty()) out.back() += left;
}

inline FleetPlan extract_plan(const FleetInput& in, std::size_t f, const FleetIndex& ix,
                              const std::vector<double>& x) {
  const auto& fl = in.fleets[f];
  const std::size_t T = horizon_of(fl);
  const std::size_t A = fl.stations.size();
  FleetPlan p;
  p.fleet = fl.id;
  p.total.resize(T);
  p.home.resize(T);
  p.energy.resize(T);
  p.station.assign(A, Series(T, 0.0));
  p.segment.resize(A);
  for (std::size_t a = 0; a < A; ++a) p.segment[a].assign(ix.pm[a].size(), Series(T, 0.0));
  auto clean = [](double v) { return std::abs(v) < 1e-11 ? 0.0 : v; };
  for (std::size_t t = 0; t < T; ++t) {
    p.home[t] = clean(x[ix.ph[t]]);
    double total = p.home[t];
    for (std::size_t a = 0; a < A; ++a) {
      p.station[a][t] = clean(x[ix.pc[a][t]]);
      total += p.station[a][t];
      std::vector<double> split;
      fill_segments(in.segment_widths[f][a], p.station[a][t], split);
      for (std::size_t m = 0; m < split.size(); ++m) p.segment[a][m][t] = split[m];
    }
    p.total[t] = total;
  }
  double e = fl.energy_initial;
  for (std::size_t t = 0; t < T; ++t) {
    e = e - fl.discharge[t] / fl.eta_discharge + fl.eta_charge * p.total[t];
    p.energy[t] = e;
  }
  for (std::size_t t = 0; t < T; ++t) {
    p.home_payment += p.home[t] * fl.tou_rate[t];
    for (std::size_t a = 0; a < A; ++a) {
      p.station_payment += p.station[a][t] * in.offers[f][a][t];
    }
  }
  p.cost = p.home_payment + p.station_payment;
  if (in.wtp_in_objective) {
    for (std::size_t a = 0; a < A; ++a) {
      for (std::size_t m = 0; m < p.segment[a].size(); ++m) {
        for (std::size_t t = 0; t < T; ++t) p.cost += p.segment[a][m][t] * wtp_at(in, f, a, m, t);
      }
    }
  }
  return p;
}

}  // namespace detail

// The fleet program over all fleets in the input (fleets are independent
// blocks). Throws when a fleet can never cover its driving discharge.
inline lp::LinearProgram build_fleet(const FleetInput& in) {
  detail::check_fleet_shapes(in);
  lp::LinearProgram prog(lp::Sense::minimize);
  for (std::size_t f = 0; f < in.fleets.size(); ++f) {
    detail::check_energy_reachable(in.fleets[f]);
    detail::append_fleet(prog, in, f);
  }
  return prog;
}

// Primal vector of `schedule` in the layout of build_fleet(in).
inline std::vector<double> fleet_primal_vector(const FleetInput& in, const FleetSchedule& schedule) {
  lp::LinearProgram prog(lp::Sense::minimize);
  std::vector<double> x;
  for (std::size_t f = 0; f < in.fleets.size(); ++f) {
    auto ix = detail::append_fleet(prog, in, f);
    x.resize(prog.num_variables(), 0.0);
    const auto& p = schedule.plans.at(f);
    for (std::size_t t = 0; t < ix.pf.size(); ++t) {
      x[ix.pf[t]] = p.total.at(t);
      x[ix.ph[t]] = p.home.at(t);
      x[ix.e[t]] = p.energy.at(t);
      for (std::size_t a = 0; a < ix.pc.size(); ++a) {
        x[ix.pc[a][t]] = p.station.at(a).at(t);
        for (std::size_t m = 0; m < ix.pm[a].size(); ++m) x[ix.pm[a][m][t]] = p.segment.at(a).at(m).at(t);
      }
    }
  }
  return x;
}

// Solves every fleet's program and returns the merged schedule, ordered as
// the input fleets. Reported costs exclude the tie-break perturbation.
inline FleetSchedule solve_fleet(const FleetInput& in, const lp::SolverOptions& opt = {}) {
  detail::check_fleet_shapes(in);
  FleetSchedule out;
  for (std::size_t f = 0; f < in.fleets.size(); ++f) {
    detail::check_energy_reachable(in.fleets[f]);
    lp::LinearProgram prog(lp::Sense::minimize);
    auto ix = detail::append_fleet(prog, in, f);
    auto sol = lp::solve(prog, opt);
    if (!sol.optimal()) {
      throw LowerLevelError("fleet " + in.fleets[f].id, std::string("charging program ") +
                                                            lp::to_string(sol.status) + ": " + sol.message);
    }
    out.plans.push_back(detail::extract_plan(in, f, ix, sol.x));
    out.total_cost += out.plans.back().cost;
  }
  return out;
}

// The fleet dual written out term by term: bound
// multipliers mu >= 0, equality multipliers lambda free, one row per primal
// variable. Kept literal (including its omissions) so it can be compared
// with dualize(build_fleet(in)); see fleet_dual_comparison().
inline lp::LinearProgram build_fleet_explicit_dual(const FleetInput& in) {
  detail::check_fleet_shapes(in);
  lp::LinearProgram d(lp::Sense::maximize);
  const double inf = lp::kInf;
  for (std::size_t f = 0; f < in.fleets.size(); ++f) {
    const auto& fl = in.fleets[f];
    const std::size_t T = detail::horizon_of(fl);
    const std::size_t A = fl.stations.size();
    struct Ids {
      std::size_t F_lo, F_up, H_lo, H_up, E_lo, E_up, lam_F, lam_E;
      std::vector<std::size_t> C_lo, C_up, lam_C;
      std::vector<std::vector<std::size_t>> M_lo, M_up;
    };
    std::vector<Ids> ids(T);
    for (std::size_t t = 0; t < T; ++t) {
      auto& v = ids[t];
      v.F_lo = d.add_variable(label("mu_lo_F", fl.id, t), 0.0, inf, 0.0);
      v.F_up = d.add_variable(label("mu_up_F", fl.id, t), 0.0, inf, -fl.max_charge);
      v.H_lo = d.add_variable(label("mu_lo_H", fl.id, t), 0.0, inf, 0.0);
      v.H_up = d.add_variable(label("mu_up_H", fl.id, t), 0.0, inf,
                              -fl.home_connectivity[t] * fl.home_cap);
      v.E_lo = d.add_variable(label("mu_lo_E", fl.id, t), 0.0, inf, fl.energy_min);
      v.E_up = d.add_variable(label("mu_up_E", fl.id, t), 0.0, inf, -fl.energy_max);
      v.lam_F = d.add_variable(label("lam_F", fl.id, t), -inf, inf, 0.0);
      v.lam_E = d.add_variable(label("lam_E", fl.id, t), -inf, inf, -fl.discharge[t] / fl.eta_discharge);
      for (std::size_t a = 0; a < A; ++a) {
        const auto& acc = fl.stations[a];
        v.C_lo.push_back(d.add_variable(label("mu_lo_C", fl.id, acc.station, t), 0.0, inf, 0.0));
        v.C_up.push_back(d.add_variable(label("mu_up_C", fl.id, acc.station, t), 0.0, inf,
                                        -acc.connectivity[t] * acc.cap));
        v.lam_C.push_back(d.add_variable(label("lam_C", fl.id, acc.station, t), -inf, inf, 0.0));
        v.M_lo.emplace_back();
        v.M_up.emplace_back();
        for (std::size_t m = 0; m < in.segment_widths[f][a].size(); ++m) {
          v.M_lo[a].push_back(d.add_variable(label("mu_lo_M", fl.id, acc.station, m, t), 0.0, inf, 0.0));
          // Written with a plus sign.
          v.M_up[a].push_back(d.add_variable(label("mu_up_M", fl.id, acc.station, m, t), 0.0, inf,
                                             in.segment_widths[f][a][m]));
        }
      }
    }
    for (std::size_t t = 0; t < T; ++t) {
      const auto& v = ids[t];
      d.add_constraint(label("pf", fl.id, t),
                       {{v.F_lo, 1.0}, {v.F_up, -1.0}, {v.lam_F, 1.0}, {v.lam_E, -fl.eta_charge}},
                       lp::Relation::equal, 0.0);
      d.add_constraint(label("ph", fl.id, t), {{v.H_lo, 1.0}, {v.H_up, -1.0}, {v.lam_F, -1.0}},
                       lp::Relation::equal, fl.tou_rate[t]);
      for (std::size_t a = 0; a < A; ++a) {
        const auto& acc = fl.stations[a];
        // Written with a zero right-hand side.
        d.add_constraint(label("pc", fl.id, acc.station, t),
                         {{v.C_lo[a], 1.0}, {v.C_up[a], -1.0}, {v.lam_C[a], 1.0}, {v.lam_F, -1.0}},
                         lp::Relation::equal, 0.0);
        for (std::size_t m = 0; m < v.M_lo[a].size(); ++m) {
          d.add_constraint(label("pm", fl.id, acc.station, m, t),
                           {{v.M_lo[a][m], 1.0}, {v.M_up[a][m], -1.0}, {v.lam_C[a], -1.0}},
                           lp::Relation::equal, detail::wtp_at(in, f, a, m, t));
        }
      }
      std::vector<lp::Term> e{{v.E_lo, 1.0}, {v.E_up, -1.0}, {v.lam_E, 1.0}};
      if (t + 1 < T) e.push_back({ids[t + 1].lam_E, -1.0});
      d.add_constraint(label("e", fl.id, t), std::move(e), lp::Relation::equal, 0.0);
    }
  }
  return d;
}

// Renaming from the explicit fleet dual onto dualize(build_fleet(in)).
inline std::pair<std::unordered_map<std::string, lp::Renaming>,
                 std::unordered_map<std::string, lp::Renaming>>
fleet_dual_renaming(const FleetInput& in) {
  std::unordered_map<std::string, lp::Renaming> vars, rows;
  for (const auto& fl : in.fleets) {
    const std::size_t T = detail::horizon_of(fl);
    for (std::size_t t = 0; t < T; ++t) {
      const std::string ft = label("", fl.id, t);
      vars["mu_lo_F" + ft] = {"lb[pf" + ft + "]", 1.0};
      vars["mu_up_F" + ft] = {"ub[pf" + ft + "]", 1.0};
      vars["mu_lo_H" + ft] = {"lb[ph" + ft + "]", 1.0};
      vars["mu_up_H" + ft] = {"ub[ph" + ft + "]", 1.0};
      vars["mu_lo_E" + ft] = {"lb[e" + ft + "]", 1.0};
      vars["mu_up_E" + ft] = {"ub[e" + ft + "]", 1.0};
      vars["lam_F" + ft] = {"y[fleet_split" + ft + "]", 1.0};
      vars["lam_E" + ft] = {"y[energy" + ft + "]", 1.0};
      rows["pf" + ft] = {"pf" + ft, 1.0};
      rows["ph" + ft] = {"ph" + ft, 1.0};
      rows["e" + ft] = {"e" + ft, 1.0};
      for (std::size_t a = 0; a < fl.stations.size(); ++a) {
        const std::string fct = label("", fl.id, fl.stations[a].station, t);
        vars["mu_lo_C" + fct] = {"lb[pc" + fct + "]", 1.0};
        vars["mu_up_C" + fct] = {"ub[pc" + fct + "]", 1.0};
        vars["lam_C" + fct] = {"y[station_split" + fct + "]", 1.0};
        rows["pc" + fct] = {"pc" + fct, 1.0};
      }
    }
  }
  for (std::size_t f = 0; f < in.fleets.size(); ++f) {
    const auto& fl = in.fleets[f];
    for (std::size_t a = 0; a < fl.stations.size(); ++a) {
      for (std::size_t m = 0; m < in.segment_widths[f][a].size(); ++m) {
        for (std::size_t t = 0; t < detail::horizon_of(fl); ++t) {
          const std::string k = label("", fl.id, fl.stations[a].station, m, t);
          vars["mu_lo_M" + k] = {"lb[pm" + k + "]", 1.0};
          vars["mu_up_M" + k] = {"ub[pm" + k + "]", 1.0};
          rows["pm" + k] = {"pm" + k, 1.0};
        }
      }
    }
  }
  return {vars, rows};
}

// Outcome of solving the explicit fleet dual next to the primal.
struct FleetDualComparison {
  double primal_objective = 0.0;
  lp::Status explicit_dual_status = lp::Status::numerical_failure;
  double explicit_dual_objective = 0.0;
  double auto_dual_objective = 0.0;
  bool explicit_dual_matches = false;
  bool auto_dual_matches = false;
  std::vector<std::string> structural_differences;
};

// Solves the primal (literal objective, or the variant with the WTP term when
// in.wtp_in_objective is set), its automatic dual and the explicit dual, and
// reports which optimal values agree.
inline FleetDualComparison fleet_dual_comparison(FleetInput in, double tol = 1e-6,
                                                 const lp::SolverOptions& opt = {}) {
  in.tie_break = 0.0;
  FleetDualComparison out;
  const auto primal = build_fleet(in);
  const auto psol = lp::solve(primal, opt);
  if (!psol.optimal()) throw LowerLevelError("fleet", "primal not optimal");
  out.primal_objective = psol.objective;
  const auto auto_dual = lp::dualize(primal);
  const auto asol = lp::solve(auto_dual, opt);
  out.auto_dual_objective = asol.objective;
  out.auto_dual_matches =
      asol.optimal() && std::abs(asol.objective - psol.objective) <= tol * std::max(1.0, std::abs(psol.objective));
  const auto explicit_dual = build_fleet_explicit_dual(in);
  const auto dsol = lp::solve(explicit_dual, opt);
  out.explicit_dual_status = dsol.status;
  out.explicit_dual_objective = dsol.optimal() ? dsol.objective : std::numeric_limits<double>::quiet_NaN();
  out.explicit_dual_matches =
      dsol.optimal() && std::abs(dsol.objective - psol.objective) <= tol * std::max(1.0, std::abs(psol.objective));
  auto [vars, rows] = fleet_dual_renaming(in);
  out.structural_differences = lp::structural_diff(explicit_dual, auto_dual, vars, rows);
  return out;
}

}  // namespace evcs
