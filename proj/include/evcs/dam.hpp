#pragma once

// Day-ahead market clearing with DC power flow.
//
// For fixed fleet withdrawals and fixed WTP segment quantities the market
// maximises  sum quantity * wtp - sum segment_cost * segment_dispatch
// over WTP prices, generator and segment dispatch, solar dispatch, bus
// angles and line flows. Rows per period:
//
//   gen_link(g):  pg - sum_k pk = 0
//   dc(l):        pl - th_from / x + th_to / x = 0
//   bal(b):       sum pg + sum ps - sum_from pl + sum_to pl = demand + withdrawals
//
// The reference bus angle is pinned through its bounds. Periods do not
// interact, so solve_dam clears one period at a time.

#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "evcs/errors.hpp"
#include "evcs/lp.hpp"
#include "evcs/model.hpp"
#include "evcs/naming.hpp"

namespace evcs {

struct FleetWithdrawal {
  std::string fleet;
  std::string bus;
  Series power;  // MW
};

// One WTP segment bid of a station on behalf of a fleet.
struct WtpBid {
  std::string fleet;
  std::string station;
  std::size_t segment = 0;
  Series quantity;  // MW, fixed by the fleet schedule
  Series wtp_min;   // $/MWh
  Series wtp_max;
};

struct DamInput {
  Network network;
  std::vector<FleetWithdrawal> withdrawals;
  std::vector<WtpBid> bids;
};

struct DamOutcome {
  std::vector<Series> dispatch;              // [g][t]
  std::vector<std::vector<Series>> segment;  // [g][k][t]
  std::vector<Series> solar;                 // [s][t]
  std::vector<Series> flow;                  // [l][t]
  std::vector<Series> angle;                 // [b][t]
  std::vector<Series> wtp;                   // [bid][t]
  std::vector<Series> lmp;                   // [b][t], $/MWh
  std::vector<Series> gen_link_dual;         // [g][t]
  std::vector<Series> flow_dual;             // [l][t]
  double welfare = 0.0;
};

namespace detail {

struct DamIndex {
  std::vector<std::size_t> pi, pg, ps, th, pl;
  std::vector<std::vector<std::size_t>> pk;
  std::vector<std::size_t> gen_link, dc, bal;
};

inline double bus_load(const DamInput& in, std::size_t b, std::size_t t) {
  const auto& id = in.network.buses[b].id;
  double load = 0.0;
  for (const auto& d : in.network.demands) {
    if (d.bus == id) load += d.load.at(t);
  }
  for (const auto& w : in.withdrawals) {
    if (w.bus == id) load += w.power.at(t);
  }
  return load;
}

inline void check_dam_shapes(const DamInput& in) {
  const auto& net = in.network;
  const std::size_t T = net.horizon;
  if (!net.reference_bus()) throw ScenarioError("network has no reference bus");
  for (const auto& w : in.withdrawals) {
    net.require_bus(w.bus);
    if (w.power.size() != T) throw ScenarioError("withdrawal of fleet " + w.fleet + " has wrong length");
  }
  for (const auto& b : in.bids) {
    if (b.quantity.size() != T || b.wtp_min.size() != T || b.wtp_max.size() != T) {
      throw ScenarioError("bid of station " + b.station + " has wrong length");
    }
  }
  for (const auto& l : net.lines) {
    net.require_bus(l.from);
    net.require_bus(l.to);
  }
}

inline std::pair<double, double> angle_bounds(const Network& net, std::size_t b) {
  if (net.reference_bus() == b) return {0.0, 0.0};
  return {net.buses[b].angle_min, net.buses[b].angle_max};
}

inline DamIndex append_dam_period(lp::LinearProgram& prog, const DamInput& in, std::size_t t) {
  const auto& net = in.network;
  DamIndex ix;
  for (const auto& bid : in.bids) {
    ix.pi.push_back(prog.add_variable(label("pi", bid.fleet, bid.station, bid.segment, t),
                                      bid.wtp_min[t], bid.wtp_max[t], bid.quantity[t]));
  }
  for (const auto& g : net.generators) {
    ix.pg.push_back(prog.add_variable(label("pg", g.id, t), g.p_min, g.p_max, 0.0));
    auto& ks = ix.pk.emplace_back();
    for (std::size_t k = 0; k < g.segments.size(); ++k) {
      const auto& seg = g.segments[k];
      ks.push_back(prog.add_variable(label("pk", g.id, k, t), seg.width_min, seg.width_max, -seg.cost));
    }
  }
  for (const auto& s : net.solar) {
    ix.ps.push_back(prog.add_variable(label("ps", s.id, t), 0.0, s.available.at(t), 0.0));
  }
  for (std::size_t b = 0; b < net.buses.size(); ++b) {
    auto [lo, up] = angle_bounds(net, b);
    ix.th.push_back(prog.add_variable(label("th", net.buses[b].id, t), lo, up, 0.0));
  }
  for (const auto& l : net.lines) {
    ix.pl.push_back(prog.add_variable(label("pl", l.id, t), l.flow_min, l.flow_max, 0.0));
  }

  for (std::size_t g = 0; g < net.generators.size(); ++g) {
    std::vector<lp::Term> row{{ix.pg[g], 1.0}};
    for (auto k : ix.pk[g]) row.push_back({k, -1.0});
    ix.gen_link.push_back(prog.add_constraint(label("gen_link", net.generators[g].id, t), std::move(row),
                                              lp::Relation::equal, 0.0));
  }
  for (std::size_t l = 0; l < net.lines.size(); ++l) {
    const auto& line = net.lines[l];
    const std::size_t fr = net.require_bus(line.from), to = net.require_bus(line.to);
    ix.dc.push_back(prog.add_constraint(
        label("dc", line.id, t),
        {{ix.pl[l], 1.0}, {ix.th[fr], -1.0 / line.reactance}, {ix.th[to], 1.0 / line.reactance}},
        lp::Relation::equal, 0.0));
  }
  for (std::size_t b = 0; b < net.buses.size(); ++b) {
    const auto& id = net.buses[b].id;
    std::vector<lp::Term> row;
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
      if (net.generators[g].bus == id) row.push_back({ix.pg[g], 1.0});
    }
    for (std::size_t s = 0; s < net.solar.size(); ++s) {
      if (net.solar[s].bus == id) row.push_back({ix.ps[s], 1.0});
    }
    for (std::size_t l = 0; l < net.lines.size(); ++l) {
      if (net.lines[l].from == id) row.push_back({ix.pl[l], -1.0});
      if (net.lines[l].to == id) row.push_back({ix.pl[l], 1.0});
    }
    ix.bal.push_back(prog.add_constraint(label("bal", id, t), std::move(row), lp::Relation::equal,
                                         bus_load(in, b, t)));
  }
  return ix;
}

inline DamOutcome empty_outcome(const DamInput& in) {
  const auto& net = in.network;
  const std::size_t T = net.horizon;
  DamOutcome out;
  out.dispatch.assign(net.generators.size(), Series(T, 0.0));
  out.segment.resize(net.generators.size());
  for (std::size_t g = 0; g < net.generators.size(); ++g) {
    out.segment[g].assign(net.generators[g].segments.size(), Series(T, 0.0));
  }
  out.solar.assign(net.solar.size(), Series(T, 0.0));
  out.flow.assign(net.lines.size(), Series(T, 0.0));
  out.angle.assign(net.buses.size(), Series(T, 0.0));
  out.wtp.assign(in.bids.size(), Series(T, 0.0));
  out.lmp.assign(net.buses.size(), Series(T, 0.0));
  out.gen_link_dual.assign(net.generators.size(), Series(T, 0.0));
  out.flow_dual.assign(net.lines.size(), Series(T, 0.0));
  return out;
}

inline double zero_small(double v) { return std::abs(v) < 1e-11 ? 0.0 : v; }

}  // namespace detail

// The market program over all periods as one block LP.
inline lp::LinearProgram build_dam(const DamInput& in) {
  detail::check_dam_shapes(in);
  lp::LinearProgram prog(lp::Sense::maximize);
  for (std::size_t t = 0; t < in.network.horizon; ++t) detail::append_dam_period(prog, in, t);
  return prog;
}

// The market program of a single period.
inline lp::LinearProgram build_dam_period(const DamInput& in, std::size_t t) {
  detail::check_dam_shapes(in);
  lp::LinearProgram prog(lp::Sense::maximize);
  detail::append_dam_period(prog, in, t);
  return prog;
}

// Clears every period. LMPs are the prices of one extra MW of load, i.e. the
// negated balance-row duals of the welfare program. Throws LowerLevelError
// naming the period when a period cannot be cleared.
inline DamOutcome solve_dam(const DamInput& in, const lp::SolverOptions& opt = {}) {
  detail::check_dam_shapes(in);
  const auto& net = in.network;
  DamOutcome out = detail::empty_outcome(in);
  using detail::zero_small;
  for (std::size_t t = 0; t < net.horizon; ++t) {
    lp::LinearProgram prog(lp::Sense::maximize);
    const auto ix = detail::append_dam_period(prog, in, t);
    const auto sol = lp::solve(prog, opt);
    if (!sol.optimal()) {
      double load = 0.0, cap = 0.0;
      for (std::size_t b = 0; b < net.buses.size(); ++b) load += detail::bus_load(in, b, t);
      for (const auto& g : net.generators) cap += g.p_max;
      for (const auto& s : net.solar) cap += s.available.at(t);
      std::ostringstream os;
      os << "period " << t << " " << lp::to_string(sol.status) << " (load " << load
         << " MW, supply capacity " << cap << " MW)";
      if (!sol.message.empty()) os << ": " << sol.message;
      throw LowerLevelError("day-ahead market", os.str());
    }
    for (std::size_t i = 0; i < ix.pi.size(); ++i) out.wtp[i][t] = sol.x[ix.pi[i]];
    for (std::size_t g = 0; g < ix.pg.size(); ++g) {
      out.dispatch[g][t] = zero_small(sol.x[ix.pg[g]]);
      for (std::size_t k = 0; k < ix.pk[g].size(); ++k) out.segment[g][k][t] = zero_small(sol.x[ix.pk[g][k]]);
      out.gen_link_dual[g][t] = sol.duals[ix.gen_link[g]];
    }
    for (std::size_t s = 0; s < ix.ps.size(); ++s) out.solar[s][t] = zero_small(sol.x[ix.ps[s]]);
    for (std::size_t b = 0; b < ix.th.size(); ++b) {
      out.angle[b][t] = zero_small(sol.x[ix.th[b]]);
      out.lmp[b][t] = zero_small(-sol.duals[ix.bal[b]]);
    }
    for (std::size_t l = 0; l < ix.pl.size(); ++l) {
      out.flow[l][t] = zero_small(sol.x[ix.pl[l]]);
      out.flow_dual[l][t] = sol.duals[ix.dc[l]];
    }
    out.welfare += sol.objective;
  }
  return out;
}

// Primal vector of an outcome in the layout of build_dam(in).
inline std::vector<double> dam_primal_vector(const DamInput& in, const DamOutcome& out) {
  lp::LinearProgram prog(lp::Sense::maximize);
  std::vector<double> x;
  for (std::size_t t = 0; t < in.network.horizon; ++t) {
    const auto ix = detail::append_dam_period(prog, in, t);
    x.resize(prog.num_variables(), 0.0);
    for (std::size_t i = 0; i < ix.pi.size(); ++i) x[ix.pi[i]] = out.wtp.at(i).at(t);
    for (std::size_t g = 0; g < ix.pg.size(); ++g) {
      x[ix.pg[g]] = out.dispatch.at(g).at(t);
      for (std::size_t k = 0; k < ix.pk[g].size(); ++k) x[ix.pk[g][k]] = out.segment.at(g).at(k).at(t);
    }
    for (std::size_t s = 0; s < ix.ps.size(); ++s) x[ix.ps[s]] = out.solar.at(s).at(t);
    for (std::size_t b = 0; b < ix.th.size(); ++b) x[ix.th[b]] = out.angle.at(b).at(t);
    for (std::size_t l = 0; l < ix.pl.size(); ++l) x[ix.pl[l]] = out.flow.at(l).at(t);
  }
  return x;
}

// Row duals of build_dam(in) reassembled from the stored prices, in the
// sensitivity convention of lp::solve.
inline std::vector<double> dam_row_duals(const DamInput& in, const DamOutcome& out) {
  lp::LinearProgram prog(lp::Sense::maximize);
  std::vector<double> y;
  for (std::size_t t = 0; t < in.network.horizon; ++t) {
    const auto ix = detail::append_dam_period(prog, in, t);
    y.resize(prog.num_constraints(), 0.0);
    for (std::size_t g = 0; g < ix.gen_link.size(); ++g) y[ix.gen_link[g]] = out.gen_link_dual.at(g).at(t);
    for (std::size_t l = 0; l < ix.dc.size(); ++l) y[ix.dc[l]] = out.flow_dual.at(l).at(t);
    for (std::size_t b = 0; b < ix.bal.size(); ++b) y[ix.bal[b]] = -out.lmp.at(b).at(t);
  }
  return y;
}

// Strong-duality check of a stored outcome against build_dam(in).
inline lp::DualityReport check_dam_outcome(const DamInput& in, const DamOutcome& out, double tol) {
  const auto prog = build_dam(in);
  const auto x = dam_primal_vector(in, out);
  const auto dv = lp::dual_values_from(prog, dam_row_duals(in, out));
  return lp::check_strong_duality(prog, x, dv, tol);
}

// The market dual written out family by family: bound multipliers are
// non-positive, equality multipliers free, one row per primal variable.
inline lp::LinearProgram build_dam_explicit_dual(const DamInput& in) {
  detail::check_dam_shapes(in);
  const auto& net = in.network;
  const double inf = lp::kInf;
  lp::LinearProgram d(lp::Sense::minimize);
  // Lower/upper multipliers of a bounded primal variable; an infinite bound
  // gets no multiplier.
  struct Pair {
    std::optional<std::size_t> lo, up;
  };
  auto bound_pair = [&](const std::string& family, const std::string& key, double lo, double up) {
    Pair p;
    if (std::isfinite(lo)) p.lo = d.add_variable("mu_lo_" + family + key, -inf, 0.0, lo);
    if (std::isfinite(up)) p.up = d.add_variable("mu_up_" + family + key, -inf, 0.0, -up);
    return p;
  };
  auto add_pair = [](std::vector<lp::Term>& row, const Pair& p) {
    if (p.lo) row.push_back({*p.lo, 1.0});
    if (p.up) row.push_back({*p.up, -1.0});
  };

  for (std::size_t t = 0; t < net.horizon; ++t) {
    std::vector<Pair> P, G, S, B, L;
    std::vector<std::vector<Pair>> K;
    std::vector<std::size_t> lam_G, lam_B, lam_L;
    for (const auto& bid : in.bids) {
      P.push_back(bound_pair("P", label("", bid.fleet, bid.station, bid.segment, t), bid.wtp_min[t],
                             bid.wtp_max[t]));
    }
    for (const auto& g : net.generators) {
      G.push_back(bound_pair("G", label("", g.id, t), g.p_min, g.p_max));
      lam_G.push_back(d.add_variable(label("lam_G", g.id, t), -inf, inf, 0.0));
      auto& ks = K.emplace_back();
      for (std::size_t k = 0; k < g.segments.size(); ++k) {
        ks.push_back(bound_pair("K", label("", g.id, k, t), g.segments[k].width_min, g.segments[k].width_max));
      }
    }
    for (const auto& s : net.solar) S.push_back(bound_pair("S", label("", s.id, t), 0.0, s.available.at(t)));
    for (std::size_t b = 0; b < net.buses.size(); ++b) {
      auto [lo, up] = detail::angle_bounds(net, b);
      B.push_back(bound_pair("B", label("", net.buses[b].id, t), lo, up));
      lam_B.push_back(d.add_variable(label("lam_B", net.buses[b].id, t), -inf, inf, detail::bus_load(in, b, t)));
    }
    for (const auto& l : net.lines) {
      L.push_back(bound_pair("L", label("", l.id, t), l.flow_min, l.flow_max));
      lam_L.push_back(d.add_variable(label("lam_L", l.id, t), -inf, inf, 0.0));
    }

    for (std::size_t i = 0; i < in.bids.size(); ++i) {
      const auto& bid = in.bids[i];
      std::vector<lp::Term> row;
      add_pair(row, P[i]);
      d.add_constraint(label("pi", bid.fleet, bid.station, bid.segment, t), std::move(row), lp::Relation::equal,
                       bid.quantity[t]);
    }
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
      const auto& gen = net.generators[g];
      std::vector<lp::Term> row;
      add_pair(row, G[g]);
      row.push_back({lam_G[g], 1.0});
      row.push_back({lam_B[net.require_bus(gen.bus)], 1.0});
      d.add_constraint(label("pg", gen.id, t), std::move(row), lp::Relation::equal, 0.0);
      for (std::size_t k = 0; k < gen.segments.size(); ++k) {
        std::vector<lp::Term> rk;
        add_pair(rk, K[g][k]);
        rk.push_back({lam_G[g], -1.0});
        d.add_constraint(label("pk", gen.id, k, t), std::move(rk), lp::Relation::equal, -gen.segments[k].cost);
      }
    }
    for (std::size_t s = 0; s < net.solar.size(); ++s) {
      std::vector<lp::Term> row;
      add_pair(row, S[s]);
      row.push_back({lam_B[net.require_bus(net.solar[s].bus)], 1.0});
      d.add_constraint(label("ps", net.solar[s].id, t), std::move(row), lp::Relation::equal, 0.0);
    }
    for (std::size_t b = 0; b < net.buses.size(); ++b) {
      const auto& id = net.buses[b].id;
      std::vector<lp::Term> row;
      add_pair(row, B[b]);
      for (std::size_t l = 0; l < net.lines.size(); ++l) {
        const auto& line = net.lines[l];
        if (line.to == id) row.push_back({lam_L[l], 1.0 / line.reactance});
        if (line.from == id) row.push_back({lam_L[l], -1.0 / line.reactance});
      }
      d.add_constraint(label("th", id, t), std::move(row), lp::Relation::equal, 0.0);
    }
    for (std::size_t l = 0; l < net.lines.size(); ++l) {
      const auto& line = net.lines[l];
      std::vector<lp::Term> row;
      add_pair(row, L[l]);
      row.push_back({lam_L[l], 1.0});
      row.push_back({lam_B[net.require_bus(line.to)], 1.0});
      row.push_back({lam_B[net.require_bus(line.from)], -1.0});
      d.add_constraint(label("pl", line.id, t), std::move(row), lp::Relation::equal, 0.0);
    }
  }
  return d;
}

// Renaming from build_dam_explicit_dual(in) onto dualize(build_dam(in)):
// bound multipliers are negated, equality multipliers carry over.
inline std::pair<std::unordered_map<std::string, lp::Renaming>,
                 std::unordered_map<std::string, lp::Renaming>>
dam_dual_renaming(const DamInput& in) {
  std::unordered_map<std::string, lp::Renaming> vars, rows;
  const auto& net = in.network;
  auto bounds = [&](const std::string& family, const std::string& primal_head, const std::string& key) {
    vars["mu_lo_" + family + key] = {"lb[" + primal_head + key + "]", -1.0};
    vars["mu_up_" + family + key] = {"ub[" + primal_head + key + "]", -1.0};
    rows[primal_head + key] = {primal_head + key, 1.0};
  };
  for (std::size_t t = 0; t < net.horizon; ++t) {
    for (const auto& bid : in.bids) bounds("P", "pi", label("", bid.fleet, bid.station, bid.segment, t));
    for (const auto& g : net.generators) {
      bounds("G", "pg", label("", g.id, t));
      vars[label("lam_G", g.id, t)] = {"y[" + label("gen_link", g.id, t) + "]", 1.0};
      for (std::size_t k = 0; k < g.segments.size(); ++k) bounds("K", "pk", label("", g.id, k, t));
    }
    for (const auto& s : net.solar) bounds("S", "ps", label("", s.id, t));
    for (const auto& b : net.buses) {
      bounds("B", "th", label("", b.id, t));
      vars[label("lam_B", b.id, t)] = {"y[" + label("bal", b.id, t) + "]", 1.0};
    }
    for (const auto& l : net.lines) {
      bounds("L", "pl", label("", l.id, t));
      vars[label("lam_L", l.id, t)] = {"y[" + label("dc", l.id, t) + "]", 1.0};
    }
  }
  return {vars, rows};
}

// CSV exports: bus x period LMP matrix and long-format generator dispatch.
inline void write_lmp_csv(std::ostream& os, const Network& net, const DamOutcome& out) {
  os << "bus";
  for (std::size_t t = 0; t < net.horizon; ++t) os << ",t" << t;
  os << '\n' << std::fixed << std::setprecision(6);
  for (std::size_t b = 0; b < net.buses.size(); ++b) {
    os << net.buses[b].id;
    for (double v : out.lmp[b]) os << ',' << v;
    os << '\n';
  }
}

inline void write_dispatch_csv(std::ostream& os, const Network& net, const DamOutcome& out) {
  os << "generator,bus,period,dispatch_mw\n" << std::fixed << std::setprecision(6);
  for (std::size_t g = 0; g < net.generators.size(); ++g) {
    for (std::size_t t = 0; t < net.horizon; ++t) {
      os << net.generators[g].id << ',' << net.generators[g].bus << ',' << t << ',' << out.dispatch[g][t] << '\n';
    }
  }
}

}  // namespace evcs
