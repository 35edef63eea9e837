#pragma once

// Upper-level offer pricing for the charging stations.
//
// For a fixed offer tensor the fleets' charging programs are solved first;
// their total withdrawals and station segment quantities then enter the
// market, whose LMPs price the stations' purchases. Profit is
//   sum over fleets, stations, periods of p_station * (offer - LMP at fleet bus).
// optimize() searches the offers with a multi-start coordinate pattern
// search; brute_force() enumerates a grid; certify() re-checks an outcome
// against every primal constraint and both strong-duality equalities.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "evcs/dam.hpp"
#include "evcs/errors.hpp"
#include "evcs/fleet.hpp"
#include "evcs/lp.hpp"
#include "evcs/model.hpp"

namespace evcs {

// One search coordinate and the (fleet, access, period) offers it sets.
struct OfferSlot {
  std::size_t fleet = 0;
  std::size_t access = 0;
  std::size_t period = 0;
};

struct SearchDimension {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<OfferSlot> slots;
};

// Maps a parameter vector onto the full offer tensor. A shared coordinate
// spans the union of its slots' bounds; each slot is clamped to its own.
class Strategy {
 public:
  Strategy(const Scenario& s, Parameterization mode, std::size_t block_width = 1) : s_(&s) {
    const std::size_t T = s.horizon();
    std::map<std::string, std::size_t> by_key;
    for (std::size_t f = 0; f < s.fleets.size(); ++f) {
      for (std::size_t a = 0; a < s.fleets[f].stations.size(); ++a) {
        const auto& terms = s.terms(f, a);
        const std::string& station = s.fleets[f].stations[a].station;
        for (std::size_t t = 0; t < T; ++t) {
          std::string key;
          switch (mode) {
            case Parameterization::full:
              key = label("offer", s.fleets[f].id, station, t);
              break;
            case Parameterization::per_station_period:
              key = label("offer", station, t);
              break;
            case Parameterization::per_station_block:
              key = label("offer", station, "block" + std::to_string(t / std::max<std::size_t>(1, block_width)));
              break;
          }
          auto [it, inserted] = by_key.emplace(key, dims_.size());
          if (inserted) {
            dims_.push_back(SearchDimension{key, terms.offer_min[t], terms.offer_max[t], {}});
          }
          auto& d = dims_[it->second];
          d.lower = std::min(d.lower, terms.offer_min[t]);
          d.upper = std::max(d.upper, terms.offer_max[t]);
          d.slots.push_back(OfferSlot{f, a, t});
        }
      }
    }
  }

  const std::vector<SearchDimension>& dimensions() const { return dims_; }
  std::size_t size() const { return dims_.size(); }

  std::vector<double> lower() const {
    std::vector<double> z;
    for (const auto& d : dims_) z.push_back(d.lower);
    return z;
  }
  std::vector<double> upper() const {
    std::vector<double> z;
    for (const auto& d : dims_) z.push_back(d.upper);
    return z;
  }
  std::vector<double> midpoint() const {
    std::vector<double> z;
    for (const auto& d : dims_) z.push_back(0.5 * (d.lower + d.upper));
    return z;
  }

  AccessSeries expand(const std::vector<double>& z) const {
    const auto& s = *s_;
    AccessSeries offers(s.fleets.size());
    for (std::size_t f = 0; f < s.fleets.size(); ++f) {
      offers[f].assign(s.fleets[f].stations.size(), Series(s.horizon(), 0.0));
    }
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      for (const auto& slot : dims_[i].slots) {
        const auto& terms = s.terms(slot.fleet, slot.access);
        offers[slot.fleet][slot.access][slot.period] =
            std::clamp(z.at(i), terms.offer_min[slot.period], terms.offer_max[slot.period]);
      }
    }
    return offers;
  }

 private:
  const Scenario* s_;
  std::vector<SearchDimension> dims_;
};

struct EquilibriumOutcome {
  AccessSeries offers;  // [fleet][access][t], $/MWh
  FleetSchedule schedule;
  DamOutcome market;
  double revenue = 0.0;  // $
  double cost = 0.0;     // $
  double profit = 0.0;   // $
  std::size_t evaluations = 0;
};

namespace detail {

inline DamInput market_input(const Scenario& s, const FleetSchedule& schedule) {
  DamInput in;
  in.network = s.network;
  for (std::size_t f = 0; f < s.fleets.size(); ++f) {
    const auto& plan = schedule.plans.at(f);
    in.withdrawals.push_back(FleetWithdrawal{s.fleets[f].id, s.fleets[f].bus, plan.total});
    for (std::size_t a = 0; a < s.fleets[f].stations.size(); ++a) {
      const auto& terms = s.terms(f, a);
      for (std::size_t m = 0; m < terms.segments.size(); ++m) {
        in.bids.push_back(WtpBid{s.fleets[f].id, s.fleets[f].stations[a].station, m, plan.segment.at(a).at(m),
                                 terms.segments[m].wtp_min, terms.segments[m].wtp_max});
      }
    }
  }
  return in;
}

inline lp::SolverOptions solver_options(const Scenario& s) {
  lp::SolverOptions o;
  o.feas_tol = s.settings.feas_tol;
  return o;
}

// Revenue and purchase cost recomputed from schedule, offers and prices.
inline std::pair<double, double> profit_terms(const Scenario& s, const AccessSeries& offers,
                                              const FleetSchedule& schedule, const DamOutcome& market) {
  double revenue = 0.0, cost = 0.0;
  for (std::size_t f = 0; f < s.fleets.size(); ++f) {
    const std::size_t b = s.network.require_bus(s.fleets[f].bus);
    for (std::size_t a = 0; a < s.fleets[f].stations.size(); ++a) {
      for (std::size_t t = 0; t < s.horizon(); ++t) {
        const double q = schedule.plans.at(f).station.at(a).at(t);
        revenue += q * offers.at(f).at(a).at(t);
        cost += q * market.lmp.at(b).at(t);
      }
    }
  }
  return {revenue, cost};
}

inline std::size_t worker_count(const Scenario& s) {
  if (s.settings.threads > 0) return s.settings.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, n) on at most `workers` threads; results by index.
template <class Fn>
auto parallel_map(std::size_t n, std::size_t workers, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<R> out;
  out.reserve(n);
  workers = std::max<std::size_t>(1, workers);
  for (std::size_t begin = 0; begin < n; begin += workers) {
    const std::size_t end = std::min(n, begin + workers);
    std::vector<std::future<R>> batch;
    for (std::size_t i = begin; i < end; ++i) batch.push_back(std::async(std::launch::async, fn, i));
    for (auto& f : batch) out.push_back(f.get());
  }
  return out;
}

// Higher profit wins; equal profits go to the lexicographically smaller vector.
inline bool better(double profit_a, const std::vector<double>& a, double profit_b, const std::vector<double>& b) {
  if (profit_a > profit_b + 1e-9) return true;
  if (profit_b > profit_a + 1e-9) return false;
  return a < b;
}

}  // namespace detail

// Fleets respond to the offers, then the market clears on their withdrawals.
inline EquilibriumOutcome evaluate(const Scenario& s, const AccessSeries& offers) {
  for (std::size_t f = 0; f < s.fleets.size(); ++f) {
    for (std::size_t a = 0; a < s.fleets[f].stations.size(); ++a) {
      const auto& terms = s.terms(f, a);
      for (std::size_t t = 0; t < s.horizon(); ++t) {
        const double v = offers.at(f).at(a).at(t);
        if (!(v >= terms.offer_min[t] && v <= terms.offer_max[t])) {
          throw std::invalid_argument("offer " + label("", s.fleets[f].id, s.fleets[f].stations[a].station, t) +
                                      " outside its bounds");
        }
      }
    }
  }
  const auto opt = detail::solver_options(s);
  EquilibriumOutcome out;
  out.offers = offers;
  out.schedule = solve_fleet(make_fleet_input(s, offers), opt);
  out.market = solve_dam(detail::market_input(s, out.schedule), opt);
  auto [revenue, cost] = detail::profit_terms(s, offers, out.schedule, out.market);
  out.revenue = revenue;
  out.cost = cost;
  out.profit = revenue - cost;
  out.evaluations = 1;
  return out;
}

inline EquilibriumOutcome evaluate(const Scenario& s, const Strategy& strategy, const std::vector<double>& z) {
  return evaluate(s, strategy.expand(z));
}

namespace detail {

// Pattern search from one start with its own evaluation budget and cache.
class PatternSearch {
 public:
  PatternSearch(const Scenario& s, const Strategy& st, std::size_t budget) : s_(s), st_(st), budget_(budget) {}

  struct Result {
    std::vector<double> z;
    double profit = -std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
    std::optional<std::string> error;
  };

  Result run(std::vector<double> z) {
    Result r;
    double fz = probe(z, r);
    if (!std::isfinite(fz)) {
      r.z = z;
      return r;
    }
    const auto& dims = st_.dimensions();
    // Indifference points: fleets switch sources where an offer meets a TOU rate.
    std::vector<std::vector<double>> snaps(dims.size());
    for (std::size_t i = 0; i < dims.size(); ++i) {
      for (const auto& slot : dims[i].slots) {
        for (double k : s_.fleets[slot.fleet].tou_rate) {
          if (k >= dims[i].lower && k <= dims[i].upper) snaps[i].push_back(k);
        }
      }
      std::sort(snaps[i].begin(), snaps[i].end());
      snaps[i].erase(std::unique(snaps[i].begin(), snaps[i].end()), snaps[i].end());
    }
    for (std::size_t i = 0; i < dims.size() && left(); ++i) {
      for (double v : snaps[i]) {
        if (!left()) break;
        auto trial = z;
        trial[i] = v;
        const double ft = probe(trial, r);
        if (better(ft, trial, fz, z)) {
          z = trial;
          fz = ft;
        }
      }
    }
    std::vector<double> step(dims.size());
    for (std::size_t i = 0; i < dims.size(); ++i) step[i] = (dims[i].upper - dims[i].lower) / 4.0;
    const double min_step = s_.settings.min_step;
    auto active = [&] {
      for (std::size_t i = 0; i < dims.size(); ++i) {
        if (step[i] >= min_step) return true;
      }
      return false;
    };
    while (active() && left()) {
      bool improved = false;
      for (std::size_t i = 0; i < dims.size() && left(); ++i) {
        if (step[i] < min_step) continue;
        std::vector<double> best_z = z;
        double best_f = fz;
        for (double dir : {1.0, -1.0}) {
          if (!left()) break;
          auto trial = z;
          trial[i] = std::clamp(z[i] + dir * step[i], dims[i].lower, dims[i].upper);
          if (trial[i] == z[i]) continue;
          const double ft = probe(trial, r);
          if (better(ft, trial, best_f, best_z)) {
            best_z = trial;
            best_f = ft;
          }
        }
        if (best_f > fz + 1e-9) improved = true;
        z = best_z;
        fz = best_f;
      }
      if (!improved) {
        for (auto& v : step) v *= 0.5;
      }
    }
    r.z = z;
    r.profit = fz;
    return r;
  }

 private:
  const Scenario& s_;
  const Strategy& st_;
  std::size_t budget_;
  std::map<std::vector<double>, double> cache_;

  bool left() const { return cache_.size() < budget_; }

  double probe(const std::vector<double>& z, Result& r) {
    auto it = cache_.find(z);
    if (it != cache_.end()) return it->second;
    double f = -std::numeric_limits<double>::infinity();
    try {
      f = evaluate(s_, st_, z).profit;
    } catch (const LowerLevelError& e) {
      if (!r.error) r.error = e.what();
    }
    cache_.emplace(z, f);
    r.evaluations = cache_.size();
    return f;
  }
};

}  // namespace detail

// Start points in order: midpoint, lower bounds, upper bounds, then seeded
// uniform draws rounded to the minimum step.
inline std::vector<std::vector<double>> start_points(const Scenario& s, const Strategy& st) {
  std::vector<std::vector<double>> starts{st.midpoint(), st.lower(), st.upper()};
  std::mt19937_64 rng(s.settings.seed);
  const auto& dims = st.dimensions();
  const double grain = s.settings.min_step;
  while (starts.size() < s.settings.starts) {
    std::vector<double> z;
    for (const auto& d : dims) {
      const double u = std::generate_canonical<double, 53>(rng);
      const double v = d.lower + u * (d.upper - d.lower);
      z.push_back(std::clamp(std::round(v / grain) * grain, d.lower, d.upper));
    }
    starts.push_back(z);
  }
  starts.resize(std::max<std::size_t>(1, std::min(starts.size(), s.settings.starts)));
  return starts;
}

// Best outcome found by the multi-start search within `budget` evaluations
// (budget 1 evaluates only the midpoint). Deterministic for a given seed.
inline EquilibriumOutcome optimize(const Scenario& s, std::size_t budget) {
  if (budget < 1) throw std::invalid_argument("budget must be at least 1");
  const Strategy st(s, s.settings.parameterization, s.settings.block_width);
  auto starts = start_points(s, st);
  if (starts.size() > budget) starts.resize(budget);
  const std::size_t n = starts.size();
  auto results = detail::parallel_map(n, detail::worker_count(s), [&](std::size_t i) {
    const std::size_t share = budget / n + (i < budget % n ? 1 : 0);
    detail::PatternSearch search(s, st, share);
    return search.run(starts[i]);
  });
  std::size_t best = 0, evaluations = 0;
  for (std::size_t i = 0; i < n; ++i) {
    evaluations += results[i].evaluations;
    if (detail::better(results[i].profit, results[i].z, results[best].profit, results[best].z)) best = i;
  }
  if (!std::isfinite(results[best].profit)) {
    const auto& err = results[best].error;
    throw LowerLevelError("upper level", "no start produced a feasible evaluation" + (err ? ": " + *err : ""));
  }
  auto out = evaluate(s, st, results[best].z);
  out.evaluations = evaluations;
  return out;
}

inline EquilibriumOutcome optimize(const Scenario& s) { return optimize(s, s.settings.budget); }

// Exhaustive search over `levels` evenly spaced values per coordinate
// (a coordinate with equal bounds contributes one value).
inline EquilibriumOutcome brute_force(const Scenario& s, std::size_t levels) {
  if (levels < 1) throw std::invalid_argument("grid needs at least one level");
  const Strategy st(s, s.settings.parameterization, s.settings.block_width);
  const auto& dims = st.dimensions();
  std::vector<std::size_t> counts;
  double total = 1.0;
  for (const auto& d : dims) {
    counts.push_back(d.lower == d.upper ? 1 : levels);
    total *= static_cast<double>(counts.back());
  }
  if (total > static_cast<double>(s.settings.brute_force_cap)) {
    std::ostringstream os;
    os << "grid of " << total << " points exceeds the cap of " << s.settings.brute_force_cap;
    throw std::invalid_argument(os.str());
  }
  const auto n = static_cast<std::size_t>(total);
  auto point = [&](std::size_t idx) {
    std::vector<double> z(dims.size());
    for (std::size_t i = dims.size(); i-- > 0;) {
      const std::size_t k = idx % counts[i];
      idx /= counts[i];
      z[i] = counts[i] == 1 ? dims[i].lower
                            : dims[i].lower + (dims[i].upper - dims[i].lower) * static_cast<double>(k) /
                                                  static_cast<double>(counts[i] - 1);
    }
    return z;
  };
  const std::size_t workers = detail::worker_count(s);
  const std::size_t chunk = std::max<std::size_t>(1, (n + workers - 1) / workers);
  struct Best {
    std::vector<double> z;
    double profit = -std::numeric_limits<double>::infinity();
    std::optional<std::string> error;
  };
  auto partial = detail::parallel_map((n + chunk - 1) / chunk, workers, [&](std::size_t c) {
    Best b;
    for (std::size_t i = c * chunk; i < std::min(n, (c + 1) * chunk); ++i) {
      auto z = point(i);
      double f = -std::numeric_limits<double>::infinity();
      try {
        f = evaluate(s, st, z).profit;
      } catch (const LowerLevelError& e) {
        if (!b.error) b.error = e.what();
      }
      if (b.z.empty() || detail::better(f, z, b.profit, b.z)) {
        b.z = z;
        b.profit = f;
      }
    }
    return b;
  });
  Best best = partial.front();
  for (const auto& b : partial) {
    if (detail::better(b.profit, b.z, best.profit, best.z)) best = b;
  }
  if (!std::isfinite(best.profit)) {
    throw LowerLevelError("upper level", "no grid point produced a feasible evaluation" +
                                             (best.error ? ": " + *best.error : ""));
  }
  auto out = evaluate(s, st, best.z);
  out.evaluations = n;
  return out;
}

// ---------------------------------------------------------------------------
// Certificate

struct Residual {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  std::string where;
  bool pass() const { return value <= limit; }
};

struct Certificate {
  bool pass = false;
  std::string refusal;  // set when there was nothing to certify
  std::vector<Residual> residuals;
  double max_violation = 0.0;
  std::string max_violation_where;
  // Primal and dual values of both lower levels in the layouts of
  // build_dam / dualize(build_dam) and build_fleet / dualize(build_fleet).
  std::vector<double> market_primal, market_dual, fleet_primal, fleet_dual;

  const Residual* find(const std::string& name) const {
    for (const auto& r : residuals) {
      if (r.name == name) return &r;
    }
    return nullptr;
  }

  std::string summary() const {
    std::ostringstream os;
    if (!refusal.empty()) return "certificate refused: " + refusal + "\n";
    os << (pass ? "PASS" : "FAIL") << '\n';
    for (const auto& r : residuals) {
      os << "  " << (r.pass() ? "ok  " : "FAIL") << ' ' << r.name << " = " << r.value << " (limit " << r.limit
         << ")";
      if (!r.where.empty()) os << " at " << r.where;
      os << '\n';
    }
    return os.str();
  }
};

// Re-checks an outcome from raw values: offer bounds, primal feasibility of
// both lower levels, strong duality of both (market duals reassembled from
// the stored prices, fleet duals from the automatic dual of the unperturbed
// fleet program) and the profit identity.
inline Certificate certify(const Scenario& s, const EquilibriumOutcome& out, double tol) {
  Certificate c;
  const double feas = s.settings.feas_tol;
  auto add = [&](std::string name, double value, double limit, std::string where = {}) {
    if (!std::isfinite(value)) value = std::numeric_limits<double>::infinity();
    c.residuals.push_back(Residual{std::move(name), value, limit, std::move(where)});
  };
  auto scaled = [&](const lp::LinearProgram& prog) {
    double m = 1.0;
    for (const auto& r : prog.constraints()) m = std::max(m, std::abs(r.rhs));
    for (const auto& v : prog.variables()) {
      if (std::isfinite(v.lower)) m = std::max(m, std::abs(v.lower));
      if (std::isfinite(v.upper)) m = std::max(m, std::abs(v.upper));
    }
    return feas * m;
  };
  auto note_violation = [&](const lp::Violation& v, const std::string& family) {
    if (v.amount > c.max_violation) {
      c.max_violation = v.amount;
      c.max_violation_where = family + ": " + v.where;
    }
  };

  try {
    double offer_violation = 0.0;
    std::string offer_where;
    for (std::size_t f = 0; f < s.fleets.size(); ++f) {
      for (std::size_t a = 0; a < s.fleets[f].stations.size(); ++a) {
        const auto& terms = s.terms(f, a);
        for (std::size_t t = 0; t < s.horizon(); ++t) {
          const double v = out.offers.at(f).at(a).at(t);
          const double viol = std::max({terms.offer_min[t] - v, v - terms.offer_max[t], 0.0});
          if (viol > offer_violation || !std::isfinite(v)) {
            offer_violation = std::isfinite(v) ? viol : std::numeric_limits<double>::infinity();
            offer_where = label("offer", s.fleets[f].id, s.fleets[f].stations[a].station, t);
          }
        }
      }
    }
    add("offer_bounds", offer_violation, feas, offer_where);
    note_violation({offer_violation, offer_where}, "offers");

    // Fleet level, without the tie-break perturbation.
    auto fin = make_fleet_input(s, out.offers);
    fin.tie_break = 0.0;
    const auto fprog = build_fleet(fin);
    c.fleet_primal = fleet_primal_vector(fin, out.schedule);
    const auto fv = fprog.max_violation(c.fleet_primal);
    add("fleet_primal_feasibility", fv.amount, scaled(fprog), fv.where);
    note_violation(fv, "fleet");
    const auto fdual = lp::solve(lp::dualize(fprog), detail::solver_options(s));
    if (!fdual.optimal()) {
      add("fleet_strong_duality", std::numeric_limits<double>::infinity(), tol,
          std::string("dual ") + lp::to_string(fdual.status));
    } else {
      c.fleet_dual = fdual.x;
      const auto rep = lp::check_strong_duality(fprog, c.fleet_primal, fdual.x, tol);
      add("fleet_strong_duality", rep.relative_gap, tol);
      add("fleet_complementarity", rep.complementarity, tol, rep.complementarity_where);
      add("fleet_dual_feasibility", rep.dual_infeasibility, tol, rep.dual_infeasibility_where);
    }
    double cost_gap = std::abs(fprog.objective_value(c.fleet_primal) - out.schedule.total_cost);
    add("fleet_reported_cost", cost_gap / std::max(1.0, std::abs(out.schedule.total_cost)), tol);

    // Market level.
    const auto din = detail::market_input(s, out.schedule);
    const auto mprog = build_dam(din);
    c.market_primal = dam_primal_vector(din, out.market);
    const auto mv = mprog.max_violation(c.market_primal);
    add("market_primal_feasibility", mv.amount, scaled(mprog), mv.where);
    note_violation(mv, "market");
    c.market_dual = lp::dual_values_from(mprog, dam_row_duals(din, out.market));
    const auto rep = lp::check_strong_duality(mprog, c.market_primal, c.market_dual, tol);
    add("market_strong_duality", rep.relative_gap, tol);
    add("market_complementarity", rep.complementarity, tol, rep.complementarity_where);
    add("market_dual_feasibility", rep.dual_infeasibility, tol, rep.dual_infeasibility_where);

    // Profit identity from raw values.
    auto [revenue, cost] = detail::profit_terms(s, out.offers, out.schedule, out.market);
    const double scale = std::max(1.0, std::abs(revenue) + std::abs(cost));
    const double identity = std::max({std::abs(out.revenue - revenue), std::abs(out.cost - cost),
                                      std::abs(out.profit - (revenue - cost))}) /
                            scale;
    add("profit_identity", identity, tol);
  } catch (const std::exception& e) {
    c.refusal = std::string("malformed outcome: ") + e.what();
    c.pass = false;
    return c;
  }
  c.pass = std::all_of(c.residuals.begin(), c.residuals.end(), [](const Residual& r) { return r.pass(); });
  return c;
}

inline Certificate certify(const Scenario& s, const std::optional<EquilibriumOutcome>& out, double tol) {
  if (!out) {
    Certificate c;
    c.refusal = "no outcome";
    return c;
  }
  return certify(s, *out, tol);
}

}  // namespace evcs
