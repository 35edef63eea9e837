// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "evcs/evcs.hpp"
#include "support/builders.hpp"
#include "support/random_dam.hpp"
#include "support/random_fleet.hpp"
#include "support/random_lp.hpp"
#include "support/vertex_enumeration.hpp"

namespace {

using namespace evcs;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

const char* kDesk = "data/desk_5bus.json";

// 1. Random LPs: duality gap and complementarity.
Verdict lp_duality() {
  Verdict v;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  double worst_gap = 0.0, worst_cs = 0.0;
  int solved = 0;
  for (int k = 0; k < 200; ++k) {
    auto prog = testing::random_feasible_lp(rng, 12, 12);
    auto p = lp::solve(prog);
    auto d = lp::solve(lp::dualize(prog));
    if (!p.optimal() || !d.optimal()) {
      v.require(false, "instance " + std::to_string(k) + " not solved");
      continue;
    }
    auto rep = lp::check_strong_duality(prog, p, d, 1e-6);
    worst_gap = std::max(worst_gap, rep.relative_gap);
    worst_cs = std::max(worst_cs, rep.complementarity);
    ++solved;
  }
  const double secs = seconds_since(t0);
  v.require(solved == 200, "solved " + std::to_string(solved) + "/200");
  v.require(worst_gap <= 1e-6, "gap too large");
  v.require(worst_cs <= 1e-6, "complementarity too large");
  v.require(secs < 60.0, "too slow");
  v.detail = fmt("%.0f LPs, max relative gap %.2e, max complementarity %.2e", solved, worst_gap, worst_cs) +
             fmt(", %.2f s", secs) + (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

// Price at a bus from finite differences of vertex-enumerated optima.
double enumerated_lmp(DamInput in, const std::string& bus) {
  const double step = 1e-3;
  const double base = testing::enumerate_vertices(build_dam(in))->objective;
  in.network.demands.push_back(Demand{"probe", bus, Series{step}});
  return (base - testing::enumerate_vertices(build_dam(in))->objective) / step;
}

// 2. Two-bus congestion prices.
Verdict dam_pricing() {
  Verdict v;
  DamInput congested{testing::two_bus(10.0), {}, {}};
  DamInput open{testing::two_bus(100.0), {}, {}};
  auto a = solve_dam(congested);
  auto b = solve_dam(open);
  const double e1 = enumerated_lmp(congested, "b1"), e2 = enumerated_lmp(congested, "b2");
  const double o1 = enumerated_lmp(open, "b1"), o2 = enumerated_lmp(open, "b2");
  v.require(std::abs(a.lmp[0][0] - 10.0) <= 1e-6 && std::abs(a.lmp[1][0] - 30.0) <= 1e-6, "congested prices");
  v.require(std::abs(e1 - 10.0) <= 1e-6 && std::abs(e2 - 30.0) <= 1e-6, "enumeration disagrees (congested)");
  v.require(std::abs(b.lmp[0][0] - b.lmp[1][0]) <= 1e-6, "uncongested prices differ");
  v.require(std::abs(o1 - b.lmp[0][0]) <= 1e-6 && std::abs(o2 - b.lmp[1][0]) <= 1e-6,
            "enumeration disagrees (uncongested)");
  v.detail = fmt("congested LMP %.6f / %.6f (enumerated %.6f", a.lmp[0][0], a.lmp[1][0], e1) +
             fmt(" / %.6f); uncongested %.6f / %.6f", e2, b.lmp[0][0], b.lmp[1][0]) +
             (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

// 3. Fleet toy response.
Verdict fleet_response() {
  Verdict v;
  FleetInput in;
  in.fleets = {testing::toy_fleet()};
  in.segment_widths = {{{10.0}}};
  in.offers = {{{30.0, 10.0}}};
  auto cheap = solve_fleet(in);
  in.offers = {{{30.0, 50.0}}};
  auto dear = solve_fleet(in);
  const auto& pc = cheap.plans[0];
  const auto& pd = dear.plans[0];
  v.require(std::abs(cheap.total_cost - 100.0) <= 1e-6, "cost at cheap hour");
  v.require(std::abs(pc.station[0][1] - 10.0) <= 1e-6 && std::abs(pc.station[0][0]) <= 1e-6 &&
                std::abs(pc.home[0]) + std::abs(pc.home[1]) <= 1e-6,
            "charging not all at the cheap station hour");
  v.require(std::abs(dear.total_cost - 200.0) <= 1e-6, "cost after raising the offer");
  v.require(std::abs(pd.home[0] + pd.home[1] - 10.0) <= 1e-6, "schedule did not move home");
  v.detail = fmt("cost %.6f with station at hour 2 (%.3f MW); raised offer: cost %.6f", cheap.total_cost,
                 pc.station[0][1], dear.total_cost) +
             fmt(", home %.3f MWh", pd.home[0] + pd.home[1]) + (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

// 4. Market dual written explicitly; fleet automatic dual; explicit fleet dual reported.
Verdict dual_crosscheck() {
  Verdict v;
  std::mt19937_64 rng(2024);
  int solved = 0;
  double worst = 0.0;
  for (int k = 0; k < 400 && solved < 60; ++k) {
    auto in = testing::random_dam(rng, 2);
    DamOutcome out;
    try {
      out = solve_dam(in);
    } catch (const LowerLevelError&) {
      continue;
    }
    auto dual = lp::solve(build_dam_explicit_dual(in));
    if (!dual.optimal()) {
      v.require(false, "explicit market dual not optimal on instance " + std::to_string(k));
      continue;
    }
    worst = std::max(worst, std::abs(dual.objective - out.welfare));
    ++solved;
  }
  v.require(solved >= 50, "fewer than 50 market instances");
  v.require(worst <= 1e-6, "explicit market dual value differs from welfare");

  int fleets = 0, auto_ok = 0, explicit_ok = 0, explicit_unbounded = 0;
  for (int k = 0; k < 60; ++k) {
    auto in = testing::random_fleet_input(rng);
    auto cmp = fleet_dual_comparison(in);
    ++fleets;
    auto_ok += cmp.auto_dual_matches;
    explicit_ok += cmp.explicit_dual_matches;
    explicit_unbounded += cmp.explicit_dual_status == lp::Status::unbounded;
  }
  v.require(auto_ok == fleets, "fleet automatic dual mismatch");
  v.detail = fmt("market: %.0f instances, max |dual - primal| %.2e", solved, worst) +
             fmt("; fleet automatic dual matches %.0f/%.0f", auto_ok, fleets) +
             fmt("; explicit fleet dual matches %.0f/%.0f (unbounded %.0f)", explicit_ok, fleets, explicit_unbounded) +
             (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

// Random single-station instance with T in {1,2,3}.
Scenario random_bilevel(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> horizon(1, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t T = horizon(rng);
  auto r = [&](double lo, double hi) { return std::round(lo + (hi - lo) * u(rng)); };
  Scenario s;
  s.name = "random";
  const bool two = u(rng) < 0.5;
  s.network = two ? testing::two_bus(r(5.0, 40.0)) : testing::one_bus(0.0, T);
  s.network.horizon = T;
  s.network.generators[0].segments = {CostSegment{0.0, 40.0, r(5.0, 15.0)}, CostSegment{0.0, 60.0, r(16.0, 35.0)}};
  s.network.demands[0].load.clear();
  for (std::size_t t = 0; t < T; ++t) s.network.demands[0].load.push_back(r(5.0, 45.0));
  const std::string bus = two ? "b2" : "b1";
  EvFleet f = testing::toy_fleet("f1", bus);
  f.home_connectivity.assign(T, 1.0);
  f.stations[0].connectivity.clear();
  f.discharge.clear();
  f.tou_rate.clear();
  for (std::size_t t = 0; t < T; ++t) {
    f.stations[0].connectivity.push_back(u(rng) < 0.8 ? 1.0 : 0.5);
    f.discharge.push_back(r(0.0, 6.0));
    f.tou_rate.push_back(r(15.0, 45.0));
  }
  f.energy_initial = r(0.0, 5.0);
  s.fleets = {f};
  auto terms = testing::toy_terms("f1", T, r(0.0, 10.0), r(20.0, 50.0));
  s.stations = {ChargingStation{"c1", bus, {terms}}};
  s.settings.threads = 1;
  return s;
}

struct BilevelRuns {
  Verdict equivalence;
  Verdict certificates;
};

// 5 and 6. Grid oracle against the optimiser; certificates of every output.
BilevelRuns bilevel() {
  BilevelRuns out;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(777);
  std::uniform_int_distribution<std::size_t> levels(5, 9);
  int instances = 0, certified = 0;
  double worst_ratio = 1e300;
  std::string worst_cert;
  for (int k = 0; k < 200 && instances < 24; ++k) {
    auto s = random_bilevel(rng);
    if (!validate(s).ok()) continue;
    const std::size_t n = levels(rng);
    EquilibriumOutcome grid, best;
    try {
      grid = brute_force(s, n);
      best = optimize(s, s.settings.budget);
    } catch (const LowerLevelError&) {
      continue;
    }
    ++instances;
    const std::string tag = "instance " + std::to_string(k);
    if (grid.profit > 0.0) {
      worst_ratio = std::min(worst_ratio, best.profit / grid.profit);
      out.equivalence.require(best.profit >= 0.99 * grid.profit, tag + " below 99% of grid");
    } else {
      out.equivalence.require(best.profit >= grid.profit - 1e-6, tag + " below non-positive grid optimum");
    }
    auto cert = certify(s, best, 1e-6);
    if (cert.pass) {
      ++certified;
    } else {
      out.certificates.require(false, tag + ": " + cert.summary());
    }
    for (const char* name : {"market_strong_duality", "fleet_strong_duality"}) {
      const auto* r = cert.find(name);
      out.certificates.require(r && r->pass(), tag + " missing or failing " + name);
    }
  }
  const double secs = seconds_since(t0);
  out.equivalence.require(instances >= 20, "fewer than 20 instances");
  out.equivalence.require(secs < 300.0, "too slow");
  out.equivalence.detail = fmt("%.0f instances, worst optimiser/grid profit ratio %.4f, %.1f s", instances,
                               worst_ratio > 1e299 ? 1.0 : worst_ratio, secs) +
                           (out.equivalence.detail.empty() ? "" : " | " + out.equivalence.detail);

  // Desk-scale output and a corrupted copy.
  auto desk = load_scenario(kDesk);
  auto base = optimize(desk);
  auto cert = certify(desk, base, 1e-6);
  out.certificates.require(cert.pass, "desk scenario: " + cert.summary());
  auto bad = base;
  bad.market.lmp[3][12] += 5.0;
  auto bad_cert = certify(desk, bad, 1e-6);
  std::string failing;
  for (const auto& r : bad_cert.residuals) {
    if (!r.pass() && r.value > 0.0) failing += (failing.empty() ? "" : ",") + r.name;
  }
  out.certificates.require(!bad_cert.pass && !failing.empty(), "corrupted outcome was not rejected");
  out.certificates.detail = fmt("%.0f/%.0f random optimiser outputs certified, desk scenario ", certified, instances) +
                            (cert.pass ? "certified" : "NOT certified") + "; corrupted price rejected by " +
                            failing + (out.certificates.detail.empty() ? "" : " | " + out.certificates.detail);
  return out;
}

// 7. Owner payments with and without stations on the desk scenario.
Verdict owner_payments() {
  Verdict v;
  auto desk = load_scenario(kDesk);
  bool capped = true;
  for (std::size_t f = 0; f < desk.fleets.size(); ++f) {
    for (std::size_t a = 0; a < desk.fleets[f].stations.size(); ++a) {
      const auto& terms = desk.terms(f, a);
      for (std::size_t t = 0; t < desk.horizon(); ++t) {
        capped = capped && terms.offer_max[t] <= desk.fleets[f].tou_rate[t];
      }
    }
  }
  v.require(capped, "offer ceiling exceeds the TOU rate");
  auto r = run_baseline(desk);
  const auto& m = r.metrics;
  const double tol = 1e-6 * std::max(1.0, m.owner_payment_without);
  v.require(m.owner_payment <= m.owner_payment_without + tol, "stations raised owner payments");
  v.require(m.station_energy <= 0.0 || m.owner_payment < m.owner_payment_without - tol,
            "tie despite station charging");
  v.detail = fmt("with stations $%.2f, without $%.2f, station energy %.3f MWh", m.owner_payment,
                 m.owner_payment_without, m.station_energy) +
             (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

std::string join_verdicts(const std::vector<TrendVerdict>& vs) {
  std::string s;
  for (const auto& t : vs) {
    if (!t.required) continue;
    s += (s.empty() ? "" : "; ") + t.metric + " " + t.direction + " " + (t.holds ? "holds" : "FAILS") + " (" +
         t.values + ")";
  }
  return s;
}

// 8. Sweep trends on the desk scenario.
Verdict sweep_trends(std::string& pv_csv) {
  Verdict v;
  auto desk = load_scenario(kDesk);
  auto pen = sweep_penetration(desk, {0.10, 0.15, 0.20, 0.25});
  auto pv = sweep_pv(desk, {0.0, 1.0, 2.0});
  auto pt = penetration_trends(pen);
  auto vt = pv_trends(pv);
  for (const auto& r : pen) v.require(r.ok() && r.certified, r.label + " failed: " + r.error);
  for (const auto& r : pv) v.require(r.ok() && r.certified, r.label + " failed: " + r.error);
  v.require(required_trends_hold(pt), "penetration trend");
  v.require(required_trends_hold(vt), "solar trend");
  std::ostringstream os;
  write_metrics_csv(os, pv);
  pv_csv = os.str();
  v.detail = "penetration: " + join_verdicts(pt) + " | solar: " + join_verdicts(vt) +
             (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

struct Artifacts {
  std::string outcome, certificate, metrics, schedule, hourly, bus;
};

Artifacts desk_artifacts(std::size_t threads) {
  auto desk = load_scenario(kDesk);
  desk.settings.threads = threads;
  auto r = run_baseline(desk);
  Artifacts a;
  a.outcome = outcome_to_json(desk, r.outcome).dump(2);
  a.certificate = certificate_to_json(r.certificate).dump(2);
  std::ostringstream m, s, h, b;
  write_metrics_csv(m, {r.metrics});
  write_schedule_csv(s, desk, r.outcome);
  write_hourly_trends_csv(h, desk, r.outcome);
  write_bus_lmp_charging_csv(b, desk, r.outcome);
  a.metrics = m.str();
  a.schedule = s.str();
  a.hourly = h.str();
  a.bus = b.str();
  return a;
}

// 9. Identical inputs give identical bytes, across thread counts too.
Verdict determinism(const std::string& pv_csv_first) {
  Verdict v;
  auto a = desk_artifacts(1);
  auto b = desk_artifacts(3);
  v.require(a.outcome == b.outcome, "outcome JSON differs");
  v.require(a.certificate == b.certificate, "certificate JSON differs");
  v.require(a.metrics == b.metrics, "metrics CSV differs");
  v.require(a.schedule == b.schedule, "schedule CSV differs");
  v.require(a.hourly == b.hourly && a.bus == b.bus, "plot data differs");
  auto desk = load_scenario(kDesk);
  std::ostringstream os;
  write_metrics_csv(os, sweep_pv(desk, {0.0, 1.0, 2.0}));
  v.require(os.str() == pv_csv_first, "sweep CSV differs");
  v.detail = fmt("outcome JSON %.0f bytes, sweep CSV %.0f bytes compared", a.outcome.size(), os.str().size()) +
             (v.detail.empty() ? "" : " | " + v.detail);
  return v;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const std::string& title, const std::function<Verdict()>& fn) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    failures += !v.pass;
    std::cout << "criterion " << id << " " << (v.pass ? "PASS" : "FAIL") << "  " << title << ": " << v.detail
              << std::endl;
  };

  report(1, "LP duality suite", lp_duality);
  report(2, "market pricing oracle", dam_pricing);
  report(3, "fleet response oracle", fleet_response);
  report(4, "dual cross-check", dual_crosscheck);
  BilevelRuns runs;
  bool ran = false;
  auto bilevel_once = [&]() -> BilevelRuns& {
    if (!ran) {
      runs = bilevel();
      ran = true;
    }
    return runs;
  };
  report(5, "optimiser vs grid oracle", [&] { return bilevel_once().equivalence; });
  report(6, "certificate soundness", [&] { return bilevel_once().certificates; });
  report(7, "owner payments with and without stations", owner_payments);
  std::string pv_csv;
  report(8, "penetration and solar trends", [&] { return sweep_trends(pv_csv); });
  report(9, "determinism", [&] { return determinism(pv_csv); });
  std::cout << (failures == 0 ? "all criteria PASS" : std::to_string(failures) + " criteria FAIL") << std::endl;
  return failures == 0 ? 0 : 1;
}
