// evcs: validate scenarios, run the station pricing study, sweep penetration
// and solar capacity.
//
// Exit codes: 0 success, 1 validation issues, 2 usage or input error,
// 3 certification failure, 4 solver failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "evcs/evcs.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kIssues = 1, kUsage = 2, kUncertified = 3, kSolver = 4 };

std::string default_out_dir() {
  const char* env = std::getenv("EVCS_OUT_DIR");
  return env && *env ? env : "out";
}

template <class Fn>
void write_file(const fs::path& path, Fn fn) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  fn(os);
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

void write_json(const fs::path& path, const evcs::Json& j) {
  write_file(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

struct RunOptions {
  std::string scenario;
  std::optional<std::size_t> budget;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out = default_out_dir();
};

evcs::Scenario load(const RunOptions& o) {
  auto s = evcs::load_scenario(o.scenario);
  if (o.budget) s.settings.budget = *o.budget;
  if (o.seed) s.settings.seed = *o.seed;
  if (o.threads) s.settings.threads = *o.threads;
  return s;
}

int cmd_validate(const std::string& path) {
  evcs::Scenario s;
  try {
    s = evcs::load_scenario(path);
  } catch (const evcs::ScenarioError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  const auto rep = evcs::validate(s);
  if (rep.ok()) {
    std::cout << path << ": ok\n";
    return kOk;
  }
  std::cout << rep.to_string();
  return kIssues;
}

int check_valid(const evcs::Scenario& s) {
  const auto rep = evcs::validate(s);
  if (rep.ok()) return kOk;
  std::cerr << rep.to_string();
  return kIssues;
}

// Re-certifies a stored outcome against the scenario.
int certify_stored(const RunOptions& o, const std::string& outcome_path) {
  const auto s = load(o);
  if (int rc = check_valid(s)) return rc;
  std::ifstream in(outcome_path);
  if (!in) {
    std::cerr << "error: cannot read " << outcome_path << '\n';
    return kUsage;
  }
  evcs::EquilibriumOutcome out;
  try {
    out = evcs::outcome_from_json(s, evcs::Json::parse(in));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  const auto cert = evcs::certify(s, out, s.settings.duality_tol);
  fs::create_directories(o.out);
  write_json(fs::path(o.out) / "certificate.json", evcs::certificate_to_json(cert));
  std::cout << cert.summary();
  return cert.pass ? kOk : kUncertified;
}

int cmd_run(const RunOptions& o) {
  const auto s = load(o);
  if (int rc = check_valid(s)) return rc;
  const auto result = evcs::run_baseline(s);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  write_json(dir / "outcome.json", evcs::outcome_to_json(s, result.outcome));
  write_json(dir / "certificate.json", evcs::certificate_to_json(result.certificate));
  auto row = result.metrics;
  row.label = s.name.empty() ? "baseline" : s.name;
  write_file(dir / "metrics.csv", [&](std::ostream& os) { evcs::write_metrics_csv(os, {row}); });
  write_file(dir / "schedule.csv", [&](std::ostream& os) { evcs::write_schedule_csv(os, s, result.outcome); });
  write_file(dir / "lmp.csv", [&](std::ostream& os) { evcs::write_lmp_csv(os, s.network, result.outcome.market); });
  write_file(dir / "dispatch.csv",
             [&](std::ostream& os) { evcs::write_dispatch_csv(os, s.network, result.outcome.market); });
  write_file(dir / "hourly_trends.csv",
             [&](std::ostream& os) { evcs::write_hourly_trends_csv(os, s, result.outcome); });
  write_file(dir / "bus_lmp_charging.csv",
             [&](std::ostream& os) { evcs::write_bus_lmp_charging_csv(os, s, result.outcome); });

  const auto& m = result.metrics;
  std::cout << "evaluations      " << result.outcome.evaluations << '\n'
            << "revenue ($)      " << evcs::fixed(m.revenue, 2) << '\n'
            << "cost ($)         " << evcs::fixed(m.cost, 2) << '\n'
            << "profit ($)       " << evcs::fixed(m.profit, 2) << '\n'
            << "retail (c/kWh)   " << evcs::fixed(m.retail_price, 1) << '\n'
            << "owner payment    " << evcs::fixed(m.owner_payment, 2) << " with stations, "
            << evcs::fixed(m.owner_payment_without, 2) << " without\n"
            << "outputs          " << dir.string() << '\n'
            << result.certificate.summary();
  return result.certificate.pass ? kOk : kUncertified;
}

int cmd_sweep(const RunOptions& o, const std::vector<double>& penetration, const std::vector<double>& pv) {
  const auto s = load(o);
  if (int rc = check_valid(s)) return rc;
  const bool by_penetration = !penetration.empty();
  const auto rows = by_penetration ? evcs::sweep_penetration(s, penetration) : evcs::sweep_pv(s, pv);
  const auto verdicts = by_penetration ? evcs::penetration_trends(rows) : evcs::pv_trends(rows);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  const std::string stem = by_penetration ? "sweep_penetration" : "sweep_pv";
  write_file(dir / (stem + ".csv"), [&](std::ostream& os) { evcs::write_metrics_csv(os, rows); });
  std::ostringstream summary;
  evcs::write_trends(summary, verdicts);
  if (by_penetration) {
    summary << "reference directions (30-bus reference case, non-binding): profit percent 1135 -> 1022 -> 821 -> 81; "
               "purchased price 16.7 -> 122.2 $/MWh\n";
  } else {
    summary << "reference directions (30-bus reference case, non-binding): purchased price 19.8 -> 16.7 -> 11.5 "
               "$/MWh\n";
  }
  write_file(dir / (stem + "_trends.txt"), [&](std::ostream& os) { os << summary.str(); });
  evcs::write_metrics_csv(std::cout, rows);
  std::cout << summary.str();
  bool all_ok = true;
  for (const auto& r : rows) all_ok = all_ok && r.ok() && r.certified;
  return all_ok ? kOk : kUncertified;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Charging-station offer pricing against a day-ahead market"};
  app.require_subcommand(1);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("scenario", validate_path, "Scenario JSON")->required();

  RunOptions run_opts;
  std::optional<std::string> certify_path;
  auto* run = app.add_subcommand("run", "Optimise offers, certify and write reports");
  run->add_option("scenario", run_opts.scenario, "Scenario JSON")->required();
  run->add_option("--budget", run_opts.budget, "Upper-level evaluation budget");
  run->add_option("--seed", run_opts.seed, "Seed for the random multi-starts");
  run->add_option("--threads", run_opts.threads, "Worker threads (0: all cores)");
  auto* certify_opt = run->add_option("--certify", certify_path,
                                      "Certify the result; with a path, re-certify a stored outcome instead")
                          ->expected(0, 1);
  run->add_option("--out", run_opts.out, "Output directory (default $EVCS_OUT_DIR or ./out)");

  RunOptions sweep_opts;
  std::vector<double> penetration, pv;
  auto* sweep = app.add_subcommand("sweep", "Sweep EV penetration or solar capacity");
  sweep->add_option("scenario", sweep_opts.scenario, "Scenario JSON")->required();
  auto* pen_opt = sweep->add_option("--penetration", penetration, "EV penetration levels in (0,1)")->delimiter(',');
  auto* pv_opt = sweep->add_option("--pv", pv, "Solar capacity multipliers")->delimiter(',');
  pen_opt->excludes(pv_opt);
  sweep->add_option("--budget", sweep_opts.budget, "Upper-level evaluation budget per level");
  sweep->add_option("--seed", sweep_opts.seed, "Seed for the random multi-starts");
  sweep->add_option("--threads", sweep_opts.threads, "Worker threads (0: all cores)");
  sweep->add_option("--out", sweep_opts.out, "Output directory (default $EVCS_OUT_DIR or ./out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*validate) return cmd_validate(validate_path);
    if (*run) {
      if (certify_opt->count() > 0 && certify_path && !certify_path->empty()) {
        return certify_stored(run_opts, *certify_path);
      }
      return cmd_run(run_opts);
    }
    if (*sweep) {
      if (penetration.empty() == pv.empty()) {
        std::cerr << "error: give exactly one of --penetration or --pv\n";
        return kUsage;
      }
      return cmd_sweep(sweep_opts, penetration, pv);
    }
  } catch (const evcs::ScenarioError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const evcs::LowerLevelError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
