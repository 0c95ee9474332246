#include "burst/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "burst/error.hpp"
#include "burst/lifecycle.hpp"
#include "burst/planner.hpp"
#include "burst/units.hpp"

namespace burst::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

// Prices print with at least two decimals and at most four, so configured values echo unchanged.
std::string money(double usd) {
  std::string s = fixed(usd, 4);
  while (s.size() > 1 && s.back() == '0' && s[s.size() - 3] != '.') s.pop_back();
  return s;
}

double round_to(double value, double step) {
  const double scale = std::round(1.0 / step);
  return std::round(value * scale) / scale;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::ios_base::failure("cannot write " + path.string());
  return f;
}

void write_json(const fs::path& path, const json& doc) {
  auto f = open_output(path);
  f << doc.dump(2) << '\n';
}

json read_json_file(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ParseError(path.string() + ": missing or unreadable");
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

json optional_json(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

json summary_json(const RunResult& run) {
  const auto& trace = run.trace;
  const auto& sc = run.scenario;
  json peaks = json::object();
  for (const auto& site : sc.sites) peaks[site.name] = round_to(peak_site_throughput_gbps(trace, site.name), 1e-6);
  json per_gpu = json::array();
  for (const auto& row : run.per_gpu) per_gpu.push_back(to_json(row));
  return {
      {"scenario", sc.name},
      {"seed", sc.sim.seed},
      {"price_point", sc.pricing.price_point},
      {"jobs_completed", trace.completed},
      {"jobs_failed", trace.failed},
      {"jobs_not_started", trace.not_started},
      {"delivered_tb", round_to(run.report.delivered_tb, 1e-6)},
      {"egress_tb", round_to(run.report.egress_tb, 1e-6)},
      {"effective_usd_per_tb", run.report.effective_usd_per_tb ? json(*run.report.effective_usd_per_tb) : json()},
      {"savings_fraction", run.report.savings_fraction ? json(*run.report.savings_fraction) : json()},
      {"wasted_compute_hours", round_to(trace.wasted_failed_compute_s / kSecondsPerHour, 1e-6)},
      {"transfer_hold_hours", round_to(trace.transfer_hold_s / kSecondsPerHour, 1e-6)},
      {"end_s", round_to(trace.end_s, 1e-6)},
      {"peak_site_throughput_gbps", peaks},
      {"per_gpu", per_gpu},
  };
}

json portfolio_json(const RunResult& run) {
  const auto& sc = run.scenario;
  json links = json::array();
  for (std::size_t i = 0; i < sc.links.size(); ++i) {
    const auto& l = sc.links[i];
    const double hourly = l.hourly_fee_override_usd.value_or(evaluate(l.tier.hourly_usd, sc.pricing.price_point));
    links.push_back({
        {"id", l.id},
        {"provider", l.provider},
        {"peering", l.peering_location},
        {"region", l.region},
        {"site", l.site},
        {"capacity_gbps", l.tier.capacity_gbps},
        {"unmetered", l.tier.unmetered},
        {"hourly_usd", round_to(hourly, 1e-6)},
        {"billed_hours", run.billed_hours[i]},
        {"vpn_id", optional_json(l.vpn_id)},
        {"ip_range", optional_json(l.ip_range)},
        {"delivered_tb", round_to(bytes_to_tb(static_cast<double>(run.trace.delivered_bytes_by_link[i])), 1e-6)},
        {"egress_tb", round_to(bytes_to_tb(static_cast<double>(run.trace.egress_bytes_by_link[i])), 1e-6)},
    });
  }
  return {{"links", links}, {"link_count", sc.links.size()}};
}

void write_trace_csv(const SimTrace& trace, const fs::path& path) {
  auto f = open_output(path);
  f << "t_s,link_id,throughput_gbps,active_transfers\n";
  for (const auto& s : trace.samples) {
    f << fixed(s.t_s, 3) << ',' << trace.link_ids[s.link] << ',' << fixed(s.throughput_gbps, 6) << ','
      << s.active_transfers << '\n';
  }
}

void write_jobs_csv(const SimTrace& trace, const fs::path& path) {
  std::vector<const JobOutcome*> rows;
  rows.reserve(trace.outcomes.size());
  for (const auto& o : trace.outcomes) rows.push_back(&o);
  std::sort(rows.begin(), rows.end(), [](const JobOutcome* a, const JobOutcome* b) { return a->job_id < b->job_id; });
  auto f = open_output(path);
  f << "job_id,gpu,link_id,start_s,compute_s,transfer_s,outcome,bytes\n";
  for (const auto* o : rows) {
    f << o->job_id << ',' << o->gpu << ',' << trace.link_ids[o->link] << ',' << fixed(o->start_s, 3) << ','
      << fixed(o->compute_s, 3) << ',' << fixed(o->transfer_s, 3) << ',' << to_string(o->outcome) << ','
      << o->bytes << '\n';
  }
}

void write_site_csv(const SimTrace& trace, const fs::path& path) {
  auto f = open_output(path);
  f << "t_s,site,throughput_gbps\n";
  for (const auto& s : site_throughput(trace)) {
    for (const auto& [site, gbps] : s.throughput_gbps) f << fixed(s.t_s, 3) << ',' << site << ',' << fixed(gbps, 6) << '\n';
  }
}

void write_transfer_csv(const SimTrace& trace, double bin_s, const fs::path& path) {
  auto f = open_output(path);
  f << "scope,bin_start_s,count,mean_s,stddev_s\n";
  auto emit = [&](const std::string& scope, const std::vector<TransferBin>& bins) {
    for (const auto& b : bins) {
      f << scope << ',' << fixed(b.bin_start_s, 3) << ',' << b.count << ',' << fixed(b.mean_s, 3) << ','
        << fixed(b.stddev_s, 3) << '\n';
    }
  };
  emit("all", transfer_time_stats(trace, bin_s));
  for (std::size_t l = 0; l < trace.link_ids.size(); ++l) emit(trace.link_ids[l], transfer_time_stats(trace, bin_s, l));
}

void write_delivered_csv(const SimTrace& trace, const fs::path& path) {
  auto f = open_output(path);
  f << "t_s,site,cumulative_tb\n";
  for (const auto& p : delivered_volume(trace, GroupBy::Site).curve) {
    f << fixed(p.t_s, 3) << ',' << p.group << ',' << fixed(bytes_to_tb(static_cast<double>(p.cumulative_bytes)), 9)
      << '\n';
  }
}

void write_capacity_csv(const std::vector<CapacityPoint>& capacity, const fs::path& path) {
  auto f = open_output(path);
  f << "t_s,link_id,pflops\n";
  for (const auto& p : capacity) {
    for (const auto& [link, pflops] : p.pflops_by_link) f << fixed(p.t_s, 3) << ',' << link << ',' << fixed(pflops, 6) << '\n';
  }
}

void print_violations(std::ostream& err, const ValidationError& e) {
  err << "error: " << e.violations().size() << " validation error(s)\n";
  for (const auto& v : e.violations()) err << "  - " << v << '\n';
}

// Maps library exceptions onto the exit-code contract.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    print_violations(err, e);
    return kValidationFailed;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kIoOrParse;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIoOrParse;
  } catch (const std::ios_base::failure& e) {
    err << "error: " << e.what() << '\n';
    return kIoOrParse;
  } catch (const LookupError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationFailed;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationFailed;
  }
}

}  // namespace

void apply_overrides(Scenario& scenario, const GlobalOptions& options) {
  if (options.seed) scenario.sim.seed = *options.seed;
  if (options.price_point) {
    if (!(*options.price_point >= 0.0 && *options.price_point <= 1.0)) {
      throw ValidationError({"--price-point must be within [0, 1]"});
    }
    scenario.pricing.price_point = *options.price_point;
  }
}

RunResult run_scenario(const Scenario& scenario) {
  RunResult run{scenario, {}, {}, {}, {}, {}};
  const SimInput input = build_sim_input(scenario);
  run.trace = simulate(input);
  run.capacity = provisioned_capacity(input.workload, scenario.gpus);
  run.billed_hours = scenario.billed_hours(run.trace.end_s);
  run.report = cost_report(run.trace, scenario.links, run.billed_hours, scenario.pricing, scenario.gpus);
  run.per_gpu = per_job_costs(run.trace, run.report, scenario.pricing, scenario.gpus);
  return run;
}

void write_bundle(const RunResult& run, const fs::path& dir) {
  fs::create_directories(dir);
  write_trace_csv(run.trace, dir / "trace.csv");
  write_jobs_csv(run.trace, dir / "jobs.csv");
  write_site_csv(run.trace, dir / "site_throughput.csv");
  write_transfer_csv(run.trace, run.scenario.transfer_bin_s, dir / "transfer_times.csv");
  write_delivered_csv(run.trace, dir / "delivered.csv");
  write_capacity_csv(run.capacity, dir / "capacity.csv");
  write_json(dir / "summary.json", summary_json(run));
  write_json(dir / "cost_report.json", to_json(run.report));
  write_json(dir / "portfolio.json", portfolio_json(run));
}

int cmd_plan(const fs::path& scenario_path, const GlobalOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Scenario sc = load_scenario(scenario_path);
    apply_overrides(sc, options);
    if (!sc.planner) throw ValidationError({"scenario has no planner inputs (slots[])"});
    const auto portfolio = plan_portfolio(sc.planner->forecast, sc.planner->slots, sc.planner->options, sc.pricing);
    const json doc = to_json(portfolio);
    if (options.out) {
      fs::create_directories(*options.out);
      write_json(*options.out / "portfolio.json", doc);
      out << "planned " << portfolio.link_count() << " links, cost $" << fixed(portfolio.cost_usd, 2) << " -> "
          << (*options.out / "portfolio.json").string() << '\n';
    } else {
      out << doc.dump(2) << '\n';
    }
    for (const auto& r : portfolio.regions) {
      if (r.shortfall) {
        err << "warning: shortfall at " << r.key() << ": covers " << fixed(r.coverage_gbps, 1) << " of "
            << fixed(r.target_gbps, 1) << " Gbps\n";
      }
      if (r.error) err << "error: " << *r.error << '\n';
    }
    return portfolio.any_error() ? kValidationFailed : kOk;
  });
}

int cmd_simulate(const fs::path& scenario_path, const GlobalOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Scenario sc = load_scenario(scenario_path);
    apply_overrides(sc, options);
    const auto run = run_scenario(sc);
    const fs::path dir = options.out.value_or(fs::path(scenario_path.stem().string() + "-bundle"));
    write_bundle(run, dir);
    const auto& r = run.report;
    out << "delivered " << fixed(r.delivered_tb, 3) << " TB in " << run.trace.completed << " transfers\n"
        << "networking $" << fixed(from_cents(r.networking_cents()), 2) << ", effective $"
        << (r.effective_usd_per_tb ? fixed(*r.effective_usd_per_tb, 2) : std::string("n/a")) << "/TB, default route $"
        << fixed(from_cents(r.counterfactual_default_cents), 2) << ", savings "
        << (r.savings_fraction ? fixed(*r.savings_fraction, 3) : std::string("n/a")) << '\n'
        << "failures " << run.trace.failed << ", wasted compute " << fixed(run.trace.wasted_failed_compute_s / kSecondsPerHour, 2)
        << " h\n"
        << "bundle " << dir.string() << '\n';
    return kOk;
  });
}

int cmd_report(const fs::path& bundle_dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const json summary = read_json_file(bundle_dir / "summary.json");
    const json cost = read_json_file(bundle_dir / "cost_report.json");
    auto num = [](const json& j, const char* key) { return j.contains(key) && j[key].is_number() ? j[key].get<double>() : 0.0; };
    auto opt = [](const json& j, const char* key, int decimals) {
      return j.contains(key) && j[key].is_number() ? fixed(j[key].get<double>(), decimals) : std::string("n/a");
    };

    char line[256];
    out << "Average cost per job (USD)\n";
    std::snprintf(line, sizeof line, "%-12s %8s %10s %9s %14s %12s\n", "gpu", "jobs", "egress_gb", "compute",
                  "net_dedicated", "net_default");
    out << line;
    const json rows = summary.value("per_gpu", json::array());
    double jobs_total = 0.0, dedicated_sum = 0.0, default_sum = 0.0, compute_sum = 0.0, gb_sum = 0.0;
    bool compute_known = true;
    for (const auto& row : rows) {
      const double jobs = num(row, "jobs");
      const bool has_compute = row.contains("compute_usd_per_job") && row["compute_usd_per_job"].is_number();
      const std::string compute = has_compute ? money(row["compute_usd_per_job"].get<double>()) : "n/a";
      std::snprintf(line, sizeof line, "%-12s %8.0f %10.3f %9s %14s %12s\n", row.value("gpu", "?").c_str(), jobs,
                    num(row, "mean_egress_gb"), compute.c_str(), money(num(row, "dedicated_network_usd_per_job")).c_str(),
                    money(num(row, "default_network_usd_per_job")).c_str());
      out << line;
      jobs_total += jobs;
      gb_sum += jobs * num(row, "mean_egress_gb");
      dedicated_sum += jobs * num(row, "dedicated_network_usd_per_job");
      default_sum += jobs * num(row, "default_network_usd_per_job");
      if (has_compute) compute_sum += jobs * row["compute_usd_per_job"].get<double>();
      compute_known = compute_known && has_compute;
    }
    if (jobs_total > 0.0) {
      const std::string compute = compute_known ? money(compute_sum / jobs_total) : "n/a";
      std::snprintf(line, sizeof line, "%-12s %8.0f %10.3f %9s %14s %12s\n", "all", jobs_total, gb_sum / jobs_total,
                    compute.c_str(), money(dedicated_sum / jobs_total).c_str(), money(default_sum / jobs_total).c_str());
      out << line;
    } else {
      out << "(no jobs)\n";
    }

    out << "\nTotals\n"
        << "  jobs completed      " << summary.value("jobs_completed", 0) << '\n'
        << "  jobs failed         " << summary.value("jobs_failed", 0) << '\n'
        << "  delivered TB        " << fixed(num(cost, "delivered_tb"), 3) << '\n'
        << "  fixed USD           " << fixed(num(cost, "fixed_usd"), 2) << '\n'
        << "  metered USD         " << fixed(num(cost, "metered_usd"), 2) << '\n'
        << "  compute USD         " << fixed(num(cost, "compute_usd"), 2) << '\n'
        << "  total USD           " << fixed(num(cost, "total_usd"), 2) << '\n'
        << "  effective USD/TB    " << opt(cost, "effective_usd_per_tb", 2) << '\n'
        << "  default route USD   " << fixed(num(cost, "counterfactual_default_usd"), 2) << '\n'
        << "  savings fraction    " << opt(cost, "savings_fraction", 3) << '\n';
    return kOk;
  });
}

int cmd_workflow(const fs::path& log_path, const GlobalOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::ifstream in(log_path);
    if (!in) throw ParseError(log_path.string() + ": missing or unreadable");
    std::vector<LogRecord> records;
    try {
      records = parse_event_log(in);
    } catch (const ParseError& e) {
      throw ParseError(log_path.string() + ": " + e.what());
    }
    const auto verdicts = check_workflows(records);
    const json doc = to_json(verdicts);
    if (options.out) {
      fs::create_directories(*options.out);
      write_json(*options.out / "workflow.json", doc);
    }
    out << doc.dump(2) << '\n';
    const bool ok = std::all_of(verdicts.begin(), verdicts.end(), [](const LinkVerdict& v) { return v.ok; });
    return ok ? kOk : kValidationFailed;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cloud burst egress planner and simulator", "burstsim"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions options;
  std::string out_dir;
  std::uint64_t seed = 0;
  double price_point = 0.0;
  auto* out_opt = app.add_option("--out", out_dir, "Output directory");
  auto* seed_opt = app.add_option("--seed", seed, "Simulation seed (overrides the scenario)");
  auto* pp_opt = app.add_option("--price-point", price_point, "Position inside every price band, 0..1");

  std::string path;
  auto* plan = app.add_subcommand("plan", "Choose dedicated links for the scenario's demand forecast");
  plan->add_option("scenario", path, "Scenario file")->required();
  auto* sim = app.add_subcommand("simulate", "Simulate a scenario and write a run bundle");
  sim->add_option("scenario", path, "Scenario file")->required();
  auto* report = app.add_subcommand("report", "Print per-job and total costs of a run bundle");
  report->add_option("bundle", path, "Bundle directory")->required();
  auto* workflow = app.add_subcommand("workflow", "Check provisioning event logs and billing hours");
  workflow->add_option("log", path, "Event log file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kIoOrParse;
  }

  if (*out_opt) options.out = out_dir;
  if (*seed_opt) options.seed = seed;
  if (*pp_opt) options.price_point = price_point;

  if (*plan) return cmd_plan(path, options, out, err);
  if (*sim) return cmd_simulate(path, options, out, err);
  if (*report) return cmd_report(path, out, err);
  return cmd_workflow(path, options, out, err);
}

}  // namespace burst::cli
