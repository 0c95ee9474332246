#include "burst/cost_report.hpp"

#include <cmath>
#include <map>

#include "burst/error.hpp"
#include "burst/units.hpp"

namespace burst {

namespace {

double round_to(double value, double precision) {
  const double scale = std::round(1.0 / precision);
  return std::round(value * scale) / scale;
}

nlohmann::json optional_number(const std::optional<double>& value) {
  return value ? nlohmann::json(*value) : nlohmann::json(nullptr);
}

}  // namespace

CostReport cost_report(const SimTrace& trace, const std::vector<DedicatedLink>& portfolio,
                       const std::vector<double>& billed_hours, const PricingCatalog& catalog,
                       const GpuCatalog& gpus) {
  if (billed_hours.size() != portfolio.size()) {
    throw DomainError("billed hours must be given for every link in the portfolio");
  }
  std::map<std::string, std::size_t> trace_index;
  for (std::size_t l = 0; l < trace.link_ids.size(); ++l) trace_index[trace.link_ids[l]] = l;

  double fixed = 0.0;
  double metered = 0.0;
  for (std::size_t i = 0; i < portfolio.size(); ++i) {
    const auto& link = portfolio[i];
    fixed += link_fixed_cost(link.tier, billed_hours[i], catalog, link.hourly_fee_override_usd);
    const auto it = trace_index.find(link.id);
    if (it != trace_index.end()) {
      const double tb = bytes_to_tb(static_cast<double>(trace.egress_bytes_by_link[it->second]));
      metered += egress_cost(tb, Dedicated{link.tier}, catalog);
    }
  }

  std::vector<std::string> missing;
  std::map<std::string, std::size_t> jobs_by_gpu;
  for (const auto& o : trace.outcomes) ++jobs_by_gpu[o.gpu];
  double compute = 0.0;
  for (const auto& [name, jobs] : jobs_by_gpu) {
    const auto& gpu = gpus.find(name);
    if (!gpu.compute_cost_per_job_usd) {
      missing.push_back("GPU '" + name + "' ran " + std::to_string(jobs) + " jobs but has no cost_per_job_usd");
      continue;
    }
    compute += *gpu.compute_cost_per_job_usd * static_cast<double>(jobs);
  }
  if (!missing.empty()) throw ValidationError(std::move(missing));

  CostReport report;
  report.fixed_cents = to_cents(fixed);
  report.metered_cents = to_cents(metered);
  report.compute_cents = to_cents(compute);
  report.total_cents = report.fixed_cents + report.metered_cents + report.compute_cents;
  report.delivered_tb = bytes_to_tb(static_cast<double>(trace.delivered_bytes()));
  report.egress_tb = bytes_to_tb(static_cast<double>(trace.egress_bytes()));
  report.counterfactual_default_cents = to_cents(egress_cost(report.egress_tb, DefaultRoute{}, catalog));

  const double networking = from_cents(report.networking_cents());
  if (trace.delivered_bytes() > 0) report.effective_usd_per_tb = round_to(networking / report.delivered_tb, 0.01);
  if (report.counterfactual_default_cents > 0) {
    report.savings_fraction = round_to(1.0 - networking / from_cents(report.counterfactual_default_cents), 1e-6);
  }
  return report;
}

nlohmann::json to_json(const CostReport& report) {
  return {
      {"fixed_usd", from_cents(report.fixed_cents)},
      {"metered_usd", from_cents(report.metered_cents)},
      {"compute_usd", from_cents(report.compute_cents)},
      {"total_usd", from_cents(report.total_cents)},
      {"delivered_tb", round_to(report.delivered_tb, 1e-6)},
      {"effective_usd_per_tb", optional_number(report.effective_usd_per_tb)},
      {"counterfactual_default_usd", from_cents(report.counterfactual_default_cents)},
      {"savings_fraction", optional_number(report.savings_fraction)},
  };
}

std::vector<GpuJobCost> per_job_costs(const SimTrace& trace, const CostReport& report, const PricingCatalog& catalog,
                                      const GpuCatalog& gpus) {
  struct Acc {
    std::size_t jobs = 0;
    double bytes = 0.0;
  };
  std::map<std::string, Acc> by_gpu;
  for (const auto& o : trace.outcomes) {
    auto& acc = by_gpu[o.gpu];
    ++acc.jobs;
    acc.bytes += static_cast<double>(o.bytes_sent);
  }
  const double networking_per_tb =
      report.egress_tb > 0.0 ? from_cents(report.networking_cents()) / report.egress_tb : 0.0;
  const double default_per_tb = evaluate(catalog.default_egress_per_tb, catalog.price_point);

  std::vector<GpuJobCost> rows;
  // Catalog order keeps the table stable across runs.
  for (const auto& gpu : gpus.gpus()) {
    const auto it = by_gpu.find(gpu.name);
    if (it == by_gpu.end()) continue;
    const auto& acc = it->second;
    const double tb_per_job = bytes_to_tb(acc.bytes) / static_cast<double>(acc.jobs);
    rows.push_back({gpu.name, acc.jobs, tb_per_job * 1000.0, gpu.compute_cost_per_job_usd,
                    tb_per_job * networking_per_tb, tb_per_job * default_per_tb});
  }
  return rows;
}

nlohmann::json to_json(const GpuJobCost& row) {
  return {
      {"gpu", row.gpu},
      {"jobs", row.jobs},
      {"mean_egress_gb", round_to(row.mean_egress_gb, 1e-6)},
      {"compute_usd_per_job", optional_number(row.compute_usd)},
      {"dedicated_network_usd_per_job", round_to(row.dedicated_network_usd, 1e-6)},
      {"default_network_usd_per_job", round_to(row.default_network_usd, 1e-6)},
  };
}

}  // namespace burst
