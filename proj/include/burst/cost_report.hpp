#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "burst/netsim.hpp"
#include "burst/pricing.hpp"
#include "burst/workload.hpp"

namespace burst {

// Money is held in integer cents so that totals add up exactly in serialized reports.
struct CostReport {
  std::int64_t fixed_cents = 0;
  std::int64_t metered_cents = 0;
  std::int64_t compute_cents = 0;
  std::int64_t total_cents = 0;
  double delivered_tb = 0.0;
  double egress_tb = 0.0;  // billed volume: delivered plus partial uploads that timed out
  std::optional<double> effective_usd_per_tb;
  std::int64_t counterfactual_default_cents = 0;
  std::optional<double> savings_fraction;

  std::int64_t networking_cents() const { return fixed_cents + metered_cents; }
};

// `billed_hours[i]` is the billing window of `portfolio[i]`. The trace must come from a finished
// simulation over the same portfolio. Throws ValidationError when a GPU that ran jobs has no cost.
CostReport cost_report(const SimTrace& trace, const std::vector<DedicatedLink>& portfolio,
                       const std::vector<double>& billed_hours, const PricingCatalog& catalog,
                       const GpuCatalog& gpus);

nlohmann::json to_json(const CostReport& report);

// Average cost of one job of each GPU class that ran.
struct GpuJobCost {
  std::string gpu;
  std::size_t jobs = 0;
  double mean_egress_gb = 0.0;
  std::optional<double> compute_usd;
  double dedicated_network_usd = 0.0;
  double default_network_usd = 0.0;
};

std::vector<GpuJobCost> per_job_costs(const SimTrace& trace, const CostReport& report, const PricingCatalog& catalog,
                                      const GpuCatalog& gpus);

nlohmann::json to_json(const GpuJobCost& row);

}  // namespace burst
