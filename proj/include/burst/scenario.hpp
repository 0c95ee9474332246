#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "burst/netsim.hpp"
#include "burst/planner.hpp"
#include "burst/pricing.hpp"
#include "burst/workload.hpp"

namespace burst {

struct PlannerInputs {
  std::vector<PeeringSlot> slots;
  DemandForecast forecast;
  PlanOptions options;
};

// Everything one run needs. Loaded from a single JSON file; the pricing section may instead be a
// path to a separate catalog file, resolved relative to the scenario.
struct Scenario {
  std::filesystem::path source;
  std::string name;
  PricingCatalog pricing = PricingCatalog::list_prices_2020();
  GpuCatalog gpus = GpuCatalog::measured_2020();
  JobProfile profile;
  RampSchedule ramp;
  std::vector<StorageSite> sites;
  std::vector<DedicatedLink> links;
  SimConfig sim;
  double transfer_bin_s = 600.0;
  std::optional<double> default_billed_hours;
  std::optional<PlannerInputs> planner;

  // Billing window per link: the link's own value, else the scenario default, else the
  // simulated span rounded up to whole hours.
  std::vector<double> billed_hours(double simulated_end_s) const;
};

PricingCatalog parse_pricing(const nlohmann::json& doc);
PricingCatalog load_pricing_catalog(const std::filesystem::path& path);

// Throws ParseError (syntax, wrong types, missing keys; messages carry line or key context).
Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir);
Scenario load_scenario(const std::filesystem::path& path);

// Every cross-reference and range problem in one ValidationError. Simulation needs a portfolio.
void validate_for_simulation(const Scenario& scenario);

// Expands the ramp with the scenario seed into a ready-to-run simulation input.
SimInput build_sim_input(const Scenario& scenario);

}  // namespace burst
