#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "burst/pricing.hpp"

namespace burst {

struct SlotTier {
  int capacity_gbps = 0;
  int count = 0;
  bool unmetered = false;
};

// Reservable capacity at one peering location for one provider region.
struct PeeringSlot {
  std::string provider;
  std::string peering_location;
  std::string region;
  std::vector<SlotTier> tiers;

  std::string id() const { return provider + "/" + peering_location + "/" + region; }
};

struct RegionDemand {
  std::string provider;
  std::string region;
  std::string site;
  double pflops = 0.0;
  std::optional<double> expected_volume_tb;  // defaults to mean egress over the planning window
  std::optional<int> instances;               // fleet to partition over the chosen links
};

struct DemandForecast {
  std::vector<RegionDemand> regions;
  double egress_mb_per_tflop_hour = 500.0;
};

struct PlanOptions {
  double coverage_factor = 1.5;
  double duration_h = 0.0;
  std::size_t exhaustive_limit = 12;  // candidate links per region solved by enumeration
};

struct ChosenLink {
  std::string slot_id;
  std::string provider;
  std::string peering_location;
  std::string region;
  std::string site;
  LinkTier tier;
  int instances = 0;
};

struct RegionPlan {
  std::string provider;
  std::string region;
  std::string site;
  double demand_gbps = 0.0;
  double target_gbps = 0.0;
  double coverage_gbps = 0.0;
  double expected_volume_tb = 0.0;
  double cost_usd = 0.0;
  bool shortfall = false;
  std::optional<std::string> error;
  std::vector<ChosenLink> links;

  std::string key() const { return provider + "/" + region + "/" + site; }
};

struct Portfolio {
  std::vector<RegionPlan> regions;
  double cost_usd = 0.0;

  std::size_t link_count() const;
  bool any_shortfall() const;
  bool any_error() const;
};

// Cost of running `tiers` for `duration_h` while carrying `volume_tb`, split over the links in
// proportion to capacity. Unmetered links carry their share for free.
double portfolio_cost(std::span<const LinkTier> tiers, double duration_h, double volume_tb,
                      const PricingCatalog& catalog);

// Picks, per demand entry, the cheapest set of links whose capacity reaches coverage_factor times
// the mean egress. Entries are planned in order and consume slot capacity as they go. When the
// remaining slots cannot reach the target every remaining unit is taken and the region is flagged.
Portfolio plan_portfolio(const DemandForecast& forecast, const std::vector<PeeringSlot>& slots,
                         const PlanOptions& options, const PricingCatalog& catalog);

// Splits `fleet` instances over links in proportion to capacity with largest-remainder rounding.
std::vector<int> partition_compute(int fleet, std::span<const double> link_capacities_gbps);

nlohmann::json to_json(const Portfolio& portfolio);

}  // namespace burst
