#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace burst {

// A [low, high] range of prices. Provider price lists are only known as ranges, so every price is
// stored as a band and resolved to a point through a catalog-wide price point.
struct PriceBand {
  double low = 0.0;
  double high = 0.0;

  static PriceBand point(double value) { return {value, value}; }
  void validate() const;
};

// One reservable dedicated-link capacity and its billing mode.
struct LinkTier {
  int capacity_gbps = 0;
  PriceBand hourly_usd;
  PriceBand per_tb_usd;
  bool unmetered = false;

  void validate() const;
};

bool is_reservable_capacity(int capacity_gbps);

struct DefaultRoute {};
struct Dedicated {
  LinkTier tier;
};
using RouteKind = std::variant<DefaultRoute, Dedicated>;

struct PricingCatalog {
  PriceBand default_egress_per_tb;
  std::vector<LinkTier> tiers;
  double price_point = 0.5;  // 0 = low end of every band, 1 = high end

  // Throws LookupError when no tier has this capacity and billing mode.
  const LinkTier& find_tier(int capacity_gbps, bool unmetered) const;

  // Checks band sanity and that the default route is dearer per TB than every metered tier.
  void validate() const;

  // US list prices for default-route and dedicated egress, December 2020.
  static PricingCatalog list_prices_2020();
};

double evaluate(const PriceBand& band, double price_point);

// USD for `volume_tb` of egress over `route`. Unmetered tiers cost nothing per TB.
double egress_cost(double volume_tb, const RouteKind& route, const PricingCatalog& catalog);

double link_fixed_cost(const LinkTier& tier, double hours, const PricingCatalog& catalog);
// Same, with a per-link hourly fee that replaces the tier's band (e.g. out-of-country regions).
double link_fixed_cost(const LinkTier& tier, double hours, const PricingCatalog& catalog,
                       std::optional<double> hourly_override_usd);

// Sustained egress (TB/h) above which the unmetered tier is cheaper than the metered one.
double break_even_rate(const LinkTier& metered, const LinkTier& unmetered, const PricingCatalog& catalog);

// Total cost of running a tier for `hours` while moving `volume_tb`.
double tier_total_cost(const LinkTier& tier, double hours, double volume_tb, const PricingCatalog& catalog);

std::int64_t to_cents(double usd);
inline double from_cents(std::int64_t cents) { return static_cast<double>(cents) / 100.0; }

}  // namespace burst
