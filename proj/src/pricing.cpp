#include "burst/pricing.hpp"

#include <cmath>
#include <string>

#include "burst/error.hpp"

namespace burst {

void PriceBand::validate() const {
  if (!(low >= 0.0) || !(high >= low)) {
    throw DomainError("price band [" + std::to_string(low) + ", " + std::to_string(high) +
                      "] must satisfy 0 <= low <= high");
  }
}

bool is_reservable_capacity(int capacity_gbps) {
  return capacity_gbps == 2 || capacity_gbps == 5 || capacity_gbps == 10;
}

void LinkTier::validate() const {
  if (!is_reservable_capacity(capacity_gbps)) {
    throw DomainError("link capacity " + std::to_string(capacity_gbps) + " Gbps is not one of {2, 5, 10}");
  }
  hourly_usd.validate();
  per_tb_usd.validate();
  if (unmetered && (per_tb_usd.low != 0.0 || per_tb_usd.high != 0.0)) {
    throw DomainError("unmetered tier must have a zero per-TB fee");
  }
}

const LinkTier& PricingCatalog::find_tier(int capacity_gbps, bool unmetered) const {
  for (const auto& tier : tiers) {
    if (tier.capacity_gbps == capacity_gbps && tier.unmetered == unmetered) return tier;
  }
  throw LookupError("no " + std::string(unmetered ? "unmetered" : "metered") + " tier with capacity " +
                    std::to_string(capacity_gbps) + " Gbps in pricing catalog");
}

void PricingCatalog::validate() const {
  if (!(price_point >= 0.0 && price_point <= 1.0)) {
    throw DomainError("price_point " + std::to_string(price_point) + " outside [0, 1]");
  }
  default_egress_per_tb.validate();
  for (const auto& tier : tiers) {
    tier.validate();
    if (tier.unmetered) continue;
    // Both rates are linear in the price point, so checking the two ends covers every point.
    for (const double p : {0.0, 1.0}) {
      if (!(evaluate(default_egress_per_tb, p) > evaluate(tier.per_tb_usd, p))) {
        throw DomainError("default-route egress must be dearer than dedicated egress (" +
                          std::to_string(tier.capacity_gbps) + " Gbps tier)");
      }
    }
  }
}

PricingCatalog PricingCatalog::list_prices_2020() {
  PricingCatalog catalog;
  catalog.default_egress_per_tb = {80.0, 85.0};
  catalog.tiers = {
      {2, {0.57, 1.19}, {20.0, 25.0}, false},
      {5, {1.25, 2.99}, {20.0, 25.0}, false},
      {10, {2.36, 4.65}, {20.0, 25.0}, false},
      {5, PriceBand::point(35.0), PriceBand::point(0.0), true},
  };
  catalog.price_point = 0.5;
  return catalog;
}

double evaluate(const PriceBand& band, double price_point) {
  if (!(price_point >= 0.0 && price_point <= 1.0)) {
    throw DomainError("price_point " + std::to_string(price_point) + " outside [0, 1]");
  }
  return band.low + price_point * (band.high - band.low);
}

double egress_cost(double volume_tb, const RouteKind& route, const PricingCatalog& catalog) {
  if (!(volume_tb >= 0.0)) throw DomainError("egress volume must be non-negative");
  if (const auto* dedicated = std::get_if<Dedicated>(&route)) {
    if (dedicated->tier.unmetered) return 0.0;
    return volume_tb * evaluate(dedicated->tier.per_tb_usd, catalog.price_point);
  }
  return volume_tb * evaluate(catalog.default_egress_per_tb, catalog.price_point);
}

double link_fixed_cost(const LinkTier& tier, double hours, const PricingCatalog& catalog) {
  return link_fixed_cost(tier, hours, catalog, std::nullopt);
}

double link_fixed_cost(const LinkTier& tier, double hours, const PricingCatalog& catalog,
                       std::optional<double> hourly_override_usd) {
  if (!(hours >= 0.0)) throw DomainError("billed hours must be non-negative");
  const double hourly = hourly_override_usd ? *hourly_override_usd : evaluate(tier.hourly_usd, catalog.price_point);
  return hours * hourly;
}

double break_even_rate(const LinkTier& metered, const LinkTier& unmetered, const PricingCatalog& catalog) {
  if (metered.capacity_gbps != unmetered.capacity_gbps) {
    throw DomainError("break-even compares tiers of equal capacity");
  }
  const double per_tb = metered.unmetered ? 0.0 : evaluate(metered.per_tb_usd, catalog.price_point);
  if (per_tb <= 0.0) throw DomainError("break-even is undefined for a zero metered egress fee");
  const double hourly_gap =
      evaluate(unmetered.hourly_usd, catalog.price_point) - evaluate(metered.hourly_usd, catalog.price_point);
  return hourly_gap / per_tb;
}

double tier_total_cost(const LinkTier& tier, double hours, double volume_tb, const PricingCatalog& catalog) {
  return link_fixed_cost(tier, hours, catalog) + egress_cost(volume_tb, Dedicated{tier}, catalog);
}

std::int64_t to_cents(double usd) { return static_cast<std::int64_t>(std::llround(usd * 100.0)); }

}  // namespace burst
