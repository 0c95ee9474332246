#include "burst/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "burst/error.hpp"
#include "burst/units.hpp"
#include "burst/workload.hpp"

namespace burst {

namespace {

constexpr double kCostTolerance = 1e-9;
constexpr double kCoverageTolerance = 1e-9;

struct Unit {
  std::size_t slot = 0;
  std::size_t tier_entry = 0;
  std::string id;
  LinkTier tier;
};

struct Selection {
  std::vector<std::size_t> units;  // indices into the candidate list, ascending
  double capacity = 0.0;
  double cost = 0.0;
};

class RegionSolver {
 public:
  RegionSolver(std::vector<Unit> units, double target_gbps, double duration_h, double volume_tb,
               const PricingCatalog& catalog)
      : units_(std::move(units)), target_(target_gbps), duration_h_(duration_h), volume_tb_(volume_tb),
        catalog_(catalog) {}

  Selection evaluate(std::vector<std::size_t> picked) const {
    std::sort(picked.begin(), picked.end());
    Selection s;
    std::vector<LinkTier> tiers;
    for (const auto u : picked) {
      s.capacity += units_[u].tier.capacity_gbps;
      tiers.push_back(units_[u].tier);
    }
    s.cost = portfolio_cost(tiers, duration_h_, volume_tb_, catalog_);
    s.units = std::move(picked);
    return s;
  }

  bool feasible(const Selection& s) const { return s.capacity >= target_ - kCoverageTolerance; }

  // Cheapest first, then fewer links, then lexicographically smaller unit ids.
  bool better(const Selection& a, const Selection& b) const {
    if (a.cost < b.cost - kCostTolerance) return true;
    if (b.cost < a.cost - kCostTolerance) return false;
    if (a.units.size() != b.units.size()) return a.units.size() < b.units.size();
    return std::lexicographical_compare(a.units.begin(), a.units.end(), b.units.begin(), b.units.end(),
                                        [&](std::size_t x, std::size_t y) { return units_[x].id < units_[y].id; });
  }

  Selection exhaustive() const {
    const std::size_t n = units_.size();
    std::optional<Selection> best;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
      double capacity = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask >> i & 1U) capacity += units_[i].tier.capacity_gbps;
      }
      if (capacity < target_ - kCoverageTolerance) continue;
      std::vector<std::size_t> picked;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask >> i & 1U) picked.push_back(i);
      }
      auto candidate = evaluate(std::move(picked));
      if (!best || better(candidate, *best)) best = std::move(candidate);
    }
    return *best;
  }

  // Adds the unit with the most capacity per incremental dollar until covered, then improves the
  // result with drop and swap moves until neither lowers the cost.
  Selection greedy() const {
    Selection current = evaluate({});
    std::vector<bool> in(units_.size(), false);
    while (!feasible(current)) {
      std::optional<std::size_t> pick;
      double best_ratio = -1.0;
      for (std::size_t u = 0; u < units_.size(); ++u) {
        if (in[u]) continue;
        auto with = current.units;
        with.push_back(u);
        const double delta = evaluate(with).cost - current.cost;
        const double ratio = delta <= kCostTolerance ? std::numeric_limits<double>::infinity()
                                                     : units_[u].tier.capacity_gbps / delta;
        if (!pick || ratio > best_ratio) {
          pick = u;
          best_ratio = ratio;
        }
      }
      in[*pick] = true;
      auto with = current.units;
      with.push_back(*pick);
      current = evaluate(std::move(with));
    }

    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t i = 0; i < current.units.size() && !improved; ++i) {
        auto without = current.units;
        without.erase(without.begin() + static_cast<std::ptrdiff_t>(i));
        auto candidate = evaluate(std::move(without));
        if (feasible(candidate) && better(candidate, current)) {
          in[current.units[i]] = false;
          current = std::move(candidate);
          improved = true;
        }
      }
      for (std::size_t i = 0; i < current.units.size() && !improved; ++i) {
        for (std::size_t v = 0; v < units_.size() && !improved; ++v) {
          if (in[v]) continue;
          auto swapped = current.units;
          swapped[i] = v;
          auto candidate = evaluate(std::move(swapped));
          if (feasible(candidate) && candidate.cost < current.cost - kCostTolerance) {
            in[current.units[i]] = false;
            in[v] = true;
            current = std::move(candidate);
            improved = true;
          }
        }
      }
    }
    return current;
  }

  Selection solve(std::size_t exhaustive_limit) const {
    std::vector<std::size_t> all(units_.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    auto everything = evaluate(all);
    if (!feasible(everything)) return everything;
    return units_.size() <= exhaustive_limit ? exhaustive() : greedy();
  }

  const std::vector<Unit>& units() const { return units_; }

 private:
  std::vector<Unit> units_;
  double target_;
  double duration_h_;
  double volume_tb_;
  const PricingCatalog& catalog_;
};

std::string unit_id(const PeeringSlot& slot, const SlotTier& tier, int ordinal) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "|%02d|%c|%03d", tier.capacity_gbps, tier.unmetered ? 'u' : 'm', ordinal);
  return slot.id() + buf;
}

}  // namespace

std::size_t Portfolio::link_count() const {
  std::size_t n = 0;
  for (const auto& r : regions) n += r.links.size();
  return n;
}

bool Portfolio::any_shortfall() const {
  return std::any_of(regions.begin(), regions.end(), [](const RegionPlan& r) { return r.shortfall; });
}

bool Portfolio::any_error() const {
  return std::any_of(regions.begin(), regions.end(), [](const RegionPlan& r) { return r.error.has_value(); });
}

double portfolio_cost(std::span<const LinkTier> tiers, double duration_h, double volume_tb,
                      const PricingCatalog& catalog) {
  double total_capacity = 0.0;
  for (const auto& tier : tiers) total_capacity += tier.capacity_gbps;
  double cost = 0.0;
  for (const auto& tier : tiers) {
    const double share = volume_tb * tier.capacity_gbps / total_capacity;
    cost += link_fixed_cost(tier, duration_h, catalog) + egress_cost(share, Dedicated{tier}, catalog);
  }
  return cost;
}

Portfolio plan_portfolio(const DemandForecast& forecast, const std::vector<PeeringSlot>& slots,
                         const PlanOptions& options, const PricingCatalog& catalog) {
  if (!(options.coverage_factor > 0.0)) throw DomainError("coverage_factor must be > 0");
  if (!(options.duration_h >= 0.0)) throw DomainError("planning duration must be >= 0");
  for (const auto& slot : slots) {
    for (const auto& tier : slot.tiers) {
      if (!is_reservable_capacity(tier.capacity_gbps) || tier.count < 0) {
        throw DomainError("slot " + slot.id() + " has an invalid tier entry");
      }
    }
  }

  std::vector<std::vector<int>> remaining(slots.size());
  for (std::size_t s = 0; s < slots.size(); ++s) {
    for (const auto& tier : slots[s].tiers) remaining[s].push_back(tier.count);
  }

  Portfolio portfolio;
  for (const auto& demand : forecast.regions) {
    RegionPlan plan;
    plan.provider = demand.provider;
    plan.region = demand.region;
    plan.site = demand.site;
    if (demand.pflops < 0.0) throw DomainError("forecast for " + plan.key() + " is negative");
    plan.demand_gbps = mean_egress_rate_gbps(demand.pflops, forecast.egress_mb_per_tflop_hour);
    plan.target_gbps = options.coverage_factor * plan.demand_gbps;
    plan.expected_volume_tb =
        demand.expected_volume_tb.value_or(gbps_to_tb_per_hour(plan.demand_gbps) * options.duration_h);

    std::vector<Unit> units;
    bool served = false;
    for (std::size_t s = 0; s < slots.size(); ++s) {
      const auto& slot = slots[s];
      if (slot.provider != demand.provider || slot.region != demand.region) continue;
      served = true;
      for (std::size_t t = 0; t < slot.tiers.size(); ++t) {
        const auto& st = slot.tiers[t];
        const auto& tier = catalog.find_tier(st.capacity_gbps, st.unmetered);
        const int used = st.count - remaining[s][t];
        for (int k = 0; k < remaining[s][t]; ++k) units.push_back({s, t, unit_id(slot, st, used + k), tier});
      }
    }
    std::sort(units.begin(), units.end(), [](const Unit& a, const Unit& b) { return a.id < b.id; });

    if (!served && plan.target_gbps > 0.0) {
      plan.error = "no peering slot serves " + demand.provider + " region '" + demand.region + "'";
      portfolio.regions.push_back(std::move(plan));
      continue;
    }

    const RegionSolver solver(std::move(units), plan.target_gbps, options.duration_h, plan.expected_volume_tb,
                              catalog);
    const auto chosen = solver.solve(options.exhaustive_limit);
    plan.shortfall = !solver.feasible(chosen);
    plan.coverage_gbps = chosen.capacity;
    plan.cost_usd = chosen.cost;

    std::vector<double> capacities;
    for (const auto u : chosen.units) {
      const auto& unit = solver.units()[u];
      --remaining[unit.slot][unit.tier_entry];
      const auto& slot = slots[unit.slot];
      plan.links.push_back({slot.id(), slot.provider, slot.peering_location, slot.region, demand.site, unit.tier, 0});
      capacities.push_back(unit.tier.capacity_gbps);
    }
    if (demand.instances && *demand.instances > 0 && !plan.links.empty()) {
      const auto split = partition_compute(*demand.instances, capacities);
      for (std::size_t i = 0; i < split.size(); ++i) plan.links[i].instances = split[i];
    }
    portfolio.cost_usd += plan.cost_usd;
    portfolio.regions.push_back(std::move(plan));
  }
  return portfolio;
}

std::vector<int> partition_compute(int fleet, std::span<const double> link_capacities_gbps) {
  if (fleet < 0) throw DomainError("fleet size must be >= 0");
  std::vector<int> counts(link_capacities_gbps.size(), 0);
  if (fleet == 0) return counts;
  double total = 0.0;
  for (const double c : link_capacities_gbps) total += c;
  if (link_capacities_gbps.empty() || !(total > 0.0)) {
    throw DomainError("cannot place " + std::to_string(fleet) + " instances on a region with no link capacity");
  }

  std::vector<double> remainder(counts.size());
  int assigned = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double quota = fleet * link_capacities_gbps[i] / total;
    counts[i] = static_cast<int>(std::floor(quota));
    remainder[i] = quota - counts[i];
    assigned += counts[i];
  }
  std::vector<std::size_t> order(counts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < fleet; ++k, ++assigned) ++counts[order[k % order.size()]];
  return counts;
}

nlohmann::json to_json(const Portfolio& portfolio) {
  nlohmann::json links = nlohmann::json::array();
  nlohmann::json coverage = nlohmann::json::object();
  nlohmann::json shortfall = nlohmann::json::object();
  nlohmann::json errors = nlohmann::json::array();
  nlohmann::json regions = nlohmann::json::array();
  std::map<std::string, int> per_region_seq;
  for (const auto& r : portfolio.regions) {
    coverage[r.key()] = r.coverage_gbps;
    shortfall[r.key()] = r.shortfall;
    if (r.error) errors.push_back(*r.error);
    nlohmann::json region = {
        {"provider", r.provider},          {"region", r.region},
        {"site", r.site},                  {"demand_gbps", std::round(r.demand_gbps * 1e6) / 1e6},
        {"target_gbps", std::round(r.target_gbps * 1e6) / 1e6},
        {"coverage_gbps", r.coverage_gbps}, {"expected_volume_tb", std::round(r.expected_volume_tb * 1e6) / 1e6},
        {"cost_usd", std::round(r.cost_usd * 100.0) / 100.0}, {"shortfall", r.shortfall},
    };
    if (r.error) region["error"] = *r.error;
    regions.push_back(std::move(region));
    for (const auto& link : r.links) {
      const int seq = ++per_region_seq[r.key()];
      links.push_back({
          {"id", r.provider + ":" + r.region + ":" + r.site + ":" + std::to_string(seq)},
          {"provider", link.provider},
          {"peering", link.peering_location},
          {"region", link.region},
          {"site", link.site},
          {"capacity_gbps", link.tier.capacity_gbps},
          {"unmetered", link.tier.unmetered},
          {"instances", link.instances},
      });
    }
  }
  return {
      {"links", links},
      {"coverage_gbps", coverage},
      {"shortfall", shortfall},
      {"errors", errors},
      {"cost_usd", std::round(portfolio.cost_usd * 100.0) / 100.0},
      {"regions", regions},
  };
}

}  // namespace burst
