#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <numeric>
#include <random>

#include "burst/error.hpp"
#include "burst/planner.hpp"

namespace burst {
namespace {

const PricingCatalog kCatalog = PricingCatalog::list_prices_2020();

struct OracleUnit {
  int capacity;
  bool unmetered;
};

// Independent cost: fee at the price point times hours, plus metered TB split by capacity.
double oracle_cost(const std::vector<OracleUnit>& units, double hours, double volume_tb, const PricingCatalog& catalog) {
  double total_capacity = 0.0;
  for (const auto& u : units) total_capacity += u.capacity;
  double cost = 0.0;
  for (const auto& u : units) {
    const auto& tier = catalog.find_tier(u.capacity, u.unmetered);
    const double p = catalog.price_point;
    cost += (tier.hourly_usd.low + p * (tier.hourly_usd.high - tier.hourly_usd.low)) * hours;
    if (!u.unmetered) {
      cost += (tier.per_tb_usd.low + p * (tier.per_tb_usd.high - tier.per_tb_usd.low)) * volume_tb * u.capacity /
              total_capacity;
    }
  }
  return cost;
}

struct OracleResult {
  bool feasible;
  double cost;
};

OracleResult brute_force(const std::vector<OracleUnit>& units, double target, double hours, double volume_tb,
                         const PricingCatalog& catalog) {
  std::optional<double> best;
  for (std::uint32_t mask = 0; mask < (1U << units.size()); ++mask) {
    std::vector<OracleUnit> picked;
    double capacity = 0.0;
    for (std::size_t i = 0; i < units.size(); ++i) {
      if (mask >> i & 1U) {
        picked.push_back(units[i]);
        capacity += units[i].capacity;
      }
    }
    if (capacity < target - 1e-9) continue;
    const double cost = oracle_cost(picked, hours, volume_tb, catalog);
    if (!best || cost < *best) best = cost;
  }
  if (best) return {true, *best};
  return {false, oracle_cost(units, hours, volume_tb, catalog)};
}

// PFLOPS whose mean egress at 500 MB/TFLOP-h is `gbps`: 1 PFLOPS yields 500 GB/h = 10/9 Gbps.
double pflops_for(double gbps) { return gbps * 0.9; }

DemandForecast one_region(double demand_gbps, std::optional<double> volume_tb = std::nullopt) {
  DemandForecast f;
  f.regions.push_back({"AWS", "us-east-1", "UW", pflops_for(demand_gbps), volume_tb, std::nullopt});
  return f;
}

PlanOptions options(double hours, double factor = 1.5) {
  PlanOptions o;
  o.duration_h = hours;
  o.coverage_factor = factor;
  return o;
}

std::vector<PeeringSlot> example_slots() {
  return {{"AWS", "Ashburn", "us-east-1", {{10, 1, false}, {5, 2, false}, {2, 2, false}}}};
}

TEST(PortfolioCost, Examples) {
  EXPECT_DOUBLE_EQ(portfolio_cost({}, 10.0, 0.0, kCatalog), 0.0);
  const std::vector<LinkTier> one{kCatalog.find_tier(5, false)};
  EXPECT_NEAR(portfolio_cost(one, 10.0, 5.0, kCatalog), 133.70, 1e-9);
}

TEST(PlanPortfolio, CoverageExampleMatchesEnumeration) {
  const auto portfolio = plan_portfolio(one_region(100.0 / 9.0, 5.0), example_slots(), options(10.0), kCatalog);
  ASSERT_EQ(portfolio.regions.size(), 1u);
  const auto& r = portfolio.regions[0];
  EXPECT_NEAR(r.target_gbps, 16.6667, 1e-4);
  EXPECT_FALSE(r.shortfall);
  EXPECT_GE(r.coverage_gbps, r.target_gbps);
  const std::vector<OracleUnit> units{{10, false}, {5, false}, {5, false}, {2, false}, {2, false}};
  const auto want = brute_force(units, r.target_gbps, 10.0, 5.0, kCatalog);
  EXPECT_NEAR(r.cost_usd, want.cost, 1e-9);
  // {10, 5, 2} is the cheapest cover at midpoint prices.
  std::vector<int> caps;
  for (const auto& l : r.links) caps.push_back(l.tier.capacity_gbps);
  std::sort(caps.begin(), caps.end());
  EXPECT_EQ(caps, (std::vector<int>{2, 5, 10}));
  EXPECT_DOUBLE_EQ(r.coverage_gbps, 17.0);
}

TEST(PlanPortfolio, ZeroDemandIsEmpty) {
  const auto portfolio = plan_portfolio(one_region(0.0), example_slots(), options(10.0), kCatalog);
  EXPECT_EQ(portfolio.link_count(), 0u);
  EXPECT_DOUBLE_EQ(portfolio.cost_usd, 0.0);
  EXPECT_FALSE(portfolio.any_shortfall());
}

TEST(PlanPortfolio, ShortfallTakesEverything) {
  const std::vector<PeeringSlot> slots{{"AWS", "Ashburn", "us-east-1", {{10, 1, false}, {2, 2, false}}}};
  const auto portfolio = plan_portfolio(one_region(20.0 / 1.5), slots, options(10.0), kCatalog);
  const auto& r = portfolio.regions[0];
  EXPECT_TRUE(r.shortfall);
  EXPECT_EQ(r.links.size(), 3u);
  EXPECT_DOUBLE_EQ(r.coverage_gbps, 14.0);
  EXPECT_TRUE(portfolio.any_shortfall());
  EXPECT_FALSE(portfolio.any_error());
}

TEST(PlanPortfolio, RegionWithoutSlotsIsAnError) {
  DemandForecast f = one_region(5.0);
  f.regions[0].region = "ap-south-1";
  const auto portfolio = plan_portfolio(f, example_slots(), options(10.0), kCatalog);
  ASSERT_TRUE(portfolio.regions[0].error.has_value());
  EXPECT_NE(portfolio.regions[0].error->find("ap-south-1"), std::string::npos);
  EXPECT_TRUE(portfolio.any_error());
}

TEST(PlanPortfolio, RejectsBadOptions) {
  EXPECT_THROW(plan_portfolio(one_region(1.0), example_slots(), options(10.0, 0.0), kCatalog), DomainError);
  EXPECT_THROW(plan_portfolio(one_region(1.0), example_slots(), options(-1.0), kCatalog), DomainError);
  auto slots = example_slots();
  slots[0].tiers.push_back({3, 1, false});
  EXPECT_THROW(plan_portfolio(one_region(1.0), slots, options(10.0), kCatalog), DomainError);
}

TEST(PlanPortfolio, EntriesConsumeSharedSlots) {
  DemandForecast f = one_region(6.0);
  f.regions.push_back({"AWS", "us-east-1", "UCSD", pflops_for(6.0), std::nullopt, std::nullopt});
  const std::vector<PeeringSlot> slots{{"AWS", "Ashburn", "us-east-1", {{10, 1, false}}}};
  const auto portfolio = plan_portfolio(f, slots, options(10.0), kCatalog);
  EXPECT_EQ(portfolio.regions[0].links.size(), 1u);
  EXPECT_TRUE(portfolio.regions[1].links.empty());
  EXPECT_TRUE(portfolio.regions[1].shortfall);
}

TEST(PlanPortfolio, UnmeteredWinsAtHighVolume) {
  const std::vector<PeeringSlot> slots{{"AWS", "Ashburn", "us-east-1", {{5, 1, false}, {5, 1, true}}}};
  // 3 TB/h sustained is above the 1.461 TB/h break-even.
  const auto high = plan_portfolio(one_region(2.0, 30.0), slots, options(10.0), kCatalog);
  ASSERT_EQ(high.regions[0].links.size(), 1u);
  EXPECT_TRUE(high.regions[0].links[0].tier.unmetered);
  const auto low = plan_portfolio(one_region(2.0, 5.0), slots, options(10.0), kCatalog);
  ASSERT_EQ(low.regions[0].links.size(), 1u);
  EXPECT_FALSE(low.regions[0].links[0].tier.unmetered);
}

TEST(PlanPortfolio, OracleEquivalenceOnRandomInstances) {
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<int> tier_pick(0, 3), count(0, 3);
  std::uniform_real_distribution<double> demand(0.0, 30.0), hours(0.0, 40.0), volume(0.0, 200.0), point(0.0, 1.0);
  const auto start = std::chrono::steady_clock::now();
  for (int trial = 0; trial < 200; ++trial) {
    PricingCatalog catalog = kCatalog;
    catalog.price_point = point(rng);
    std::vector<SlotTier> tiers;
    std::vector<OracleUnit> units;
    for (int k = 0; k < 3; ++k) {
      const int pick = tier_pick(rng);
      const SlotTier t = pick == 3 ? SlotTier{5, count(rng), true} : SlotTier{std::array{2, 5, 10}[pick], count(rng), false};
      if (units.size() + static_cast<std::size_t>(t.count) > 12) continue;
      tiers.push_back(t);
      for (int c = 0; c < t.count; ++c) units.push_back({t.capacity_gbps, t.unmetered});
    }
    const std::vector<PeeringSlot> slots{{"GCP", "Chicago", "us-central1", tiers}};
    DemandForecast f;
    f.regions.push_back({"GCP", "us-central1", "UW", pflops_for(demand(rng)), volume(rng), std::nullopt});
    const double h = hours(rng);
    const auto portfolio = plan_portfolio(f, slots, options(h), catalog);
    const auto& r = portfolio.regions[0];
    const auto want = brute_force(units, r.target_gbps, h, *f.regions[0].expected_volume_tb, catalog);
    EXPECT_NEAR(r.cost_usd, want.cost, 1e-9) << "trial " << trial;
    EXPECT_EQ(r.shortfall, !want.feasible) << "trial " << trial;
  }
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 10.0);
}

// Above the enumeration limit the greedy path still covers the target and lands near the optimum.
TEST(PlanPortfolio, GreedyPathCoversAndIsNearOptimal) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> demand(1.0, 30.0), volume(0.0, 200.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::vector<PeeringSlot> slots{{"GCP", "Chicago", "us-central1", {{10, 2, false}, {5, 4, false}, {2, 6, false}}}};
    const std::vector<OracleUnit> units{{10, false}, {10, false}, {5, false}, {5, false}, {5, false}, {5, false},
                                        {2, false},  {2, false},  {2, false}, {2, false}, {2, false}, {2, false}};
    DemandForecast f;
    f.regions.push_back({"GCP", "us-central1", "UW", pflops_for(demand(rng)), volume(rng), std::nullopt});
    PlanOptions o = options(24.0);
    o.exhaustive_limit = 4;
    const auto r = plan_portfolio(f, slots, o, kCatalog).regions[0];
    const auto want = brute_force(units, r.target_gbps, 24.0, *f.regions[0].expected_volume_tb, kCatalog);
    EXPECT_EQ(r.shortfall, !want.feasible);
    if (!r.shortfall) EXPECT_GE(r.coverage_gbps, r.target_gbps - 1e-9);
    EXPECT_GE(r.cost_usd, want.cost - 1e-9);
    EXPECT_LE(r.cost_usd, want.cost * 1.10) << "trial " << trial;
  }
}

TEST(PlanPortfolio, CostMonotoneInCoverageFactor) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> demand(0.0, 15.0);
  const auto slots = example_slots();
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = one_region(demand(rng), 20.0);
    double last = 0.0;
    for (double factor = 0.5; factor <= 3.0; factor += 0.25) {
      const auto p = plan_portfolio(f, slots, options(24.0, factor), kCatalog);
      EXPECT_GE(p.cost_usd, last - 1e-9);
      last = p.cost_usd;
    }
  }
}

TEST(PlanPortfolio, DeterministicAndFleetPartitioned) {
  DemandForecast f = one_region(100.0 / 9.0, 5.0);
  f.regions[0].instances = 500;
  const auto a = plan_portfolio(f, example_slots(), options(10.0), kCatalog);
  const auto b = plan_portfolio(f, example_slots(), options(10.0), kCatalog);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  int placed = 0;
  for (const auto& l : a.regions[0].links) placed += l.instances;
  EXPECT_EQ(placed, 500);
  const auto j = to_json(a);
  EXPECT_EQ(j.at("links").size(), 3u);
  EXPECT_TRUE(j.contains("coverage_gbps"));
  EXPECT_TRUE(j.contains("shortfall"));
  EXPECT_TRUE(j.contains("cost_usd"));
}

TEST(PartitionCompute, Examples) {
  EXPECT_EQ(partition_compute(10, std::vector<double>{5, 5}), (std::vector<int>{5, 5}));
  EXPECT_EQ(partition_compute(10, std::vector<double>{10, 5, 2}), (std::vector<int>{6, 3, 1}));
  EXPECT_EQ(partition_compute(0, std::vector<double>{10, 5, 2}), (std::vector<int>{0, 0, 0}));
  EXPECT_THROW(partition_compute(3, std::vector<double>{}), DomainError);
  EXPECT_THROW(partition_compute(-1, std::vector<double>{5}), DomainError);
}

TEST(PartitionCompute, ConservesFleetAndStaysWithinOneOfQuota) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> fleet(0, 5000), links(1, 8), cap(0, 2);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> caps(links(rng));
    for (auto& c : caps) c = std::array{2.0, 5.0, 10.0}[cap(rng)];
    const int n = fleet(rng);
    const auto split = partition_compute(n, caps);
    EXPECT_EQ(std::accumulate(split.begin(), split.end(), 0), n);
    const double total = std::accumulate(caps.begin(), caps.end(), 0.0);
    for (std::size_t i = 0; i < caps.size(); ++i) EXPECT_LT(std::abs(split[i] - n * caps[i] / total), 1.0);
  }
}

}  // namespace
}  // namespace burst
