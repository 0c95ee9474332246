#include "burst/scenario.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "burst/error.hpp"
#include "burst/lifecycle.hpp"
#include "burst/units.hpp"

namespace burst {

namespace {

using nlohmann::json;

// Typed access to a JSON node that reports the key path on failure.
class Node {
 public:
  Node(const json& value, std::string path) : value_(value), path_(std::move(path)) {}

  bool has(const char* key) const { return value_.contains(key) && !value_.at(key).is_null(); }

  Node at(const char* key) const {
    if (!value_.is_object()) fail("expected an object");
    if (!has(key)) throw ParseError(child_path(key) + ": missing required key");
    return Node(value_.at(key), child_path(key));
  }

  Node at(std::size_t i) const { return Node(value_.at(i), path_ + "[" + std::to_string(i) + "]"); }

  std::size_t size() const {
    if (!value_.is_array()) fail("expected an array");
    return value_.size();
  }

  double number() const {
    if (!value_.is_number()) fail("expected a number");
    return value_.get<double>();
  }

  int integer() const {
    if (!value_.is_number_integer()) fail("expected an integer");
    return value_.get<int>();
  }

  std::uint64_t unsigned_integer() const {
    if (!value_.is_number_unsigned()) fail("expected a non-negative integer");
    return value_.get<std::uint64_t>();
  }

  bool boolean() const {
    if (!value_.is_boolean()) fail("expected true or false");
    return value_.get<bool>();
  }

  std::string string() const {
    if (!value_.is_string()) fail("expected a string");
    return value_.get<std::string>();
  }

  double number(const char* key, double fallback) const { return has(key) ? at(key).number() : fallback; }
  std::optional<double> optional_number(const char* key) const {
    return has(key) ? std::optional<double>(at(key).number()) : std::nullopt;
  }
  std::optional<std::string> optional_string(const char* key) const {
    return has(key) ? std::optional<std::string>(at(key).string()) : std::nullopt;
  }
  bool boolean(const char* key, bool fallback) const { return has(key) ? at(key).boolean() : fallback; }

  const json& raw() const { return value_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_ + ": " + what); }

 private:
  std::string child_path(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& value_;
  std::string path_;
};

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

PriceBand band(const Node& node, const char* low, const char* high) {
  return {node.at(low).number(), node.at(high).number()};
}

GpuCatalog parse_gpus(const Node& node) {
  std::vector<GpuClass> gpus;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const auto g = node.at(i);
    gpus.push_back({g.at("name").string(), g.at("tflops").number(), g.optional_number("mean_runtime_s"),
                    g.optional_number("cost_per_job_usd")});
  }
  return GpuCatalog(std::move(gpus));
}

JobProfile parse_profile(const Node& node) {
  JobProfile p;
  p.compute_tflop_hours = node.number("compute_tflop_hours", p.compute_tflop_hours);
  p.egress_mb_per_tflop_hour = node.number("egress_mb_per_tflop_hour", p.egress_mb_per_tflop_hour);
  p.runtime_cv = node.number("runtime_cv", p.runtime_cv);
  p.size_cv = node.number("size_cv", p.size_cv);
  return p;
}

RampSchedule parse_ramp(const Node& node) {
  RampSchedule ramp;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const auto seg = node.at(i);
    RampSegment s;
    s.t_start_s = seg.at("t_start_s").number();
    s.ramp_s = seg.number("ramp_s", 0.0);
    if (seg.has("counts")) {
      const auto counts = seg.at("counts");
      if (!counts.raw().is_object()) counts.fail("expected an object keyed by link id");
      for (const auto& [link, per_gpu] : counts.raw().items()) {
        const Node link_node(per_gpu, counts.path() + "." + link);
        if (!per_gpu.is_object()) link_node.fail("expected an object keyed by GPU name");
        for (const auto& [gpu, n] : per_gpu.items()) {
          s.counts[{link, gpu}] = Node(n, link_node.path() + "." + gpu).integer();
        }
      }
    }
    ramp.segments.push_back(std::move(s));
  }
  return ramp;
}

std::vector<StorageSite> parse_sites(const Node& node) {
  std::vector<StorageSite> sites;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const auto s = node.at(i);
    sites.push_back({s.at("name").string(), s.optional_number("cap_gbps"), s.number("external_gbps", 0.0)});
  }
  return sites;
}

std::vector<DedicatedLink> parse_links(const Node& node, const PricingCatalog& pricing) {
  std::vector<DedicatedLink> links;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const auto l = node.at(i);
    DedicatedLink link;
    link.id = l.at("id").string();
    link.provider = l.at("provider").string();
    link.peering_location = l.at("peering").string();
    link.region = l.at("region").string();
    link.site = l.at("site").string();
    const auto capacity = l.at("capacity_gbps");
    const bool unmetered = l.boolean("unmetered", false);
    try {
      link.tier = pricing.find_tier(capacity.integer(), unmetered);
    } catch (const LookupError& e) {
      capacity.fail(e.what());
    }
    link.hourly_fee_override_usd = l.optional_number("hourly_usd");
    link.billed_hours = l.optional_number("billed_hours");
    link.vpn_id = l.optional_string("vpn_id");
    link.ip_range = l.optional_string("ip_range");
    links.push_back(std::move(link));
  }
  return links;
}

PlannerInputs parse_planner(const Node& root, const JobProfile& profile) {
  PlannerInputs inputs;
  inputs.forecast.egress_mb_per_tflop_hour = profile.egress_mb_per_tflop_hour;
  const auto slots = root.at("slots");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto s = slots.at(i);
    PeeringSlot slot{s.at("provider").string(), s.at("peering").string(), s.at("region").string(), {}};
    const auto tiers = s.at("tiers");
    const auto counts = s.at("counts");
    if (tiers.size() != counts.size()) s.fail("tiers and counts must have the same length");
    const bool unmetered = s.boolean("unmetered", false);
    for (std::size_t t = 0; t < tiers.size(); ++t) {
      slot.tiers.push_back({tiers.at(t).integer(), counts.at(t).integer(), unmetered});
    }
    inputs.slots.push_back(std::move(slot));
  }
  if (root.has("forecast")) {
    const auto forecast = root.at("forecast");
    for (std::size_t i = 0; i < forecast.size(); ++i) {
      const auto f = forecast.at(i);
      RegionDemand d;
      d.provider = f.at("provider").string();
      d.region = f.at("region").string();
      d.site = f.at("site").string();
      d.pflops = f.at("pflops").number();
      d.expected_volume_tb = f.optional_number("expected_tb");
      if (f.has("instances")) d.instances = f.at("instances").integer();
      inputs.forecast.regions.push_back(std::move(d));
    }
  }
  if (root.has("plan")) {
    const auto plan = root.at("plan");
    inputs.options.coverage_factor = plan.number("coverage_factor", inputs.options.coverage_factor);
    inputs.options.duration_h = plan.number("duration_h", inputs.options.duration_h);
  }
  return inputs;
}

}  // namespace

PricingCatalog parse_pricing(const json& doc) {
  const Node root(doc, "");
  PricingCatalog catalog;
  catalog.default_egress_per_tb = band(root, "default_egress_per_tb_low", "default_egress_per_tb_high");
  const auto tiers = root.at("tiers");
  for (std::size_t i = 0; i < tiers.size(); ++i) {
    const auto t = tiers.at(i);
    LinkTier tier;
    tier.capacity_gbps = t.at("capacity_gbps").integer();
    tier.hourly_usd = band(t, "hourly_low", "hourly_high");
    tier.unmetered = t.boolean("unmetered", false);
    tier.per_tb_usd = tier.unmetered && !t.has("per_tb_low") ? PriceBand{} : band(t, "per_tb_low", "per_tb_high");
    catalog.tiers.push_back(tier);
  }
  catalog.price_point = root.number("price_point", 0.5);
  try {
    catalog.validate();
  } catch (const DomainError& e) {
    throw ValidationError({std::string("pricing: ") + e.what()});
  }
  return catalog;
}

PricingCatalog load_pricing_catalog(const std::filesystem::path& path) {
  try {
    return parse_pricing(read_json(path));
  } catch (const ParseError& e) {
    const std::string what = e.what();
    if (what.rfind(path.string(), 0) == 0) throw;
    throw ParseError(path.string() + ": " + what);
  }
}

Scenario parse_scenario(const json& doc, const std::filesystem::path& base_dir) {
  const Node root(doc, "");
  if (!doc.is_object()) root.fail("scenario must be a JSON object");
  Scenario sc;
  sc.name = root.has("name") ? root.at("name").string() : "";

  if (root.has("pricing")) {
    const auto pricing = root.at("pricing");
    if (pricing.raw().is_string()) {
      sc.pricing = load_pricing_catalog(base_dir / pricing.string());
    } else {
      sc.pricing = parse_pricing(pricing.raw());
    }
  }
  if (root.has("price_point")) sc.pricing.price_point = root.at("price_point").number();
  if (root.has("gpus")) sc.gpus = parse_gpus(root.at("gpus"));
  if (root.has("profile")) sc.profile = parse_profile(root.at("profile"));
  if (root.has("ramp")) sc.ramp = parse_ramp(root.at("ramp"));
  if (root.has("sites")) sc.sites = parse_sites(root.at("sites"));
  if (root.has("links")) sc.links = parse_links(root.at("links"), sc.pricing);
  if (root.has("sim")) {
    const auto sim = root.at("sim");
    sc.sim.timeout_s = sim.number("timeout_s", sc.sim.timeout_s);
    sc.sim.sample_s = sim.number("sample_s", sc.sim.sample_s);
    if (sim.has("seed")) sc.sim.seed = sim.at("seed").unsigned_integer();
    sc.sim.per_flow_cap_gbps = sim.optional_number("per_flow_cap_gbps");
    sc.transfer_bin_s = sim.number("bin_s", sc.transfer_bin_s);
  }
  sc.default_billed_hours = root.optional_number("billed_hours");
  if (root.has("slots")) sc.planner = parse_planner(root, sc.profile);
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  const auto doc = read_json(path);
  try {
    auto sc = parse_scenario(doc, path.parent_path());
    sc.source = path;
    return sc;
  } catch (const ParseError& e) {
    const std::string what = e.what();
    if (what.find(".json:") != std::string::npos || what.find(path.string()) == 0) throw;
    throw ParseError(path.string() + ": " + what);
  }
}

std::vector<double> Scenario::billed_hours(double simulated_end_s) const {
  const double span_h = std::ceil(simulated_end_s / kSecondsPerHour);
  std::vector<double> hours;
  hours.reserve(links.size());
  for (const auto& link : links) hours.push_back(link.billed_hours.value_or(default_billed_hours.value_or(span_h)));
  return hours;
}

void validate_for_simulation(const Scenario& scenario) {
  std::vector<std::string> violations;
  auto absorb = [&](auto&& check) {
    try {
      check();
    } catch (const ValidationError& e) {
      violations.insert(violations.end(), e.violations().begin(), e.violations().end());
    } catch (const DomainError& e) {
      violations.emplace_back(e.what());
    }
  };

  if (scenario.links.empty()) violations.emplace_back("scenario has no link portfolio (links[])");
  absorb([&] { scenario.pricing.validate(); });
  absorb([&] { scenario.profile.validate(); });

  std::vector<std::string> link_ids;
  for (const auto& l : scenario.links) link_ids.push_back(l.id);
  absorb([&] { validate_ramp(scenario.ramp, scenario.gpus, link_ids); });

  SimInput shell;
  shell.sites = scenario.sites;
  shell.links = scenario.links;
  shell.config = scenario.sim;
  absorb([&] { validate(shell); });
  if (!(scenario.transfer_bin_s > 0.0)) violations.emplace_back("sim.bin_s must be > 0");
  if (scenario.default_billed_hours && *scenario.default_billed_hours < 0.0) {
    violations.emplace_back("billed_hours must be >= 0");
  }

  // Cost reports need a compute price for every GPU class that can run.
  std::set<std::string> used_gpus;
  for (const auto& seg : scenario.ramp.segments) {
    for (const auto& [key, count] : seg.counts) {
      if (count > 0) used_gpus.insert(key.gpu);
    }
  }
  for (const auto& name : used_gpus) {
    if (scenario.gpus.contains(name) && !scenario.gpus.find(name).compute_cost_per_job_usd) {
      violations.push_back("GPU '" + name + "' is provisioned but has no cost_per_job_usd");
    }
  }

  for (auto& v : check_portfolio_rules(scenario.links)) violations.push_back(std::move(v));
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

SimInput build_sim_input(const Scenario& scenario) {
  validate_for_simulation(scenario);
  SimInput input;
  input.sites = scenario.sites;
  input.links = scenario.links;
  input.config = scenario.sim;
  std::vector<std::string> link_ids;
  for (const auto& l : scenario.links) link_ids.push_back(l.id);
  std::mt19937_64 rng(scenario.sim.seed);
  input.workload = generate_workload(scenario.ramp, scenario.gpus, scenario.profile, link_ids, rng);
  return input;
}

}  // namespace burst
