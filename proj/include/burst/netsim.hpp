#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "burst/pricing.hpp"
#include "burst/workload.hpp"

namespace burst {

struct StorageSite {
  std::string name;
  std::optional<double> aggregate_cap_gbps;
  double external_load_gbps = 0.0;

  // Bandwidth left for simulated traffic; unbounded when no cap is configured.
  double headroom_gbps() const;
};

struct DedicatedLink {
  std::string id;
  std::string provider;
  std::string peering_location;
  std::string region;
  std::string site;
  LinkTier tier;
  std::optional<double> hourly_fee_override_usd;
  std::optional<double> billed_hours;
  std::optional<std::string> vpn_id;
  std::optional<std::string> ip_range;  // CIDR, checked for overlap against the rest of the portfolio

  double capacity_gbps() const { return static_cast<double>(tier.capacity_gbps); }
};

struct SimConfig {
  double timeout_s = 3600.0;
  double sample_s = 60.0;
  std::uint64_t seed = 1;
  std::optional<double> per_flow_cap_gbps;
};

struct SimInput {
  std::vector<StorageSite> sites;
  std::vector<DedicatedLink> links;
  Workload workload;
  SimConfig config;
};

// `count` flows, each able to use at most `demand`.
struct FlowGroup {
  double demand = 0.0;
  std::size_t count = 0;
};

// Max-min fair (water-filling) per-flow rate for each group sharing `capacity`. Groups whose demand
// is below the fair level keep their demand and the surplus goes to the rest.
std::vector<double> max_min_share(double capacity, std::span<const FlowGroup> groups);

// Per-transfer rate of `flows` equal transfers on one link: min(per_flow_cap, min(link, headroom) / n).
double fair_share(double link_capacity_gbps, std::size_t flows, std::optional<double> per_flow_cap_gbps,
                  double site_headroom_gbps);

// Per-flow rates (bytes/s) for every link given the number of active flows on each. Links are first
// shared among their own flows, then each capped site is shared max-min across all flows reaching it.
std::vector<double> allocate_rates(const std::vector<DedicatedLink>& links, const std::vector<StorageSite>& sites,
                                   std::span<const std::size_t> active_flows, std::optional<double> per_flow_cap_gbps);

struct LinkSample {
  double t_s = 0.0;
  std::size_t link = 0;          // index into SimTrace::link_ids
  double throughput_gbps = 0.0;  // mean over the preceding sample interval
  std::size_t active_transfers = 0;
};

struct JobOutcome {
  std::uint64_t job_id = 0;
  std::string gpu;
  std::size_t link = 0;
  double start_s = 0.0;
  double compute_s = 0.0;
  double transfer_start_s = 0.0;
  double transfer_s = 0.0;
  JobState outcome = JobState::Done;
  std::uint64_t bytes = 0;       // output size
  std::uint64_t bytes_sent = 0;  // equals bytes unless the transfer timed out
};

struct SimTrace {
  std::vector<std::string> link_ids;
  std::vector<std::string> link_sites;
  std::vector<double> link_capacity_gbps;
  std::vector<LinkSample> samples;
  std::vector<JobOutcome> outcomes;  // in order of transfer completion or failure
  std::size_t completed = 0;
  std::size_t failed = 0;
  std::size_t not_started = 0;          // jobs whose instance was retired before they could start
  double wasted_failed_compute_s = 0.0;  // compute lost to timed-out uploads
  double transfer_hold_s = 0.0;          // instance time spent waiting on uploads
  std::vector<std::uint64_t> delivered_bytes_by_link;
  std::vector<std::uint64_t> egress_bytes_by_link;  // delivered plus partial bytes of failed uploads
  double end_s = 0.0;

  std::uint64_t delivered_bytes() const;
  std::uint64_t egress_bytes() const;
};

// Throws ValidationError listing every problem with links, sites, jobs and parameters.
void validate(const SimInput& input);

SimTrace simulate(const SimInput& input);

struct TransferBin {
  double bin_start_s = 0.0;
  std::size_t count = 0;
  double mean_s = 0.0;
  double stddev_s = 0.0;
};

// Transfer durations binned by transfer start. Failed uploads count with their timeout duration.
// Empty bins are omitted. `link` restricts the statistics to one link.
std::vector<TransferBin> transfer_time_stats(const SimTrace& trace, double bin_width_s,
                                             std::optional<std::size_t> link = std::nullopt);

enum class GroupBy { Link, Site };

struct DeliveredPoint {
  double t_s = 0.0;
  std::string group;
  std::uint64_t cumulative_bytes = 0;
};

struct DeliveredVolume {
  std::map<std::string, std::uint64_t> totals;
  std::vector<DeliveredPoint> curve;  // one point per completed transfer, time ordered
};

DeliveredVolume delivered_volume(const SimTrace& trace, GroupBy group_by);

struct SiteSample {
  double t_s = 0.0;
  std::map<std::string, double> throughput_gbps;
};

// Per-site aggregate of the link samples.
std::vector<SiteSample> site_throughput(const SimTrace& trace);

double peak_site_throughput_gbps(const SimTrace& trace, const std::string& site);

}  // namespace burst
