#include "burst/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <unordered_map>

#include "burst/error.hpp"
#include "burst/units.hpp"

namespace burst {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double StorageSite::headroom_gbps() const {
  if (!aggregate_cap_gbps) return kInf;
  return std::max(0.0, *aggregate_cap_gbps - external_load_gbps);
}

std::uint64_t SimTrace::delivered_bytes() const {
  return std::accumulate(delivered_bytes_by_link.begin(), delivered_bytes_by_link.end(), std::uint64_t{0});
}

std::uint64_t SimTrace::egress_bytes() const {
  return std::accumulate(egress_bytes_by_link.begin(), egress_bytes_by_link.end(), std::uint64_t{0});
}

std::vector<double> max_min_share(double capacity, std::span<const FlowGroup> groups) {
  std::vector<double> rates(groups.size(), 0.0);
  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return groups[a].demand < groups[b].demand; });

  double remaining = std::max(0.0, capacity);
  std::size_t flows_left = 0;
  for (const auto& g : groups) flows_left += g.count;

  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& g = groups[order[i]];
    if (g.count == 0) continue;
    const double level = remaining / static_cast<double>(flows_left);
    if (g.demand <= level) {
      rates[order[i]] = std::max(0.0, g.demand);
      remaining -= rates[order[i]] * static_cast<double>(g.count);
      flows_left -= g.count;
    } else {
      for (std::size_t j = i; j < order.size(); ++j) rates[order[j]] = level;
      break;
    }
  }
  return rates;
}

double fair_share(double link_capacity_gbps, std::size_t flows, std::optional<double> per_flow_cap_gbps,
                  double site_headroom_gbps) {
  if (flows == 0) return 0.0;
  const double effective = std::min(link_capacity_gbps, site_headroom_gbps);
  const FlowGroup group{per_flow_cap_gbps.value_or(kInf), flows};
  return max_min_share(effective, std::span(&group, 1))[0];
}

std::vector<double> allocate_rates(const std::vector<DedicatedLink>& links, const std::vector<StorageSite>& sites,
                                   std::span<const std::size_t> active_flows, std::optional<double> per_flow_cap_gbps) {
  const double flow_cap = per_flow_cap_gbps ? gbps_to_bytes_per_s(*per_flow_cap_gbps) : kInf;
  std::vector<double> rates(links.size(), 0.0);
  for (std::size_t l = 0; l < links.size(); ++l) {
    if (active_flows[l] == 0) continue;
    const FlowGroup group{flow_cap, active_flows[l]};
    rates[l] = max_min_share(gbps_to_bytes_per_s(links[l].capacity_gbps()), std::span(&group, 1))[0];
  }

  for (const auto& site : sites) {
    const double headroom = site.headroom_gbps();
    if (!std::isfinite(headroom)) continue;
    std::vector<std::size_t> members;
    std::vector<FlowGroup> groups;
    for (std::size_t l = 0; l < links.size(); ++l) {
      if (links[l].site == site.name && active_flows[l] > 0) {
        members.push_back(l);
        groups.push_back({rates[l], active_flows[l]});
      }
    }
    if (members.empty()) continue;
    const auto shared = max_min_share(gbps_to_bytes_per_s(headroom), groups);
    for (std::size_t i = 0; i < members.size(); ++i) rates[members[i]] = shared[i];
  }
  return rates;
}

void validate(const SimInput& input) {
  std::vector<std::string> violations;
  std::set<std::string> site_names;
  for (std::size_t i = 0; i < input.sites.size(); ++i) {
    const auto& site = input.sites[i];
    const std::string where = "sites[" + std::to_string(i) + "]";
    if (!site_names.insert(site.name).second) violations.push_back(where + ": duplicate site '" + site.name + "'");
    if (site.aggregate_cap_gbps) {
      if (*site.aggregate_cap_gbps < 0.0) violations.push_back(where + ".cap_gbps must be >= 0");
      if (!(site.headroom_gbps() > 0.0)) {
        violations.push_back(where + ": external_gbps leaves no headroom under cap_gbps");
      }
    }
    if (site.external_load_gbps < 0.0) violations.push_back(where + ".external_gbps must be >= 0");
  }

  std::set<std::string> link_ids;
  for (std::size_t i = 0; i < input.links.size(); ++i) {
    const auto& link = input.links[i];
    const std::string where = "links[" + std::to_string(i) + "]";
    if (link.id.empty()) violations.push_back(where + ".id is empty");
    if (!link_ids.insert(link.id).second) violations.push_back(where + ": duplicate link id '" + link.id + "'");
    if (!site_names.contains(link.site)) {
      violations.push_back(where + " ('" + link.id + "') references unknown site '" + link.site + "'");
    }
    if (!is_reservable_capacity(link.tier.capacity_gbps)) {
      violations.push_back(where + ".capacity_gbps must be one of 2, 5, 10");
    }
    if (link.hourly_fee_override_usd && *link.hourly_fee_override_usd < 0.0) {
      violations.push_back(where + ".hourly_usd must be >= 0");
    }
    if (link.billed_hours && *link.billed_hours < 0.0) violations.push_back(where + ".billed_hours must be >= 0");
  }

  const auto& cfg = input.config;
  if (!(cfg.timeout_s > 0.0)) violations.emplace_back("sim.timeout_s must be > 0");
  if (!(cfg.sample_s > 0.0)) violations.emplace_back("sim.sample_s must be > 0");
  if (cfg.per_flow_cap_gbps && !(*cfg.per_flow_cap_gbps > 0.0)) {
    violations.emplace_back("sim.per_flow_cap_gbps must be > 0");
  }

  std::set<std::string> bad_links;
  for (const auto& inst : input.workload.instances) {
    if (!link_ids.contains(inst.link_id)) bad_links.insert(inst.link_id);
  }
  for (const auto& job : input.workload.jobs) {
    if (!link_ids.contains(job.link_id)) bad_links.insert(job.link_id);
    if (job.instance >= input.workload.instances.size()) {
      violations.push_back("job " + std::to_string(job.id) + " references a missing instance");
    }
    if (job.output_bytes == 0) violations.push_back("job " + std::to_string(job.id) + " has no output");
    if (!(job.compute_s >= 0.0)) violations.push_back("job " + std::to_string(job.id) + " has negative compute time");
  }
  for (const auto& id : bad_links) violations.push_back("workload references unknown link '" + id + "'");

  if (!violations.empty()) throw ValidationError(std::move(violations));
}

namespace {

struct Flow {
  double key;  // link service level at which this flow has received all of its bytes
  std::size_t job;
};

struct FlowAfter {
  bool operator()(const Flow& a, const Flow& b) const { return a.key > b.key || (a.key == b.key && a.job > b.job); }
};

using TimedQueue =
    std::priority_queue<std::pair<double, std::size_t>, std::vector<std::pair<double, std::size_t>>, std::greater<>>;

// Every flow on a link receives the same rate, so a link tracks one cumulative per-flow service
// level. A flow that joins at level s with b bytes finishes when the level reaches s + b.
struct LinkState {
  double service = 0.0;
  double rate = 0.0;  // bytes/s per flow
  std::size_t active = 0;
  double carried = 0.0;  // bytes moved on the link so far
  double carried_at_sample = 0.0;
  std::priority_queue<Flow, std::vector<Flow>, FlowAfter> flows;
};

struct JobRun {
  JobState state = JobState::Queued;
  double start_s = 0.0;
  double transfer_start_s = 0.0;
  double key = 0.0;
  std::size_t link = 0;
};

class Simulator {
 public:
  explicit Simulator(const SimInput& input) : input_(input), links_(input.links.size()) {
    for (std::size_t l = 0; l < input.links.size(); ++l) link_index_[input.links[l].id] = l;
    runs_.resize(input.workload.jobs.size());
    for (std::size_t j = 0; j < input.workload.jobs.size(); ++j) {
      runs_[j].link = link_index_.at(input.workload.jobs[j].link_id);
    }
    queues_.resize(input.workload.instances.size());
    next_in_queue_.assign(input.workload.instances.size(), 0);
    for (std::size_t j = 0; j < input.workload.jobs.size(); ++j) {
      queues_[input.workload.jobs[j].instance].push_back(j);
    }
    for (std::size_t i = 0; i < queues_.size(); ++i) {
      if (!queues_[i].empty()) starts_.emplace(input.workload.jobs[queues_[i].front()].start_s, queues_[i].front());
    }
    active_.assign(links_.size(), 0);

    trace_.link_ids.reserve(input.links.size());
    for (const auto& link : input.links) {
      trace_.link_ids.push_back(link.id);
      trace_.link_sites.push_back(link.site);
      trace_.link_capacity_gbps.push_back(link.capacity_gbps());
    }
    trace_.delivered_bytes_by_link.assign(links_.size(), 0);
    trace_.egress_bytes_by_link.assign(links_.size(), 0);
  }

  SimTrace run() {
    const double dt = input_.config.sample_s;
    std::uint64_t tick = 0;
    take_sample(0.0);
    ++tick;

    while (true) {
      const double t_start = starts_.empty() ? kInf : starts_.top().first;
      const double t_compute = computes_.empty() ? kInf : computes_.top().first;
      const double t_deadline = next_deadline();
      std::size_t completing_link = links_.size();
      double t_complete = kInf;
      for (std::size_t l = 0; l < links_.size(); ++l) {
        const double t = next_completion(l);
        if (t < t_complete) {
          t_complete = t;
          completing_link = l;
        }
      }
      const double t_event = std::min({t_start, t_compute, t_deadline, t_complete});
      if (!std::isfinite(t_event)) break;

      const double t_sample = static_cast<double>(tick) * dt;
      if (t_sample <= t_event) {
        advance_to(t_sample);
        take_sample(t_sample);
        ++tick;
        continue;
      }

      advance_to(t_event);
      if (t_complete == t_event) {
        complete_flows(completing_link);
      } else if (t_deadline == t_event) {
        const auto job = deadlines_.top().second;
        deadlines_.pop();
        finish(job, JobState::FailedTimeout);
      } else if (t_compute == t_event) {
        const auto job = computes_.top().second;
        computes_.pop();
        begin_transfer(job);
      } else {
        const auto job = starts_.top().second;
        starts_.pop();
        start_job(job);
      }
      recompute_rates();
    }

    trace_.end_s = now_;
    while (static_cast<double>(tick - 1) * dt < now_) {
      const double t_sample = static_cast<double>(tick) * dt;
      advance_to(t_sample);
      take_sample(t_sample);
      ++tick;
    }
    return std::move(trace_);
  }

 private:
  const Job& job_of(std::size_t j) const { return input_.workload.jobs[j]; }

  double next_deadline() {
    while (!deadlines_.empty() && runs_[deadlines_.top().second].state != JobState::Transferring) deadlines_.pop();
    return deadlines_.empty() ? kInf : deadlines_.top().first;
  }

  double next_completion(std::size_t l) {
    auto& link = links_[l];
    while (!link.flows.empty() && runs_[link.flows.top().job].state != JobState::Transferring) link.flows.pop();
    if (link.flows.empty() || !(link.rate > 0.0)) return kInf;
    return now_ + std::max(0.0, link.flows.top().key - link.service) / link.rate;
  }

  void advance_to(double t) {
    const double dt = t - now_;
    if (dt > 0.0) {
      for (auto& link : links_) {
        if (link.active == 0) continue;
        link.service += link.rate * dt;
        link.carried += link.rate * static_cast<double>(link.active) * dt;
      }
    }
    now_ = std::max(now_, t);
  }

  void recompute_rates() {
    const auto rates = allocate_rates(input_.links, input_.sites, active_, input_.config.per_flow_cap_gbps);
    for (std::size_t l = 0; l < links_.size(); ++l) links_[l].rate = rates[l];
  }

  void take_sample(double t) {
    const double dt = input_.config.sample_s;
    for (std::size_t l = 0; l < links_.size(); ++l) {
      auto& link = links_[l];
      double gbps = t > 0.0 ? bytes_per_s_to_gbps((link.carried - link.carried_at_sample) / dt) : 0.0;
      // Accumulated rounding can overshoot capacity by a few ulps.
      gbps = std::min(gbps, input_.links[l].capacity_gbps());
      link.carried_at_sample = link.carried;
      trace_.samples.push_back({t, l, gbps, link.active});
    }
  }

  void start_job(std::size_t j) {
    auto& run = runs_[j];
    run.state = JobState::Computing;
    run.start_s = now_;
    computes_.emplace(now_ + job_of(j).compute_s, j);
  }

  void begin_transfer(std::size_t j) {
    auto& run = runs_[j];
    auto& link = links_[run.link];
    run.state = JobState::Transferring;
    run.transfer_start_s = now_;
    run.key = link.service + static_cast<double>(job_of(j).output_bytes);
    link.flows.push({run.key, j});
    ++link.active;
    ++active_[run.link];
    deadlines_.emplace(now_ + input_.config.timeout_s, j);
  }

  void complete_flows(std::size_t l) {
    auto& link = links_[l];
    // The scheduled flow finishes now even if rounding left it a hair short; any other flow within
    // rounding distance of the same level finishes with it.
    const auto first = link.flows.top();
    link.flows.pop();
    finish(first.job, JobState::Done);
    const double tolerance = 1e-3 + 1e-12 * std::abs(link.service);
    while (!link.flows.empty()) {
      const auto next = link.flows.top();
      if (runs_[next.job].state != JobState::Transferring) {
        link.flows.pop();
        continue;
      }
      if (next.key - link.service > tolerance) break;
      link.flows.pop();
      finish(next.job, JobState::Done);
    }
  }

  void finish(std::size_t j, JobState outcome) {
    auto& run = runs_[j];
    auto& link = links_[run.link];
    const auto& job = job_of(j);
    run.state = outcome;
    --link.active;
    --active_[run.link];

    JobOutcome rec;
    rec.job_id = job.id;
    rec.gpu = job.gpu;
    rec.link = run.link;
    rec.start_s = run.start_s;
    rec.compute_s = job.compute_s;
    rec.transfer_start_s = run.transfer_start_s;
    rec.transfer_s = now_ - run.transfer_start_s;
    rec.outcome = outcome;
    rec.bytes = job.output_bytes;
    if (outcome == JobState::Done) {
      rec.bytes_sent = job.output_bytes;
      trace_.delivered_bytes_by_link[run.link] += job.output_bytes;
      ++trace_.completed;
    } else {
      const double remaining = std::clamp(run.key - link.service, 0.0, static_cast<double>(job.output_bytes));
      rec.bytes_sent = job.output_bytes - static_cast<std::uint64_t>(std::ceil(remaining));
      trace_.wasted_failed_compute_s += job.compute_s;
      ++trace_.failed;
    }
    trace_.egress_bytes_by_link[run.link] += rec.bytes_sent;
    trace_.transfer_hold_s += rec.transfer_s;
    trace_.outcomes.push_back(std::move(rec));

    // The instance was held during the upload; it moves on to its next job if still provisioned.
    const std::size_t inst = job.instance;
    auto& next = next_in_queue_[inst];
    ++next;
    if (next < queues_[inst].size()) {
      if (now_ < input_.workload.instances[inst].end_s) {
        starts_.emplace(now_, queues_[inst][next]);
      } else {
        trace_.not_started += queues_[inst].size() - next;
        next = queues_[inst].size();
      }
    }
  }

  const SimInput& input_;
  std::unordered_map<std::string, std::size_t> link_index_;
  std::vector<LinkState> links_;
  std::vector<std::size_t> active_;
  std::vector<JobRun> runs_;
  std::vector<std::vector<std::size_t>> queues_;
  std::vector<std::size_t> next_in_queue_;
  TimedQueue starts_;
  TimedQueue computes_;
  TimedQueue deadlines_;
  double now_ = 0.0;
  SimTrace trace_;
};

}  // namespace

SimTrace simulate(const SimInput& input) {
  validate(input);
  return Simulator(input).run();
}

std::vector<TransferBin> transfer_time_stats(const SimTrace& trace, double bin_width_s, std::optional<std::size_t> link) {
  if (!(bin_width_s > 0.0)) throw DomainError("bin width must be > 0");
  struct Acc {
    std::size_t n = 0;
    double sum = 0.0;
    double sum_sq = 0.0;
  };
  std::map<std::int64_t, Acc> bins;
  for (const auto& o : trace.outcomes) {
    if (link && o.link != *link) continue;
    auto& acc = bins[static_cast<std::int64_t>(std::floor(o.transfer_start_s / bin_width_s))];
    ++acc.n;
    acc.sum += o.transfer_s;
    acc.sum_sq += o.transfer_s * o.transfer_s;
  }
  std::vector<TransferBin> out;
  out.reserve(bins.size());
  for (const auto& [index, acc] : bins) {
    const double n = static_cast<double>(acc.n);
    const double mean = acc.sum / n;
    const double var = std::max(0.0, acc.sum_sq / n - mean * mean);
    out.push_back({static_cast<double>(index) * bin_width_s, acc.n, mean, std::sqrt(var)});
  }
  return out;
}

DeliveredVolume delivered_volume(const SimTrace& trace, GroupBy group_by) {
  DeliveredVolume volume;
  std::vector<const JobOutcome*> done;
  for (const auto& o : trace.outcomes) {
    if (o.outcome == JobState::Done) done.push_back(&o);
  }
  std::stable_sort(done.begin(), done.end(), [](const JobOutcome* a, const JobOutcome* b) {
    return a->transfer_start_s + a->transfer_s < b->transfer_start_s + b->transfer_s;
  });
  // Groups with no completed transfer still appear with a zero total.
  for (std::size_t l = 0; l < trace.link_ids.size(); ++l) {
    volume.totals.try_emplace(group_by == GroupBy::Link ? trace.link_ids[l] : trace.link_sites[l], 0);
  }
  for (const auto* o : done) {
    const auto& group = group_by == GroupBy::Link ? trace.link_ids[o->link] : trace.link_sites[o->link];
    auto& total = volume.totals[group];
    total += o->bytes;
    volume.curve.push_back({o->transfer_start_s + o->transfer_s, group, total});
  }
  return volume;
}

std::vector<SiteSample> site_throughput(const SimTrace& trace) {
  std::vector<SiteSample> out;
  for (const auto& s : trace.samples) {
    if (out.empty() || out.back().t_s != s.t_s) {
      out.push_back({s.t_s, {}});
      for (const auto& site : trace.link_sites) out.back().throughput_gbps.try_emplace(site, 0.0);
    }
    out.back().throughput_gbps[trace.link_sites[s.link]] += s.throughput_gbps;
  }
  return out;
}

double peak_site_throughput_gbps(const SimTrace& trace, const std::string& site) {
  double peak = 0.0;
  for (const auto& sample : site_throughput(trace)) {
    const auto it = sample.throughput_gbps.find(site);
    if (it != sample.throughput_gbps.end()) peak = std::max(peak, it->second);
  }
  return peak;
}

}  // namespace burst
