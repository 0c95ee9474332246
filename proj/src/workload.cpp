#include "burst/workload.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "burst/error.hpp"
#include "burst/units.hpp"

namespace burst {

GpuCatalog::GpuCatalog(std::vector<GpuClass> gpus) : gpus_(std::move(gpus)) {
  std::vector<std::string> violations;
  std::set<std::string> seen;
  for (const auto& gpu : gpus_) {
    if (!seen.insert(gpu.name).second) violations.push_back("duplicate GPU class '" + gpu.name + "'");
    if (!(gpu.tflops_fp32 > 0.0)) violations.push_back("GPU '" + gpu.name + "' needs tflops > 0");
    if (gpu.mean_runtime_s && !(*gpu.mean_runtime_s > 0.0)) {
      violations.push_back("GPU '" + gpu.name + "' needs mean_runtime_s > 0");
    }
    if (gpu.compute_cost_per_job_usd && !(*gpu.compute_cost_per_job_usd >= 0.0)) {
      violations.push_back("GPU '" + gpu.name + "' has a negative cost per job");
    }
  }
  for (const auto& a : gpus_) {
    for (const auto& b : gpus_) {
      if (a.mean_runtime_s && b.mean_runtime_s && a.tflops_fp32 > b.tflops_fp32 &&
          *a.mean_runtime_s > *b.mean_runtime_s) {
        violations.push_back("GPU '" + a.name + "' is faster than '" + b.name + "' but has a longer mean runtime");
      }
    }
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

const GpuClass& GpuCatalog::find(std::string_view name) const {
  for (const auto& gpu : gpus_) {
    if (gpu.name == name) return gpu;
  }
  throw LookupError("unknown GPU class '" + std::string(name) + "'");
}

bool GpuCatalog::contains(std::string_view name) const {
  return std::any_of(gpus_.begin(), gpus_.end(), [&](const GpuClass& g) { return g.name == name; });
}

GpuCatalog GpuCatalog::measured_2020() {
  return GpuCatalog({
      {"T4", 8.1, 2350.0, 0.12},
      {"P100", 9.3, 2100.0, 0.23},
      {"P40", 11.8, 1950.0, 0.27},
      {"V100-PCIe", 14.0, 1800.0, 0.17},
      {"V100-SXM2", 14.9, 1700.0, 0.40},
      {"A100-SXM4", 19.5, 1200.0, std::nullopt},
  });
}

void JobProfile::validate() const {
  std::vector<std::string> violations;
  if (!(compute_tflop_hours > 0.0)) violations.emplace_back("profile.compute_tflop_hours must be > 0");
  if (!(egress_mb_per_tflop_hour > 0.0)) violations.emplace_back("profile.egress_mb_per_tflop_hour must be > 0");
  if (!(runtime_cv >= 0.0)) violations.emplace_back("profile.runtime_cv must be >= 0");
  if (!(size_cv >= 0.0)) violations.emplace_back("profile.size_cv must be >= 0");
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

double JobProfile::mean_output_bytes() const { return compute_tflop_hours * egress_mb_per_tflop_hour * kBytesPerMB; }

const char* to_string(JobState state) {
  switch (state) {
    case JobState::Queued: return "queued";
    case JobState::Computing: return "computing";
    case JobState::Transferring: return "transferring";
    case JobState::Done: return "done";
    case JobState::FailedTimeout: return "failed_timeout";
  }
  return "unknown";
}

bool can_transition(JobState from, JobState to) {
  switch (from) {
    case JobState::Queued: return to == JobState::Computing;
    case JobState::Computing: return to == JobState::Transferring;
    case JobState::Transferring: return to == JobState::Done || to == JobState::FailedTimeout;
    case JobState::Done:
    case JobState::FailedTimeout: return false;
  }
  return false;
}

void Job::advance(JobState next) {
  if (!can_transition(state, next)) {
    throw std::logic_error(std::string("job ") + std::to_string(id) + ": illegal transition " + to_string(state) +
                           " -> " + to_string(next));
  }
  state = next;
}

double expected_runtime(const GpuClass& gpu, const JobProfile& profile) {
  if (gpu.mean_runtime_s) return *gpu.mean_runtime_s;
  return profile.compute_tflop_hours / gpu.tflops_fp32 * kSecondsPerHour;
}

double expected_runtime(const GpuCatalog& catalog, std::string_view gpu, const JobProfile& profile) {
  return expected_runtime(catalog.find(gpu), profile);
}

namespace {

double sample_lognormal(double mean, double cv, std::mt19937_64& rng) {
  if (cv == 0.0) return mean;
  const double sigma2 = std::log1p(cv * cv);
  std::lognormal_distribution<double> dist(std::log(mean) - sigma2 / 2.0, std::sqrt(sigma2));
  return dist(rng);
}

}  // namespace

JobSample sample_job(const GpuClass& gpu, const JobProfile& profile, std::mt19937_64& rng) {
  JobSample sample;
  sample.compute_s = sample_lognormal(expected_runtime(gpu, profile), profile.runtime_cv, rng);
  const double bytes = sample_lognormal(profile.mean_output_bytes(), profile.size_cv, rng);
  sample.output_bytes = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(bytes)));
  return sample;
}

double mean_egress_rate_gbps(double pflops, double egress_mb_per_tflop_hour) {
  const double mb_per_hour = pflops * 1000.0 * egress_mb_per_tflop_hour;
  return bytes_per_s_to_gbps(mb_per_hour * kBytesPerMB / kSecondsPerHour);
}

void validate_ramp(const RampSchedule& ramp, const GpuCatalog& catalog, const std::vector<std::string>& link_ids) {
  std::vector<std::string> violations;
  const std::set<std::string> links(link_ids.begin(), link_ids.end());
  for (std::size_t i = 0; i < ramp.segments.size(); ++i) {
    const auto& seg = ramp.segments[i];
    const std::string where = "ramp[" + std::to_string(i) + "]";
    if (i > 0 && !(seg.t_start_s > ramp.segments[i - 1].t_start_s)) {
      violations.push_back(where + ".t_start_s must be strictly increasing");
    }
    if (!(seg.ramp_s >= 0.0)) violations.push_back(where + ".ramp_s must be >= 0");
    if (i + 1 < ramp.segments.size() && seg.ramp_s > ramp.segments[i + 1].t_start_s - seg.t_start_s) {
      violations.push_back(where + ".ramp_s overlaps the next segment");
    }
    for (const auto& [key, count] : seg.counts) {
      if (count < 0) violations.push_back(where + ".counts has a negative count");
      if (!catalog.contains(key.gpu)) violations.push_back(where + ".counts references unknown GPU '" + key.gpu + "'");
      if (!links.contains(key.link_id)) {
        violations.push_back(where + ".counts references unknown link '" + key.link_id + "'");
      }
    }
  }
  if (!ramp.segments.empty()) {
    const auto& last = ramp.segments.back().counts;
    if (std::any_of(last.begin(), last.end(), [](const auto& kv) { return kv.second > 0; })) {
      violations.emplace_back("ramp must end with a segment whose counts are all zero");
    }
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

Workload generate_workload(const RampSchedule& ramp, const GpuCatalog& catalog, const JobProfile& profile,
                           const std::vector<std::string>& link_ids, std::mt19937_64& rng) {
  profile.validate();
  validate_ramp(ramp, catalog, link_ids);

  Workload workload;
  std::map<InstanceKey, std::vector<std::size_t>> alive;
  for (const auto& seg : ramp.segments) {
    for (const auto& [key, count] : seg.counts) alive.try_emplace(key);
  }

  for (const auto& seg : ramp.segments) {
    for (auto& [key, stack] : alive) {
      const auto it = seg.counts.find(key);
      const std::size_t target = it == seg.counts.end() ? 0 : static_cast<std::size_t>(it->second);
      if (target > stack.size()) {
        const std::size_t added = target - stack.size();
        for (std::size_t k = 0; k < added; ++k) {
          Instance inst;
          inst.id = workload.instances.size();
          inst.gpu = key.gpu;
          inst.link_id = key.link_id;
          inst.start_s = seg.t_start_s + seg.ramp_s * static_cast<double>(k) / static_cast<double>(added);
          inst.end_s = inst.start_s;  // set when the instance is retired
          stack.push_back(inst.id);
          workload.instances.push_back(std::move(inst));
        }
      } else if (target < stack.size()) {
        // Most recently provisioned instances are released first.
        const std::size_t removed = stack.size() - target;
        for (std::size_t k = 0; k < removed; ++k) {
          auto& inst = workload.instances[stack.back()];
          inst.end_s = seg.t_start_s + seg.ramp_s * static_cast<double>(k + 1) / static_cast<double>(removed);
          stack.pop_back();
        }
      }
    }
  }

  struct Pending {
    Job job;
    std::size_t seq;
  };
  std::vector<Pending> pending;
  for (const auto& inst : workload.instances) {
    const auto& gpu = catalog.find(inst.gpu);
    double t = inst.start_s;
    while (t < inst.end_s) {
      const auto sample = sample_job(gpu, profile, rng);
      Job job;
      job.instance = inst.id;
      job.gpu = inst.gpu;
      job.link_id = inst.link_id;
      job.start_s = t;
      job.compute_s = sample.compute_s;
      job.output_bytes = sample.output_bytes;
      pending.push_back({std::move(job), pending.size()});
      t += sample.compute_s;
    }
  }
  std::stable_sort(pending.begin(), pending.end(),
                   [](const Pending& a, const Pending& b) { return a.job.start_s < b.job.start_s; });
  workload.jobs.reserve(pending.size());
  for (auto& p : pending) {
    p.job.id = workload.jobs.size();
    workload.jobs.push_back(std::move(p.job));
  }
  return workload;
}

std::vector<CapacityPoint> provisioned_capacity(const Workload& workload, const GpuCatalog& catalog) {
  std::map<double, std::map<std::string, double>> deltas;
  for (const auto& inst : workload.instances) {
    if (!(inst.end_s > inst.start_s)) continue;
    const double pflops = catalog.find(inst.gpu).tflops_fp32 / 1000.0;
    deltas[inst.start_s][inst.link_id] += pflops;
    deltas[inst.end_s][inst.link_id] -= pflops;
  }
  std::vector<CapacityPoint> points;
  std::map<std::string, double> level;
  for (const auto& [t, change] : deltas) {
    for (const auto& [link, d] : change) {
      level[link] += d;
      if (std::abs(level[link]) < 1e-9) level[link] = 0.0;
    }
    points.push_back({t, level});
  }
  return points;
}

}  // namespace burst
