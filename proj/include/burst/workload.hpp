#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace burst {

struct GpuClass {
  std::string name;
  double tflops_fp32 = 0.0;
  std::optional<double> mean_runtime_s;            // measured mean; derived from the profile when absent
  std::optional<double> compute_cost_per_job_usd;  // needed only when the class appears in a cost report
};

class GpuCatalog {
 public:
  GpuCatalog() = default;
  explicit GpuCatalog(std::vector<GpuClass> gpus);

  const GpuClass& find(std::string_view name) const;  // throws LookupError
  bool contains(std::string_view name) const;
  const std::vector<GpuClass>& gpus() const { return gpus_; }

  // Measured NVIDIA runtimes for ~5 TFLOP-hour photon-propagation jobs, plus Dec 2020 preemptible
  // compute cost per job. A100 has no cost entry.
  static GpuCatalog measured_2020();

 private:
  std::vector<GpuClass> gpus_;
};

struct JobProfile {
  double compute_tflop_hours = 5.0;
  double egress_mb_per_tflop_hour = 500.0;
  double runtime_cv = 0.2;
  double size_cv = 0.1;

  void validate() const;
  double mean_output_bytes() const;
};

struct InstanceKey {
  std::string link_id;
  std::string gpu;
  auto operator<=>(const InstanceKey&) const = default;
};

// From t_start_s on, the fleet converges to `counts`. Keys absent from `counts` target zero. A
// nonzero ramp_s spreads the change linearly over [t_start_s, t_start_s + ramp_s].
struct RampSegment {
  double t_start_s = 0.0;
  double ramp_s = 0.0;
  std::map<InstanceKey, int> counts;
};

struct RampSchedule {
  std::vector<RampSegment> segments;
};

enum class JobState { Queued, Computing, Transferring, Done, FailedTimeout };

const char* to_string(JobState state);
// Forward-only: Queued -> Computing -> Transferring -> {Done, FailedTimeout}.
bool can_transition(JobState from, JobState to);

struct Job {
  std::uint64_t id = 0;
  std::size_t instance = 0;
  std::string gpu;
  std::string link_id;
  double start_s = 0.0;  // nominal, assuming uploads take no time
  double compute_s = 0.0;
  std::uint64_t output_bytes = 0;
  JobState state = JobState::Queued;

  void advance(JobState next);  // throws std::logic_error on a backward or skipped transition
};

// One provisioned compute instance, alive on [start_s, end_s). It starts no job at or after end_s.
struct Instance {
  std::size_t id = 0;
  std::string gpu;
  std::string link_id;
  double start_s = 0.0;
  double end_s = 0.0;
};

struct Workload {
  std::vector<Instance> instances;
  std::vector<Job> jobs;  // ordered by (start_s, id)
};

double expected_runtime(const GpuClass& gpu, const JobProfile& profile);
double expected_runtime(const GpuCatalog& catalog, std::string_view gpu, const JobProfile& profile);

struct JobSample {
  double compute_s = 0.0;
  std::uint64_t output_bytes = 0;
};

// Log-normal runtime and output size with the profile's means and coefficients of variation.
JobSample sample_job(const GpuClass& gpu, const JobProfile& profile, std::mt19937_64& rng);

// Average egress (Gbps) of `pflops` of compute producing `egress_mb_per_tflop_hour`.
double mean_egress_rate_gbps(double pflops, double egress_mb_per_tflop_hour);

// Throws ValidationError listing every unknown GPU/link, unordered segment, negative count, and a
// schedule that does not finish with an all-zero segment.
void validate_ramp(const RampSchedule& ramp, const GpuCatalog& catalog, const std::vector<std::string>& link_ids);

// Expands the ramp into instances and the jobs each would run back to back.
Workload generate_workload(const RampSchedule& ramp, const GpuCatalog& catalog, const JobProfile& profile,
                           const std::vector<std::string>& link_ids, std::mt19937_64& rng);

// Provisioned fp32 PFLOPS per link over time, as a step function sampled at every change.
struct CapacityPoint {
  double t_s = 0.0;
  std::map<std::string, double> pflops_by_link;
};
std::vector<CapacityPoint> provisioned_capacity(const Workload& workload, const GpuCatalog& catalog);

}  // namespace burst
