#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "burst/cost_report.hpp"
#include "burst/netsim.hpp"
#include "burst/scenario.hpp"

namespace burst::cli {

// Stable process exit codes.
enum ExitCode : int { kOk = 0, kValidationFailed = 1, kIoOrParse = 2 };

struct GlobalOptions {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<double> price_point;
};

struct RunResult {
  Scenario scenario;
  SimTrace trace;
  std::vector<double> billed_hours;
  CostReport report;
  std::vector<GpuJobCost> per_gpu;
  std::vector<CapacityPoint> capacity;
};

void apply_overrides(Scenario& scenario, const GlobalOptions& options);

// Validates, simulates and prices one scenario. Throws ValidationError before simulating.
RunResult run_scenario(const Scenario& scenario);

// Writes trace.csv, jobs.csv, summary.json, cost_report.json, portfolio.json and the plot CSVs.
// Output depends only on the run, so identical runs give byte-identical directories.
void write_bundle(const RunResult& run, const std::filesystem::path& dir);

int cmd_plan(const std::filesystem::path& scenario_path, const GlobalOptions& options, std::ostream& out,
             std::ostream& err);
int cmd_simulate(const std::filesystem::path& scenario_path, const GlobalOptions& options, std::ostream& out,
                 std::ostream& err);
int cmd_report(const std::filesystem::path& bundle_dir, std::ostream& out, std::ostream& err);
int cmd_workflow(const std::filesystem::path& log_path, const GlobalOptions& options, std::ostream& out,
                 std::ostream& err);

// Parses argv and dispatches to a subcommand.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace burst::cli
