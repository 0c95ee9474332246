#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "burst/netsim.hpp"

namespace burst {

enum class Provider { GCP, Azure, AWS };
enum class Actor { CloudUser, OnPremNetworkEngineer };
enum class BillingEffect { None, StartsBilling, StopsBillingUnilaterally, StopsBillingJointly };

const char* to_string(Provider provider);
const char* to_string(Actor actor);
Provider parse_provider(std::string_view text);  // throws LookupError
Actor parse_actor(std::string_view text);        // throws LookupError

struct WorkflowStep {
  std::string name;
  Actor actor = Actor::CloudUser;
  std::vector<std::string> prerequisites;
  bool emits_key = false;  // hands a key or BGP parameters to the other actor
  BillingEffect billing = BillingEffect::None;
  bool teardown = false;
};

struct WorkflowDefinition {
  Provider provider = Provider::GCP;
  std::vector<WorkflowStep> steps;  // provisioning steps in canonical order, then teardown steps

  const WorkflowStep* find(std::string_view name) const;
  std::vector<const WorkflowStep*> provisioning() const;
  bool is_acyclic() const;

  // Billing starts at a provider-specific step by default; this moves it elsewhere.
  void set_billing_start(std::string_view step);
};

WorkflowDefinition workflow_definition(Provider provider);

struct CompletedStep {
  std::string step;
  Actor actor = Actor::CloudUser;
  double t_h = 0.0;
};

struct WorkflowState {
  Provider provider = Provider::GCP;
  std::vector<CompletedStep> completed;
  bool billing_active = false;
  std::optional<double> billing_started_h;
  bool onprem_deleted = false;  // joint-stop marks
  bool user_deleted = false;

  const CompletedStep* find(std::string_view step) const;
  bool operator==(const WorkflowState&) const;
};

enum class WorkflowErrorKind { UnknownStep, ActorViolation, Ordering, Duplicate };

class WorkflowError : public std::runtime_error {
 public:
  WorkflowError(WorkflowErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  WorkflowErrorKind kind() const { return kind_; }

 private:
  WorkflowErrorKind kind_;
};

// Billing log that stops something it never started.
class BillingInconsistency : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

WorkflowState apply_step(const WorkflowDefinition& definition, WorkflowState state, std::string_view step, Actor actor,
                         double t_h);

struct LogRecord {
  double t_h = 0.0;
  Provider provider = Provider::GCP;
  std::string link_id;
  std::string step;
  Actor actor = Actor::CloudUser;
  std::size_t line = 0;
};

// Lines of `t_h,provider,link_id,step,actor`. Blank lines, '#' comments and a header line are
// skipped. Throws ParseError naming every malformed line.
std::vector<LogRecord> parse_event_log(std::istream& in);

// Hours billed for one link's chronologically ordered log. Joint stops take effect at the later of
// the two deletions. Billing still running at the end of the log is counted up to the last event.
double billing_hours(std::span<const LogRecord> events, Provider provider);
double billing_hours(std::span<const LogRecord> events, const WorkflowDefinition& definition);

struct LinkVerdict {
  std::string link_id;
  Provider provider = Provider::GCP;
  bool ok = true;
  std::vector<std::string> errors;
  double billing_hours = 0.0;
  bool billing_open = false;
};

std::vector<LinkVerdict> check_workflows(std::span<const LogRecord> records);
nlohmann::json to_json(std::span<const LinkVerdict> verdicts);

// Portfolio rules that come from the provisioning process: Azure links sharing a peering location
// need distinct VPNs, and on-prem IP ranges must not overlap.
std::vector<std::string> check_portfolio_rules(const std::vector<DedicatedLink>& links);

}  // namespace burst
