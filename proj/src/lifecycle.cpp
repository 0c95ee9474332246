#include "burst/lifecycle.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "burst/error.hpp"

namespace burst {

const char* to_string(Provider provider) {
  switch (provider) {
    case Provider::GCP: return "GCP";
    case Provider::Azure: return "Azure";
    case Provider::AWS: return "AWS";
  }
  return "?";
}

const char* to_string(Actor actor) {
  return actor == Actor::CloudUser ? "CloudUser" : "OnPremNetworkEngineer";
}

Provider parse_provider(std::string_view text) {
  if (text == "GCP") return Provider::GCP;
  if (text == "Azure") return Provider::Azure;
  if (text == "AWS") return Provider::AWS;
  throw LookupError("unknown provider '" + std::string(text) + "'");
}

Actor parse_actor(std::string_view text) {
  if (text == "CloudUser") return Actor::CloudUser;
  if (text == "OnPremNetworkEngineer") return Actor::OnPremNetworkEngineer;
  throw LookupError("unknown actor '" + std::string(text) + "'");
}

const WorkflowStep* WorkflowDefinition::find(std::string_view name) const {
  for (const auto& step : steps) {
    if (step.name == name) return &step;
  }
  return nullptr;
}

std::vector<const WorkflowStep*> WorkflowDefinition::provisioning() const {
  std::vector<const WorkflowStep*> out;
  for (const auto& step : steps) {
    if (!step.teardown) out.push_back(&step);
  }
  return out;
}

bool WorkflowDefinition::is_acyclic() const {
  // Kahn's algorithm over prerequisite edges.
  std::map<std::string, int> indegree;
  std::map<std::string, std::vector<std::string>> dependents;
  for (const auto& step : steps) indegree.try_emplace(step.name, 0);
  for (const auto& step : steps) {
    for (const auto& pre : step.prerequisites) {
      if (!indegree.contains(pre)) return false;
      ++indegree[step.name];
      dependents[pre].push_back(step.name);
    }
  }
  std::vector<std::string> ready;
  for (const auto& [name, deg] : indegree) {
    if (deg == 0) ready.push_back(name);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    const auto name = ready.back();
    ready.pop_back();
    ++visited;
    for (const auto& dep : dependents[name]) {
      if (--indegree[dep] == 0) ready.push_back(dep);
    }
  }
  return visited == indegree.size();
}

void WorkflowDefinition::set_billing_start(std::string_view step) {
  const auto target = std::find_if(steps.begin(), steps.end(), [&](const WorkflowStep& s) { return s.name == step; });
  if (target == steps.end()) throw LookupError("unknown step '" + std::string(step) + "'");
  for (auto& s : steps) {
    if (s.billing == BillingEffect::StartsBilling) s.billing = BillingEffect::None;
  }
  target->billing = BillingEffect::StartsBilling;
}

namespace {

// Builds a linear chain: each provisioning step depends on the one before it.
struct ChainBuilder {
  WorkflowDefinition def;

  ChainBuilder& step(std::string name, Actor actor, bool emits_key = false,
                     BillingEffect billing = BillingEffect::None) {
    WorkflowStep s{std::move(name), actor, {}, emits_key, billing, false};
    if (!def.steps.empty()) s.prerequisites.push_back(def.steps.back().name);
    def.steps.push_back(std::move(s));
    return *this;
  }

  ChainBuilder& teardown(std::string name, Actor actor, std::vector<std::string> prerequisites,
                         BillingEffect billing) {
    def.steps.push_back({std::move(name), actor, std::move(prerequisites), false, billing, true});
    return *this;
  }
};

constexpr auto kUser = Actor::CloudUser;
constexpr auto kOnPrem = Actor::OnPremNetworkEngineer;

}  // namespace

WorkflowDefinition workflow_definition(Provider provider) {
  ChainBuilder b;
  b.def.provider = provider;
  switch (provider) {
    case Provider::GCP:
      b.step("create_vpc", kUser)
          .step("create_subnets", kUser)
          .step("create_cloud_router", kUser)
          .step("create_interconnect", kUser, true)
          .step("onprem_oess_routing", kOnPrem, false, BillingEffect::StartsBilling)
          .teardown("destroy_cloud_router", kUser, {"create_cloud_router"}, BillingEffect::StopsBillingUnilaterally);
      break;
    case Provider::Azure:
      b.step("create_vn", kUser)
          .step("create_gateway_subnet", kUser)
          .step("create_expressroute", kUser, true, BillingEffect::StartsBilling)
          .step("create_vng", kUser)
          .step("create_connection", kUser)
          .step("onprem_oess_routing", kOnPrem)
          // Teardown is started on-prem; billing runs until both sides have deleted.
          .teardown("onprem_delete_expressroute", kOnPrem, {"create_expressroute"},
                    BillingEffect::StopsBillingJointly)
          .teardown("delete_expressroute", kUser, {"onprem_delete_expressroute"}, BillingEffect::StopsBillingJointly);
      break;
    case Provider::AWS:
      b.step("onprem_oess_request", kOnPrem)
          .step("accept_direct_connect", kUser)
          .step("create_vpc", kUser)
          .step("create_subnets", kUser)
          .step("create_internet_router", kUser)
          .step("create_vpg", kUser)
          .step("associate_vpg_vpc", kUser)
          .step("create_dcg", kUser)
          .step("create_vif", kUser, true, BillingEffect::StartsBilling)
          .step("configure_routing", kUser)
          .step("associate_dcg_vpg", kUser)
          .step("onprem_finalize_routing", kOnPrem)
          .teardown("delete_vif", kUser, {"create_vif"}, BillingEffect::StopsBillingUnilaterally);
      break;
  }
  return std::move(b.def);
}

const CompletedStep* WorkflowState::find(std::string_view step) const {
  for (const auto& c : completed) {
    if (c.step == step) return &c;
  }
  return nullptr;
}

bool WorkflowState::operator==(const WorkflowState& other) const {
  if (completed.size() != other.completed.size()) return false;
  for (std::size_t i = 0; i < completed.size(); ++i) {
    const auto& a = completed[i];
    const auto& b = other.completed[i];
    if (a.step != b.step || a.actor != b.actor || a.t_h != b.t_h) return false;
  }
  return provider == other.provider && billing_active == other.billing_active &&
         billing_started_h == other.billing_started_h && onprem_deleted == other.onprem_deleted &&
         user_deleted == other.user_deleted;
}

WorkflowState apply_step(const WorkflowDefinition& definition, WorkflowState state, std::string_view step, Actor actor,
                         double t_h) {
  const auto* def = definition.find(step);
  const std::string label = std::string(to_string(definition.provider)) + " step '" + std::string(step) + "'";
  if (def == nullptr) throw WorkflowError(WorkflowErrorKind::UnknownStep, "unknown " + label);
  if (state.find(step) != nullptr) throw WorkflowError(WorkflowErrorKind::Duplicate, label + " already completed");
  if (def->actor != actor) {
    throw WorkflowError(WorkflowErrorKind::ActorViolation, label + " must be performed by " +
                                                                std::string(to_string(def->actor)) + ", not " +
                                                                to_string(actor));
  }
  for (const auto& pre : def->prerequisites) {
    const auto* done = state.find(pre);
    if (done == nullptr || done->t_h > t_h) {
      throw WorkflowError(WorkflowErrorKind::Ordering, label + " requires '" + pre + "' first");
    }
  }

  state.provider = definition.provider;
  state.completed.push_back({std::string(step), actor, t_h});
  switch (def->billing) {
    case BillingEffect::StartsBilling:
      state.billing_active = true;
      state.billing_started_h = t_h;
      break;
    case BillingEffect::StopsBillingUnilaterally:
      state.billing_active = false;
      break;
    case BillingEffect::StopsBillingJointly:
      (actor == Actor::CloudUser ? state.user_deleted : state.onprem_deleted) = true;
      if (state.user_deleted && state.onprem_deleted) state.billing_active = false;
      break;
    case BillingEffect::None:
      break;
  }
  return state;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto first = field.find_first_not_of(" \t\r");
    const auto last = field.find_last_not_of(" \t\r");
    fields.push_back(first == std::string::npos ? "" : field.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

std::vector<LogRecord> parse_event_log(std::istream& in) {
  std::vector<LogRecord> records;
  std::vector<std::string> problems;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    const auto fields = split_fields(line);
    if (fields.size() == 5 && fields[0] == "t_h") continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (fields.size() != 5) {
      problems.push_back(where + "expected 5 fields (t_h,provider,link_id,step,actor), got " +
                         std::to_string(fields.size()));
      continue;
    }
    LogRecord rec;
    rec.line = line_no;
    const auto& t = fields[0];
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), rec.t_h);
    if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(rec.t_h)) {
      problems.push_back(where + "bad timestamp '" + t + "'");
      continue;
    }
    try {
      rec.provider = parse_provider(fields[1]);
      rec.actor = parse_actor(fields[4]);
    } catch (const LookupError& e) {
      problems.push_back(where + e.what());
      continue;
    }
    if (fields[2].empty() || fields[3].empty()) {
      problems.push_back(where + "empty link_id or step");
      continue;
    }
    rec.link_id = fields[2];
    rec.step = fields[3];
    records.push_back(std::move(rec));
  }
  if (!problems.empty()) {
    std::string message = "malformed event log";
    for (const auto& p : problems) message += "\n  " + p;
    throw ParseError(message);
  }
  return records;
}

double billing_hours(std::span<const LogRecord> events, Provider provider) {
  return billing_hours(events, workflow_definition(provider));
}

double billing_hours(std::span<const LogRecord> events, const WorkflowDefinition& definition) {
  std::optional<double> started;
  std::optional<double> stopped;
  std::optional<double> user_delete;
  std::optional<double> onprem_delete;
  double last_t = 0.0;
  for (const auto& ev : events) {
    last_t = std::max(last_t, ev.t_h);
    const auto* step = definition.find(ev.step);
    if (step == nullptr) continue;
    switch (step->billing) {
      case BillingEffect::StartsBilling:
        if (!started) started = ev.t_h;
        break;
      case BillingEffect::StopsBillingUnilaterally:
        if (!started) throw BillingInconsistency("'" + ev.step + "' stops billing that never started");
        if (!stopped) stopped = ev.t_h;
        break;
      case BillingEffect::StopsBillingJointly:
        if (!started) throw BillingInconsistency("'" + ev.step + "' stops billing that never started");
        (step->actor == Actor::CloudUser ? user_delete : onprem_delete) = ev.t_h;
        if (user_delete && onprem_delete && !stopped) stopped = std::max(*user_delete, *onprem_delete);
        break;
      case BillingEffect::None:
        break;
    }
  }
  if (!started) return 0.0;
  return std::max(0.0, stopped.value_or(last_t) - *started);
}

std::vector<LinkVerdict> check_workflows(std::span<const LogRecord> records) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<LogRecord>> by_link;
  for (const auto& rec : records) {
    auto [it, inserted] = by_link.try_emplace(rec.link_id);
    if (inserted) order.push_back(rec.link_id);
    it->second.push_back(rec);
  }

  std::vector<LinkVerdict> verdicts;
  for (const auto& id : order) {
    const auto& events = by_link[id];
    LinkVerdict verdict;
    verdict.link_id = id;
    verdict.provider = events.front().provider;
    const auto definition = workflow_definition(verdict.provider);

    WorkflowState state;
    state.provider = verdict.provider;
    double last_t = -std::numeric_limits<double>::infinity();
    for (const auto& ev : events) {
      const std::string where = "line " + std::to_string(ev.line) + ": ";
      if (ev.provider != verdict.provider) {
        verdict.errors.push_back(where + "link '" + id + "' changes provider");
        break;
      }
      if (ev.t_h < last_t) {
        verdict.errors.push_back(where + "events are not in chronological order");
        break;
      }
      last_t = ev.t_h;
      try {
        state = apply_step(definition, std::move(state), ev.step, ev.actor, ev.t_h);
      } catch (const WorkflowError& e) {
        verdict.errors.push_back(where + e.what());
        break;
      }
    }
    try {
      verdict.billing_hours = billing_hours(events, definition);
    } catch (const BillingInconsistency& e) {
      verdict.errors.push_back(e.what());
    }
    verdict.billing_open = state.billing_active;
    verdict.ok = verdict.errors.empty();
    verdicts.push_back(std::move(verdict));
  }
  return verdicts;
}

nlohmann::json to_json(std::span<const LinkVerdict> verdicts) {
  nlohmann::json links = nlohmann::json::array();
  nlohmann::json errors = nlohmann::json::array();
  double total = 0.0;
  bool ok = true;
  for (const auto& v : verdicts) {
    ok = ok && v.ok;
    total += v.billing_hours;
    for (const auto& e : v.errors) errors.push_back(v.link_id + ": " + e);
    links.push_back({{"link_id", v.link_id},
                     {"provider", to_string(v.provider)},
                     {"ok", v.ok},
                     {"errors", v.errors},
                     {"billing_hours", v.billing_hours},
                     {"billing_open", v.billing_open}});
  }
  return {{"ok", ok}, {"errors", errors}, {"billing_hours", total}, {"links", links}};
}

namespace {

struct Ipv4Range {
  std::uint32_t first = 0;
  std::uint32_t last = 0;
};

std::optional<Ipv4Range> parse_cidr(const std::string& text) {
  unsigned a = 0, b = 0, c = 0, d = 0, prefix = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%u.%u.%u.%u/%u%c", &a, &b, &c, &d, &prefix, &tail) != 5) return std::nullopt;
  if (a > 255 || b > 255 || c > 255 || d > 255 || prefix > 32) return std::nullopt;
  const std::uint32_t addr = a << 24 | b << 16 | c << 8 | d;
  const std::uint32_t mask = prefix == 0 ? 0 : ~std::uint32_t{0} << (32 - prefix);
  return Ipv4Range{addr & mask, (addr & mask) | ~mask};
}

}  // namespace

std::vector<std::string> check_portfolio_rules(const std::vector<DedicatedLink>& links) {
  std::vector<std::string> violations;

  std::map<std::string, std::vector<const DedicatedLink*>> azure_by_peering;
  for (const auto& link : links) {
    if (link.provider == "Azure") azure_by_peering[link.peering_location].push_back(&link);
  }
  for (const auto& [peering, group] : azure_by_peering) {
    if (group.size() < 2) continue;
    std::map<std::string, std::string> seen;
    for (const auto* link : group) {
      if (!link->vpn_id) {
        violations.push_back("Azure link '" + link->id + "' shares peering location '" + peering +
                             "' and needs its own vpn_id");
        continue;
      }
      const auto [it, inserted] = seen.try_emplace(*link->vpn_id, link->id);
      if (!inserted) {
        violations.push_back("Azure links '" + it->second + "' and '" + link->id + "' at '" + peering +
                             "' share VPN '" + *link->vpn_id + "'");
      }
    }
  }

  std::vector<std::pair<const DedicatedLink*, Ipv4Range>> ranges;
  for (const auto& link : links) {
    if (!link.ip_range) continue;
    const auto range = parse_cidr(*link.ip_range);
    if (!range) {
      violations.push_back("link '" + link.id + "' has malformed ip_range '" + *link.ip_range + "'");
      continue;
    }
    for (const auto& [other, r] : ranges) {
      if (range->first <= r.last && r.first <= range->last) {
        violations.push_back("ip_range of link '" + link.id + "' overlaps link '" + other->id + "'");
      }
    }
    ranges.emplace_back(&link, *range);
  }
  return violations;
}

}  // namespace burst
