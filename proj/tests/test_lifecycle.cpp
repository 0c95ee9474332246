#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "burst/error.hpp"
#include "burst/lifecycle.hpp"

namespace burst {
namespace {

std::vector<LogRecord> happy_path(Provider provider, double step_h = 1.0) {
  const auto def = workflow_definition(provider);
  std::vector<LogRecord> records;
  double t = 0.0;
  for (const auto& s : def.steps) {
    records.push_back({t, provider, "link-1", s.name, s.actor, records.size() + 1});
    t += step_h;
  }
  return records;
}

std::vector<LogRecord> read_log(const std::string& name) {
  std::ifstream in(std::string(BURST_SCENARIO_DIR) + "/logs/" + name);
  EXPECT_TRUE(in.good()) << name;
  return parse_event_log(in);
}

TEST(WorkflowDefinition, ShapeOfEachProvider) {
  const auto gcp = workflow_definition(Provider::GCP);
  const auto prov = gcp.provisioning();
  ASSERT_EQ(prov.size(), 5u);
  EXPECT_EQ(std::count_if(prov.begin(), prov.end(), [](auto* s) { return s->actor == Actor::CloudUser; }), 4);
  EXPECT_EQ(prov.back()->actor, Actor::OnPremNetworkEngineer);

  const auto aws = workflow_definition(Provider::AWS);
  EXPECT_EQ(aws.provisioning().front()->actor, Actor::OnPremNetworkEngineer);
  EXPECT_TRUE(aws.provisioning().front()->prerequisites.empty());

  for (const auto p : {Provider::GCP, Provider::Azure, Provider::AWS}) {
    const auto def = workflow_definition(p);
    EXPECT_TRUE(def.is_acyclic()) << to_string(p);
    EXPECT_TRUE(std::any_of(def.steps.begin(), def.steps.end(), [](const WorkflowStep& s) { return s.emits_key; }));
    EXPECT_EQ(std::count_if(def.steps.begin(), def.steps.end(),
                            [](const WorkflowStep& s) { return s.billing == BillingEffect::StartsBilling; }),
              1);
  }
}

TEST(WorkflowDefinition, CycleIsDetected) {
  auto def = workflow_definition(Provider::GCP);
  def.steps.front().prerequisites.push_back(def.steps.back().name);
  EXPECT_FALSE(def.is_acyclic());
}

TEST(ApplyStep, FullGcpSequenceBills) {
  const auto def = workflow_definition(Provider::GCP);
  WorkflowState state;
  double t = 0.0;
  for (const auto* s : def.provisioning()) state = apply_step(def, state, s->name, s->actor, t += 1.0);
  EXPECT_TRUE(state.billing_active);
  EXPECT_EQ(state.billing_started_h, 5.0);
  state = apply_step(def, state, "destroy_cloud_router", Actor::CloudUser, 15.0);
  EXPECT_FALSE(state.billing_active);
}

TEST(ApplyStep, Errors) {
  const auto def = workflow_definition(Provider::GCP);
  const WorkflowState empty;
  auto kind = [&](const WorkflowState& s, const char* step, Actor a) {
    try {
      apply_step(def, s, step, a, 0.0);
    } catch (const WorkflowError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "no error for " << step;
    return WorkflowErrorKind::UnknownStep;
  };
  EXPECT_EQ(kind(empty, "create_vpc", Actor::OnPremNetworkEngineer), WorkflowErrorKind::ActorViolation);
  EXPECT_EQ(kind(empty, "create_subnets", Actor::CloudUser), WorkflowErrorKind::Ordering);
  EXPECT_EQ(kind(empty, "create_tunnel", Actor::CloudUser), WorkflowErrorKind::UnknownStep);
  const auto once = apply_step(def, empty, "create_vpc", Actor::CloudUser, 0.0);
  EXPECT_EQ(kind(once, "create_vpc", Actor::CloudUser), WorkflowErrorKind::Duplicate);
}

TEST(ApplyStep, ReplayIsDeterministic) {
  for (const auto p : {Provider::GCP, Provider::Azure, Provider::AWS}) {
    const auto def = workflow_definition(p);
    WorkflowState a, b;
    for (const auto& r : happy_path(p)) {
      a = apply_step(def, a, r.step, r.actor, r.t_h);
      b = apply_step(def, b, r.step, r.actor, r.t_h);
    }
    EXPECT_EQ(a, b);
    EXPECT_FALSE(a.billing_active);
  }
}

TEST(ApplyStep, AzureJointStopNeedsBothSides) {
  const auto def = workflow_definition(Provider::Azure);
  WorkflowState s;
  for (const auto* step : def.provisioning()) s = apply_step(def, s, step->name, step->actor, 0.0);
  s = apply_step(def, s, "onprem_delete_expressroute", Actor::OnPremNetworkEngineer, 1.0);
  EXPECT_TRUE(s.billing_active);
  s = apply_step(def, s, "delete_expressroute", Actor::CloudUser, 2.0);
  EXPECT_FALSE(s.billing_active);
}

// Every non-canonical ordering of a chain violates some prerequisite.
TEST(CheckWorkflows, PermutationsOfProvisioningAreRejected) {
  std::mt19937_64 rng(12);
  for (const auto p : {Provider::GCP, Provider::Azure, Provider::AWS}) {
    const auto def = workflow_definition(p);
    const auto prov = def.provisioning();
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<std::size_t> order(prov.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::shuffle(order.begin(), order.end(), rng);
      const bool canonical = std::is_sorted(order.begin(), order.end());
      std::vector<LogRecord> records;
      for (std::size_t i = 0; i < order.size(); ++i) {
        const auto* s = prov[order[i]];
        records.push_back({static_cast<double>(i), p, "l", s->name, s->actor, i + 1});
      }
      const auto verdicts = check_workflows(records);
      ASSERT_EQ(verdicts.size(), 1u);
      EXPECT_EQ(verdicts[0].ok, canonical);
    }
  }
}

TEST(BillingHours, Examples) {
  std::vector<LogRecord> gcp{{0.0, Provider::GCP, "l", "onprem_oess_routing", Actor::OnPremNetworkEngineer, 1},
                             {10.0, Provider::GCP, "l", "destroy_cloud_router", Actor::CloudUser, 2}};
  EXPECT_DOUBLE_EQ(billing_hours(gcp, Provider::GCP), 10.0);

  std::vector<LogRecord> azure{{0.0, Provider::Azure, "l", "create_expressroute", Actor::CloudUser, 1},
                               {5.0, Provider::Azure, "l", "delete_expressroute", Actor::CloudUser, 2},
                               {8.0, Provider::Azure, "l", "onprem_delete_expressroute", Actor::OnPremNetworkEngineer, 3}};
  EXPECT_DOUBLE_EQ(billing_hours(azure, Provider::Azure), 8.0);
  std::swap(azure[1].t_h, azure[2].t_h);
  std::swap(azure[1], azure[2]);
  EXPECT_DOUBLE_EQ(billing_hours(azure, Provider::Azure), 8.0);

  const std::vector<LogRecord> never{{0.0, Provider::AWS, "l", "create_vpc", Actor::CloudUser, 1}};
  EXPECT_DOUBLE_EQ(billing_hours(never, Provider::AWS), 0.0);

  const std::vector<LogRecord> stop_only{{3.0, Provider::AWS, "l", "delete_vif", Actor::CloudUser, 1}};
  EXPECT_THROW(billing_hours(stop_only, Provider::AWS), BillingInconsistency);
}

TEST(BillingHours, OpenBillingRunsToLastEvent) {
  const std::vector<LogRecord> open{{1.0, Provider::AWS, "l", "create_vif", Actor::CloudUser, 1},
                                    {4.0, Provider::AWS, "l", "configure_routing", Actor::CloudUser, 2}};
  EXPECT_DOUBLE_EQ(billing_hours(open, Provider::AWS), 3.0);
}

TEST(BillingHours, MovableStart) {
  auto def = workflow_definition(Provider::GCP);
  def.set_billing_start("create_interconnect");
  const auto records = happy_path(Provider::GCP);
  EXPECT_DOUBLE_EQ(billing_hours(records, def), 2.0);
  EXPECT_THROW(def.set_billing_start("nope"), LookupError);
}

TEST(EventLog, ShippedLogs) {
  struct Case {
    const char* file;
    bool ok;
    double hours;
  };
  for (const auto& c : {Case{"gcp_happy.log", true, 26.0}, Case{"azure_happy.log", true, 28.0},
                        Case{"aws_happy.log", true, 24.0}, Case{"aws_user_initiated.log", false, 0.0},
                        Case{"azure_vng_first.log", false, 0.0}, Case{"empty.log", true, 0.0}}) {
    const auto verdicts = check_workflows(read_log(c.file));
    const bool ok = std::all_of(verdicts.begin(), verdicts.end(), [](const LinkVerdict& v) { return v.ok; });
    EXPECT_EQ(ok, c.ok) << c.file;
    if (c.ok) {
      double hours = 0.0;
      for (const auto& v : verdicts) hours += v.billing_hours;
      EXPECT_NEAR(hours, c.hours, 1e-9) << c.file;
    }
  }
}

TEST(EventLog, RejectionReasons) {
  const auto aws = check_workflows(read_log("aws_user_initiated.log"));
  ASSERT_FALSE(aws.empty());
  EXPECT_NE(aws[0].errors.front().find("OnPremNetworkEngineer"), std::string::npos);
  const auto azure = check_workflows(read_log("azure_vng_first.log"));
  ASSERT_FALSE(azure.empty());
  EXPECT_NE(azure[0].errors.front().find("create_expressroute"), std::string::npos);
}

TEST(EventLog, MalformedLinesCarryLineNumbers) {
  std::istringstream in("t_h,provider,link_id,step,actor\n"
                        "0.0,GCP,l,create_vpc,CloudUser\n"
                        "x,GCP,l,create_subnets,CloudUser\n"
                        "\n"
                        "1.0,Oracle,l,create_subnets,CloudUser\n"
                        "1.0,GCP,l,create_subnets\n");
  try {
    parse_event_log(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 3"), std::string::npos);
    EXPECT_NE(msg.find("line 5"), std::string::npos);
    EXPECT_NE(msg.find("line 6"), std::string::npos);
    EXPECT_EQ(msg.find("line 2"), std::string::npos);
  }
}

TEST(EventLog, OutOfOrderTimestampsAndProviderChange) {
  std::vector<LogRecord> r = happy_path(Provider::GCP);
  r[2].t_h = -1.0;
  EXPECT_FALSE(check_workflows(r)[0].ok);
  r = happy_path(Provider::GCP);
  r[1].provider = Provider::AWS;
  EXPECT_FALSE(check_workflows(r)[0].ok);
}

TEST(EventLog, JsonSummary) {
  auto records = happy_path(Provider::AWS);
  for (auto r : happy_path(Provider::GCP)) {
    r.link_id = "link-2";
    records.push_back(r);
  }
  const auto verdicts = check_workflows(records);
  ASSERT_EQ(verdicts.size(), 2u);
  const auto j = to_json(verdicts);
  EXPECT_TRUE(j.at("ok").get<bool>());
  EXPECT_DOUBLE_EQ(j.at("billing_hours").get<double>(), (12.0 - 8.0) + (5.0 - 4.0));
  EXPECT_EQ(j.at("links").size(), 2u);
}

DedicatedLink azure_link(const std::string& id, const std::string& peering, std::optional<std::string> vpn,
                         std::optional<std::string> ip) {
  DedicatedLink l;
  l.id = id;
  l.provider = "Azure";
  l.peering_location = peering;
  l.vpn_id = std::move(vpn);
  l.ip_range = std::move(ip);
  return l;
}

TEST(PortfolioRules, VpnAndAddressRules) {
  EXPECT_TRUE(check_portfolio_rules({azure_link("a", "Chicago", std::nullopt, "10.0.0.0/24"),
                                     azure_link("b", "Seattle", std::nullopt, "10.0.1.0/24")})
                  .empty());
  EXPECT_EQ(check_portfolio_rules({azure_link("a", "Chicago", "v1", std::nullopt),
                                   azure_link("b", "Chicago", "v1", std::nullopt)})
                .size(),
            1u);
  EXPECT_EQ(check_portfolio_rules({azure_link("a", "Chicago", std::nullopt, std::nullopt),
                                   azure_link("b", "Chicago", "v2", std::nullopt)})
                .size(),
            1u);
  EXPECT_EQ(check_portfolio_rules({azure_link("a", "X", std::nullopt, "10.0.0.0/16"),
                                   azure_link("b", "Y", std::nullopt, "10.0.5.0/24"),
                                   azure_link("c", "Z", std::nullopt, "10.0.5.128/25")})
                .size(),
            3u);
  EXPECT_EQ(check_portfolio_rules({azure_link("a", "X", std::nullopt, "10.0.0.0/33")}).size(), 1u);
}

TEST(Names, RoundTrip) {
  for (const auto p : {Provider::GCP, Provider::Azure, Provider::AWS}) EXPECT_EQ(parse_provider(to_string(p)), p);
  for (const auto a : {Actor::CloudUser, Actor::OnPremNetworkEngineer}) EXPECT_EQ(parse_actor(to_string(a)), a);
  EXPECT_THROW(parse_provider("Oracle"), LookupError);
}

}  // namespace
}  // namespace burst
