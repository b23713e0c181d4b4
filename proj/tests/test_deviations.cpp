#include <gtest/gtest.h>

#include "driver.hpp"
#include "rcl/deviations.hpp"
#include "rcl/naive.hpp"
#include "rcl/protocol.hpp"
#include "rcl/simulator.hpp"

using namespace rcl;
using rcl::testing::Driver;
using rcl::testing::make_setup;

namespace {

StrategySpec single(AgentId deviator, DeviationSpec d) {
    StrategySpec s;
    s.deviator = deviator;
    s.deviations.push_back(d);
    return s;
}

Driver build(ProtocolKind protocol, int n, int f, const std::vector<Preference>& prefs,
             const StrategySpec* spec, std::uint64_t seed = 1) {
    Driver d;
    for (AgentId a = 0; a < n; ++a) d.agents.push_back(make_agent(protocol, make_setup(a, prefs[a], n, f, seed), spec));
    return d;
}

}  // namespace

TEST(Deviations, KindNamesRoundTrip) {
    for (int k = 0; k <= static_cast<int>(DeviationKind::naive_exploit); ++k) {
        const auto kind = static_cast<DeviationKind>(k);
        EXPECT_EQ(deviation_kind_from_string(to_string(kind)), kind);
    }
    EXPECT_FALSE(deviation_kind_from_string("teleport").has_value());
}

TEST(Deviations, NoopSpecBuildsHonestAgent) {
    StrategySpec s;
    s.deviator = 1;
    EXPECT_TRUE(s.is_noop());
    auto a = make_agent(ProtocolKind::cons, make_setup(1, 0, 4, 1), &s);
    EXPECT_NE(dynamic_cast<ConsAgent*>(a.get()), nullptr);
}

TEST(Deviations, ValidateSpecRejectsBadInput) {
    DeviationSpec d;
    d.kind = DeviationKind::pretend_crash;
    d.round = 2;
    EXPECT_THROW(validate_spec(single(7, d), ProtocolKind::cons, 4, 1), std::invalid_argument);
    d.round = 9;
    EXPECT_THROW(validate_spec(single(0, d), ProtocolKind::cons, 4, 1), std::invalid_argument);
    DeviationSpec z;
    z.kind = DeviationKind::bad_z;
    EXPECT_THROW(validate_spec(single(0, z), ProtocolKind::naive, 4, 1), std::invalid_argument);
    EXPECT_NO_THROW(validate_spec(naive_exploit(0), ProtocolKind::naive, 4, 1));
}

TEST(Deviations, PretendCrashSendsRoundOneOnly) {
    DeviationSpec d;
    d.kind = DeviationKind::pretend_crash;
    d.round = 2;
    const auto spec = single(0, d);
    Driver drv = build(ProtocolKind::cons, 5, 2, {1, 0, 0, 1, 0}, &spec);
    for (int m = 1; m <= 3; ++m) drv.step(m);
    EXPECT_EQ(drv.from(0, 1).size(), 4u);
    EXPECT_TRUE(drv.from(0, 2).empty());
    EXPECT_TRUE(drv.from(0, 3).empty());
    // the others see an ordinary round-2 crash and still agree
    const Decision first = drv.agents[1]->decision();
    EXPECT_TRUE(is_value(first));
    for (AgentId a = 2; a < 5; ++a) EXPECT_EQ(drv.agents[a]->decision(), first);
}

TEST(Deviations, LieInitialValueFlipsEveryRoundOnePref) {
    DeviationSpec d;
    d.kind = DeviationKind::lie_initial_value;
    const auto spec = single(2, d);
    Driver drv = build(ProtocolKind::cons, 4, 1, {0, 0, 1, 0}, &spec);
    drv.step(1);
    const auto out = drv.from(2, 1);
    ASSERT_EQ(out.size(), 3u);
    for (const auto& m : out) EXPECT_EQ(std::get<Round1Payload>(m.payload).pref, 0);
}

TEST(Deviations, LieInitialValueSubsetOfTargets) {
    DeviationSpec d;
    d.kind = DeviationKind::lie_initial_value;
    d.targets = AgentSet::single(3);
    const auto spec = single(2, d);
    Driver drv = build(ProtocolKind::cons, 4, 1, {0, 0, 1, 0}, &spec);
    drv.step(1);
    for (const auto& m : drv.from(2, 1)) {
        EXPECT_EQ(std::get<Round1Payload>(m.payload).pref, m.receiver == 3 ? 0 : 1);
    }
}

TEST(Deviations, StatusLieClaimsCrashOfLiveSender) {
    DeviationSpec d;
    d.kind = DeviationKind::status_lie;
    d.variant = StatusLieVariant::b;
    d.subject = 1;
    d.round = 2;
    const auto spec = single(0, d);
    Driver drv = build(ProtocolKind::cons, 5, 2, {0, 1, 0, 1, 0}, &spec);
    drv.step(1);
    drv.step(2);
    // subject 1's round-1 message reached the deviator, yet its round-2 report says otherwise;
    // the subject itself is told the truth
    const auto out = drv.from(0, 2);
    ASSERT_EQ(out.size(), 4u);
    for (const auto& m : out) {
        if (m.receiver == 1) continue;
        const StatusReport* sr = report_of(m.payload);
        ASSERT_NE(sr, nullptr);
        EXPECT_EQ((*sr)[1].crash_round, 1);
        EXPECT_EQ((*sr)[1].reporter, 0);
    }
}

TEST(Deviations, MalformedMessageDetected) {
    DeviationSpec d;
    d.kind = DeviationKind::malformed;
    d.round = 1;
    d.target = 1;
    const auto spec = single(0, d);
    Driver drv = build(ProtocolKind::cons, 4, 1, {0, 1, 0, 1}, &spec);
    drv.step(1);
    EXPECT_EQ(drv.agents[1]->report().rule, Rule::malformed);
    EXPECT_EQ(drv.agents[1]->decision(), Decision::bot);
}

TEST(Deviations, WrongDecideWithRealCrashBreaksConsensus) {
    Context ctx;
    ctx.n = 4;
    ctx.f = 1;
    ctx.prefs = {1, 1, 0, 1};
    ctx.pattern.failures = {Failure{3, 1, {}}};
    DeviationSpec d;
    d.kind = DeviationKind::wrong_decide;
    d.round = 1;
    d.value = Decision::bot;
    Profile p;
    p.deviation = single(0, d);
    const auto rec = run(ctx, p, Seed{5});
    EXPECT_FALSE(rec.outcome.consensus.has_value());
    EXPECT_EQ(rec.outcome.decisions[0], Decision::bot);
}

TEST(Deviations, NaiveExploitGoesSilentWhenInMinority) {
    const auto spec = naive_exploit(0);
    Driver drv = build(ProtocolKind::naive, 5, 2, {1, 0, 0, 0, 0}, &spec);
    for (int m = 1; m <= 3; ++m) drv.step(m);
    EXPECT_EQ(drv.from(0, 1).size(), 4u);
    EXPECT_TRUE(drv.from(0, 2).empty());
    EXPECT_TRUE(drv.from(0, 3).empty());
}

TEST(Deviations, NaiveExploitHonestWithoutIncentive) {
    const auto spec = naive_exploit(0);
    Driver drv = build(ProtocolKind::naive, 5, 2, {0, 0, 0, 0, 0}, &spec);
    for (int m = 1; m <= 3; ++m) drv.step(m);
    EXPECT_EQ(drv.from(0, 2).size(), 4u);
    EXPECT_EQ(drv.agents[0]->decision(), Decision::zero);
}

TEST(Deviations, BadSharesCaught) {
    DeviationSpec d;
    d.kind = DeviationKind::bad_shares;
    d.mode = BadSharesMode::non_collinear;
    Context ctx;
    ctx.n = 4;
    ctx.f = 1;
    ctx.prefs = {1, 0, 0, 1};
    Profile p;
    p.deviation = single(0, d);
    const auto rec = run(ctx, p, Seed{2});
    EXPECT_TRUE(rec.honest_detection());
    EXPECT_FALSE(rec.outcome.consensus.has_value());
}

TEST(Deviations, SeFlagKeepsDeviatorRunning) {
    // with se the deviator skips punishment after its own deviation
    DeviationSpec d;
    d.kind = DeviationKind::crash_then_send;
    d.round = 1;
    d.targets = AgentSet::single(1);
    d.resume_round = 2;
    d.target = 2;
    StrategySpec plain = single(0, d);
    StrategySpec se = plain;
    se.se = true;
    Context ctx;
    ctx.n = 5;
    ctx.f = 2;
    ctx.prefs = {1, 0, 0, 1, 0};
    Profile p;
    p.params.n = 5;
    p.params.f = 2;
    p.deviation = plain;
    const auto r1 = run(ctx, p, Seed{4});
    p.deviation = se;
    const auto r2 = run(ctx, p, Seed{4});
    EXPECT_TRUE(r1.honest_detection());
    EXPECT_TRUE(r2.honest_detection());
    ASSERT_TRUE(r1.reports[0].rule.has_value());
    ASSERT_TRUE(r2.reports[0].rule.has_value());
    EXPECT_EQ(r1.outcome.decisions[0], Decision::bot);
    EXPECT_TRUE(is_value(r2.outcome.decisions[0]));
}
