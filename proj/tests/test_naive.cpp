#include <gtest/gtest.h>

#include "driver.hpp"
#include "rcl/naive.hpp"
#include "rcl/protocol.hpp"
#include "rcl/simulator.hpp"

using namespace rcl;
using rcl::testing::Driver;
using rcl::testing::make_setup;

TEST(NaiveAgent, LotteryDomains) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        NaiveAgent a(make_setup(1, 0, 5, 2, seed));
        ASSERT_EQ(a.lottery().size(), 3u);
        for (int t = 0; t < 3; ++t) EXPECT_LT(a.lottery()[t], static_cast<std::uint64_t>(5 - t));
    }
}

TEST(NaiveAgent, AllTuplesSpreadWithoutFailures) {
    Driver d;
    for (AgentId a = 0; a < 4; ++a) d.agents.push_back(std::make_unique<NaiveAgent>(make_setup(a, a % 2, 4, 1)));
    d.step(1);
    d.step(2);
    const Decision first = d.agents[0]->decision();
    EXPECT_TRUE(is_value(first));
    for (const auto& a : d.agents) {
        EXPECT_EQ(a->decision(), first);
        EXPECT_EQ(a->report().candidates, AgentSet::all(4));
        EXPECT_EQ(a->report().t, 0);
    }
}

TEST(NaiveAgent, SameDictatorAsConsensusProtocolPerTuple) {
    // both protocols apply the same rule to x[0] when nobody fails
    Context ctx;
    ctx.n = 4;
    ctx.f = 1;
    ctx.prefs = {1, 0, 0, 1};
    Profile cons;
    Profile naive;
    naive.protocol = ProtocolKind::naive;
    for (int idx = 0; idx < 256; ++idx) {
        RunOptions opt;
        opt.lottery.resize(4);
        int rest = idx;
        for (AgentId a = 0; a < 4; ++a) {
            opt.lottery[a] = std::vector<std::uint64_t>{static_cast<std::uint64_t>(rest % 4), 0};
            rest /= 4;
        }
        const auto rc = run(ctx, cons, Seed{3}, opt);
        const auto rn = run(ctx, naive, Seed{3}, opt);
        ASSERT_EQ(rc.reports[0].dictator, rn.reports[0].dictator);
        ASSERT_EQ(rc.outcome.consensus, rn.outcome.consensus);
    }
}

TEST(NaiveAgent, ConflictingTuplesDecideBot) {
    NaiveAgent a(make_setup(0, 0, 4, 1));
    NaivePayload p1{{NaiveTuple{2, 1, {0, 0}}}};
    NaivePayload p2{{NaiveTuple{2, 0, {0, 0}}}};
    std::vector<RoundMessage> round1{RoundMessage{1, 0, 1, p1}, RoundMessage{2, 0, 1, p2},
                                     RoundMessage{3, 0, 1, NaivePayload{{NaiveTuple{3, 0, {1, 1}}}}}};
    a.receive(1, round1);
    a.update(1);
    EXPECT_TRUE(a.conflict());
    a.receive(2, {});
    a.update(2);
    EXPECT_EQ(a.decision(), Decision::bot);
}

TEST(NaiveAgent, TooFewHoldersDecideBot) {
    // own tuple plus one other: n - f - 1 = 2 holders at n = 4, f = 1
    NaiveAgent a(make_setup(0, 0, 4, 1));
    std::vector<RoundMessage> round1{RoundMessage{1, 0, 1, NaivePayload{{NaiveTuple{1, 1, {2, 1}}}}}};
    a.receive(1, round1);
    a.update(1);
    a.receive(2, {});
    a.update(2);
    EXPECT_EQ(a.decision(), Decision::bot);
}

TEST(NaiveAgent, OutOfRangeTupleIsConflict) {
    NaiveAgent a(make_setup(0, 0, 4, 1));
    std::vector<RoundMessage> round1{RoundMessage{1, 0, 1, NaivePayload{{NaiveTuple{1, 1, {4, 0}}}}}};
    a.receive(1, round1);
    EXPECT_TRUE(a.conflict());
}
