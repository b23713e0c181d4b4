#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <tuple>

#include "rcl/harness.hpp"
#include "rcl/protocol.hpp"
#include "rcl/simulator.hpp"

using namespace rcl;

namespace {

Context make_context(int n, int f, std::vector<Failure> failures, std::vector<Preference> prefs) {
    Context c;
    c.n = n;
    c.f = f;
    c.pattern.failures = std::move(failures);
    c.prefs = std::move(prefs);
    return c;
}

Profile cons_profile(int n, int f) {
    Profile p;
    p.params.n = n;
    p.params.f = f;
    return p;
}

}  // namespace

TEST(Run, NoFailuresConsensusIsDictatorPreference) {
    const auto ctx = make_context(4, 1, {}, {1, 0, 0, 1});
    for (int idx = 0; idx < 64; ++idx) {
        RunOptions opt;
        opt.lottery.resize(4);
        std::vector<std::uint64_t> x0(4);
        int rest = idx * 4 + idx % 4;
        for (AgentId a = 0; a < 4; ++a) {
            x0[a] = static_cast<std::uint64_t>(rest % 4);
            rest /= 4;
            opt.lottery[a] = std::vector<std::uint64_t>{x0[a], 0};
        }
        const auto rec = run(ctx, cons_profile(4, 1), Seed{11}, opt);
        const AgentId dictator = select_dictator(AgentSet::all(4), x0, 4);
        ASSERT_TRUE(rec.outcome.consensus.has_value());
        EXPECT_EQ(*rec.outcome.consensus, ctx.prefs[dictator]);
        EXPECT_EQ(rec.reports[0].dictator, dictator);
    }
}

TEST(Run, SilentRoundOneCrashExcludedFromCandidates) {
    const auto ctx = make_context(4, 1, {Failure{2, 1, {}}}, {1, 1, 0, 1});
    for (std::uint64_t trial = 0; trial < 200; ++trial) {
        RunOptions opt;
        opt.trial = trial;
        const auto rec = run(ctx, cons_profile(4, 1), Seed{3}, opt);
        ASSERT_TRUE(rec.outcome.consensus.has_value());
        EXPECT_EQ(*rec.outcome.consensus, 1);
        EXPECT_TRUE(rec.outcome.violations.empty());
        for (AgentId a : {0, 1, 3}) {
            EXPECT_FALSE(rec.reports[a].candidates.contains(2));
            EXPECT_EQ(rec.reports[a].candidates.size(), 3);
        }
    }
}

TEST(Run, RejectsInadmissiblePattern) {
    const auto ctx = make_context(4, 1, {Failure{0, 1, {}}, Failure{1, 1, {}}}, {0, 0, 0, 0});
    EXPECT_THROW(run(ctx, cons_profile(4, 1), Seed{1}), std::invalid_argument);
    EXPECT_THROW(run(make_context(4, 1, {}, {0, 0, 0, 0}), cons_profile(5, 1), Seed{1}), std::invalid_argument);
}

TEST(Run, DeliveryMatchesFailurePattern) {
    // oracle: i's round-m message reaches r iff i is running at m (and reaches r if i crashes at m
    // only when r is in A), and r is still running at m
    const int n = 5;
    const int f = 2;
    PiParams pi;
    pi.n = n;
    pi.f = f;
    pi.crash_prob = 0.3;
    for (std::uint64_t trial = 0; trial < 300; ++trial) {
        const Context ctx = sample_context(pi, Seed{8}, trial);
        RunOptions opt;
        opt.trial = trial;
        opt.record_log = true;
        const auto rec = run(ctx, cons_profile(n, f), Seed{8}, opt);
        if (rec.honest_detection()) FAIL() << "honest detection in trial " << trial;
        std::set<std::tuple<int, int, int>> expected;
        for (int m = 1; m <= f + 1; ++m) {
            for (AgentId s = 0; s < n; ++s) {
                const Failure* fs = ctx.pattern.find(s);
                if (fs && fs->round < m) continue;
                for (AgentId r = 0; r < n; ++r) {
                    if (r == s) continue;
                    const Failure* fr = ctx.pattern.find(r);
                    if (fr && fr->round <= m) continue;
                    if (fs && fs->round == m && !fs->recipients.contains(r)) continue;
                    expected.emplace(s, r, m);
                }
            }
        }
        std::set<std::tuple<int, int, int>> got;
        for (const auto& d : rec.log) got.emplace(d.sender, d.receiver, d.round);
        ASSERT_EQ(got, expected) << "trial " << trial;
        ASSERT_EQ(got.size(), rec.log.size());
    }
}

TEST(Run, SameSeedSameTrace) {
    PiParams pi;
    pi.n = 5;
    pi.f = 2;
    pi.crash_prob = 0.1;
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        const Context ctx = sample_context(pi, Seed{42}, trial);
        RunOptions opt;
        opt.trial = trial;
        opt.record_trace = true;
        const auto a = run(ctx, cons_profile(5, 2), Seed{42}, opt);
        const auto b = run(ctx, cons_profile(5, 2), Seed{42}, opt);
        EXPECT_EQ(a.trace, b.trace);
        EXPECT_FALSE(a.trace.empty());
    }
}

TEST(Run, TraceHasHeadRoundsAndFinalLine) {
    const auto ctx = make_context(4, 1, {}, {0, 1, 0, 1});
    RunOptions opt;
    opt.record_trace = true;
    const auto rec = run(ctx, cons_profile(4, 1), Seed{1}, opt);
    int lines = 0;
    for (char c : rec.trace) lines += c == '\n';
    // head + (send, update) per round + final
    EXPECT_EQ(lines, 1 + 2 * 2 + 1);
    const auto last = rec.trace.substr(rec.trace.rfind('\n', rec.trace.size() - 2) + 1);
    EXPECT_TRUE(Json::parse(last).contains("outcome"));
}

TEST(SampleContext, NoCrashProbabilityNoFailures) {
    PiParams pi;
    pi.n = 5;
    pi.f = 2;
    for (std::uint64_t t = 0; t < 500; ++t) EXPECT_TRUE(sample_context(pi, Seed{1}, t).pattern.failures.empty());
}

TEST(SampleContext, ZeroFaultBudgetNoFailures) {
    PiParams pi;
    pi.n = 4;
    pi.f = 0;
    pi.crash_prob = 0.2;
    for (std::uint64_t t = 0; t < 500; ++t) EXPECT_TRUE(sample_context(pi, Seed{1}, t).pattern.failures.empty());
}

TEST(SampleContext, FixedPrefsAndAdmissible) {
    PiParams pi;
    pi.n = 5;
    pi.f = 2;
    pi.crash_prob = 0.4;
    pi.prefs = std::vector<Preference>{1, 0, 1, 1, 0};
    for (std::uint64_t t = 0; t < 500; ++t) {
        const auto c = sample_context(pi, Seed{2}, t);
        EXPECT_EQ(c.prefs, *pi.prefs);
        EXPECT_TRUE(validate_pattern(c.pattern, 5, 2).empty());
        EXPECT_EQ(canonicalize(c.pattern, 5), c.pattern);
    }
}

TEST(SampleContext, RejectsBadParameters) {
    PiParams pi;
    pi.crash_prob = 1.5;
    EXPECT_THROW(validate_pi(pi), std::invalid_argument);
    pi.crash_prob = 0.1;
    pi.prefs = std::vector<Preference>{0, 1};
    EXPECT_THROW(validate_pi(pi), std::invalid_argument);
}

TEST(SampleContext, FaultProbabilitySymmetricAcrossAgents) {
    PiParams pi;
    pi.n = 5;
    pi.f = 2;
    pi.crash_prob = 0.05;
    const std::uint64_t samples = 100000;
    std::vector<std::uint64_t> faulty(5, 0);
    std::vector<std::uint64_t> ones(5, 0);
    for (std::uint64_t t = 0; t < samples; ++t) {
        const auto c = sample_context(pi, Seed{17}, t);
        for (AgentId a = 0; a < 5; ++a) {
            faulty[a] += c.pattern.is_faulty(a);
            ones[a] += c.prefs[a];
        }
    }
    const double p = static_cast<double>(faulty[0]) / samples;
    for (AgentId a = 1; a < 5; ++a) {
        const double q = static_cast<double>(faulty[a]) / samples;
        // difference of two proportions, 3 standard errors
        const double se = std::sqrt((p * (1 - p) + q * (1 - q)) / samples);
        EXPECT_LT(std::abs(p - q), 3 * se) << "agent " << a;
        EXPECT_NEAR(static_cast<double>(ones[a]) / samples, 0.5, 3 * std::sqrt(0.25 / samples));
    }
}

TEST(Reachability, NoCrashesAlwaysReachable) {
    PiParams pi;
    pi.n = 5;
    pi.f = 2;
    ReachabilityScenario sc;
    sc.j = 0;
    sc.i = 1;
    sc.m = 1;
    const auto est = estimate_reachability(pi, sc, 1000, Seed{1});
    EXPECT_EQ(est.unreachable, 0u);
    EXPECT_EQ(est.estimate, 0.0);
}

TEST(Reachability, ForcedMessageOnlyToDeviatorUnreachable) {
    PiParams pi;
    pi.n = 5;
    pi.f = 2;
    pi.crash_prob = 0.05;
    ReachabilityScenario sc;
    sc.j = 0;
    sc.i = 1;
    sc.m = 2;
    sc.forced.failures = {Failure{0, 2, AgentSet::single(1)}};
    const auto est = estimate_reachability(pi, sc, 500, Seed{1});
    EXPECT_EQ(est.estimate, 1.0);
}

TEST(Reachability, SupportsBoundUnderSmallCrashProbability) {
    PiParams pi;
    pi.n = 5;
    pi.f = 2;
    pi.crash_prob = 0.05;
    ReachabilityScenario sc;
    sc.j = 0;
    sc.i = 1;
    sc.m = 1;
    const auto est = estimate_reachability(pi, sc, 100000, Seed{1});
    EXPECT_DOUBLE_EQ(est.bound, 0.1);
    EXPECT_TRUE(est.within_bound);
    EXPECT_LE(est.ci_high, est.bound);
}

TEST(Reachability, ReachableWithoutHandExample) {
    // 0 crashes in round 1 reaching only 1; 1 receives but never relays
    const auto ctx = make_context(4, 1, {Failure{0, 1, AgentSet::single(1)}}, {0, 0, 0, 0});
    EXPECT_EQ(reachable_without(ctx, 0, 1, 1), (AgentSet::single(0) | AgentSet::single(1)));
    const auto open = make_context(4, 1, {}, {0, 0, 0, 0});
    EXPECT_EQ(reachable_without(open, 0, 1, 1), AgentSet::all(4));
    // 2 only hears 0 through 1
    const auto relay = make_context(4, 1, {Failure{0, 1, AgentSet::single(1)}}, {0, 0, 0, 0});
    EXPECT_FALSE(reachable_without(relay, 0, 1, 1).contains(2));
    EXPECT_TRUE(reachable_without(relay, 0, 3, 1).contains(2));
}

TEST(Wilson, KnownValues) {
    const auto [lo, hi] = wilson_interval(0, 100);
    EXPECT_NEAR(lo, 0.0, 1e-12);
    EXPECT_NEAR(hi, 0.037, 1e-3);
    const auto [lo2, hi2] = wilson_interval(50, 100);
    EXPECT_NEAR(lo2, 0.4038, 1e-3);
    EXPECT_NEAR(hi2, 0.5962, 1e-3);
}
