#include <gtest/gtest.h>

#include <omp.h>

#include <algorithm>
#include <numeric>

#include "rcl/harness.hpp"

using namespace rcl;

namespace {

ExperimentConfig base_config(int n, int f, double q, std::uint64_t trials, std::uint64_t seed = 1) {
    ExperimentConfig c;
    c.n = n;
    c.f = f;
    c.pi.n = n;
    c.pi.f = f;
    c.pi.crash_prob = q;
    c.trials = trials;
    c.seed = seed;
    return c;
}

Context fixed_context(int n, int f, std::vector<Preference> prefs, std::vector<Failure> failures = {}) {
    Context c;
    c.n = n;
    c.f = f;
    c.prefs = std::move(prefs);
    c.pattern.failures = std::move(failures);
    return c;
}

bool same(const TrialResult& a, const TrialResult& b) {
    return a.utility == b.utility && a.consensus == b.consensus && a.dictator == b.dictator &&
           a.violations == b.violations && a.honest_detection == b.honest_detection;
}

// Oracle: 1 + sum over k = 1..f of C(n, k) * per_agent^k, per_agent = options of one failure.
std::uint64_t pattern_count(int n, int f) {
    const std::uint64_t others = std::uint64_t{1} << (n - 1);
    const std::uint64_t per_agent = others + static_cast<std::uint64_t>(f) * (others - 1);
    std::uint64_t total = 0;
    for (int k = 0; k <= f; ++k) {
        std::uint64_t choose = 1;
        for (int i = 0; i < k; ++i) choose = choose * (n - i) / (i + 1);
        std::uint64_t pow = 1;
        for (int i = 0; i < k; ++i) pow *= per_agent;
        total += choose * pow;
    }
    return total;
}

}  // namespace

TEST(EnumeratePatterns, CountsMatchCombinatorialOracle) {
    EXPECT_EQ(enumerate_patterns(4, 1).size(), 61u);
    EXPECT_EQ(pattern_count(4, 1), 61u);
    EXPECT_EQ(enumerate_patterns(5, 2).size(), pattern_count(5, 2));
    EXPECT_EQ(enumerate_patterns(3, 1).size(), pattern_count(3, 1));
}

TEST(EnumeratePatterns, AllAdmissibleCanonicalAndDistinct) {
    const auto all = enumerate_patterns(4, 2);
    for (const auto& p : all) {
        EXPECT_TRUE(validate_pattern(p, 4, 2).empty());
        EXPECT_EQ(canonicalize(p, 4), p);
    }
    for (std::size_t i = 1; i < std::min<std::size_t>(all.size(), 400); ++i) EXPECT_FALSE(all[i] == all[i - 1]);
}

TEST(Config, JsonRoundTripAndOverrides) {
    const Json j = Json::parse(R"({
        "n": 5, "f": 2, "beta": [3, 1, 0], "pi": {"crash_prob": 0.05, "pref_prob": 0.3},
        "trials": 10, "seed": 9, "protocol": "cons",
        "deviation": {"deviator": 1, "kind": "bad_z"}, "estimator": "lottery_marginalized"})");
    const auto cfg = config_from_json(j);
    EXPECT_EQ(cfg.n, 5);
    EXPECT_EQ(cfg.beta_of(4).beta0, 3.0);
    EXPECT_EQ(cfg.pi.pref_prob, 0.3);
    ASSERT_TRUE(cfg.deviation.has_value());
    EXPECT_EQ(cfg.deviation->deviator, 1);
    EXPECT_EQ(cfg.estimator, Estimator::lottery_marginalized);
    EXPECT_EQ(config_to_json(config_from_json(config_to_json(cfg))).dump(), config_to_json(cfg).dump());
}

TEST(Config, InvalidConfigsRejected) {
    auto cfg = base_config(4, 1, 0.0, 0);
    EXPECT_THROW(validate_config(cfg), std::invalid_argument);
    EXPECT_THROW(monte_carlo(cfg), std::invalid_argument);
    cfg = base_config(3, 2, 0.0, 10);
    EXPECT_THROW(validate_config(cfg), std::invalid_argument);
    cfg = base_config(4, 1, 0.0, 10);
    cfg.beta = {UtilityParams{1, 2, 0}};
    EXPECT_THROW(validate_config(cfg), std::invalid_argument);
    cfg = base_config(4, 1, 0.0, 10);
    cfg.field_prime = 15;
    EXPECT_THROW(validate_config(cfg), std::invalid_argument);
    EXPECT_THROW(config_from_json(Json::parse(R"({"n":4,"f":1,"protocol":"paxos"})")), std::invalid_argument);
    EXPECT_THROW(config_from_json(Json::parse(R"({"f":1})")), std::invalid_argument);
}

TEST(Kernels, SerialAndParallelBitIdentical) {
    omp_set_num_threads(4);
    for (auto protocol : {ProtocolKind::cons, ProtocolKind::naive}) {
        auto cfg = base_config(5, 2, 0.1, 3000, 21);
        cfg.protocol = protocol;
        if (protocol == ProtocolKind::naive) cfg.deviation = naive_exploit(0);
        const auto profile = cfg.deviant_profile();
        const auto s = run_trials_serial(cfg, profile);
        const auto p = run_trials_parallel(cfg, profile);
        ASSERT_EQ(s.size(), p.size());
        for (std::size_t i = 0; i < s.size(); ++i) ASSERT_TRUE(same(s[i], p[i])) << "trial " << i;
        const auto ss = monte_carlo(cfg, Execution::serial);
        const auto ps = monte_carlo(cfg, Execution::parallel);
        EXPECT_EQ(stats_to_json(ss).dump(), stats_to_json(ps).dump());
    }
}

TEST(Kernels, DeviationGainSerialEqualsParallel) {
    omp_set_num_threads(4);
    auto cfg = base_config(5, 2, 0.05, 2000, 5);
    cfg.deviation = strategy_spec_from_json(Json::parse(R"({"deviator":0,"kind":"status_lie","variant":"b","subject":1,"round":2})"), 5);
    EXPECT_EQ(gain_to_json(deviation_gain(cfg, Execution::serial)).dump(),
              gain_to_json(deviation_gain(cfg, Execution::parallel)).dump());
}

TEST(Aggregate, OrderIndependentCounts) {
    auto cfg = base_config(4, 1, 0.1, 500, 2);
    auto results = run_trials_serial(cfg, cfg.honest_profile());
    const auto a = aggregate(results, 4);
    std::reverse(results.begin(), results.end());
    const auto b = aggregate(results, 4);
    EXPECT_EQ(a.consensus_counts, b.consensus_counts);
    EXPECT_EQ(a.dictator_counts, b.dictator_counts);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(a.mean_utility[i], b.mean_utility[i], 1e-12);
}

TEST(MonteCarlo, HonestNoCrashUniformDictator) {
    const auto s = monte_carlo(base_config(4, 1, 0.0, 8000, 3));
    EXPECT_EQ(s.runs_with_violation, 0u);
    EXPECT_EQ(s.honest_detections, 0u);
    for (int a = 0; a < 4; ++a) {
        EXPECT_LE(s.dictator_ci[a].low, 0.25);
        EXPECT_GE(s.dictator_ci[a].high, 0.25);
    }
}

TEST(MonteCarlo, HonestWithCrashesNoViolations) {
    const auto s = monte_carlo(base_config(5, 2, 0.05, 10000, 4));
    EXPECT_EQ(s.runs_with_violation, 0u);
    EXPECT_EQ(s.honest_detections, 0u);
    EXPECT_EQ(s.no_consensus, 0u);
}

TEST(MonteCarlo, IntervalShrinksWithTrials) {
    const auto small = monte_carlo(base_config(4, 1, 0.05, 1000, 6));
    const auto large = monte_carlo(base_config(4, 1, 0.05, 16000, 6));
    const double ws = small.utility_ci[0].high - small.utility_ci[0].low;
    const double wl = large.utility_ci[0].high - large.utility_ci[0].low;
    EXPECT_NEAR(ws / wl, 4.0, 0.6);
}

TEST(Fairness, ExactProbabilityIsShareOfOnes) {
    auto cfg = base_config(4, 1, 0.0, 2000, 7);
    for (std::uint32_t bits = 0; bits < 16; ++bits) {
        std::vector<Preference> prefs(4);
        int c = 0;
        for (int a = 0; a < 4; ++a) {
            prefs[a] = (bits >> a) & 1u;
            c += prefs[a];
        }
        const auto r = fairness_test(cfg, fixed_context(4, 1, prefs));
        EXPECT_DOUBLE_EQ(r.exact_value_prob[1], c / 4.0) << bits;
        EXPECT_TRUE(r.exact_uniform);
        EXPECT_TRUE(r.exact_bound_holds);
    }
}

TEST(Fairness, CrashedAgentExcluded) {
    auto cfg = base_config(4, 1, 0.0, 2000, 8);
    const auto r = fairness_test(cfg, fixed_context(4, 1, {1, 1, 0, 0}, {Failure{3, 1, {}}}));
    EXPECT_EQ(r.candidates.size(), 3);
    EXPECT_EQ(r.t, 1);
    EXPECT_DOUBLE_EQ(r.exact_value_prob[1], 2.0 / 3.0);
    EXPECT_EQ(r.nonfaulty_with_value[1], 2);
    EXPECT_TRUE(r.passed());
}

TEST(Fairness, InadmissibleContextRejected) {
    auto cfg = base_config(4, 1, 0.0, 100);
    EXPECT_THROW(fairness_test(cfg, fixed_context(4, 1, {0, 0, 0, 0}, {Failure{0, 1, {}}, Failure{1, 1, {}}})),
                 std::invalid_argument);
}

TEST(DeviationGain, NoopIsExactlyZero) {
    auto cfg = base_config(5, 2, 0.1, 2000, 9);
    StrategySpec noop;
    noop.deviator = 2;
    cfg.deviation = noop;
    const auto r = deviation_gain(cfg);
    EXPECT_EQ(r.mean_gain, 0.0);
    EXPECT_EQ(r.sd, 0.0);
    EXPECT_EQ(r.verdict, Verdict::consistent);
}

TEST(DeviationGain, RequiresDeviation) {
    EXPECT_THROW(deviation_gain(base_config(4, 1, 0.0, 10)), std::invalid_argument);
}

TEST(DeviationGain, MarginalizedEstimatorRefusesShareTampering) {
    auto cfg = base_config(4, 1, 0.0, 10);
    cfg.estimator = Estimator::lottery_marginalized;
    cfg.deviation = strategy_spec_from_json(Json::parse(R"({"deviator":0,"kind":"bad_shares"})"), 4);
    EXPECT_THROW(deviation_gain(cfg), std::invalid_argument);
}

TEST(DeviationGain, MarginalizedMatchesExactEnumeration) {
    // fixed context: the marginalized estimator is exact per trial, so the mean equals enumeration
    const auto ctx = fixed_context(4, 1, {1, 0, 0, 1}, {Failure{2, 1, AgentSet::single(0)}});
    auto cfg = base_config(4, 1, 0.0, 50, 3);
    cfg.context = ctx;
    cfg.estimator = Estimator::lottery_marginalized;
    StrategySpec noop;
    noop.deviator = 1;
    cfg.deviation = noop;
    const auto r = deviation_gain(cfg);
    const auto exact = enumerate_lotteries(ctx, cfg.honest_profile(), Seed{3});
    EXPECT_NEAR(r.honest_mean, exact.expected_utility(0, UtilityParams{}), 1e-12);
}

TEST(DeviationGain, PretendCrashDoesNotPay) {
    auto cfg = base_config(5, 2, 0.05, 20000, 10);
    cfg.deviation = strategy_spec_from_json(Json::parse(R"({"deviator":0,"kind":"pretend_crash","round":2})"), 5);
    const auto r = deviation_gain(cfg);
    EXPECT_LE(r.ci.high, r.epsilon);
    EXPECT_EQ(r.verdict, Verdict::consistent);
}

TEST(Exhibit, GainMatchesHandComputation) {
    // honest: the crash of 0 is seen only in round 2, so all three are candidates and Pr[1] = 1/3;
    // deviant: 1 reports the crash in round 1, candidates {1, 2} both prefer 0
    const UtilityParams b{2, 1, 0};
    const double honest = (1.0 / 3.0) * b.beta1 + (2.0 / 3.0) * b.beta0;
    const double deviant = b.beta0;
    const auto r = expost_exhibit(3, 1, b);
    ASSERT_TRUE(r.found);
    EXPECT_EQ(r.context.prefs, (std::vector<Preference>{1, 0, 0}));
    ASSERT_EQ(r.context.pattern.failures.size(), 1u);
    EXPECT_EQ(r.context.pattern.failures[0], (Failure{0, 1, AgentSet(0b110)}));
    EXPECT_EQ(r.deviation.deviator, 1);
    EXPECT_NEAR(r.honest_utility, honest, 1e-12);
    EXPECT_NEAR(r.deviant_utility, deviant, 1e-12);
    EXPECT_GT(r.gain, 0.0);
    EXPECT_EQ(r.enumerated, 2u * 216u);
}

TEST(Exhibit, DeterministicAndGuarded) {
    EXPECT_EQ(exhibit_to_json(expost_exhibit(3, 1)).dump(), exhibit_to_json(expost_exhibit(3, 1)).dump());
    EXPECT_THROW(expost_exhibit(3, 0), std::invalid_argument);
    EXPECT_THROW(expost_exhibit(5, 1), std::invalid_argument);
}

TEST(Exhibit, SameDeviationUnderPiDoesNotPay) {
    const auto ex = expost_exhibit(3, 1);
    auto cfg = base_config(3, 1, 0.05, 20000, 12);
    cfg.deviation = ex.deviation;
    const auto r = deviation_gain(cfg);
    EXPECT_LE(r.ci.high, r.epsilon);
}

TEST(Equivariance, RelabelingPreservesExactOutcome) {
    // property: permuting agent ids in a context leaves the exact outcome distribution unchanged
    CounterRng gen = make_stream(Seed{31}, 0, 0, 0, StreamPurpose::agent);
    const auto patterns = enumerate_patterns(4, 1);
    Profile profile;
    for (int iter = 0; iter < 4; ++iter) {
        Context ctx;
        ctx.n = 4;
        ctx.f = 1;
        ctx.pattern = patterns[gen.uniform_below(patterns.size())];
        ctx.prefs.resize(4);
        for (auto& p : ctx.prefs) p = static_cast<Preference>(gen.uniform_below(2));
        std::vector<AgentId> perm{0, 1, 2, 3};
        for (int i = 3; i > 0; --i) std::swap(perm[i], perm[gen.uniform_below(i + 1)]);
        Context moved = ctx;
        for (AgentId a = 0; a < 4; ++a) moved.prefs[perm[a]] = ctx.prefs[a];
        for (auto& fl : moved.pattern.failures) {
            AgentSet rec;
            for (AgentId r : fl.recipients.members()) rec.insert(perm[r]);
            fl.agent = perm[fl.agent];
            fl.recipients = rec;
        }
        const auto a = enumerate_lotteries(ctx, profile, Seed{1});
        const auto b = enumerate_lotteries(moved, profile, Seed{1});
        EXPECT_EQ(a.consensus, b.consensus) << iter;
        EXPECT_EQ(a.none, b.none);
        EXPECT_EQ(a.total, b.total);
    }
}
