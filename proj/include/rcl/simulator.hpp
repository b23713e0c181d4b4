#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rcl/deviations.hpp"
#include "rcl/strategy.hpp"

namespace rcl {

/// Distribution over contexts: each agent independently crashes in round r with
/// probability q per round (r = 1..f+1), with a uniform recipient set (nonempty
/// after round 1); patterns with more than f failures are resampled.
struct PiParams {
    int n = 4;
    int f = 1;
    double crash_prob = 0.0;
    double pref_prob = 0.5;
    /// Fixed preferences instead of Bernoulli(pref_prob) draws.
    std::optional<std::vector<Preference>> prefs;
};

/// Throws std::invalid_argument on out-of-range parameters.
void validate_pi(const PiParams& pi);

Context sample_context(const PiParams& pi, CounterRng& rng);

/// Context of Monte-Carlo trial `trial`, from its own keyed stream.
Context sample_context(const PiParams& pi, Seed seed, std::uint64_t trial);

struct RunOptions {
    std::uint64_t trial = 0;
    /// JSON-lines trace of every (round, phase).
    bool record_trace = false;
    /// (sender, receiver, round) of every delivered message.
    bool record_log = false;
    /// Per-agent lottery overrides; empty or nullopt entries keep the drawn values.
    std::vector<std::optional<std::vector<std::uint64_t>>> lottery;
};

/// Who plays what: a protocol for everyone, optionally one deviator.
struct Profile {
    ProtocolKind protocol = ProtocolKind::cons;
    ProtocolParams params;
    std::optional<StrategySpec> deviation;
};

struct DeliveredMessage {
    AgentId sender;
    AgentId receiver;
    int round;

    bool operator==(const DeliveredMessage&) const = default;
};

struct RunRecord {
    Context context;
    AgentSet deviators;
    Outcome outcome;
    std::vector<int> decide_counts;
    std::vector<AgentReport> reports;
    std::vector<DeliveredMessage> log;
    std::string trace;

    /// True if some agent outside `deviators` detected an inconsistency.
    bool honest_detection() const;
};

/// Runs rounds 1..f+1. A failure (i, m, A) delivers i's round-m messages only to A;
/// i neither receives in round m nor acts afterwards. Agents that halt stop sending.
/// Throws std::invalid_argument for an inadmissible pattern or mismatched agents.
RunRecord run(const Context& context, std::vector<std::unique_ptr<Strategy>>& agents,
              AgentSet deviators, const RunOptions& options = {});

/// Builds the agents of `profile` from `seed` and runs them.
RunRecord run(const Context& context, const Profile& profile, Seed seed,
              const RunOptions& options = {});

/// Which agents can be reached from `j` by a message chain that avoids `i`.
struct ReachabilityScenario {
    AgentId j = 0;
    AgentId i = 1;
    int m = 1;
    AgentSet known_faulty;
    /// Failures imposed on top of the sampled pattern (replacing those agents' draws).
    FailurePattern forced;
};

struct ReachabilityEstimate {
    double estimate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t unreachable = 0;
    double bound = 0.0;  // 1 / (2M), M = n - |known_faulty|
    bool within_bound = false;
};

/// Agents reached from `j` through rounds m..f+1 without passing through `i`.
AgentSet reachable_without(const Context& context, AgentId j, AgentId i, int m);

/// Monte-Carlo estimate of Pr[no nonfaulty l != i is reachable from j without i]
/// given: i nonfaulty, known-faulty agents crash before round m, j running at m.
/// Throws std::invalid_argument for zero trials or an inconsistent scenario.
ReachabilityEstimate estimate_reachability(const PiParams& pi, const ReachabilityScenario& scenario,
                                           std::uint64_t trials, Seed seed);

/// Wilson score interval for k successes in n trials at z.
std::pair<double, double> wilson_interval(std::uint64_t k, std::uint64_t n, double z = 1.959963984540054);

}  // namespace rcl
