#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rcl/json_io.hpp"
#include "rcl/simulator.hpp"

namespace rcl {

/// How a trial's utility is scored.
/// sampled: the realised outcome of the run.
/// lottery_marginalized: the outcome averaged exactly over the lottery secrets,
/// valid because message flow never depends on them; falls back to the realised
/// outcome when correct agents disagree on the candidate set.
enum class Estimator : std::uint8_t { sampled, lottery_marginalized };

enum class Execution : std::uint8_t { serial, parallel };

struct ExperimentConfig {
    int n = 4;
    int f = 1;
    std::vector<UtilityParams> beta{UtilityParams{}};  // one entry (uniform) or n
    PiParams pi;
    std::uint64_t trials = 1000;
    std::uint64_t seed = 0;
    ProtocolKind protocol = ProtocolKind::cons;
    std::optional<StrategySpec> deviation;
    std::uint64_t field_prime = kDefaultPrime;
    std::optional<Context> context;  // fixed context for run/fairness
    Estimator estimator = Estimator::sampled;

    const UtilityParams& beta_of(AgentId a) const { return beta.size() == 1 ? beta[0] : beta[a]; }
    Profile honest_profile() const;
    Profile deviant_profile() const;
};

/// Throws std::invalid_argument on an unusable configuration.
void validate_config(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& cfg);

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

/// Normal-approximation 95% interval for a mean.
Interval mean_interval(double mean, double sd, std::uint64_t n);

/// Admissible canonical failure patterns with at most f failures.
std::vector<FailurePattern> enumerate_patterns(int n, int f);

/// Per-trial summary, the unit both kernels produce.
struct TrialResult {
    std::vector<double> utility;
    std::int8_t consensus = -1;  // -1 none, else the value
    std::int8_t dictator = -1;   // as seen by the lowest-id correct agent
    std::uint8_t violations = 0; // bit per Violation
    bool honest_detection = false;
};

/// Runs trial `trial` of `cfg` under `profile` and scores it.
TrialResult run_trial(const ExperimentConfig& cfg, const Profile& profile, std::uint64_t trial);

/// Reference kernel: trials in order on the calling thread.
std::vector<TrialResult> run_trials_serial(const ExperimentConfig& cfg, const Profile& profile);
/// OpenMP kernel: trials split across threads, each writing only its own slot.
std::vector<TrialResult> run_trials_parallel(const ExperimentConfig& cfg, const Profile& profile);

struct Stats {
    std::uint64_t trials = 0;
    std::vector<double> mean_utility;
    std::vector<Interval> utility_ci;
    std::array<std::uint64_t, 2> consensus_counts{};
    std::uint64_t no_consensus = 0;
    std::array<Interval, 2> consensus_ci{};
    std::vector<std::uint64_t> dictator_counts;
    std::vector<Interval> dictator_ci;
    std::array<std::uint64_t, 4> violation_counts{};  // indexed by Violation
    std::uint64_t runs_with_violation = 0;
    std::uint64_t honest_detections = 0;
};

/// Sequential, order-fixed reduction of per-trial results.
Stats aggregate(const std::vector<TrialResult>& results, int n);

/// Throws std::invalid_argument on an invalid config (including zero trials).
Stats monte_carlo(const ExperimentConfig& cfg, Execution exec = Execution::parallel);

struct FairnessReport {
    Context context;
    int t = 0;
    AgentSet candidates;
    std::array<int, 2> nonfaulty_with_value{};
    // exact enumeration over the lottery values used
    std::uint64_t enumerated = 0;
    std::array<double, 2> exact_value_prob{};
    std::vector<double> exact_dictator_prob;
    bool exact_bound_holds = false;  // Pr[v] >= c_v / n for both values
    bool exact_uniform = false;      // every candidate chosen 1/|candidates|
    // Monte-Carlo over cfg.trials with drawn lotteries
    std::uint64_t trials = 0;
    std::vector<std::uint64_t> dictator_counts;
    std::array<std::uint64_t, 2> value_counts{};
    double chi2 = 0.0;
    int dof = 0;
    double p_value = 1.0;

    bool passed(double alpha = 0.001) const {
        return exact_bound_holds && exact_uniform && p_value > alpha;
    }
};

/// Honest fairness of `context`: exact enumeration plus a Monte-Carlo chi-square
/// on dictator uniformity. Throws std::invalid_argument for an inadmissible context.
FairnessReport fairness_test(const ExperimentConfig& cfg, const Context& context,
                             Execution exec = Execution::parallel);

enum class Verdict : std::uint8_t { consistent, inconclusive, positive };
const char* to_string(Verdict v);

struct NaiveBound {
    double alpha_lt_f = 0.0;
    double alpha_eq_f = 0.0;
    double bound = 0.0;
};

struct GainReport {
    AgentId deviator = 0;
    std::uint64_t trials = 0;
    Estimator estimator = Estimator::sampled;
    double honest_mean = 0.0;
    double deviant_mean = 0.0;
    double mean_gain = 0.0;
    double sd = 0.0;
    Interval ci;
    double epsilon = 0.0;
    Verdict verdict = Verdict::inconclusive;
    std::uint64_t detections = 0;              // deviant-arm runs where a non-deviator detected
    std::array<std::uint64_t, 9> rule_counts{};  // first rule seen by the lowest-id detector
    std::optional<NaiveBound> naive;
};

/// Paired-seed gain of the configured deviation for its deviator. Throws if no deviation.
GainReport deviation_gain(const ExperimentConfig& cfg, Execution exec = Execution::parallel);

struct ExhibitReport {
    bool found = false;
    Context context;
    AgentId subject = 0;
    StrategySpec deviation;
    std::uint64_t enumerated = 0;
    double honest_utility = 0.0;
    double deviant_utility = 0.0;
    double gain = 0.0;
    std::vector<Failure> searched;  // candidate failures of the subject, in search order
};

/// Exact ex-post exhibit for small n: prefs (1,0,...,0), a minimal failure of
/// agent 0 under which 1 can win, and the lowest recipient hiding that message.
/// Throws std::invalid_argument unless 1 <= f, f + 1 < n <= 4.
ExhibitReport expost_exhibit(int n, int f, const UtilityParams& beta = {},
                             std::uint64_t field_prime = kDefaultPrime);

/// Exact outcome counts of `context` under `profile`, enumerating every lottery vector.
struct ExactOutcome {
    std::uint64_t total = 0;
    std::array<std::uint64_t, 2> consensus{};
    std::uint64_t none = 0;

    double expected_utility(Preference pref, const UtilityParams& beta) const;
};
ExactOutcome enumerate_lotteries(const Context& context, const Profile& profile, Seed seed);

Json stats_to_json(const Stats& stats);
Json fairness_to_json(const FairnessReport& report);
Json gain_to_json(const GainReport& report);
Json exhibit_to_json(const ExhibitReport& report);

}  // namespace rcl
