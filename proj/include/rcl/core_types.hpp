#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rcl {

using AgentId = int;

/// Initial preference; always 0 or 1.
using Preference = std::uint8_t;

inline constexpr int kMaxAgents = 32;

enum class Decision : std::uint8_t { undecided, zero, one, bot };

constexpr Decision decision_for(Preference v) {
    return v == 0 ? Decision::zero : Decision::one;
}

constexpr bool is_value(Decision d) {
    return d == Decision::zero || d == Decision::one;
}

constexpr Preference value_of(Decision d) {
    return d == Decision::one ? 1 : 0;
}

const char* to_string(Decision d);

/// Set of agent ids backed by a bitmask (n <= 32).
class AgentSet {
public:
    constexpr AgentSet() = default;
    constexpr explicit AgentSet(std::uint32_t bits) : bits_(bits) {}

    static constexpr AgentSet all(int n) {
        return AgentSet(n >= 32 ? ~0u : ((1u << n) - 1u));
    }
    static constexpr AgentSet single(AgentId a) { return AgentSet(1u << a); }

    constexpr bool contains(AgentId a) const { return (bits_ >> a) & 1u; }
    constexpr void insert(AgentId a) { bits_ |= (1u << a); }
    constexpr void erase(AgentId a) { bits_ &= ~(1u << a); }
    constexpr int size() const { return std::popcount(bits_); }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr std::uint32_t bits() const { return bits_; }

    constexpr AgentSet without(AgentId a) const { return AgentSet(bits_ & ~(1u << a)); }
    constexpr AgentSet operator|(AgentSet o) const { return AgentSet(bits_ | o.bits_); }
    constexpr AgentSet operator&(AgentSet o) const { return AgentSet(bits_ & o.bits_); }
    constexpr bool is_subset_of(AgentSet o) const { return (bits_ & ~o.bits_) == 0; }
    constexpr bool operator==(const AgentSet&) const = default;

    /// Members in ascending id order.
    std::vector<AgentId> members() const;

private:
    std::uint32_t bits_ = 0;
};

/// Agent `agent` crashes in round `round` after sending its round messages only to `recipients`.
struct Failure {
    AgentId agent = 0;
    int round = 1;
    AgentSet recipients;

    bool operator==(const Failure&) const = default;
};

struct FailurePattern {
    std::vector<Failure> failures;

    const Failure* find(AgentId a) const;
    bool is_faulty(AgentId a) const { return find(a) != nullptr; }
    AgentSet faulty() const;
    bool operator==(const FailurePattern&) const = default;
};

/// A failure pattern plus initial preferences: the adversary's full choice.
struct Context {
    int n = 0;
    int f = 0;
    FailurePattern pattern;
    std::vector<Preference> prefs;
};

struct UtilityParams {
    double beta0 = 2.0;  // consensus on own preference
    double beta1 = 1.0;  // consensus on the other value
    double beta2 = 0.0;  // no consensus
};

enum class Violation : std::uint8_t { agreement, validity, integrity, termination };

const char* to_string(Violation v);

struct Outcome {
    std::vector<Decision> decisions;
    std::optional<Preference> consensus;  // empty means no consensus
    std::vector<Violation> violations;

    bool has(Violation v) const;
};

enum class PatternIssue : std::uint8_t {
    duplicate_agent,
    exceeds_f,
    agent_out_of_range,
    round_out_of_range,
    recipient_out_of_range,
    self_recipient,
    empty_recipients_after_round_one,
};

struct PatternViolation {
    PatternIssue issue;
    std::string message;
};

const char* to_string(PatternIssue issue);

/// Rewrites a silent crash in round m > 1 as a crash in round m-1 that reaches everyone else.
Failure canonicalize_failure(const Failure& failure, int n);
FailurePattern canonicalize(const FailurePattern& pattern, int n);

/// Empty result means the pattern is admissible for (n, f).
std::vector<PatternViolation> validate_pattern(const FailurePattern& pattern, int n, int f);

/// Correct agents are those neither faulty in the pattern nor in `deviators`.
/// `decide_counts`, when non-empty, holds how many times each agent decided.
Outcome classify_outcome(std::span<const Decision> decisions, const Context& context,
                         AgentSet deviators, std::span<const int> decide_counts = {});

double utility(const Outcome& outcome, Preference pref, const UtilityParams& params);
std::vector<double> utilities(const Outcome& outcome, const Context& context,
                              std::span<const UtilityParams> params);

}  // namespace rcl
