#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rcl/naive.hpp"
#include "rcl/protocol.hpp"

namespace rcl {

enum class DeviationKind : std::uint8_t {
    none,
    pretend_crash,        // send round-`round` messages to `recipients` only, then nothing
    lie_initial_value,    // flip the round-1 preference sent to `targets` (empty = all)
    malformed,            // wrong payload shape to `target` in `round`
    bad_shares,           // non-collinear (+1 on one share) or non-random (slope 0) sharing
    bad_z,                // repeat last round's z value instead of a fresh one
    wrong_decide,         // decide `value` at the end of `round`; stop early if round <= f
    lie_forwarded_share,  // +1 on the forwarded share of `subject` sent to `target`
    crash_then_send,      // skip `targets` in `round`, stay silent, send to `target` in `resume_round`
    status_lie,           // misreport `subject` in reports sent to `target` (-1 = all) from `round`
    naive_exploit,        // after round 1 go silent iff own preference is the minority
};

enum class BadSharesMode : std::uint8_t { non_collinear, non_random };

/// a: claim `subject` alive with a guessed z-vector; b: claim `subject` crashed a round
/// before `round` and hide its messages; c: report a known crash one round later.
enum class StatusLieVariant : std::uint8_t { a, b, c };

struct DeviationSpec {
    DeviationKind kind = DeviationKind::none;
    int round = 0;
    AgentSet recipients;   // pretend_crash
    AgentSet targets;      // lie_initial_value, crash_then_send (omitted peers)
    AgentId target = -1;   // malformed, lie_forwarded_share, crash_then_send, status_lie
    AgentId subject = -1;  // lie_forwarded_share, status_lie
    int resume_round = 0;  // crash_then_send
    BadSharesMode mode = BadSharesMode::non_collinear;
    StatusLieVariant variant = StatusLieVariant::a;
    Decision value = Decision::bot;  // wrong_decide
};

/// One deviating agent and the deviations it applies, left to right.
struct StrategySpec {
    AgentId deviator = 0;
    std::vector<DeviationSpec> deviations;
    /// Skip base punishment once the agent has itself deviated, except at
    /// unsalvageable information sets.
    bool se = false;

    bool is_noop() const;
};

enum class ProtocolKind : std::uint8_t { cons, naive };

const char* to_string(DeviationKind kind);
std::optional<DeviationKind> deviation_kind_from_string(const std::string& name);
const char* to_string(ProtocolKind protocol);

/// Throws std::invalid_argument if `spec` does not fit (protocol, n, f).
void validate_spec(const StrategySpec& spec, ProtocolKind protocol, int n, int f);

/// Honest agent of the given protocol.
std::unique_ptr<Strategy> make_honest(ProtocolKind protocol, const AgentSetup& setup);

/// Base strategy of `protocol` with the deviations of `spec` layered on.
std::unique_ptr<Strategy> apply(ProtocolKind protocol, const AgentSetup& setup,
                                const StrategySpec& spec);

/// The naive-protocol exploit for `deviator`.
StrategySpec naive_exploit(AgentId deviator);

/// Builds the agent for `setup.id`: deviant when `spec` names it, honest otherwise.
std::unique_ptr<Strategy> make_agent(ProtocolKind protocol, const AgentSetup& setup,
                                     const StrategySpec* spec);

}  // namespace rcl
