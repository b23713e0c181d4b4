#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rcl/core_types.hpp"
#include "rcl/messages.hpp"
#include "rcl/rng.hpp"
#include "rcl/secret_sharing.hpp"

namespace rcl {

struct ProtocolParams {
    int n = 4;
    int f = 1;
    PrimeField field{};
};

/// Everything an agent is given before round 1.
struct AgentSetup {
    AgentId id = 0;
    Preference pref = 0;
    ProtocolParams params;
    Seed seed;
    std::uint64_t trial = 0;
    /// Replaces the drawn lottery secrets x[0..f] (used by exact enumeration).
    std::optional<std::vector<std::uint64_t>> lottery;
};

/// Detected inconsistency kinds, numbered as the detector reports them.
enum class Rule : std::uint8_t {
    malformed = 1,
    round1_z_disagreement = 2,
    relayed_z_mismatch = 3,
    shares_not_interpolable = 4,
    crash_contradicted = 5,
    reporter_contradiction = 6,
    ignored_report = 7,
    too_many_crashes = 8,
};

const char* to_string(Rule r);

/// Diagnostics an agent exposes after a run.
struct AgentReport {
    std::optional<AgentId> dictator;
    AgentSet candidates;  // agents the dictator was drawn from
    AgentSet candidate_ones;  // candidates whose value, as this agent saw it, is 1
    int m_star = 0;
    int t = -1;
    std::optional<Rule> rule;
    int rule_round = 0;
};

/// One agent's behaviour in the lockstep round loop. The simulator calls
/// send, then receive, then update, for each round the agent is still running.
class Strategy {
public:
    virtual ~Strategy() = default;

    virtual AgentId id() const = 0;
    virtual std::vector<RoundMessage> send(int round) = 0;
    virtual void receive(int round, std::span<const RoundMessage> delivered) = 0;
    virtual void update(int round) = 0;

    virtual Decision decision() const = 0;
    virtual int decide_count() const = 0;
    /// True once the agent has left the round loop (decided early or punished).
    virtual bool halted() const = 0;
    virtual AgentReport report() const = 0;
    /// Current status report, when the protocol keeps one.
    virtual const StatusReport* status_report() const { return nullptr; }
};

}  // namespace rcl
