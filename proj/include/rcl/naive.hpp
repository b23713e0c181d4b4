#pragma once

#include <optional>
#include <vector>

#include "rcl/strategy.hpp"

namespace rcl {

/// Baseline protocol: round 1 broadcasts (i, v_i, x_i0..x_if) in the clear, later
/// rounds forward unseen tuples, and round f+1 picks a dictator from the tuples held.
class NaiveAgent final : public Strategy {
public:
    /// Throws std::invalid_argument unless 0 <= f, f + 1 < n <= kMaxAgents.
    explicit NaiveAgent(const AgentSetup& setup);

    AgentId id() const override { return id_; }
    std::vector<RoundMessage> send(int round) override;
    void receive(int round, std::span<const RoundMessage> delivered) override;
    void update(int round) override;

    Decision decision() const override { return decision_; }
    int decide_count() const override { return decide_count_; }
    bool halted() const override { return halted_; }
    AgentReport report() const override { return diag_; }

    void decide(Decision d);
    void halt() { halted_ = true; }

    Preference pref() const { return pref_; }
    const std::vector<std::uint64_t>& lottery() const { return lottery_; }
    /// Tuple held for `agent`, if any.
    const std::optional<NaiveTuple>& tuple_of(AgentId agent) const { return known_[agent]; }
    /// Senders heard in `round`.
    AgentSet heard_in(int round) const;
    bool conflict() const { return conflict_; }

private:
    bool valid_tuple(const NaiveTuple& tuple) const;
    void decide_value();

    AgentId id_;
    Preference pref_;
    int n_;
    int f_;
    Decision decision_ = Decision::undecided;
    int decide_count_ = 0;
    bool halted_ = false;
    bool conflict_ = false;
    AgentReport diag_;

    std::vector<std::uint64_t> lottery_;
    std::vector<std::optional<NaiveTuple>> known_;
    std::vector<AgentId> pending_;  // learned last round, to forward this round
    std::vector<AgentId> learned_;  // learned this round
    std::vector<AgentSet> heard_;
};

}  // namespace rcl
