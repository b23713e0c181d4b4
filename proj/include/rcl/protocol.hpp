#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rcl/strategy.hpp"

namespace rcl {

/// NC_0..NC_{f+1}: agents believed not to have crashed up to and including each round.
struct NcSequence {
    std::vector<AgentSet> nc;
};

/// Least m >= 1 with NC_m == NC_{m-1}. Throws std::logic_error if no round is clean.
int first_clean_round(const NcSequence& seq);

/// S = sum(secrets) mod (n - t) with t = n - |nc|; returns the (S+1)-st highest id in nc.
/// `secrets` holds x_j[t] for the members of nc in ascending id order.
AgentId select_dictator(AgentSet nc, std::span<const std::uint64_t> secrets, int n);

/// Honest per-agent state machine of the consensus protocol: status reports,
/// z-signatures, secret-shared lottery, inconsistency detection and the
/// clean-round random-dictator decision.
class ConsAgent final : public Strategy {
public:
    /// Throws std::invalid_argument unless 1 <= f, f + 1 < n <= kMaxAgents and p > n.
    explicit ConsAgent(const AgentSetup& setup);

    AgentId id() const override { return id_; }
    std::vector<RoundMessage> send(int round) override;
    void receive(int round, std::span<const RoundMessage> delivered) override;
    void update(int round) override;

    Decision decision() const override { return decision_; }
    int decide_count() const override { return decide_count_; }
    bool halted() const override { return halted_; }
    AgentReport report() const override;
    const StatusReport* status_report() const override { return &sr_; }

    /// Lowest-numbered rule violated by what was received this round, if any.
    std::optional<Rule> detect_inconsistency(int round) const;

    /// NC sequence from the current status report.
    NcSequence compute_nc() const;

    /// When false, a detected inconsistency is recorded but the agent keeps running.
    void set_punish(bool punish) { punish_ = punish; }

    /// Records a decision; the first non-undecided value sticks for honest play.
    void decide(Decision d);
    void halt() { halted_ = true; }

    /// Hooks for deviating wrappers: share lines with slope 0, and z values that
    /// repeat the previous round's instead of fresh draws.
    void zero_slopes();
    void set_reuse_fresh(bool reuse) { reuse_fresh_ = reuse; }

    Preference pref() const { return pref_; }
    /// Round-1 values received so far, by sender (own value included).
    const std::vector<std::optional<Preference>>& values() const { return st_; }
    const ProtocolParams& params() const { return params_; }
    const std::vector<std::uint64_t>& lottery() const { return lottery_; }
    const std::vector<LinePoly>& polys() const { return polys_; }
    /// Round-1 shares received from `origin`, or nullptr.
    const std::uint64_t* shares_from(AgentId origin) const;
    /// z-vector received from `sender` in the current round, or nullptr.
    const ZVector* z_from(AgentId sender) const;
    AgentSet heard_in(int round) const;
    Seed seed() const { return seed_; }
    std::uint64_t trial() const { return trial_; }

private:
    bool validate(const RoundMessage& msg, int round) const;
    bool validate_report(const StatusReport& rep, AgentId sender, int round) const;
    void absorb_report(AgentId sender, const StatusReport& rep);
    void build_next_z(int round);
    void decide_value();

    std::optional<Rule> check_round1_z() const;
    std::optional<Rule> check_relayed_z(int round) const;
    std::optional<Rule> check_shares() const;
    std::optional<Rule> check_crash_contradictions(int round) const;
    std::optional<Rule> check_reporter_claims() const;
    std::optional<Rule> check_ignored_reports() const;

    AgentId id_;
    Preference pref_;
    ProtocolParams params_;
    int n_;
    int f_;
    Seed seed_;
    std::uint64_t trial_;

    Decision decision_ = Decision::undecided;
    int decide_count_ = 0;
    bool halted_ = false;
    bool punish_ = true;
    bool reuse_fresh_ = false;
    AgentReport diag_;

    std::vector<std::optional<Preference>> st_;  // values seen in round 1
    StatusReport sr_;                             // report to send next
    StatusReport sr_before_;                      // report as it was before this round's receive
    SharedReport sr_shared_;                      // sr_ frozen for sending

    std::vector<ZVector> z_out_;                  // per receiver, current round
    std::vector<std::vector<int>> fresh_sent_;    // [round][receiver] own fresh z value
    int special_z_ = 0;

    std::vector<std::uint64_t> lottery_;          // x[t]
    std::vector<LinePoly> polys_;                 // q^t

    std::vector<std::uint64_t> shares_in_;        // n * (f+1), round-1 shares by origin
    AgentSet shares_in_present_;
    std::vector<std::uint64_t> forwarded_in_;     // [sender][origin][t] from final round
    std::vector<AgentSet> forwarded_present_;     // per sender

    std::vector<AgentSet> heard_;                 // [round] valid senders
    AgentSet malformed_;
    std::vector<const StatusReport*> cur_reports_;
    std::vector<SharedReport> cur_keep_;
    std::vector<SharedReport> prev_keep_;         // previous round's reports, by sender
    std::vector<ZVector> z_in_;                   // current round z by sender
    std::vector<ZVector> z1_in_;                  // round-1 z by sender
    AgentSet z_in_present_;
};

/// Own-conduct log for the sequential-equilibrium extension.
struct ConductLog {
    std::vector<int> first_omission;   // round of the first omitted message to each peer (0 = none)
    std::vector<int> resumed_after;    // first round a message reached that peer after the omission
};

/// True when the agent's own past conduct guarantees that some peer has seen a
/// deviation while still running (and therefore decided bot): the peer was
/// skipped in one round, later received a message, and was heard from afterwards.
bool is_unsalvageable(const ConductLog& log, std::span<const AgentSet> heard_by_round,
                      int current_round);

}  // namespace rcl
