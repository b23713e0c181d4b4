#include "rcl/core_types.hpp"

#include <algorithm>
#include <stdexcept>

namespace rcl {

const char* to_string(Decision d) {
    switch (d) {
        case Decision::undecided: return "undecided";
        case Decision::zero: return "0";
        case Decision::one: return "1";
        case Decision::bot: return "bot";
    }
    return "?";
}

const char* to_string(Violation v) {
    switch (v) {
        case Violation::agreement: return "agreement";
        case Violation::validity: return "validity";
        case Violation::integrity: return "integrity";
        case Violation::termination: return "termination";
    }
    return "?";
}

const char* to_string(PatternIssue issue) {
    switch (issue) {
        case PatternIssue::duplicate_agent: return "duplicate agent";
        case PatternIssue::exceeds_f: return "exceeds f";
        case PatternIssue::agent_out_of_range: return "agent out of range";
        case PatternIssue::round_out_of_range: return "round out of range";
        case PatternIssue::recipient_out_of_range: return "recipient out of range";
        case PatternIssue::self_recipient: return "self recipient";
        case PatternIssue::empty_recipients_after_round_one:
            return "empty recipients after round one";
    }
    return "?";
}

std::vector<AgentId> AgentSet::members() const {
    std::vector<AgentId> out;
    out.reserve(size());
    for (std::uint32_t b = bits_; b != 0; b &= b - 1) {
        out.push_back(std::countr_zero(b));
    }
    return out;
}

const Failure* FailurePattern::find(AgentId a) const {
    for (const auto& fl : failures) {
        if (fl.agent == a) return &fl;
    }
    return nullptr;
}

AgentSet FailurePattern::faulty() const {
    AgentSet s;
    for (const auto& fl : failures) s.insert(fl.agent);
    return s;
}

bool Outcome::has(Violation v) const {
    return std::find(violations.begin(), violations.end(), v) != violations.end();
}

Failure canonicalize_failure(const Failure& failure, int n) {
    Failure out = failure;
    while (out.round > 1 && out.recipients.empty()) {
        out.round -= 1;
        out.recipients = AgentSet::all(n).without(out.agent);
    }
    return out;
}

FailurePattern canonicalize(const FailurePattern& pattern, int n) {
    FailurePattern out;
    out.failures.reserve(pattern.failures.size());
    for (const auto& fl : pattern.failures) out.failures.push_back(canonicalize_failure(fl, n));
    std::sort(out.failures.begin(), out.failures.end(),
              [](const Failure& a, const Failure& b) { return a.agent < b.agent; });
    return out;
}

std::vector<PatternViolation> validate_pattern(const FailurePattern& pattern, int n, int f) {
    std::vector<PatternViolation> out;
    AgentSet seen;
    for (const auto& fl : pattern.failures) {
        const std::string who = "agent " + std::to_string(fl.agent);
        if (fl.agent < 0 || fl.agent >= n) {
            out.push_back({PatternIssue::agent_out_of_range, who + " not in [0, n)"});
            continue;
        }
        if (seen.contains(fl.agent)) {
            out.push_back({PatternIssue::duplicate_agent, who + " fails more than once"});
        }
        seen.insert(fl.agent);
        if (fl.round < 1 || fl.round > f + 1) {
            out.push_back({PatternIssue::round_out_of_range,
                           who + " crash round " + std::to_string(fl.round) + " not in [1, f+1]"});
        }
        if (!fl.recipients.is_subset_of(AgentSet::all(n))) {
            out.push_back({PatternIssue::recipient_out_of_range, who + " has recipients >= n"});
        }
        if (fl.recipients.contains(fl.agent)) {
            out.push_back({PatternIssue::self_recipient, who + " lists itself as recipient"});
        }
        if (fl.round > 1 && fl.recipients.empty()) {
            out.push_back({PatternIssue::empty_recipients_after_round_one,
                           who + " is not canonical (silent crash after round 1)"});
        }
    }
    if (static_cast<int>(pattern.failures.size()) > f) {
        out.push_back({PatternIssue::exceeds_f, std::to_string(pattern.failures.size()) +
                                                    " failures with f = " + std::to_string(f)});
    }
    return out;
}

Outcome classify_outcome(std::span<const Decision> decisions, const Context& context,
                         AgentSet deviators, std::span<const int> decide_counts) {
    Outcome out;
    out.decisions.assign(decisions.begin(), decisions.end());
    const int n = static_cast<int>(decisions.size());

    bool seen_value[2] = {false, false};
    bool all_same_value = true;
    std::optional<Preference> common;
    bool any_correct = false;
    bool termination_ok = true;
    bool validity_ok = true;
    bool integrity_ok = true;

    for (AgentId a = 0; a < n; ++a) {
        if (context.pattern.is_faulty(a) || deviators.contains(a)) continue;
        any_correct = true;
        const Decision d = decisions[a];
        if (!decide_counts.empty() && decide_counts[a] > 1) integrity_ok = false;
        if (d == Decision::undecided) {
            termination_ok = false;
            all_same_value = false;
            continue;
        }
        if (d == Decision::bot) {
            all_same_value = false;
            continue;
        }
        const Preference v = value_of(d);
        seen_value[v] = true;
        if (std::find(context.prefs.begin(), context.prefs.end(), v) == context.prefs.end()) {
            validity_ok = false;
        }
        if (!common) {
            common = v;
        } else if (*common != v) {
            all_same_value = false;
        }
    }

    if (seen_value[0] && seen_value[1]) out.violations.push_back(Violation::agreement);
    if (!validity_ok) out.violations.push_back(Violation::validity);
    if (!integrity_ok) out.violations.push_back(Violation::integrity);
    if (!termination_ok) out.violations.push_back(Violation::termination);

    if (any_correct && all_same_value && common) out.consensus = common;
    return out;
}

double utility(const Outcome& outcome, Preference pref, const UtilityParams& params) {
    if (!outcome.consensus) return params.beta2;
    return *outcome.consensus == pref ? params.beta0 : params.beta1;
}

std::vector<double> utilities(const Outcome& outcome, const Context& context,
                              std::span<const UtilityParams> params) {
    if (params.empty()) throw std::invalid_argument("utilities: no utility parameters");
    const int n = static_cast<int>(context.prefs.size());
    std::vector<double> out(n);
    for (AgentId a = 0; a < n; ++a) {
        const auto& p = params.size() == 1 ? params[0] : params[a];
        out[a] = utility(outcome, context.prefs[a], p);
    }
    return out;
}

}  // namespace rcl
