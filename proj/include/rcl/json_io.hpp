#pragma once

#include "json.hpp"

#include "rcl/core_types.hpp"
#include "rcl/deviations.hpp"
#include "rcl/messages.hpp"

namespace rcl {

using Json = nlohmann::ordered_json;

/// Parse errors throw std::invalid_argument naming the offending field.

Json agent_set_to_json(AgentSet set);
AgentSet agent_set_from_json(const Json& j, int n);

Json pattern_to_json(const FailurePattern& pattern);
FailurePattern pattern_from_json(const Json& j, int n);

/// {n, f, pattern: [{agent, round, recipients}], prefs}
Json context_to_json(const Context& context);
Context context_from_json(const Json& j);

Json decision_to_json(Decision d);
Decision decision_from_json(const Json& j);

Json outcome_to_json(const Outcome& outcome);

/// Crash rounds are written as n + 2 when the agent is believed alive.
Json status_report_to_json(const StatusReport& report, int n);

Json deviation_to_json(const DeviationSpec& d);
DeviationSpec deviation_from_json(const Json& j, int n);

/// {deviator, deviations: [...], se}; a single deviation object with a
/// "deviator" field is accepted as shorthand.
Json strategy_spec_to_json(const StrategySpec& spec);
StrategySpec strategy_spec_from_json(const Json& j, int n);

}  // namespace rcl
