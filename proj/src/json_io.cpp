#include "rcl/json_io.hpp"

#include <stdexcept>
#include <string>

namespace rcl {

namespace {

[[noreturn]] void bad(const std::string& what) { throw std::invalid_argument("json: " + what); }

const Json& field(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) bad(std::string("missing field '") + key + "'");
    return j.at(key);
}

int int_field(const Json& j, const char* key) {
    const Json& v = field(j, key);
    if (!v.is_number_integer()) bad(std::string("field '") + key + "' must be an integer");
    return v.get<int>();
}

int int_or(const Json& j, const char* key, int fallback) {
    return j.contains(key) ? int_field(j, key) : fallback;
}

}  // namespace

Json agent_set_to_json(AgentSet set) {
    Json out = Json::array();
    for (AgentId a : set.members()) out.push_back(a);
    return out;
}

AgentSet agent_set_from_json(const Json& j, int n) {
    if (!j.is_array()) bad("agent set must be an array");
    AgentSet out;
    for (const auto& v : j) {
        if (!v.is_number_integer()) bad("agent ids must be integers");
        const int a = v.get<int>();
        if (a < 0 || a >= n || a >= kMaxAgents) bad("agent id " + std::to_string(a) + " out of range");
        out.insert(a);
    }
    return out;
}

Json pattern_to_json(const FailurePattern& pattern) {
    Json out = Json::array();
    for (const auto& fl : pattern.failures) {
        Json e;
        e["agent"] = fl.agent;
        e["round"] = fl.round;
        e["recipients"] = agent_set_to_json(fl.recipients);
        out.push_back(std::move(e));
    }
    return out;
}

FailurePattern pattern_from_json(const Json& j, int n) {
    if (!j.is_array()) bad("pattern must be an array");
    FailurePattern out;
    for (const auto& e : j) {
        Failure fl;
        fl.agent = int_field(e, "agent");
        fl.round = int_field(e, "round");
        fl.recipients = agent_set_from_json(field(e, "recipients"), n);
        out.failures.push_back(fl);
    }
    return out;
}

Json context_to_json(const Context& context) {
    Json out;
    out["n"] = context.n;
    out["f"] = context.f;
    out["pattern"] = pattern_to_json(context.pattern);
    Json prefs = Json::array();
    for (auto p : context.prefs) prefs.push_back(static_cast<int>(p));
    out["prefs"] = std::move(prefs);
    return out;
}

Context context_from_json(const Json& j) {
    Context c;
    c.n = int_field(j, "n");
    c.f = int_field(j, "f");
    if (c.n < 1 || c.n > kMaxAgents) bad("n out of range");
    c.pattern = pattern_from_json(j.contains("pattern") ? j.at("pattern") : Json::array(), c.n);
    const Json& prefs = field(j, "prefs");
    if (!prefs.is_array() || static_cast<int>(prefs.size()) != c.n) bad("prefs must list n values");
    for (const auto& v : prefs) {
        if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1)) {
            bad("prefs must be 0 or 1");
        }
        c.prefs.push_back(static_cast<Preference>(v.get<int>()));
    }
    return c;
}

Json decision_to_json(Decision d) {
    switch (d) {
        case Decision::zero: return 0;
        case Decision::one: return 1;
        case Decision::bot: return "bot";
        case Decision::undecided: return nullptr;
    }
    return nullptr;
}

Decision decision_from_json(const Json& j) {
    if (j.is_null()) return Decision::undecided;
    if (j.is_number_integer()) {
        if (j.get<int>() == 0) return Decision::zero;
        if (j.get<int>() == 1) return Decision::one;
    }
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "0") return Decision::zero;
        if (s == "1") return Decision::one;
        if (s == "bot") return Decision::bot;
    }
    bad("decision must be 0, 1 or \"bot\"");
}

Json outcome_to_json(const Outcome& outcome) {
    Json out;
    Json ds = Json::array();
    for (auto d : outcome.decisions) ds.push_back(decision_to_json(d));
    out["decisions"] = std::move(ds);
    out["consensus"] = outcome.consensus ? Json(static_cast<int>(*outcome.consensus)) : Json(nullptr);
    Json vs = Json::array();
    for (auto v : outcome.violations) vs.push_back(to_string(v));
    out["violations"] = std::move(vs);
    return out;
}

Json status_report_to_json(const StatusReport& report, int n) {
    Json out = Json::array();
    for (const auto& e : report) {
        Json entry;
        entry["crash"] = e.alive() ? n + 2 : e.crash_round;
        if (e.alive()) {
            Json z = Json::array();
            for (int k = 0; k < e.z.size(); ++k) z.push_back(e.z[k]);
            entry["z"] = std::move(z);
        } else {
            entry["reporter"] = e.reporter;
        }
        out.push_back(std::move(entry));
    }
    return out;
}

Json deviation_to_json(const DeviationSpec& d) {
    Json out;
    out["kind"] = to_string(d.kind);
    switch (d.kind) {
        case DeviationKind::none:
        case DeviationKind::bad_z:
        case DeviationKind::naive_exploit:
            break;
        case DeviationKind::pretend_crash:
            out["round"] = d.round;
            out["recipients"] = agent_set_to_json(d.recipients);
            break;
        case DeviationKind::lie_initial_value:
            out["targets"] = agent_set_to_json(d.targets);
            break;
        case DeviationKind::malformed:
            out["round"] = d.round;
            out["target"] = d.target;
            break;
        case DeviationKind::bad_shares:
            out["mode"] = d.mode == BadSharesMode::non_collinear ? "non_collinear" : "non_random";
            break;
        case DeviationKind::wrong_decide:
            out["round"] = d.round;
            out["value"] = decision_to_json(d.value);
            break;
        case DeviationKind::lie_forwarded_share:
            out["subject"] = d.subject;
            out["target"] = d.target;
            break;
        case DeviationKind::crash_then_send:
            out["omit_round"] = d.round;
            out["omit_targets"] = agent_set_to_json(d.targets);
            out["resume_round"] = d.resume_round;
            out["resume_target"] = d.target;
            break;
        case DeviationKind::status_lie: {
            const char* names[] = {"a", "b", "c"};
            out["variant"] = names[static_cast<int>(d.variant)];
            out["subject"] = d.subject;
            out["target"] = d.target;
            out["round"] = d.round;
            break;
        }
    }
    return out;
}

DeviationSpec deviation_from_json(const Json& j, int n) {
    const Json& kind = field(j, "kind");
    if (!kind.is_string()) bad("deviation kind must be a string");
    const auto parsed = deviation_kind_from_string(kind.get<std::string>());
    if (!parsed) bad("unknown deviation kind '" + kind.get<std::string>() + "'");
    DeviationSpec d;
    d.kind = *parsed;
    switch (d.kind) {
        case DeviationKind::none:
        case DeviationKind::bad_z:
        case DeviationKind::naive_exploit:
            break;
        case DeviationKind::pretend_crash:
            d.round = int_field(j, "round");
            d.recipients = j.contains("recipients") ? agent_set_from_json(j.at("recipients"), n)
                                                    : AgentSet{};
            break;
        case DeviationKind::lie_initial_value:
            d.targets = j.contains("targets") ? agent_set_from_json(j.at("targets"), n) : AgentSet{};
            break;
        case DeviationKind::malformed:
            d.round = int_field(j, "round");
            d.target = int_or(j, "target", -1);
            break;
        case DeviationKind::bad_shares: {
            const std::string mode = j.value("mode", std::string("non_collinear"));
            if (mode == "non_collinear") {
                d.mode = BadSharesMode::non_collinear;
            } else if (mode == "non_random") {
                d.mode = BadSharesMode::non_random;
            } else {
                bad("bad_shares mode must be non_collinear or non_random");
            }
            break;
        }
        case DeviationKind::wrong_decide:
            d.round = int_field(j, "round");
            d.value = decision_from_json(field(j, "value"));
            break;
        case DeviationKind::lie_forwarded_share:
            d.subject = int_field(j, "subject");
            d.target = int_field(j, "target");
            break;
        case DeviationKind::crash_then_send:
            d.round = int_field(j, "omit_round");
            d.targets = agent_set_from_json(field(j, "omit_targets"), n);
            d.resume_round = int_field(j, "resume_round");
            d.target = int_field(j, "resume_target");
            break;
        case DeviationKind::status_lie: {
            const std::string v = field(j, "variant").get<std::string>();
            if (v == "a") {
                d.variant = StatusLieVariant::a;
            } else if (v == "b") {
                d.variant = StatusLieVariant::b;
            } else if (v == "c") {
                d.variant = StatusLieVariant::c;
            } else {
                bad("status_lie variant must be a, b or c");
            }
            d.subject = int_field(j, "subject");
            d.target = int_or(j, "target", -1);
            d.round = int_field(j, "round");
            break;
        }
    }
    return d;
}

Json strategy_spec_to_json(const StrategySpec& spec) {
    Json out;
    out["deviator"] = spec.deviator;
    Json ds = Json::array();
    for (const auto& d : spec.deviations) ds.push_back(deviation_to_json(d));
    out["deviations"] = std::move(ds);
    out["se"] = spec.se;
    return out;
}

StrategySpec strategy_spec_from_json(const Json& j, int n) {
    StrategySpec spec;
    spec.deviator = int_or(j, "deviator", 0);
    spec.se = j.value("se", false);
    if (j.contains("deviations")) {
        for (const auto& d : j.at("deviations")) spec.deviations.push_back(deviation_from_json(d, n));
    } else {
        spec.deviations.push_back(deviation_from_json(j, n));
    }
    return spec;
}

}  // namespace rcl
