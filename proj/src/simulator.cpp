#include "rcl/simulator.hpp"

#include <climits>
#include <cmath>
#include <stdexcept>
#include <string>

#include "rcl/json_io.hpp"

namespace rcl {

namespace {

Json payload_to_json(const Payload& payload, int n, int f) {
    Json out;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            auto z_json = [](const ZVector& z) {
                Json a = Json::array();
                for (int k = 0; k < z.size(); ++k) a.push_back(z[k]);
                return a;
            };
            if constexpr (std::is_same_v<T, Round1Payload>) {
                out["kind"] = "round1";
                out["pref"] = static_cast<int>(p.pref);
                out["shares"] = p.shares;
                out["z"] = z_json(p.z);
                out["sr"] = status_report_to_json(*p.report, n);
            } else if constexpr (std::is_same_v<T, MidPayload>) {
                out["kind"] = "mid";
                out["z"] = z_json(p.z);
                out["sr"] = status_report_to_json(*p.report, n);
            } else if constexpr (std::is_same_v<T, FinalPayload>) {
                out["kind"] = "final";
                Json rows = Json::object();
                for (AgentId l : p.present.members()) {
                    const auto* row = p.row(l, f);
                    rows[std::to_string(l)] = std::vector<std::uint64_t>(row, row + f + 1);
                }
                out["forwarded"] = std::move(rows);
                out["sr"] = status_report_to_json(*p.report, n);
            } else if constexpr (std::is_same_v<T, NaivePayload>) {
                out["kind"] = "naive";
                Json tuples = Json::array();
                for (const auto& t : p.tuples) {
                    Json e;
                    e["agent"] = t.agent;
                    e["pref"] = static_cast<int>(t.pref);
                    e["lottery"] = t.lottery;
                    tuples.push_back(std::move(e));
                }
                out["tuples"] = std::move(tuples);
            } else {
                out["kind"] = "malformed";
            }
        },
        payload);
    return out;
}

std::vector<int> crash_rounds(const Context& context) {
    std::vector<int> out(context.n, INT_MAX);
    for (const auto& fl : context.pattern.failures) out[fl.agent] = fl.round;
    return out;
}

std::vector<AgentSet> recipient_sets(const Context& context) {
    std::vector<AgentSet> out(context.n);
    for (const auto& fl : context.pattern.failures) out[fl.agent] = fl.recipients;
    return out;
}

void check_context(const Context& context) {
    if (context.n < 1 || context.n > kMaxAgents) throw std::invalid_argument("run: n out of range");
    if (static_cast<int>(context.prefs.size()) != context.n) {
        throw std::invalid_argument("run: prefs must have n entries");
    }
    const auto issues = validate_pattern(context.pattern, context.n, context.f);
    if (!issues.empty()) throw std::invalid_argument("run: " + issues.front().message);
}

}  // namespace

void validate_pi(const PiParams& pi) {
    if (pi.n < 2 || pi.n > kMaxAgents) throw std::invalid_argument("pi: n out of range");
    if (pi.f < 0 || pi.f >= pi.n) throw std::invalid_argument("pi: f out of range");
    if (!(pi.crash_prob >= 0.0 && pi.crash_prob < 1.0)) {
        throw std::invalid_argument("pi: crash_prob must lie in [0, 1)");
    }
    if (!(pi.pref_prob >= 0.0 && pi.pref_prob <= 1.0)) {
        throw std::invalid_argument("pi: pref_prob must lie in [0, 1]");
    }
    if (pi.prefs) {
        if (static_cast<int>(pi.prefs->size()) != pi.n) {
            throw std::invalid_argument("pi: fixed prefs must have n entries");
        }
        for (auto p : *pi.prefs) {
            if (p > 1) throw std::invalid_argument("pi: prefs must be 0 or 1");
        }
    }
}

Context sample_context(const PiParams& pi, CounterRng& rng) {
    validate_pi(pi);
    Context c;
    c.n = pi.n;
    c.f = pi.f;
    const std::uint64_t subsets = std::uint64_t{1} << (pi.n - 1);
    for (;;) {
        c.pattern.failures.clear();
        for (AgentId i = 0; i < pi.n; ++i) {
            int round = 0;
            for (int r = 1; r <= pi.f + 1; ++r) {
                if (rng.bernoulli(pi.crash_prob)) {
                    round = r;
                    break;
                }
            }
            if (round == 0) continue;
            const std::uint64_t mask =
                round == 1 ? rng.uniform_below(subsets) : 1 + rng.uniform_below(subsets - 1);
            AgentSet recipients;
            int bit = 0;
            for (AgentId k = 0; k < pi.n; ++k) {
                if (k == i) continue;
                if ((mask >> bit) & 1u) recipients.insert(k);
                ++bit;
            }
            c.pattern.failures.push_back(Failure{i, round, recipients});
        }
        if (static_cast<int>(c.pattern.failures.size()) <= pi.f) break;
    }
    if (pi.prefs) {
        c.prefs = *pi.prefs;
    } else {
        c.prefs.resize(pi.n);
        for (auto& p : c.prefs) p = rng.bernoulli(pi.pref_prob) ? 1 : 0;
    }
    return c;
}

Context sample_context(const PiParams& pi, Seed seed, std::uint64_t trial) {
    CounterRng rng = make_stream(seed, trial, -1, 0, StreamPurpose::context);
    return sample_context(pi, rng);
}

bool RunRecord::honest_detection() const {
    for (AgentId a = 0; a < static_cast<AgentId>(reports.size()); ++a) {
        if (!deviators.contains(a) && reports[a].rule) return true;
    }
    return false;
}

RunRecord run(const Context& context, std::vector<std::unique_ptr<Strategy>>& agents,
              AgentSet deviators, const RunOptions& options) {
    check_context(context);
    const int n = context.n;
    const int f = context.f;
    if (static_cast<int>(agents.size()) != n) throw std::invalid_argument("run: need n agents");
    for (AgentId a = 0; a < n; ++a) {
        if (!agents[a] || agents[a]->id() != a) throw std::invalid_argument("run: agent ids must be 0..n-1");
    }

    const auto crash = crash_rounds(context);
    const auto recipients = recipient_sets(context);
    RunRecord rec;
    rec.context = context;
    rec.deviators = deviators;
    std::string& trace = rec.trace;
    if (options.record_trace) {
        Json head;
        head["context"] = context_to_json(context);
        head["trial"] = options.trial;
        trace += head.dump();
        trace += '\n';
    }

    std::vector<std::vector<RoundMessage>> inbox(n);
    for (int m = 1; m <= f + 1; ++m) {
        for (auto& box : inbox) box.clear();
        Json sent = Json::array();
        for (AgentId i = 0; i < n; ++i) {
            if (crash[i] < m || agents[i]->halted()) continue;
            auto out = agents[i]->send(m);
            for (auto& msg : out) {
                const AgentId r = msg.receiver;
                if (msg.sender != i || r < 0 || r >= n || r == i || msg.round != m) continue;
                if (crash[i] == m && !recipients[i].contains(r)) continue;
                if (crash[r] <= m) continue;  // crashing receivers read nothing this round
                if (options.record_log) rec.log.push_back({i, r, m});
                if (options.record_trace) {
                    Json e;
                    e["from"] = i;
                    e["to"] = r;
                    e["payload"] = payload_to_json(msg.payload, n, f);
                    sent.push_back(std::move(e));
                }
                inbox[r].push_back(std::move(msg));
            }
        }
        if (options.record_trace) {
            Json line;
            line["round"] = m;
            line["phase"] = "send";
            line["messages"] = std::move(sent);
            trace += line.dump();
            trace += '\n';
        }
        for (AgentId i = 0; i < n; ++i) {
            if (crash[i] <= m || agents[i]->halted()) continue;
            agents[i]->receive(m, inbox[i]);
            agents[i]->update(m);
        }
        if (options.record_trace) {
            Json states = Json::array();
            for (AgentId i = 0; i < n; ++i) {
                Json s;
                s["id"] = i;
                s["decision"] = decision_to_json(agents[i]->decision());
                s["halted"] = agents[i]->halted();
                s["crashed"] = crash[i] <= m;
                if (const auto* sr = agents[i]->status_report()) s["sr"] = status_report_to_json(*sr, n);
                states.push_back(std::move(s));
            }
            Json line;
            line["round"] = m;
            line["phase"] = "update";
            line["agents"] = std::move(states);
            trace += line.dump();
            trace += '\n';
        }
    }

    std::vector<Decision> decisions(n);
    rec.decide_counts.resize(n);
    rec.reports.resize(n);
    for (AgentId i = 0; i < n; ++i) {
        decisions[i] = agents[i]->decision();
        rec.decide_counts[i] = agents[i]->decide_count();
        rec.reports[i] = agents[i]->report();
    }
    rec.outcome = classify_outcome(decisions, context, deviators, rec.decide_counts);
    if (options.record_trace) {
        Json line;
        line["outcome"] = outcome_to_json(rec.outcome);
        Json reports = Json::array();
        for (AgentId i = 0; i < n; ++i) {
            const auto& r = rec.reports[i];
            Json e;
            e["id"] = i;
            e["dictator"] = r.dictator ? Json(*r.dictator) : Json(nullptr);
            e["m_star"] = r.m_star;
            e["t"] = r.t;
            e["rule"] = r.rule ? Json(static_cast<int>(*r.rule)) : Json(nullptr);
            e["rule_round"] = r.rule_round;
            reports.push_back(std::move(e));
        }
        line["reports"] = std::move(reports);
        trace += line.dump();
        trace += '\n';
    }
    return rec;
}

RunRecord run(const Context& context, const Profile& profile, Seed seed, const RunOptions& options) {
    check_context(context);
    if (profile.params.n != context.n || profile.params.f != context.f) {
        throw std::invalid_argument("run: profile and context disagree on (n, f)");
    }
    const StrategySpec* spec = profile.deviation ? &*profile.deviation : nullptr;
    if (spec) validate_spec(*spec, profile.protocol, context.n, context.f);
    std::vector<std::unique_ptr<Strategy>> agents;
    agents.reserve(context.n);
    for (AgentId a = 0; a < context.n; ++a) {
        AgentSetup setup;
        setup.id = a;
        setup.pref = context.prefs[a];
        setup.params = profile.params;
        setup.seed = seed;
        setup.trial = options.trial;
        if (a < static_cast<AgentId>(options.lottery.size())) setup.lottery = options.lottery[a];
        agents.push_back(make_agent(profile.protocol, setup, spec));
    }
    AgentSet deviators;
    if (spec) deviators.insert(spec->deviator);
    return run(context, agents, deviators, options);
}

AgentSet reachable_without(const Context& context, AgentId j, AgentId i, int m) {
    const auto crash = crash_rounds(context);
    const auto recipients = recipient_sets(context);
    AgentSet reached = AgentSet::single(j);
    for (int r = m; r <= context.f + 1; ++r) {
        AgentSet next = reached;
        for (AgentId a : reached.members()) {
            if (a == i || crash[a] < r) continue;
            const AgentSet to = crash[a] == r ? recipients[a] : AgentSet::all(context.n).without(a);
            for (AgentId b : to.members()) {
                if (crash[b] > r) next.insert(b);
            }
        }
        reached = next;
    }
    return reached;
}

ReachabilityEstimate estimate_reachability(const PiParams& pi, const ReachabilityScenario& sc,
                                           std::uint64_t trials, Seed seed) {
    validate_pi(pi);
    if (trials == 0) throw std::invalid_argument("estimate_reachability: zero trials");
    auto in_range = [&](AgentId a) { return a >= 0 && a < pi.n; };
    if (!in_range(sc.j) || !in_range(sc.i) || sc.i == sc.j) {
        throw std::invalid_argument("estimate_reachability: j and i must be distinct agents");
    }
    if (sc.m < 1 || sc.m > pi.f + 1) throw std::invalid_argument("estimate_reachability: m out of range");
    if (sc.known_faulty.contains(sc.i) || sc.known_faulty.contains(sc.j)) {
        throw std::invalid_argument("estimate_reachability: i and j cannot be known faulty");
    }

    ReachabilityEstimate est;
    est.trials = trials;
    const int big_m = pi.n - sc.known_faulty.size();
    est.bound = 1.0 / (2.0 * big_m);
    constexpr int kMaxAttempts = 100000;
    for (std::uint64_t t = 0; t < trials; ++t) {
        CounterRng rng = make_stream(seed, t, -1, 0, StreamPurpose::reach);
        bool accepted = false;
        Context c;
        for (int attempt = 0; attempt < kMaxAttempts && !accepted; ++attempt) {
            c = sample_context(pi, rng);
            FailurePattern p;
            for (const auto& fl : c.pattern.failures) {
                if (!sc.forced.is_faulty(fl.agent)) p.failures.push_back(fl);
            }
            for (const auto& fl : sc.forced.failures) p.failures.push_back(fl);
            if (static_cast<int>(p.failures.size()) > pi.f) continue;
            c.pattern = canonicalize(p, pi.n);
            const Failure* fi = c.pattern.find(sc.i);
            const Failure* fj = c.pattern.find(sc.j);
            if (fi != nullptr || (fj != nullptr && fj->round < sc.m)) continue;
            bool ok = true;
            for (AgentId k : sc.known_faulty.members()) {
                const Failure* fk = c.pattern.find(k);
                if (fk == nullptr || fk->round >= sc.m) ok = false;
            }
            accepted = ok;
        }
        if (!accepted) {
            throw std::runtime_error("estimate_reachability: conditioning event is too unlikely to sample");
        }
        const AgentSet reached = reachable_without(c, sc.j, sc.i, sc.m);
        bool any = false;
        for (AgentId l : reached.members()) {
            if (l != sc.i && !c.pattern.is_faulty(l)) any = true;
        }
        if (!any) ++est.unreachable;
    }
    est.estimate = static_cast<double>(est.unreachable) / static_cast<double>(trials);
    std::tie(est.ci_low, est.ci_high) = wilson_interval(est.unreachable, trials);
    est.within_bound = est.estimate <= est.bound;
    return est;
}

std::pair<double, double> wilson_interval(std::uint64_t k, std::uint64_t n, double z) {
    if (n == 0) return {0.0, 1.0};
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

}  // namespace rcl
