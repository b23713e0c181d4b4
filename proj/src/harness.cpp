#include "rcl/harness.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>

namespace rcl {

namespace {

constexpr double kZ95 = 1.959963984540054;

/// Runs fn(i) for i in [0, count), serially in order or across OpenMP threads.
/// fn must only write state owned by index i.
template <class Fn>
void for_trials(std::uint64_t count, Execution exec, Fn&& fn) {
    if (exec == Execution::serial) {
        for (std::uint64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    const auto total = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t i = 0; i < total; ++i) {
        try {
            fn(static_cast<std::uint64_t>(i));
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

AgentSet correct_agents(const RunRecord& rec) {
    AgentSet c;
    for (AgentId a = 0; a < rec.context.n; ++a) {
        if (!rec.context.pattern.is_faulty(a) && !rec.deviators.contains(a)) c.insert(a);
    }
    return c;
}

double value_utility(Preference value, Preference pref, const UtilityParams& b) {
    return value == pref ? b.beta0 : b.beta1;
}

/// Utilities of every agent, realised or averaged over the lottery.
std::vector<double> score(const ExperimentConfig& cfg, const RunRecord& rec) {
    const int n = rec.context.n;
    std::vector<double> u(n);
    if (cfg.estimator == Estimator::lottery_marginalized) {
        const AgentSet correct = correct_agents(rec);
        bool all_value = !correct.empty();
        for (AgentId a : correct.members()) {
            if (!is_value(rec.outcome.decisions[a])) all_value = false;
        }
        if (!all_value) {
            for (AgentId a = 0; a < n; ++a) u[a] = cfg.beta_of(a).beta2;
            return u;
        }
        const AgentReport& first = rec.reports[correct.members().front()];
        bool agree = !first.candidates.empty();
        for (AgentId a : correct.members()) {
            const AgentReport& r = rec.reports[a];
            if (r.candidates != first.candidates || r.candidate_ones != first.candidate_ones) {
                agree = false;
            }
        }
        if (agree) {
            const double p1 = static_cast<double>(first.candidate_ones.size()) /
                              static_cast<double>(first.candidates.size());
            for (AgentId a = 0; a < n; ++a) {
                const auto& b = cfg.beta_of(a);
                const Preference pref = rec.context.prefs[a];
                u[a] = p1 * value_utility(1, pref, b) + (1.0 - p1) * value_utility(0, pref, b);
            }
            return u;
        }
    }
    for (AgentId a = 0; a < n; ++a) u[a] = utility(rec.outcome, rec.context.prefs[a], cfg.beta_of(a));
    return u;
}

Context trial_context(const ExperimentConfig& cfg, std::uint64_t trial) {
    if (cfg.context) return *cfg.context;
    return sample_context(cfg.pi, Seed{cfg.seed}, trial);
}

std::optional<Rule> first_detection(const RunRecord& rec) {
    for (AgentId a = 0; a < rec.context.n; ++a) {
        if (!rec.deviators.contains(a) && rec.reports[a].rule) return rec.reports[a].rule;
    }
    return std::nullopt;
}

bool touches_shares(const StrategySpec& spec) {
    for (const auto& d : spec.deviations) {
        if (d.kind == DeviationKind::bad_shares || d.kind == DeviationKind::lie_forwarded_share) {
            return true;
        }
    }
    return false;
}

UtilityParams beta_from_json(const Json& j) {
    UtilityParams b;
    if (j.is_array() && j.size() == 3) {
        b.beta0 = j[0].get<double>();
        b.beta1 = j[1].get<double>();
        b.beta2 = j[2].get<double>();
    } else if (j.is_object()) {
        b.beta0 = j.at("beta0").get<double>();
        b.beta1 = j.at("beta1").get<double>();
        b.beta2 = j.at("beta2").get<double>();
    } else {
        throw std::invalid_argument("config: beta must be [b0, b1, b2] or {beta0, beta1, beta2}");
    }
    return b;
}

Json beta_to_json(const UtilityParams& b) { return Json::array({b.beta0, b.beta1, b.beta2}); }

Json interval_to_json(const Interval& i) { return Json::array({i.low, i.high}); }

const char* estimator_name(Estimator e) {
    return e == Estimator::sampled ? "sampled" : "lottery_marginalized";
}

}  // namespace

Profile ExperimentConfig::honest_profile() const {
    Profile p;
    p.protocol = protocol;
    p.params.n = n;
    p.params.f = f;
    p.params.field = field_prime == kDefaultPrime ? PrimeField{} : PrimeField{field_prime};
    return p;
}

Profile ExperimentConfig::deviant_profile() const {
    Profile p = honest_profile();
    p.deviation = deviation;
    return p;
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.n < 2 || cfg.n > kMaxAgents) throw std::invalid_argument("config: n out of range");
    if (cfg.f < 0 || cfg.f + 1 >= cfg.n) throw std::invalid_argument("config: requires 0 <= f and f + 1 < n");
    if (cfg.protocol == ProtocolKind::cons && cfg.f < 1) {
        throw std::invalid_argument("config: the consensus protocol needs f >= 1");
    }
    if (cfg.trials < 1) throw std::invalid_argument("config: trials must be at least 1");
    if (cfg.beta.size() != 1 && static_cast<int>(cfg.beta.size()) != cfg.n) {
        throw std::invalid_argument("config: beta must give one triple or one per agent");
    }
    for (const auto& b : cfg.beta) {
        if (!(b.beta0 > b.beta1 && b.beta1 > b.beta2)) {
            throw std::invalid_argument("config: utilities must satisfy beta0 > beta1 > beta2");
        }
    }
    if (cfg.pi.n != cfg.n || cfg.pi.f != cfg.f) throw std::invalid_argument("config: pi disagrees on (n, f)");
    validate_pi(cfg.pi);
    if (cfg.field_prime <= static_cast<std::uint64_t>(cfg.n) || !is_prime(cfg.field_prime) ||
        cfg.field_prime >= (std::uint64_t{1} << 62)) {
        throw std::invalid_argument("config: field_prime must be a prime in (n, 2^62)");
    }
    if (cfg.deviation) validate_spec(*cfg.deviation, cfg.protocol, cfg.n, cfg.f);
    if (cfg.context) {
        if (cfg.context->n != cfg.n || cfg.context->f != cfg.f) {
            throw std::invalid_argument("config: context disagrees on (n, f)");
        }
        const auto issues = validate_pattern(cfg.context->pattern, cfg.n, cfg.f);
        if (!issues.empty()) throw std::invalid_argument("config: context " + issues.front().message);
    }
}

ExperimentConfig config_from_json(const Json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
    ExperimentConfig cfg;
    try {
        cfg.n = j.at("n").get<int>();
        cfg.f = j.at("f").get<int>();
        if (j.contains("beta")) {
            const Json& b = j.at("beta");
            cfg.beta.clear();
            if (b.is_array() && !b.empty() && b[0].is_array()) {
                for (const auto& e : b) cfg.beta.push_back(beta_from_json(e));
            } else {
                cfg.beta.push_back(beta_from_json(b));
            }
        }
        cfg.pi.n = cfg.n;
        cfg.pi.f = cfg.f;
        if (j.contains("pi")) {
            const Json& pi = j.at("pi");
            cfg.pi.crash_prob = pi.value("crash_prob", 0.0);
            cfg.pi.pref_prob = pi.value("pref_prob", 0.5);
            if (pi.contains("prefs")) cfg.pi.prefs = pi.at("prefs").get<std::vector<Preference>>();
        }
        if (j.contains("prefs") && !j.at("prefs").is_null()) {
            cfg.pi.prefs = j.at("prefs").get<std::vector<Preference>>();
        }
        cfg.trials = j.value("trials", std::uint64_t{1000});
        cfg.seed = j.value("seed", std::uint64_t{0});
        const std::string protocol = j.value("protocol", std::string("cons"));
        if (protocol == "cons") {
            cfg.protocol = ProtocolKind::cons;
        } else if (protocol == "naive") {
            cfg.protocol = ProtocolKind::naive;
        } else {
            throw std::invalid_argument("config: protocol must be cons or naive");
        }
        if (j.contains("deviation") && !j.at("deviation").is_null()) {
            cfg.deviation = strategy_spec_from_json(j.at("deviation"), cfg.n);
            if (j.contains("se")) cfg.deviation->se = j.at("se").get<bool>();
        }
        cfg.field_prime = j.value("field_prime", kDefaultPrime);
        if (j.contains("context") && !j.at("context").is_null()) {
            Json c = j.at("context");
            if (!c.contains("n")) c["n"] = cfg.n;
            if (!c.contains("f")) c["f"] = cfg.f;
            cfg.context = context_from_json(c);
        }
        const std::string est = j.value("estimator", std::string("sampled"));
        if (est == "sampled") {
            cfg.estimator = Estimator::sampled;
        } else if (est == "lottery_marginalized") {
            cfg.estimator = Estimator::lottery_marginalized;
        } else {
            throw std::invalid_argument("config: estimator must be sampled or lottery_marginalized");
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    validate_config(cfg);
    return cfg;
}

Json config_to_json(const ExperimentConfig& cfg) {
    Json j;
    j["n"] = cfg.n;
    j["f"] = cfg.f;
    if (cfg.beta.size() == 1) {
        j["beta"] = beta_to_json(cfg.beta[0]);
    } else {
        Json b = Json::array();
        for (const auto& e : cfg.beta) b.push_back(beta_to_json(e));
        j["beta"] = std::move(b);
    }
    Json pi;
    pi["crash_prob"] = cfg.pi.crash_prob;
    pi["pref_prob"] = cfg.pi.pref_prob;
    if (cfg.pi.prefs) pi["prefs"] = *cfg.pi.prefs;
    j["pi"] = std::move(pi);
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    j["protocol"] = to_string(cfg.protocol);
    j["deviation"] = cfg.deviation ? strategy_spec_to_json(*cfg.deviation) : Json(nullptr);
    j["field_prime"] = cfg.field_prime;
    j["context"] = cfg.context ? context_to_json(*cfg.context) : Json(nullptr);
    j["estimator"] = estimator_name(cfg.estimator);
    return j;
}

Interval mean_interval(double mean, double sd, std::uint64_t n) {
    if (n == 0) return {mean, mean};
    const double half = kZ95 * sd / std::sqrt(static_cast<double>(n));
    return {mean - half, mean + half};
}

std::vector<FailurePattern> enumerate_patterns(int n, int f) {
    // per-agent failure options, then every choice of at most f agents
    std::vector<Failure> options;
    std::vector<std::vector<Failure>> per_agent(n);
    const std::uint32_t subsets = 1u << n;
    for (AgentId a = 0; a < n; ++a) {
        for (int r = 1; r <= f + 1; ++r) {
            for (std::uint32_t bits = 0; bits < subsets; ++bits) {
                const AgentSet rec(bits);
                if (rec.contains(a) || (r > 1 && rec.empty())) continue;
                per_agent[a].push_back(Failure{a, r, rec});
            }
        }
    }
    std::vector<FailurePattern> out;
    FailurePattern current;
    auto recurse = [&](auto&& self, AgentId next) -> void {
        out.push_back(current);
        if (static_cast<int>(current.failures.size()) == f) return;
        for (AgentId a = next; a < n; ++a) {
            for (const auto& fl : per_agent[a]) {
                current.failures.push_back(fl);
                self(self, a + 1);
                current.failures.pop_back();
            }
        }
    };
    recurse(recurse, 0);
    return out;
}

TrialResult run_trial(const ExperimentConfig& cfg, const Profile& profile, std::uint64_t trial) {
    const Context context = trial_context(cfg, trial);
    RunOptions options;
    options.trial = trial;
    const RunRecord rec = run(context, profile, Seed{cfg.seed}, options);
    TrialResult out;
    out.utility = score(cfg, rec);
    if (rec.outcome.consensus) out.consensus = static_cast<std::int8_t>(*rec.outcome.consensus);
    const AgentSet correct = correct_agents(rec);
    if (!correct.empty()) {
        const auto& r = rec.reports[correct.members().front()];
        if (r.dictator) out.dictator = static_cast<std::int8_t>(*r.dictator);
    }
    for (auto v : rec.outcome.violations) out.violations |= static_cast<std::uint8_t>(1u << static_cast<int>(v));
    out.honest_detection = rec.honest_detection();
    return out;
}

std::vector<TrialResult> run_trials_serial(const ExperimentConfig& cfg, const Profile& profile) {
    validate_config(cfg);
    std::vector<TrialResult> results(cfg.trials);
    for_trials(cfg.trials, Execution::serial,
               [&](std::uint64_t t) { results[t] = run_trial(cfg, profile, t); });
    return results;
}

std::vector<TrialResult> run_trials_parallel(const ExperimentConfig& cfg, const Profile& profile) {
    validate_config(cfg);
    std::vector<TrialResult> results(cfg.trials);
    for_trials(cfg.trials, Execution::parallel,
               [&](std::uint64_t t) { results[t] = run_trial(cfg, profile, t); });
    return results;
}

Stats aggregate(const std::vector<TrialResult>& results, int n) {
    Stats s;
    s.trials = results.size();
    s.mean_utility.assign(n, 0.0);
    s.utility_ci.assign(n, Interval{});
    s.dictator_counts.assign(n, 0);
    for (const auto& r : results) {
        for (int a = 0; a < n; ++a) s.mean_utility[a] += r.utility[a];
        if (r.consensus >= 0) {
            ++s.consensus_counts[r.consensus];
        } else {
            ++s.no_consensus;
        }
        if (r.dictator >= 0) ++s.dictator_counts[r.dictator];
        for (int v = 0; v < 4; ++v) {
            if (r.violations & (1u << v)) ++s.violation_counts[v];
        }
        if (r.violations) ++s.runs_with_violation;
        if (r.honest_detection) ++s.honest_detections;
    }
    if (s.trials == 0) return s;
    const double nt = static_cast<double>(s.trials);
    for (int a = 0; a < n; ++a) {
        s.mean_utility[a] /= nt;
        double ss = 0.0;
        for (const auto& r : results) {
            const double d = r.utility[a] - s.mean_utility[a];
            ss += d * d;
        }
        const double sd = s.trials > 1 ? std::sqrt(ss / (nt - 1.0)) : 0.0;
        s.utility_ci[a] = mean_interval(s.mean_utility[a], sd, s.trials);
    }
    for (int v = 0; v < 2; ++v) {
        const auto [lo, hi] = wilson_interval(s.consensus_counts[v], s.trials);
        s.consensus_ci[v] = {lo, hi};
    }
    s.dictator_ci.resize(n);
    for (int a = 0; a < n; ++a) {
        const auto [lo, hi] = wilson_interval(s.dictator_counts[a], s.trials);
        s.dictator_ci[a] = {lo, hi};
    }
    return s;
}

Stats monte_carlo(const ExperimentConfig& cfg, Execution exec) {
    validate_config(cfg);
    const Profile profile = cfg.deviant_profile();
    auto results = exec == Execution::serial ? run_trials_serial(cfg, profile)
                                             : run_trials_parallel(cfg, profile);
    return aggregate(results, cfg.n);
}

FairnessReport fairness_test(const ExperimentConfig& cfg, const Context& context, Execution exec) {
    ExperimentConfig c = cfg;
    c.context = context;
    c.deviation.reset();
    validate_config(c);
    const Profile profile = c.honest_profile();
    const int n = c.n;
    const int f = c.f;

    FairnessReport rep;
    rep.context = context;
    for (AgentId a = 0; a < n; ++a) {
        if (!context.pattern.is_faulty(a)) ++rep.nonfaulty_with_value[context.prefs[a]];
    }

    // probe the t and candidate set in use; neither depends on the lottery
    const RunRecord probe = run(context, profile, Seed{c.seed});
    const AgentSet correct = correct_agents(probe);
    if (correct.empty()) throw std::invalid_argument("fairness: no correct agents in context");
    const AgentReport& ref = probe.reports[correct.members().front()];
    if (!ref.dictator) throw std::runtime_error("fairness: honest probe run reached no decision");
    rep.t = ref.t;
    rep.candidates = ref.candidates;

    const std::uint64_t radix = static_cast<std::uint64_t>(n - rep.t);
    std::uint64_t combos = 1;
    for (int a = 0; a < n; ++a) {
        combos *= radix;
        if (combos > 10'000'000) throw std::invalid_argument("fairness: enumeration too large");
    }
    std::vector<std::uint64_t> dict_exact(n, 0);
    std::array<std::uint64_t, 2> value_exact{};
    std::vector<std::uint8_t> bad_t(combos, 0);
    std::vector<std::int8_t> dict_of(combos, -1);
    std::vector<std::int8_t> value_of_combo(combos, -1);
    for_trials(combos, exec, [&](std::uint64_t idx) {
        RunOptions opt;
        opt.lottery.resize(n);
        std::uint64_t rest = idx;
        for (AgentId a = 0; a < n; ++a) {
            std::vector<std::uint64_t> x(f + 1, 0);
            x[rep.t] = rest % radix;
            rest /= radix;
            opt.lottery[a] = std::move(x);
        }
        const RunRecord rec = run(context, profile, Seed{c.seed}, opt);
        const AgentReport& r = rec.reports[correct.members().front()];
        if (r.t != rep.t || !r.dictator) bad_t[idx] = 1;
        if (r.dictator) dict_of[idx] = static_cast<std::int8_t>(*r.dictator);
        if (rec.outcome.consensus) value_of_combo[idx] = static_cast<std::int8_t>(*rec.outcome.consensus);
    });
    for (std::uint64_t idx = 0; idx < combos; ++idx) {
        if (bad_t[idx]) throw std::runtime_error("fairness: lottery values changed the clean round");
        if (dict_of[idx] >= 0) ++dict_exact[dict_of[idx]];
        if (value_of_combo[idx] >= 0) ++value_exact[value_of_combo[idx]];
    }
    rep.enumerated = combos;
    rep.exact_dictator_prob.resize(n);
    for (AgentId a = 0; a < n; ++a) {
        rep.exact_dictator_prob[a] = static_cast<double>(dict_exact[a]) / static_cast<double>(combos);
    }
    rep.exact_uniform = true;
    const auto k = static_cast<std::uint64_t>(rep.candidates.size());
    for (AgentId a = 0; a < n; ++a) {
        const std::uint64_t expected = rep.candidates.contains(a) ? combos : 0;
        if (dict_exact[a] * k != expected) rep.exact_uniform = false;
    }
    rep.exact_bound_holds = true;
    for (int v = 0; v < 2; ++v) {
        rep.exact_value_prob[v] = static_cast<double>(value_exact[v]) / static_cast<double>(combos);
        if (value_exact[v] * static_cast<std::uint64_t>(n) <
            static_cast<std::uint64_t>(rep.nonfaulty_with_value[v]) * combos) {
            rep.exact_bound_holds = false;
        }
    }

    // Monte-Carlo with drawn lotteries
    const auto results = exec == Execution::serial ? run_trials_serial(c, profile)
                                                   : run_trials_parallel(c, profile);
    rep.trials = results.size();
    rep.dictator_counts.assign(n, 0);
    for (const auto& r : results) {
        if (r.dictator >= 0) ++rep.dictator_counts[r.dictator];
        if (r.consensus >= 0) ++rep.value_counts[r.consensus];
    }
    rep.dof = static_cast<int>(k) - 1;
    const double expected = static_cast<double>(rep.trials) / static_cast<double>(k);
    for (AgentId a : rep.candidates.members()) {
        const double d = static_cast<double>(rep.dictator_counts[a]) - expected;
        rep.chi2 += d * d / expected;
    }
    if (rep.dof > 0) {
        boost::math::chi_squared dist(rep.dof);
        rep.p_value = boost::math::cdf(boost::math::complement(dist, rep.chi2));
    }
    return rep;
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::consistent: return "consistent";
        case Verdict::inconclusive: return "inconclusive";
        case Verdict::positive: return "positive";
    }
    return "?";
}

GainReport deviation_gain(const ExperimentConfig& cfg, Execution exec) {
    validate_config(cfg);
    if (!cfg.deviation) throw std::invalid_argument("deviation_gain: config has no deviation");
    if (cfg.estimator == Estimator::lottery_marginalized && touches_shares(*cfg.deviation)) {
        throw std::invalid_argument(
            "deviation_gain: the lottery-marginalized estimator assumes shares are untouched");
    }
    const Profile honest = cfg.honest_profile();
    const Profile deviant = cfg.deviant_profile();
    const AgentId dev = cfg.deviation->deviator;

    struct Slot {
        double honest = 0.0;
        double deviant = 0.0;
        std::int8_t rule = -1;
        bool alpha_lt = false;
        bool alpha_eq = false;
    };
    std::vector<Slot> slots(cfg.trials);
    for_trials(cfg.trials, exec, [&](std::uint64_t trial) {
        const Context context = trial_context(cfg, trial);
        RunOptions options;
        options.trial = trial;
        const RunRecord h = run(context, honest, Seed{cfg.seed}, options);
        const RunRecord d = run(context, deviant, Seed{cfg.seed}, options);
        Slot& s = slots[trial];
        s.honest = score(cfg, h)[dev];
        s.deviant = score(cfg, d)[dev];
        if (auto r = first_detection(d)) s.rule = static_cast<std::int8_t>(*r);
        int others_faulty = 0;
        bool silent_round1 = false;
        for (const auto& fl : context.pattern.failures) {
            if (fl.agent == dev) continue;
            ++others_faulty;
            if (fl.round == 1 && fl.recipients.is_subset_of(AgentSet::single(dev))) silent_round1 = true;
        }
        const int failures = static_cast<int>(context.pattern.failures.size());
        s.alpha_lt = failures < cfg.f && silent_round1;
        s.alpha_eq = others_faulty == cfg.f;
    });

    GainReport rep;
    rep.deviator = dev;
    rep.trials = cfg.trials;
    rep.estimator = cfg.estimator;
    const double nt = static_cast<double>(cfg.trials);
    std::uint64_t lt = 0;
    std::uint64_t eq = 0;
    for (const auto& s : slots) {
        rep.honest_mean += s.honest;
        rep.deviant_mean += s.deviant;
        rep.mean_gain += s.deviant - s.honest;
        if (s.rule >= 0) {
            ++rep.detections;
            ++rep.rule_counts[s.rule];
        }
        lt += s.alpha_lt;
        eq += s.alpha_eq;
    }
    rep.honest_mean /= nt;
    rep.deviant_mean /= nt;
    rep.mean_gain /= nt;
    double ss = 0.0;
    for (const auto& s : slots) {
        const double d = (s.deviant - s.honest) - rep.mean_gain;
        ss += d * d;
    }
    rep.sd = cfg.trials > 1 ? std::sqrt(ss / (nt - 1.0)) : 0.0;
    rep.ci = mean_interval(rep.mean_gain, rep.sd, cfg.trials);
    const UtilityParams& b = cfg.beta_of(dev);
    rep.epsilon = 0.01 * (b.beta0 - b.beta2);
    if (rep.ci.low > 0.0) {
        rep.verdict = Verdict::positive;
    } else if (rep.ci.high <= rep.epsilon) {
        rep.verdict = Verdict::consistent;
    } else {
        rep.verdict = Verdict::inconclusive;
    }
    if (cfg.protocol == ProtocolKind::naive) {
        NaiveBound nb;
        nb.alpha_lt_f = static_cast<double>(lt) / nt;
        nb.alpha_eq_f = static_cast<double>(eq) / nt;
        const double n = cfg.n;
        nb.bound = (b.beta0 - b.beta1) * (1.0 / (n - 1.0) - 1.0 / n) * nb.alpha_lt_f -
                   (b.beta0 - b.beta2) * nb.alpha_eq_f;
        rep.naive = nb;
    }
    return rep;
}

double ExactOutcome::expected_utility(Preference pref, const UtilityParams& beta) const {
    if (total == 0) return 0.0;
    const double sum = static_cast<double>(consensus[pref]) * beta.beta0 +
                       static_cast<double>(consensus[1 - pref]) * beta.beta1 +
                       static_cast<double>(none) * beta.beta2;
    return sum / static_cast<double>(total);
}

ExactOutcome enumerate_lotteries(const Context& context, const Profile& profile, Seed seed) {
    const int n = context.n;
    const int width = context.f + 1;
    std::uint64_t per_agent = 1;
    for (int t = 0; t < width; ++t) per_agent *= static_cast<std::uint64_t>(n - t);
    std::uint64_t combos = 1;
    for (int a = 0; a < n; ++a) {
        combos *= per_agent;
        if (combos > 5'000'000) throw std::invalid_argument("enumerate_lotteries: too many combinations");
    }
    ExactOutcome out;
    RunOptions opt;
    opt.lottery.resize(n);
    for (std::uint64_t idx = 0; idx < combos; ++idx) {
        std::uint64_t rest = idx;
        for (AgentId a = 0; a < n; ++a) {
            std::vector<std::uint64_t> x(width);
            for (int t = 0; t < width; ++t) {
                const auto radix = static_cast<std::uint64_t>(n - t);
                x[t] = rest % radix;
                rest /= radix;
            }
            opt.lottery[a] = std::move(x);
        }
        const RunRecord rec = run(context, profile, seed, opt);
        ++out.total;
        if (rec.outcome.consensus) {
            ++out.consensus[*rec.outcome.consensus];
        } else {
            ++out.none;
        }
    }
    return out;
}

ExhibitReport expost_exhibit(int n, int f, const UtilityParams& beta, std::uint64_t field_prime) {
    if (f < 1 || f + 1 >= n || n > 4) {
        throw std::invalid_argument("expost_exhibit: needs 1 <= f, f + 1 < n <= 4");
    }
    Profile honest;
    honest.params.n = n;
    honest.params.f = f;
    honest.params.field = field_prime == kDefaultPrime ? PrimeField{} : PrimeField{field_prime};
    const Seed seed{0};

    ExhibitReport rep;
    rep.subject = 0;
    Context base;
    base.n = n;
    base.f = f;
    base.prefs.assign(n, 0);
    base.prefs[0] = 1;

    // single failures of agent 0, smallest round first, then fewest recipients
    std::vector<Failure> candidates;
    for (int m = 1; m <= f + 1; ++m) {
        for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
            const AgentSet a(bits);
            if (a.contains(0) || (m > 1 && a.empty())) continue;
            candidates.push_back(Failure{0, m, a});
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const Failure& x, const Failure& y) {
        if (x.round != y.round) return x.round < y.round;
        if (x.recipients.size() != y.recipients.size()) return x.recipients.size() < y.recipients.size();
        return x.recipients.bits() < y.recipients.bits();
    });

    for (const auto& fl : candidates) {
        rep.searched.push_back(fl);
        Context c = base;
        c.pattern.failures = {fl};
        const ExactOutcome h = enumerate_lotteries(c, honest, seed);
        if (h.consensus[1] == 0 || fl.round > f || fl.recipients.empty()) continue;
        const AgentId j = fl.recipients.members().front();
        StrategySpec spec;
        spec.deviator = j;
        DeviationSpec d;
        d.kind = DeviationKind::status_lie;
        d.variant = StatusLieVariant::b;
        d.subject = 0;
        d.target = -1;
        d.round = fl.round + 1;
        spec.deviations.push_back(d);
        Profile deviant = honest;
        deviant.deviation = spec;
        const ExactOutcome dv = enumerate_lotteries(c, deviant, seed);
        rep.found = true;
        rep.context = c;
        rep.deviation = spec;
        rep.enumerated = h.total + dv.total;
        rep.honest_utility = h.expected_utility(c.prefs[j], beta);
        rep.deviant_utility = dv.expected_utility(c.prefs[j], beta);
        rep.gain = rep.deviant_utility - rep.honest_utility;
        break;
    }
    return rep;
}

Json stats_to_json(const Stats& s) {
    Json j;
    j["trials"] = s.trials;
    j["mean_utility"] = s.mean_utility;
    Json ci = Json::array();
    for (const auto& i : s.utility_ci) ci.push_back(interval_to_json(i));
    j["utility_ci"] = std::move(ci);
    j["consensus_counts"] = {{"0", s.consensus_counts[0]}, {"1", s.consensus_counts[1]}, {"none", s.no_consensus}};
    j["consensus_ci"] = {{"0", interval_to_json(s.consensus_ci[0])}, {"1", interval_to_json(s.consensus_ci[1])}};
    j["dictator_counts"] = s.dictator_counts;
    Json dci = Json::array();
    for (const auto& i : s.dictator_ci) dci.push_back(interval_to_json(i));
    j["dictator_ci"] = std::move(dci);
    Json v;
    for (int k = 0; k < 4; ++k) v[to_string(static_cast<Violation>(k))] = s.violation_counts[k];
    j["violations"] = std::move(v);
    j["runs_with_violation"] = s.runs_with_violation;
    j["honest_detections"] = s.honest_detections;
    return j;
}

Json fairness_to_json(const FairnessReport& r) {
    Json j;
    j["context"] = context_to_json(r.context);
    j["t"] = r.t;
    j["candidates"] = agent_set_to_json(r.candidates);
    j["nonfaulty_with_value"] = {{"0", r.nonfaulty_with_value[0]}, {"1", r.nonfaulty_with_value[1]}};
    Json ex;
    ex["enumerated"] = r.enumerated;
    ex["value_prob"] = {{"0", r.exact_value_prob[0]}, {"1", r.exact_value_prob[1]}};
    ex["dictator_prob"] = r.exact_dictator_prob;
    ex["bound_holds"] = r.exact_bound_holds;
    ex["uniform"] = r.exact_uniform;
    j["exact"] = std::move(ex);
    Json mc;
    mc["trials"] = r.trials;
    mc["dictator_counts"] = r.dictator_counts;
    mc["value_counts"] = {{"0", r.value_counts[0]}, {"1", r.value_counts[1]}};
    mc["chi2"] = r.chi2;
    mc["dof"] = r.dof;
    mc["p_value"] = r.p_value;
    j["monte_carlo"] = std::move(mc);
    j["passed"] = r.passed();
    return j;
}

Json gain_to_json(const GainReport& r) {
    Json j;
    j["deviator"] = r.deviator;
    j["trials"] = r.trials;
    j["estimator"] = estimator_name(r.estimator);
    j["honest_mean"] = r.honest_mean;
    j["deviant_mean"] = r.deviant_mean;
    j["mean_gain"] = r.mean_gain;
    j["sd"] = r.sd;
    j["ci"] = interval_to_json(r.ci);
    j["epsilon"] = r.epsilon;
    j["verdict"] = to_string(r.verdict);
    j["detections"] = r.detections;
    Json rules;
    for (int k = 1; k <= 8; ++k) rules[to_string(static_cast<Rule>(k))] = r.rule_counts[k];
    j["rule_counts"] = std::move(rules);
    if (r.naive) {
        j["naive"] = {{"alpha_lt_f", r.naive->alpha_lt_f},
                      {"alpha_eq_f", r.naive->alpha_eq_f},
                      {"bound", r.naive->bound}};
    }
    return j;
}

Json exhibit_to_json(const ExhibitReport& r) {
    Json j;
    j["found"] = r.found;
    j["context"] = context_to_json(r.context);
    j["subject"] = r.subject;
    j["deviation"] = strategy_spec_to_json(r.deviation);
    j["enumerated"] = r.enumerated;
    j["honest_utility"] = r.honest_utility;
    j["deviant_utility"] = r.deviant_utility;
    j["gain"] = r.gain;
    j["searched"] = pattern_to_json(FailurePattern{r.searched});
    return j;
}

}  // namespace rcl
