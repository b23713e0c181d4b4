// rcl: command-line front end for the consensus simulator and experiments.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "rcl/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitViolation = 2;

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> trials;
    std::string out_path;
    std::string trace_path;
    std::string deviation;
    bool serial = false;
};

rcl::Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    try {
        return rcl::Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

rcl::ExperimentConfig load_config(const Options& opt) {
    rcl::Json j = read_json_file(opt.config_path);
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    if (opt.seed) j["seed"] = *opt.seed;
    if (opt.trials) j["trials"] = *opt.trials;
    if (!opt.deviation.empty()) {
        // inline JSON or a path to a JSON file
        j["deviation"] = opt.deviation.front() == '{' ? rcl::Json::parse(opt.deviation)
                                                      : read_json_file(opt.deviation);
    }
    return rcl::config_from_json(j);
}

void write_report(const Options& opt, const rcl::Json& report) {
    if (opt.out_path.empty()) return;
    std::ofstream out(opt.out_path);
    if (!out) throw std::runtime_error("cannot write " + opt.out_path);
    out << report.dump(2) << '\n';
}

rcl::Execution execution(const Options& opt) {
    return opt.serial ? rcl::Execution::serial : rcl::Execution::parallel;
}

std::string decision_text(rcl::Decision d) { return rcl::to_string(d); }

int cmd_run(const Options& opt) {
    const auto cfg = load_config(opt);
    const rcl::Context context =
        cfg.context ? *cfg.context : rcl::sample_context(cfg.pi, rcl::Seed{cfg.seed}, 0);
    rcl::RunOptions ro;
    ro.record_trace = !opt.trace_path.empty();
    const auto rec = rcl::run(context, cfg.deviant_profile(), rcl::Seed{cfg.seed}, ro);

    std::printf("agent  pref  decision  dictator  rule\n");
    for (rcl::AgentId a = 0; a < context.n; ++a) {
        const auto& r = rec.reports[a];
        std::printf("%5d  %4d  %8s  %8s  %s%s%s\n", a, context.prefs[a],
                    decision_text(rec.outcome.decisions[a]).c_str(),
                    r.dictator ? std::to_string(*r.dictator).c_str() : "-",
                    r.rule ? rcl::to_string(*r.rule) : "-",
                    context.pattern.is_faulty(a) ? "  (faulty)" : "",
                    rec.deviators.contains(a) ? "  (deviator)" : "");
    }
    std::printf("consensus: %s\n",
                rec.outcome.consensus ? std::to_string(*rec.outcome.consensus).c_str() : "none");
    for (auto v : rec.outcome.violations) std::printf("violation: %s\n", rcl::to_string(v));

    if (ro.record_trace) {
        std::ofstream trace(opt.trace_path);
        if (!trace) throw std::runtime_error("cannot write " + opt.trace_path);
        trace << rec.trace;
    }
    rcl::Json report;
    report["command"] = "run";
    report["config"] = rcl::config_to_json(cfg);
    report["context"] = rcl::context_to_json(context);
    report["outcome"] = rcl::outcome_to_json(rec.outcome);
    std::vector<rcl::UtilityParams> beta;
    for (rcl::AgentId a = 0; a < context.n; ++a) beta.push_back(cfg.beta_of(a));
    report["utilities"] = rcl::utilities(rec.outcome, context, beta);
    write_report(opt, report);

    const bool honest = !cfg.deviation || cfg.deviation->is_noop();
    if (honest && (!rec.outcome.violations.empty() || rec.honest_detection())) return kExitViolation;
    return kExitOk;
}

int cmd_mc(const Options& opt) {
    const auto cfg = load_config(opt);
    const auto s = rcl::monte_carlo(cfg, execution(opt));
    std::printf("trials %llu\n", static_cast<unsigned long long>(s.trials));
    std::printf("agent  mean_utility  95%% CI               dictator_freq\n");
    for (int a = 0; a < cfg.n; ++a) {
        std::printf("%5d  %12.6f  [%.6f, %.6f]  %.6f\n", a, s.mean_utility[a], s.utility_ci[a].low,
                    s.utility_ci[a].high,
                    static_cast<double>(s.dictator_counts[a]) / static_cast<double>(s.trials));
    }
    std::printf("consensus 0: %llu  1: %llu  none: %llu\n",
                static_cast<unsigned long long>(s.consensus_counts[0]),
                static_cast<unsigned long long>(s.consensus_counts[1]),
                static_cast<unsigned long long>(s.no_consensus));
    std::printf("runs with violation: %llu  honest detections: %llu\n",
                static_cast<unsigned long long>(s.runs_with_violation),
                static_cast<unsigned long long>(s.honest_detections));
    rcl::Json report;
    report["command"] = "mc";
    report["config"] = rcl::config_to_json(cfg);
    report["stats"] = rcl::stats_to_json(s);
    write_report(opt, report);

    const bool honest = !cfg.deviation || cfg.deviation->is_noop();
    if (honest && (s.runs_with_violation > 0 || s.honest_detections > 0)) return kExitViolation;
    return kExitOk;
}

int cmd_fairness(const Options& opt) {
    const auto cfg = load_config(opt);
    if (!cfg.context) throw std::invalid_argument("fairness needs a fixed \"context\" in the config");
    const auto r = rcl::fairness_test(cfg, *cfg.context, execution(opt));
    std::printf("t %d  candidates %zu  nonfaulty with 0: %d  with 1: %d\n", r.t,
                static_cast<std::size_t>(r.candidates.size()), r.nonfaulty_with_value[0],
                r.nonfaulty_with_value[1]);
    std::printf("exact (%llu lotteries): Pr[0]=%.6f Pr[1]=%.6f bound %s, dictator %s\n",
                static_cast<unsigned long long>(r.enumerated), r.exact_value_prob[0],
                r.exact_value_prob[1], r.exact_bound_holds ? "holds" : "FAILS",
                r.exact_uniform ? "uniform" : "NOT uniform");
    std::printf("monte carlo (%llu trials): chi2=%.4f dof=%d p=%.6f\n",
                static_cast<unsigned long long>(r.trials), r.chi2, r.dof, r.p_value);
    std::printf("%s\n", r.passed() ? "PASS" : "FAIL");
    rcl::Json report;
    report["command"] = "fairness";
    report["config"] = rcl::config_to_json(cfg);
    report["fairness"] = rcl::fairness_to_json(r);
    write_report(opt, report);
    return r.passed() ? kExitOk : kExitViolation;
}

int cmd_deviate(const Options& opt) {
    const auto cfg = load_config(opt);
    if (!cfg.deviation) throw std::invalid_argument("deviate needs a \"deviation\" in the config");
    const auto r = rcl::deviation_gain(cfg, execution(opt));
    std::printf("deviator %d  trials %llu\n", r.deviator, static_cast<unsigned long long>(r.trials));
    std::printf("honest %.6f  deviant %.6f  gain %.6f  95%% CI [%.6f, %.6f]  eps %.4f\n",
                r.honest_mean, r.deviant_mean, r.mean_gain, r.ci.low, r.ci.high, r.epsilon);
    std::printf("verdict: %s  detections: %llu\n", rcl::to_string(r.verdict),
                static_cast<unsigned long long>(r.detections));
    if (r.naive) {
        std::printf("alpha<f %.6f  alpha=f %.6f  bound %.6f\n", r.naive->alpha_lt_f, r.naive->alpha_eq_f,
                    r.naive->bound);
    }
    rcl::Json report;
    report["command"] = "deviate";
    report["config"] = rcl::config_to_json(cfg);
    report["gain"] = rcl::gain_to_json(r);
    write_report(opt, report);
    return kExitOk;
}

int cmd_exhibit(const Options& opt) {
    const auto cfg = load_config(opt);
    const auto r = rcl::expost_exhibit(cfg.n, cfg.f, cfg.beta_of(0), cfg.field_prime);
    if (!r.found) {
        std::printf("no exhibit found\n");
    } else {
        std::printf("context: %s\n", rcl::context_to_json(r.context).dump().c_str());
        std::printf("deviation: %s\n", rcl::strategy_spec_to_json(r.deviation).dump().c_str());
        std::printf("honest %.6f  deviant %.6f  gain %.6f  (%llu runs enumerated)\n", r.honest_utility,
                    r.deviant_utility, r.gain, static_cast<unsigned long long>(r.enumerated));
    }
    rcl::Json report;
    report["command"] = "exhibit";
    report["config"] = rcl::config_to_json(cfg);
    report["exhibit"] = rcl::exhibit_to_json(r);
    write_report(opt, report);
    return r.found && r.gain > 0.0 ? kExitOk : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator and experiment harness for rational fair consensus"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "ExperimentConfig JSON file")->required();
        sub->add_option("--seed", opt.seed, "Master seed (overrides config)");
        sub->add_option("--trials", opt.trials, "Trial count (overrides config)");
        sub->add_option("--out", opt.out_path, "Write the JSON report here");
        sub->add_option("--deviation", opt.deviation, "Deviation JSON (inline or file)");
        sub->add_flag("--serial", opt.serial, "Use the single-threaded reference kernel");
    };
    auto* run = app.add_subcommand("run", "Single run of the fixed (or first sampled) context");
    add_common(run);
    run->add_option("--trace", opt.trace_path, "Write a JSON-lines trace here");
    auto* mc = app.add_subcommand("mc", "Monte-Carlo utility estimation");
    add_common(mc);
    auto* fairness = app.add_subcommand("fairness", "Fairness test of the fixed context");
    add_common(fairness);
    auto* deviate = app.add_subcommand("deviate", "Paired-seed deviation gain");
    add_common(deviate);
    auto* exhibit = app.add_subcommand("exhibit", "Exact ex-post exhibit");
    add_common(exhibit);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(opt);
        if (mc->parsed()) return cmd_mc(opt);
        if (fairness->parsed()) return cmd_fairness(opt);
        if (deviate->parsed()) return cmd_deviate(opt);
        if (exhibit->parsed()) return cmd_exhibit(opt);
    } catch (const std::invalid_argument& e) {
        std::cerr << "rcl: " << e.what() << '\n';
        return kExitUsage;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "rcl: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "rcl: error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
