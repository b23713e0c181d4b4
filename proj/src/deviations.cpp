#include "rcl/deviations.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

namespace rcl {

namespace {

constexpr std::array<const char*, 11> kKindNames = {
    "none",         "pretend_crash", "lie_initial_value",   "malformed",
    "bad_shares",   "bad_z",         "wrong_decide",        "lie_forwarded_share",
    "crash_then_send", "status_lie", "naive_exploit",
};

void erase_if_receiver(std::vector<RoundMessage>& msgs, auto pred) {
    msgs.erase(std::remove_if(msgs.begin(), msgs.end(),
                              [&](const RoundMessage& m) { return pred(m.receiver); }),
               msgs.end());
}

SharedReport* report_field(Payload& payload) {
    if (auto* p = std::get_if<Round1Payload>(&payload)) return &p->report;
    if (auto* p = std::get_if<MidPayload>(&payload)) return &p->report;
    if (auto* p = std::get_if<FinalPayload>(&payload)) return &p->report;
    return nullptr;
}

bool minority(Preference own, const std::vector<std::optional<Preference>>& values, AgentId self) {
    int same = 0;
    int other = 0;
    for (AgentId j = 0; j < static_cast<AgentId>(values.size()); ++j) {
        if (j == self || !values[j]) continue;
        (*values[j] == own ? same : other) += 1;
    }
    return other > same;
}

class ConsDeviant final : public Strategy {
public:
    ConsDeviant(const AgentSetup& setup, const StrategySpec& spec)
        : core_(setup), spec_(spec), n_(setup.params.n), f_(setup.params.f) {
        for (const auto& d : spec_.deviations) {
            if (d.kind == DeviationKind::bad_shares && d.mode == BadSharesMode::non_random) {
                core_.zero_slopes();
            }
            if (d.kind == DeviationKind::bad_z) core_.set_reuse_fresh(true);
        }
        log_.first_omission.assign(n_, 0);
        log_.resumed_after.assign(n_, 0);
    }

    AgentId id() const override { return core_.id(); }
    Decision decision() const override { return core_.decision(); }
    int decide_count() const override { return core_.decide_count(); }
    bool halted() const override { return core_.halted(); }
    AgentReport report() const override { return core_.report(); }
    const StatusReport* status_report() const override { return core_.status_report(); }

    std::vector<RoundMessage> send(int round) override {
        auto msgs = core_.send(round);
        AgentSet produced;
        for (const auto& m : msgs) produced.insert(m.receiver);
        bool changed = false;
        for (const auto& d : spec_.deviations) changed |= transform(d, round, msgs);
        AgentSet sent;
        for (const auto& m : msgs) sent.insert(m.receiver);
        for (AgentId p = 0; p < n_; ++p) {
            if (produced.contains(p) && !sent.contains(p)) {
                changed = true;
                if (log_.first_omission[p] == 0) log_.first_omission[p] = round;
            }
            if (sent.contains(p) && log_.first_omission[p] > 0 &&
                log_.first_omission[p] < round && log_.resumed_after[p] == 0) {
                log_.resumed_after[p] = round;
            }
        }
        deviated_ |= changed;
        return msgs;
    }

    void receive(int round, std::span<const RoundMessage> delivered) override {
        core_.receive(round, delivered);
    }

    void update(int round) override {
        if (spec_.se) core_.set_punish(!deviated_);
        core_.update(round);
        if (round == 1) minority_ = minority(core_.pref(), core_.values(), core_.id());
        for (const auto& d : spec_.deviations) {
            if (d.kind != DeviationKind::wrong_decide || d.round != round) continue;
            core_.decide(d.value);
            if (round <= f_) core_.halt();
            deviated_ = true;
        }
        if (spec_.se && deviated_ && !core_.halted()) {
            std::vector<AgentSet> heard(f_ + 2);
            for (int r = 0; r <= f_ + 1; ++r) heard[r] = core_.heard_in(r);
            if (is_unsalvageable(log_, heard, round)) {
                core_.decide(Decision::bot);
                core_.halt();
            }
        }
    }

private:
    bool targeted(AgentId target, AgentId receiver) const {
        return target < 0 || target == receiver;
    }

    bool transform(const DeviationSpec& d, int round, std::vector<RoundMessage>& msgs) {
        const auto& field = core_.params().field;
        const std::size_t before = msgs.size();
        switch (d.kind) {
            case DeviationKind::none:
            case DeviationKind::wrong_decide:
                return false;
            case DeviationKind::pretend_crash:
                if (round == d.round) {
                    erase_if_receiver(msgs, [&](AgentId r) { return !d.recipients.contains(r); });
                } else if (round > d.round) {
                    msgs.clear();
                }
                return msgs.size() != before;
            case DeviationKind::naive_exploit:
                if (round >= 2 && minority_) msgs.clear();
                return msgs.size() != before;
            case DeviationKind::crash_then_send:
                if (round == d.round) {
                    erase_if_receiver(msgs, [&](AgentId r) { return d.targets.contains(r); });
                } else if (round == d.resume_round) {
                    erase_if_receiver(msgs, [&](AgentId r) { return r != d.target; });
                } else if (round > d.round) {
                    msgs.clear();
                }
                return msgs.size() != before;
            case DeviationKind::lie_initial_value: {
                if (round != 1) return false;
                bool changed = false;
                for (auto& m : msgs) {
                    auto* p = std::get_if<Round1Payload>(&m.payload);
                    if (p == nullptr) continue;
                    if (!d.targets.empty() && !d.targets.contains(m.receiver)) continue;
                    p->pref ^= 1;
                    changed = true;
                }
                return changed;
            }
            case DeviationKind::malformed: {
                if (round != d.round) return false;
                bool changed = false;
                for (auto& m : msgs) {
                    if (!targeted(d.target, m.receiver)) continue;
                    m.payload = MalformedPayload{};
                    changed = true;
                }
                return changed;
            }
            case DeviationKind::bad_shares: {
                if (round != 1) return false;
                if (d.mode == BadSharesMode::non_random) return true;
                for (auto& m : msgs) {
                    auto* p = std::get_if<Round1Payload>(&m.payload);
                    if (p == nullptr) continue;
                    // first message goes to the lowest-id other agent
                    for (auto& y : p->shares) y = field.add(y, 1);
                    return true;
                }
                return false;
            }
            case DeviationKind::bad_z:
                return round >= 2 && round <= f_;
            case DeviationKind::lie_forwarded_share: {
                if (round != f_ + 1) return false;
                for (auto& m : msgs) {
                    auto* p = std::get_if<FinalPayload>(&m.payload);
                    if (p == nullptr || m.receiver != d.target || !p->present.contains(d.subject)) {
                        continue;
                    }
                    auto* row = p->forwarded.data() + static_cast<std::size_t>(d.subject) * (f_ + 1);
                    for (int t = 0; t <= f_; ++t) row[t] = field.add(row[t], 1);
                    return true;
                }
                return false;
            }
            case DeviationKind::status_lie:
                return status_lie(d, round, msgs);
        }
        return false;
    }

    bool status_lie(const DeviationSpec& d, int round, std::vector<RoundMessage>& msgs) {
        if (round < d.round) return false;
        if (d.variant == StatusLieVariant::a && round != d.round) return false;
        const StatusReport* own = core_.status_report();
        if (own == nullptr || msgs.empty()) return false;
        const StatusEntry real = (*own)[d.subject];
        const AgentId self = core_.id();
        CounterRng forge = make_stream(core_.seed(), core_.trial(), self, round, StreamPurpose::forge);
        bool changed = false;
        for (auto& m : msgs) {
            if (!targeted(d.target, m.receiver) || m.receiver == d.subject) continue;
            SharedReport* field = report_field(m.payload);
            if (field == nullptr || !*field) continue;
            StatusReport rep = **field;
            switch (d.variant) {
                case StatusLieVariant::a: {
                    if (real.alive() && real.z.size() == n_) return changed;
                    ZVector z(n_, 0);
                    z.set(d.subject, static_cast<int>(forge.uniform_below(n_)));
                    if (round - 1 == 1) {
                        z.set(self, static_cast<int>(forge.uniform_below(n_)));
                    } else {
                        for (AgentId k = 0; k < n_; ++k) {
                            if (k == d.subject || k == self) continue;
                            z.set(k, static_cast<int>(forge.uniform_below(n_)));
                        }
                    }
                    rep[d.subject] = StatusEntry{kNeverCrashed, -1, z};
                    break;
                }
                case StatusLieVariant::b: {
                    const int claimed = d.round - 1;
                    if (rep[d.subject].crash_round > claimed) {
                        rep[d.subject] = StatusEntry{claimed, self, ZVector{}};
                    }
                    if (auto* mid = std::get_if<MidPayload>(&m.payload)) {
                        mid->z.set(d.subject, kZBot);
                    } else if (auto* fin = std::get_if<FinalPayload>(&m.payload)) {
                        if (fin->present.contains(d.subject)) {
                            fin->present.erase(d.subject);
                            auto* row = fin->forwarded.data() +
                                        static_cast<std::size_t>(d.subject) * (f_ + 1);
                            std::fill(row, row + f_ + 1, 0);
                        }
                    }
                    break;
                }
                case StatusLieVariant::c: {
                    if (real.alive() || real.crash_round > round - 2) return changed;
                    rep[d.subject] = StatusEntry{real.crash_round + 1, self, ZVector{}};
                    break;
                }
            }
            *field = std::make_shared<const StatusReport>(std::move(rep));
            changed = true;
        }
        return changed;
    }

    ConsAgent core_;
    StrategySpec spec_;
    int n_;
    int f_;
    bool deviated_ = false;
    bool minority_ = false;
    ConductLog log_;
};

class NaiveDeviant final : public Strategy {
public:
    NaiveDeviant(const AgentSetup& setup, const StrategySpec& spec)
        : core_(setup), spec_(spec), n_(setup.params.n), f_(setup.params.f) {}

    AgentId id() const override { return core_.id(); }
    Decision decision() const override { return core_.decision(); }
    int decide_count() const override { return core_.decide_count(); }
    bool halted() const override { return core_.halted(); }
    AgentReport report() const override { return core_.report(); }

    std::vector<RoundMessage> send(int round) override {
        auto msgs = core_.send(round);
        for (const auto& d : spec_.deviations) {
            switch (d.kind) {
                case DeviationKind::pretend_crash:
                    if (round == d.round) {
                        erase_if_receiver(msgs,
                                          [&](AgentId r) { return !d.recipients.contains(r); });
                    } else if (round > d.round) {
                        msgs.clear();
                    }
                    break;
                case DeviationKind::naive_exploit:
                    if (round >= 2 && minority_) msgs.clear();
                    break;
                case DeviationKind::lie_initial_value:
                    if (round != 1) break;
                    for (auto& m : msgs) {
                        if (!d.targets.empty() && !d.targets.contains(m.receiver)) continue;
                        auto& payload = std::get<NaivePayload>(m.payload);
                        for (auto& tuple : payload.tuples) {
                            if (tuple.agent == core_.id()) tuple.pref ^= 1;
                        }
                    }
                    break;
                default:
                    break;
            }
        }
        return msgs;
    }

    void receive(int round, std::span<const RoundMessage> delivered) override {
        core_.receive(round, delivered);
    }

    void update(int round) override {
        core_.update(round);
        if (round == 1) {
            std::vector<std::optional<Preference>> values(n_);
            for (AgentId j = 0; j < n_; ++j) {
                if (const auto& t = core_.tuple_of(j)) values[j] = t->pref;
            }
            minority_ = minority(core_.pref(), values, core_.id());
        }
        for (const auto& d : spec_.deviations) {
            if (d.kind != DeviationKind::wrong_decide || d.round != round) continue;
            core_.decide(d.value);
            if (round <= f_) core_.halt();
        }
    }

private:
    NaiveAgent core_;
    StrategySpec spec_;
    int n_;
    int f_;
    bool minority_ = false;
};

}  // namespace

bool StrategySpec::is_noop() const {
    return std::all_of(deviations.begin(), deviations.end(),
                       [](const DeviationSpec& d) { return d.kind == DeviationKind::none; });
}

const char* to_string(DeviationKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<DeviationKind> deviation_kind_from_string(const std::string& name) {
    for (std::size_t k = 0; k < kKindNames.size(); ++k) {
        if (name == kKindNames[k]) return static_cast<DeviationKind>(k);
    }
    return std::nullopt;
}

const char* to_string(ProtocolKind protocol) {
    return protocol == ProtocolKind::cons ? "cons" : "naive";
}

void validate_spec(const StrategySpec& spec, ProtocolKind protocol, int n, int f) {
    auto fail = [](const std::string& what) {
        throw std::invalid_argument("deviation: " + what);
    };
    auto agent_ok = [n](AgentId a) { return a >= 0 && a < n; };
    auto round_ok = [f](int r) { return r >= 1 && r <= f + 1; };
    if (!agent_ok(spec.deviator)) fail("deviator out of range");
    const AgentSet all = AgentSet::all(n);
    for (const auto& d : spec.deviations) {
        const std::string name = to_string(d.kind);
        if (protocol == ProtocolKind::naive) {
            switch (d.kind) {
                case DeviationKind::none:
                case DeviationKind::pretend_crash:
                case DeviationKind::lie_initial_value:
                case DeviationKind::wrong_decide:
                case DeviationKind::naive_exploit:
                    break;
                default:
                    fail(name + " is not defined for the naive protocol");
            }
        }
        switch (d.kind) {
            case DeviationKind::none:
            case DeviationKind::bad_z:
            case DeviationKind::naive_exploit:
            case DeviationKind::bad_shares:
                break;
            case DeviationKind::pretend_crash:
                if (!round_ok(d.round)) fail(name + ": round out of range");
                if (!d.recipients.is_subset_of(all) || d.recipients.contains(spec.deviator)) {
                    fail(name + ": bad recipients");
                }
                break;
            case DeviationKind::lie_initial_value:
                if (!d.targets.is_subset_of(all)) fail(name + ": bad targets");
                break;
            case DeviationKind::malformed:
                if (!round_ok(d.round)) fail(name + ": round out of range");
                if (d.target != -1 && (!agent_ok(d.target) || d.target == spec.deviator)) {
                    fail(name + ": bad target");
                }
                break;
            case DeviationKind::wrong_decide:
                if (!round_ok(d.round)) fail(name + ": round out of range");
                if (d.value == Decision::undecided) fail(name + ": value must be 0, 1 or bot");
                break;
            case DeviationKind::lie_forwarded_share:
                if (!agent_ok(d.subject) || !agent_ok(d.target) || d.subject == d.target ||
                    d.target == spec.deviator) {
                    fail(name + ": bad subject or target");
                }
                break;
            case DeviationKind::crash_then_send:
                if (!round_ok(d.round) || !round_ok(d.resume_round) || d.resume_round <= d.round) {
                    fail(name + ": rounds out of range");
                }
                if (!agent_ok(d.target) || d.target == spec.deviator ||
                    !d.targets.is_subset_of(all)) {
                    fail(name + ": bad targets");
                }
                break;
            case DeviationKind::status_lie:
                if (d.round < 2 || d.round > f + 1) fail(name + ": round out of range");
                if (!agent_ok(d.subject) || d.subject == spec.deviator) fail(name + ": bad subject");
                if (d.target != -1 && (!agent_ok(d.target) || d.target == spec.deviator ||
                                       d.target == d.subject)) {
                    fail(name + ": bad target");
                }
                break;
        }
    }
}

std::unique_ptr<Strategy> make_honest(ProtocolKind protocol, const AgentSetup& setup) {
    if (protocol == ProtocolKind::naive) return std::make_unique<NaiveAgent>(setup);
    return std::make_unique<ConsAgent>(setup);
}

std::unique_ptr<Strategy> apply(ProtocolKind protocol, const AgentSetup& setup,
                                const StrategySpec& spec) {
    validate_spec(spec, protocol, setup.params.n, setup.params.f);
    if (protocol == ProtocolKind::naive) return std::make_unique<NaiveDeviant>(setup, spec);
    return std::make_unique<ConsDeviant>(setup, spec);
}

StrategySpec naive_exploit(AgentId deviator) {
    StrategySpec spec;
    spec.deviator = deviator;
    DeviationSpec d;
    d.kind = DeviationKind::naive_exploit;
    spec.deviations.push_back(d);
    return spec;
}

std::unique_ptr<Strategy> make_agent(ProtocolKind protocol, const AgentSetup& setup,
                                     const StrategySpec* spec) {
    if (spec != nullptr && spec->deviator == setup.id && !spec->is_noop()) {
        return apply(protocol, setup, *spec);
    }
    return make_honest(protocol, setup);
}

}  // namespace rcl
