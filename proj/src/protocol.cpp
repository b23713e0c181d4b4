#include "rcl/protocol.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace rcl {

const char* to_string(Rule r) {
    switch (r) {
        case Rule::malformed: return "malformed";
        case Rule::round1_z_disagreement: return "round1_z_disagreement";
        case Rule::relayed_z_mismatch: return "relayed_z_mismatch";
        case Rule::shares_not_interpolable: return "shares_not_interpolable";
        case Rule::crash_contradicted: return "crash_contradicted";
        case Rule::reporter_contradiction: return "reporter_contradiction";
        case Rule::ignored_report: return "ignored_report";
        case Rule::too_many_crashes: return "too_many_crashes";
    }
    return "?";
}

const StatusReport* report_of(const Payload& payload) {
    return std::visit(
        [](const auto& p) -> const StatusReport* {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, Round1Payload> || std::is_same_v<T, MidPayload> ||
                          std::is_same_v<T, FinalPayload>) {
                return p.report.get();
            } else {
                return nullptr;
            }
        },
        payload);
}

int first_clean_round(const NcSequence& seq) {
    for (std::size_t m = 1; m < seq.nc.size(); ++m) {
        if (seq.nc[m] == seq.nc[m - 1]) return static_cast<int>(m);
    }
    throw std::logic_error("first_clean_round: no round seems clean");
}

AgentId select_dictator(AgentSet nc, std::span<const std::uint64_t> secrets, int n) {
    if (nc.empty()) throw std::invalid_argument("select_dictator: empty agent set");
    const auto members = nc.members();
    if (secrets.size() != members.size()) {
        throw std::invalid_argument("select_dictator: one secret per member required");
    }
    const int t = n - nc.size();
    const std::uint64_t mod = static_cast<std::uint64_t>(n - t);
    std::uint64_t s = 0;
    for (auto x : secrets) s = (s + x % mod) % mod;
    // members are ascending; the (S+1)-st highest sits S places from the end
    return members[members.size() - 1 - s];
}

bool is_unsalvageable(const ConductLog& log, std::span<const AgentSet> heard_by_round,
                      int current_round) {
    for (std::size_t p = 0; p < log.first_omission.size(); ++p) {
        const int omitted = log.first_omission[p];
        const int resumed = log.resumed_after[p];
        if (omitted == 0 || resumed <= omitted) continue;
        for (int r = resumed + 1; r <= current_round && r < static_cast<int>(heard_by_round.size());
             ++r) {
            if (heard_by_round[r].contains(static_cast<AgentId>(p))) return true;
        }
    }
    return false;
}

ConsAgent::ConsAgent(const AgentSetup& setup)
    : id_(setup.id),
      pref_(setup.pref),
      params_(setup.params),
      n_(setup.params.n),
      f_(setup.params.f),
      seed_(setup.seed),
      trial_(setup.trial) {
    if (f_ < 1) throw std::invalid_argument("ConsAgent: f must be at least 1");
    if (f_ + 1 >= n_) throw std::invalid_argument("ConsAgent: requires f + 1 < n");
    if (n_ > kMaxAgents) throw std::invalid_argument("ConsAgent: n exceeds kMaxAgents");
    if (params_.field.modulus() <= static_cast<std::uint64_t>(n_)) {
        throw std::invalid_argument("ConsAgent: field prime must exceed n");
    }
    if (id_ < 0 || id_ >= n_) throw std::invalid_argument("ConsAgent: id out of range");
    if (pref_ > 1) throw std::invalid_argument("ConsAgent: preference must be 0 or 1");

    const int width = f_ + 1;
    st_.assign(n_, std::nullopt);
    st_[id_] = pref_;
    sr_.assign(n_, StatusEntry{});

    CounterRng rng = make_stream(seed_, trial_, id_, 0, StreamPurpose::agent);
    special_z_ = static_cast<int>(rng.uniform_below(n_));
    z_out_.assign(n_, ZVector{});
    fresh_sent_.assign(f_ + 2, std::vector<int>(n_, kZBot));
    for (AgentId j = 0; j < n_; ++j) {
        if (j == id_) continue;
        const int fresh = static_cast<int>(rng.uniform_below(n_));
        ZVector z(n_, 0);
        z.set(id_, fresh);
        z.set(j, special_z_);
        z_out_[j] = z;
        fresh_sent_[1][j] = fresh;
    }

    lottery_.resize(width);
    polys_.resize(width);
    for (int t = 0; t < width; ++t) {
        lottery_[t] = rng.uniform_below(static_cast<std::uint64_t>(n_ - t));
        polys_[t].a1 = rng.uniform_below(params_.field.modulus());
    }
    if (setup.lottery) {
        if (static_cast<int>(setup.lottery->size()) != width) {
            throw std::invalid_argument("ConsAgent: lottery override needs f + 1 values");
        }
        for (int t = 0; t < width; ++t) {
            if ((*setup.lottery)[t] >= static_cast<std::uint64_t>(n_ - t)) {
                throw std::invalid_argument("ConsAgent: lottery override out of range");
            }
            lottery_[t] = (*setup.lottery)[t];
        }
    }
    for (int t = 0; t < width; ++t) polys_[t].a0 = lottery_[t];

    shares_in_.assign(static_cast<std::size_t>(n_) * width, 0);
    forwarded_in_.assign(static_cast<std::size_t>(n_) * n_ * width, 0);
    forwarded_present_.assign(n_, AgentSet{});
    heard_.assign(f_ + 2, AgentSet{});
    cur_reports_.assign(n_, nullptr);
    cur_keep_.assign(n_, nullptr);
    prev_keep_.assign(n_, nullptr);
    z_in_.assign(n_, ZVector{});
    z1_in_.assign(n_, ZVector{});
}

void ConsAgent::zero_slopes() {
    for (auto& poly : polys_) poly.a1 = 0;
}

void ConsAgent::decide(Decision d) {
    if (d == Decision::undecided) return;
    ++decide_count_;
    decision_ = d;
}

AgentReport ConsAgent::report() const { return diag_; }

const std::uint64_t* ConsAgent::shares_from(AgentId origin) const {
    if (!shares_in_present_.contains(origin)) return nullptr;
    return shares_in_.data() + static_cast<std::size_t>(origin) * (f_ + 1);
}

const ZVector* ConsAgent::z_from(AgentId sender) const {
    return z_in_present_.contains(sender) ? &z_in_[sender] : nullptr;
}

AgentSet ConsAgent::heard_in(int round) const {
    if (round < 0 || round >= static_cast<int>(heard_.size())) return {};
    return heard_[round];
}

std::vector<RoundMessage> ConsAgent::send(int round) {
    std::vector<RoundMessage> out;
    if (halted_ || round < 1 || round > f_ + 1) return out;
    const int width = f_ + 1;
    sr_shared_ = std::make_shared<const StatusReport>(sr_);
    out.reserve(n_ - 1);
    for (AgentId j = 0; j < n_; ++j) {
        if (j == id_) continue;
        RoundMessage msg{id_, j, round, MalformedPayload{}};
        if (round == 1) {
            Round1Payload p;
            p.pref = pref_;
            p.report = sr_shared_;
            p.shares.resize(width);
            for (int t = 0; t < width; ++t) {
                p.shares[t] = polys_[t].eval(params_.field, share_point(j));
            }
            p.z = z_out_[j];
            msg.payload = std::move(p);
        } else if (round <= f_) {
            msg.payload = MidPayload{sr_shared_, z_out_[j]};
        } else {
            FinalPayload p;
            p.report = sr_shared_;
            p.forwarded.assign(static_cast<std::size_t>(n_) * width, 0);
            for (AgentId l = 0; l < n_; ++l) {
                if (l == j) continue;
                std::uint64_t* row = p.forwarded.data() + static_cast<std::size_t>(l) * width;
                if (l == id_) {
                    for (int t = 0; t < width; ++t) {
                        row[t] = polys_[t].eval(params_.field, share_point(id_));
                    }
                    p.present.insert(l);
                } else if (const auto* in = shares_from(l)) {
                    std::copy(in, in + width, row);
                    p.present.insert(l);
                }
            }
            msg.payload = std::move(p);
        }
        out.push_back(std::move(msg));
    }
    return out;
}

bool ConsAgent::validate_report(const StatusReport& rep, AgentId sender, int round) const {
    if (static_cast<int>(rep.size()) != n_) return false;
    for (AgentId l = 0; l < n_; ++l) {
        const StatusEntry& e = rep[l];
        if (e.alive()) {
            if (round == 1 || l == sender) {
                if (!e.z.empty() && round == 1) return false;
                continue;
            }
            if (e.z.size() != n_) return false;
            for (int k = 0; k < n_; ++k) {
                if (e.z[k] < kZBot || e.z[k] >= n_) return false;
            }
        } else {
            if (round == 1 || l == sender) return false;
            if (e.crash_round < 1 || e.crash_round > round - 1) return false;
            if (e.reporter < 0 || e.reporter >= n_) return false;
        }
    }
    return true;
}

bool ConsAgent::validate(const RoundMessage& msg, int round) const {
    if (msg.sender < 0 || msg.sender >= n_ || msg.sender == id_) return false;
    if (msg.receiver != id_ || msg.round != round) return false;
    const std::uint64_t p = params_.field.modulus();
    const int width = f_ + 1;
    const AgentId s = msg.sender;

    if (round == 1) {
        const auto* r1 = std::get_if<Round1Payload>(&msg.payload);
        if (r1 == nullptr || !r1->report || !validate_report(*r1->report, s, round)) return false;
        if (r1->pref > 1 || static_cast<int>(r1->shares.size()) != width) return false;
        for (auto y : r1->shares) {
            if (y >= p) return false;
        }
        if (r1->z.size() != n_) return false;
        for (AgentId k = 0; k < n_; ++k) {
            const int v = r1->z[k];
            if (k == s || k == id_) {
                if (v < 0 || v >= n_) return false;
            } else if (v != 0) {
                return false;
            }
        }
        return true;
    }
    if (round <= f_) {
        const auto* mid = std::get_if<MidPayload>(&msg.payload);
        if (mid == nullptr || !mid->report || !validate_report(*mid->report, s, round)) return false;
        if (mid->z.size() != n_) return false;
        for (AgentId k = 0; k < n_; ++k) {
            if (mid->z[k] < kZBot || mid->z[k] >= n_) return false;
        }
        return mid->z[s] >= 0;
    }
    const auto* fin = std::get_if<FinalPayload>(&msg.payload);
    if (fin == nullptr || !fin->report || !validate_report(*fin->report, s, round)) return false;
    if (fin->forwarded.size() != static_cast<std::size_t>(n_) * width) return false;
    if (!fin->present.is_subset_of(AgentSet::all(n_)) || fin->present.contains(id_)) return false;
    for (auto y : fin->forwarded) {
        if (y >= p) return false;
    }
    return true;
}

void ConsAgent::absorb_report(AgentId sender, const StatusReport& rep) {
    for (AgentId l = 0; l < n_; ++l) {
        if (l == id_ || l == sender) continue;
        const StatusEntry& e = rep[l];
        if (!e.alive() && e.crash_round < sr_[l].crash_round) {
            sr_[l] = StatusEntry{e.crash_round, sender, ZVector{}};
        }
    }
}

void ConsAgent::receive(int round, std::span<const RoundMessage> delivered) {
    if (halted_ || round < 1 || round > f_ + 1) return;
    const int width = f_ + 1;
    malformed_ = AgentSet{};
    z_in_present_ = AgentSet{};
    std::fill(cur_reports_.begin(), cur_reports_.end(), nullptr);
    std::fill(cur_keep_.begin(), cur_keep_.end(), nullptr);
    sr_before_ = sr_;

    AgentSet heard;
    for (const auto& msg : delivered) {
        if (msg.receiver != id_) continue;
        if (!validate(msg, round) || heard.contains(msg.sender) ||
            malformed_.contains(msg.sender)) {
            if (msg.sender >= 0 && msg.sender < n_) malformed_.insert(msg.sender);
            heard.erase(msg.sender);
            continue;
        }
        const AgentId s = msg.sender;
        heard.insert(s);
        if (const auto* r1 = std::get_if<Round1Payload>(&msg.payload)) {
            st_[s] = r1->pref;
            std::copy(r1->shares.begin(), r1->shares.end(),
                      shares_in_.begin() + static_cast<std::ptrdiff_t>(s) * width);
            shares_in_present_.insert(s);
            z_in_[s] = r1->z;
            z1_in_[s] = r1->z;
            z_in_present_.insert(s);
            cur_keep_[s] = r1->report;
        } else if (const auto* mid = std::get_if<MidPayload>(&msg.payload)) {
            z_in_[s] = mid->z;
            z_in_present_.insert(s);
            cur_keep_[s] = mid->report;
        } else if (const auto* fin = std::get_if<FinalPayload>(&msg.payload)) {
            std::copy(fin->forwarded.begin(), fin->forwarded.end(),
                      forwarded_in_.begin() + static_cast<std::ptrdiff_t>(s) * n_ * width);
            forwarded_present_[s] = fin->present;
            cur_keep_[s] = fin->report;
        }
    }
    for (AgentId s = 0; s < n_; ++s) {
        cur_reports_[s] = heard.contains(s) ? cur_keep_[s].get() : nullptr;
        if (!heard.contains(s)) cur_keep_[s] = nullptr;
    }
    heard_[round] = heard;

    for (AgentId j : heard.members()) {
        if (sr_[j].alive()) {
            sr_[j].reporter = -1;
            sr_[j].z = z_in_present_.contains(j) ? z_in_[j] : ZVector{};
        }
        absorb_report(j, *cur_reports_[j]);
    }
    for (AgentId j = 0; j < n_; ++j) {
        if (j == id_ || heard.contains(j)) continue;
        if (sr_[j].alive()) sr_[j] = StatusEntry{round, id_, ZVector{}};
    }
}

std::optional<Rule> ConsAgent::check_round1_z() const {
    for (AgentId j = 0; j < n_; ++j) {
        if (j == id_) continue;
        bool have = false;
        int expected = 0;
        if (heard_[1].contains(j)) {
            have = true;
            expected = z1_in_[j][id_];
        }
        for (AgentId s = 0; s < n_; ++s) {
            if (s == j || cur_reports_[s] == nullptr) continue;
            const StatusEntry& e = (*cur_reports_[s])[j];
            if (!e.alive() || e.z.size() != n_) continue;
            const int v = e.z[s];
            if (!have) {
                have = true;
                expected = v;
            } else if (v != expected) {
                return Rule::round1_z_disagreement;
            }
        }
    }
    return std::nullopt;
}

std::optional<Rule> ConsAgent::check_relayed_z(int round) const {
    const auto& sent = fresh_sent_[round - 2];
    for (AgentId s = 0; s < n_; ++s) {
        if (cur_reports_[s] == nullptr) continue;
        for (AgentId j = 0; j < n_; ++j) {
            if (j == id_ || j == s) continue;
            const StatusEntry& e = (*cur_reports_[s])[j];
            if (!e.alive() || e.z.size() != n_) continue;
            if (e.z[id_] != sent[j]) return Rule::relayed_z_mismatch;
        }
    }
    return std::nullopt;
}

std::optional<Rule> ConsAgent::check_shares() const {
    const int width = f_ + 1;
    const auto& field = params_.field;
    std::vector<Share> pts;
    pts.reserve(n_ + 2);
    for (AgentId j = 0; j < n_; ++j) {
        for (int t = 0; t < width; ++t) {
            pts.clear();
            if (j == id_) {
                pts.push_back({0, polys_[t].a0});
                pts.push_back({share_point(id_), polys_[t].eval(field, share_point(id_))});
            } else if (const auto* in = shares_from(j)) {
                pts.push_back({share_point(id_), in[t]});
            }
            for (AgentId s = 0; s < n_; ++s) {
                if (!heard_[f_ + 1].contains(s) || !forwarded_present_[s].contains(j)) continue;
                const std::uint64_t* row =
                    forwarded_in_.data() + (static_cast<std::size_t>(s) * n_ + j) * width;
                pts.push_back({share_point(s), row[t]});
            }
            if (!check_collinear(field, pts)) return Rule::shares_not_interpolable;
        }
    }
    return std::nullopt;
}

std::optional<Rule> ConsAgent::check_crash_contradictions(int round) const {
    const AgentSet heard = heard_[round];
    for (AgentId j = 0; j < n_; ++j) {
        int min_crash = j == id_ ? kNeverCrashed : sr_before_[j].crash_round;
        bool reported_alive_last_round = false;
        for (AgentId s = 0; s < n_; ++s) {
            if (s == j || cur_reports_[s] == nullptr) continue;
            const StatusEntry& e = (*cur_reports_[s])[j];
            if (!e.alive()) {
                if (j == id_) return Rule::crash_contradicted;
                min_crash = std::min(min_crash, e.crash_round);
            } else if (e.z.size() == n_ && round >= 2) {
                reported_alive_last_round = true;
            }
        }
        if (j == id_) continue;
        if (heard.contains(j) && min_crash < round) return Rule::crash_contradicted;
        if (reported_alive_last_round && min_crash < round - 1) return Rule::crash_contradicted;
    }
    return std::nullopt;
}

std::optional<Rule> ConsAgent::check_reporter_claims() const {
    for (AgentId s = 0; s < n_; ++s) {
        if (cur_reports_[s] == nullptr) continue;
        for (AgentId l = 0; l < n_; ++l) {
            if (l == id_ || l == s) continue;
            const StatusEntry& e = (*cur_reports_[s])[l];
            if (e.alive() || e.reporter == s) continue;
            const AgentId r = e.reporter;
            if (r == l) return Rule::reporter_contradiction;
            if (r == id_) {
                if (sr_before_[l].crash_round > e.crash_round) return Rule::reporter_contradiction;
            } else if (cur_reports_[r] != nullptr) {
                if ((*cur_reports_[r])[l].crash_round > e.crash_round) {
                    return Rule::reporter_contradiction;
                }
            }
        }
    }
    return std::nullopt;
}

std::optional<Rule> ConsAgent::check_ignored_reports() const {
    for (AgentId s = 0; s < n_; ++s) {
        if (cur_reports_[s] == nullptr) continue;
        const StatusReport& cur = *cur_reports_[s];
        // successive reports of one sender never move a crash later
        if (prev_keep_[s]) {
            const StatusReport& prev = *prev_keep_[s];
            for (AgentId l = 0; l < n_; ++l) {
                if (l != s && prev[l].crash_round < cur[l].crash_round) return Rule::ignored_report;
            }
        }
        // s heard j' last round, so s must have absorbed j''s last report
        for (AgentId jp = 0; jp < n_; ++jp) {
            if (jp == s || jp == id_ || !prev_keep_[jp]) continue;
            const StatusEntry& via = cur[jp];
            if (!via.alive() || via.z.size() != n_) continue;
            const StatusReport& told = *prev_keep_[jp];
            for (AgentId l = 0; l < n_; ++l) {
                if (l == s || l == jp) continue;
                if (told[l].crash_round < cur[l].crash_round) return Rule::ignored_report;
            }
        }
    }
    return std::nullopt;
}

std::optional<Rule> ConsAgent::detect_inconsistency(int round) const {
    if (!malformed_.empty()) return Rule::malformed;
    if (round == 2) {
        if (auto r = check_round1_z()) return r;
    }
    if (round > 2) {
        if (auto r = check_relayed_z(round)) return r;
    }
    if (round == f_ + 1) {
        if (auto r = check_shares()) return r;
    }
    if (auto r = check_crash_contradictions(round)) return r;
    if (auto r = check_reporter_claims()) return r;
    if (auto r = check_ignored_reports()) return r;
    int crashed = 0;
    for (AgentId l = 0; l < n_; ++l) {
        if (l != id_ && !sr_[l].alive()) ++crashed;
    }
    if (crashed > f_) return Rule::too_many_crashes;
    return std::nullopt;
}

NcSequence ConsAgent::compute_nc() const {
    NcSequence seq;
    seq.nc.resize(f_ + 2);
    seq.nc[0] = AgentSet::all(n_);
    for (int m = 1; m <= f_ + 1; ++m) {
        AgentSet s = AgentSet::single(id_);
        for (AgentId j = 0; j < n_; ++j) {
            if (j != id_ && sr_[j].crash_round > m) s.insert(j);
        }
        seq.nc[m] = s;
    }
    return seq;
}

void ConsAgent::build_next_z(int round) {
    CounterRng rng = make_stream(seed_, trial_, id_, round, StreamPurpose::agent);
    auto& fresh = fresh_sent_[round + 1];
    for (AgentId j = 0; j < n_; ++j) {
        if (j == id_) continue;
        const int drawn = static_cast<int>(rng.uniform_below(n_));
        fresh[j] = reuse_fresh_ ? fresh_sent_[round][j] : drawn;
    }
    for (AgentId l = 0; l < n_; ++l) {
        if (l == id_) continue;
        ZVector z(n_, 0);
        z.set(id_, fresh[l]);
        for (AgentId j = 0; j < n_; ++j) {
            if (j == id_ || j == l) continue;
            z.set(j, z_in_present_.contains(j) ? z_in_[j][j] : kZBot);
        }
        z_out_[l] = z;
    }
}

void ConsAgent::decide_value() {
    const int width = f_ + 1;
    const NcSequence seq = compute_nc();
    int m_star = 0;
    for (int m = 1; m <= f_ + 1; ++m) {
        if (seq.nc[m] == seq.nc[m - 1]) {
            m_star = m;
            break;
        }
    }
    auto fail = [this](Rule r) {
        if (!diag_.rule) {
            diag_.rule = r;
            diag_.rule_round = f_ + 1;
        }
        decide(Decision::bot);
    };
    if (m_star == 0) return fail(Rule::too_many_crashes);

    const AgentSet nc = seq.nc[m_star];
    const int t = n_ - nc.size();
    const auto& field = params_.field;
    std::vector<std::uint64_t> secrets;
    secrets.reserve(nc.size());
    for (AgentId j : nc.members()) {
        if (j == id_) {
            secrets.push_back(lottery_[t]);
            continue;
        }
        std::optional<Share> a;
        std::optional<Share> b;
        auto offer = [&](Share s) {
            if (!a) {
                a = s;
            } else if (!b && field.reduce(s.point) != field.reduce(a->point)) {
                b = s;
            }
        };
        if (const auto* in = shares_from(j)) offer({share_point(id_), in[t]});
        for (AgentId s = 0; s < n_ && !b; ++s) {
            if (!heard_[f_ + 1].contains(s) || !forwarded_present_[s].contains(j)) continue;
            offer({share_point(s),
                   forwarded_in_[(static_cast<std::size_t>(s) * n_ + j) * width + t]});
        }
        if (!a || !b) return fail(Rule::shares_not_interpolable);
        secrets.push_back(reconstruct(field, *a, *b));
    }
    const AgentId dictator = select_dictator(nc, secrets, n_);
    if (!st_[dictator]) return fail(Rule::malformed);
    diag_.dictator = dictator;
    diag_.candidates = nc;
    for (AgentId j : nc.members()) {
        if (st_[j] && *st_[j] == 1) diag_.candidate_ones.insert(j);
    }
    diag_.m_star = m_star;
    diag_.t = t;
    decide(decision_for(*st_[dictator]));
}

void ConsAgent::update(int round) {
    if (halted_ || round < 1 || round > f_ + 1) return;
    const auto rule = detect_inconsistency(round);
    if (rule && !diag_.rule) {
        diag_.rule = rule;
        diag_.rule_round = round;
    }
    if (rule && punish_) {
        decide(Decision::bot);
        halted_ = true;
    } else if (round <= f_) {
        build_next_z(round);
    } else if (decision_ == Decision::undecided) {
        decide_value();
    }
    prev_keep_.swap(cur_keep_);
    std::fill(cur_keep_.begin(), cur_keep_.end(), nullptr);
}

}  // namespace rcl
