#include "rcl/naive.hpp"

#include <stdexcept>

#include "rcl/protocol.hpp"

namespace rcl {

NaiveAgent::NaiveAgent(const AgentSetup& setup)
    : id_(setup.id), pref_(setup.pref), n_(setup.params.n), f_(setup.params.f) {
    if (f_ < 0 || f_ + 1 >= n_) throw std::invalid_argument("NaiveAgent: requires f + 1 < n");
    if (n_ > kMaxAgents) throw std::invalid_argument("NaiveAgent: n exceeds kMaxAgents");
    if (id_ < 0 || id_ >= n_) throw std::invalid_argument("NaiveAgent: id out of range");
    if (pref_ > 1) throw std::invalid_argument("NaiveAgent: preference must be 0 or 1");

    const int width = f_ + 1;
    CounterRng rng = make_stream(setup.seed, setup.trial, id_, 0, StreamPurpose::agent);
    lottery_.resize(width);
    for (int t = 0; t < width; ++t) {
        lottery_[t] = rng.uniform_below(static_cast<std::uint64_t>(n_ - t));
    }
    if (setup.lottery) {
        if (static_cast<int>(setup.lottery->size()) != width) {
            throw std::invalid_argument("NaiveAgent: lottery override needs f + 1 values");
        }
        for (int t = 0; t < width; ++t) {
            if ((*setup.lottery)[t] >= static_cast<std::uint64_t>(n_ - t)) {
                throw std::invalid_argument("NaiveAgent: lottery override out of range");
            }
        }
        lottery_ = *setup.lottery;
    }
    known_.assign(n_, std::nullopt);
    known_[id_] = NaiveTuple{id_, pref_, lottery_};
    pending_.push_back(id_);
    heard_.assign(f_ + 2, AgentSet{});
}

void NaiveAgent::decide(Decision d) {
    if (d == Decision::undecided) return;
    ++decide_count_;
    decision_ = d;
}

AgentSet NaiveAgent::heard_in(int round) const {
    if (round < 0 || round >= static_cast<int>(heard_.size())) return {};
    return heard_[round];
}

std::vector<RoundMessage> NaiveAgent::send(int round) {
    std::vector<RoundMessage> out;
    if (halted_ || round < 1 || round > f_ + 1) return out;
    NaivePayload payload;
    for (AgentId a : pending_) payload.tuples.push_back(*known_[a]);
    for (AgentId j = 0; j < n_; ++j) {
        if (j != id_) out.push_back(RoundMessage{id_, j, round, payload});
    }
    return out;
}

bool NaiveAgent::valid_tuple(const NaiveTuple& tuple) const {
    if (tuple.agent < 0 || tuple.agent >= n_ || tuple.pref > 1) return false;
    if (static_cast<int>(tuple.lottery.size()) != f_ + 1) return false;
    for (int t = 0; t <= f_; ++t) {
        if (tuple.lottery[t] >= static_cast<std::uint64_t>(n_ - t)) return false;
    }
    return true;
}

void NaiveAgent::receive(int round, std::span<const RoundMessage> delivered) {
    if (halted_ || round < 1 || round > f_ + 1) return;
    learned_.clear();
    AgentSet heard;
    for (const auto& msg : delivered) {
        if (msg.receiver != id_ || msg.sender < 0 || msg.sender >= n_) continue;
        heard.insert(msg.sender);
        const auto* payload = std::get_if<NaivePayload>(&msg.payload);
        if (payload == nullptr) {
            conflict_ = true;
            continue;
        }
        for (const auto& tuple : payload->tuples) {
            if (!valid_tuple(tuple)) {
                conflict_ = true;
                continue;
            }
            auto& slot = known_[tuple.agent];
            if (!slot) {
                slot = tuple;
                learned_.push_back(tuple.agent);
            } else if (!(*slot == tuple)) {
                conflict_ = true;
            }
        }
    }
    heard_[round] = heard;
}

void NaiveAgent::decide_value() {
    AgentSet holders;
    for (AgentId a = 0; a < n_; ++a) {
        if (known_[a]) holders.insert(a);
    }
    if (conflict_ || holders.size() < n_ - f_) {
        decide(Decision::bot);
        return;
    }
    const int t = n_ - holders.size();
    std::vector<std::uint64_t> secrets;
    for (AgentId a : holders.members()) secrets.push_back(known_[a]->lottery[t]);
    const AgentId dictator = select_dictator(holders, secrets, n_);
    diag_.dictator = dictator;
    diag_.candidates = holders;
    for (AgentId a : holders.members()) {
        if (known_[a]->pref == 1) diag_.candidate_ones.insert(a);
    }
    diag_.t = t;
    decide(decision_for(known_[dictator]->pref));
}

void NaiveAgent::update(int round) {
    if (halted_ || round < 1 || round > f_ + 1) return;
    pending_ = learned_;
    if (round == f_ + 1 && decision_ == Decision::undecided) decide_value();
}

}  // namespace rcl
