#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "rcl/strategy.hpp"

namespace rcl::testing {

// Minimal lockstep driver over arbitrary strategies that keeps every message sent,
// so tests can inspect what a (possibly deviating) agent put on the wire.
struct Driver {
    std::vector<std::unique_ptr<Strategy>> agents;
    std::function<bool(AgentId, AgentId, int)> drop = [](AgentId, AgentId, int) { return false; };
    std::vector<std::vector<RoundMessage>> sent;  // [round] every message sent

    void step(int round) {
        const int n = static_cast<int>(agents.size());
        if (static_cast<int>(sent.size()) <= round) sent.resize(round + 1);
        std::vector<std::vector<RoundMessage>> inbox(n);
        for (auto& a : agents) {
            if (a->halted()) continue;
            for (auto& msg : a->send(round)) {
                sent[round].push_back(msg);
                if (!drop(msg.sender, msg.receiver, round)) inbox[msg.receiver].push_back(std::move(msg));
            }
        }
        for (AgentId i = 0; i < n; ++i) {
            if (agents[i]->halted()) continue;
            agents[i]->receive(round, inbox[i]);
            agents[i]->update(round);
        }
    }

    std::vector<RoundMessage> from(AgentId sender, int round) const {
        std::vector<RoundMessage> out;
        if (round < static_cast<int>(sent.size())) {
            for (const auto& m : sent[round]) {
                if (m.sender == sender) out.push_back(m);
            }
        }
        return out;
    }
};

inline AgentSetup make_setup(AgentId id, Preference pref, int n, int f, std::uint64_t seed = 1) {
    AgentSetup s;
    s.id = id;
    s.pref = pref;
    s.params.n = n;
    s.params.f = f;
    s.seed = Seed{seed};
    return s;
}

}  // namespace rcl::testing
