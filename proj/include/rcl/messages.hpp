#pragma once

#include <array>
#include <climits>
#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include "rcl/core_types.hpp"

namespace rcl {

/// Missing z value ("⊥").
inline constexpr int kZBot = -1;

/// In-memory "not crashed" crash round. Traces encode it as n + 2.
inline constexpr int kNeverCrashed = INT_MAX;

/// Signature vector of n values in {0..n-1} or kZBot. Fixed capacity, no allocation.
class ZVector {
public:
    ZVector() = default;
    explicit ZVector(int n, int fill = 0) : n_(static_cast<std::uint8_t>(n)) {
        for (int k = 0; k < n; ++k) v_[k] = static_cast<std::int8_t>(fill);
    }

    int size() const { return n_; }
    bool empty() const { return n_ == 0; }
    int operator[](int k) const { return v_[k]; }
    void set(int k, int value) { v_[k] = static_cast<std::int8_t>(value); }

    bool operator==(const ZVector& o) const {
        if (n_ != o.n_) return false;
        for (int k = 0; k < n_; ++k) {
            if (v_[k] != o.v_[k]) return false;
        }
        return true;
    }

private:
    std::array<std::int8_t, kMaxAgents> v_{};
    std::uint8_t n_ = 0;
};

/// What one agent believes about another: alive with the z-vector it last sent,
/// or crashed in `crash_round` as reported by `reporter`.
struct StatusEntry {
    int crash_round = kNeverCrashed;
    AgentId reporter = -1;
    ZVector z;

    bool alive() const { return crash_round == kNeverCrashed; }
    bool operator==(const StatusEntry&) const = default;
};

using StatusReport = std::vector<StatusEntry>;
using SharedReport = std::shared_ptr<const StatusReport>;

struct Round1Payload {
    Preference pref = 0;
    SharedReport report;
    std::vector<std::uint64_t> shares;  // one per t = 0..f
    ZVector z;
};

struct MidPayload {
    SharedReport report;
    ZVector z;
};

/// Round f+1: relays every round-1 share the sender holds, for each origin l != receiver.
struct FinalPayload {
    SharedReport report;
    AgentSet present;                       // origins whose shares are included
    std::vector<std::uint64_t> forwarded;   // n * (f+1), row l = shares of origin l

    const std::uint64_t* row(AgentId origin, int f) const {
        return forwarded.data() + static_cast<std::size_t>(origin) * (f + 1);
    }
};

/// Plaintext lottery tuple of the baseline protocol.
struct NaiveTuple {
    AgentId agent = 0;
    Preference pref = 0;
    std::vector<std::uint64_t> lottery;  // x_{agent,t} for t = 0..f

    bool operator==(const NaiveTuple&) const = default;
};

struct NaivePayload {
    std::vector<NaiveTuple> tuples;
};

/// A payload that matches no round's shape; only produced by deviations.
struct MalformedPayload {};

using Payload = std::variant<Round1Payload, MidPayload, FinalPayload, NaivePayload, MalformedPayload>;

struct RoundMessage {
    AgentId sender = 0;
    AgentId receiver = 0;
    int round = 1;
    Payload payload;
};

const StatusReport* report_of(const Payload& payload);

}  // namespace rcl
