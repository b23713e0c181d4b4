#pragma once

#include <cstdint>

namespace rcl {

/// What a random stream is used for. Distinct purposes never share draws.
enum class StreamPurpose : std::uint64_t {
    context = 1,  // failure pattern and preference sampling
    agent = 2,    // protocol randomness of one agent in one round
    forge = 3,    // guesses made by a deviating agent
    reach = 4,    // reachability estimator
};

/// Master seed; every trial/agent/round stream is derived from it by key splitting.
struct Seed {
    std::uint64_t master = 0;
};

struct StreamKey {
    std::uint64_t master = 0;
    std::uint64_t trial = 0;
    std::int64_t agent = -1;
    std::int64_t round = 0;
    StreamPurpose purpose = StreamPurpose::agent;
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Counter-based generator: output k is mix(key, k). Streams keyed by (master, trial,
/// agent, round, purpose) are independent of evaluation order, so trials can run
/// in any order or concurrently without perturbing each other.
class CounterRng {
public:
    explicit CounterRng(const StreamKey& key);

    std::uint64_t next() {
        ++counter_;
        return mix64(key_ ^ mix64(counter_ * 0xD1B54A32D192ED03ull));
    }

    /// Uniform in [0, bound); bound must be positive. Unbiased (rejection).
    std::uint64_t uniform_below(std::uint64_t bound);

    /// Uniform in [0, 1) with 53 bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

    std::uint64_t draws() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

inline CounterRng make_stream(Seed seed, std::uint64_t trial, std::int64_t agent,
                              std::int64_t round, StreamPurpose purpose) {
    return CounterRng(StreamKey{seed.master, trial, agent, round, purpose});
}

}  // namespace rcl
