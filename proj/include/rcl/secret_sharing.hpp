#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rcl/core_types.hpp"
#include "rcl/rng.hpp"

namespace rcl {

inline constexpr std::uint64_t kDefaultPrime = 2147483647ull;

/// Arithmetic modulo a prime p < 2^62.
class PrimeField {
public:
    PrimeField() = default;  // kDefaultPrime
    /// Throws std::invalid_argument unless p is a prime below 2^62.
    explicit PrimeField(std::uint64_t p);

    std::uint64_t modulus() const { return p_; }
    std::uint64_t reduce(std::uint64_t x) const { return x % p_; }
    std::uint64_t add(std::uint64_t a, std::uint64_t b) const { return (a + b) % p_; }
    std::uint64_t sub(std::uint64_t a, std::uint64_t b) const { return (a + p_ - b) % p_; }
    std::uint64_t mul(std::uint64_t a, std::uint64_t b) const {
        if (p_ <= 0xFFFFFFFFull) {
            if (a >= p_) a %= p_;
            if (b >= p_) b %= p_;
            return (a * b) % p_;
        }
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % p_);
    }
    std::uint64_t pow(std::uint64_t base, std::uint64_t exp) const;
    std::uint64_t inv(std::uint64_t a) const;

    bool operator==(const PrimeField&) const = default;

private:
    std::uint64_t p_ = kDefaultPrime;
};

bool is_prime(std::uint64_t p);

/// q(x) = a0 + a1 x; a0 is the secret.
struct LinePoly {
    std::uint64_t a0 = 0;
    std::uint64_t a1 = 0;

    std::uint64_t eval(const PrimeField& field, std::uint64_t x) const {
        return field.add(a0, field.mul(a1, x));
    }
};

struct Share {
    std::uint64_t point = 1;  // never 0
    std::uint64_t value = 0;

    bool operator==(const Share&) const = default;
};

struct SharedSecret {
    LinePoly poly;
    std::vector<Share> shares;
};

/// Agent j's share is taken at point j + 1 so that no agent holds q(0).
constexpr std::uint64_t share_point(AgentId j) { return static_cast<std::uint64_t>(j) + 1; }

/// Draws the slope uniformly from the field.
SharedSecret make_shares(const PrimeField& field, std::uint64_t secret, CounterRng& rng,
                         std::span<const std::uint64_t> points);

/// Deterministic variant with a given slope.
SharedSecret make_shares_with_slope(const PrimeField& field, std::uint64_t secret,
                                    std::uint64_t slope, std::span<const std::uint64_t> points);

/// q(0) of the unique line through both shares. Throws on equal points.
std::uint64_t reconstruct(const PrimeField& field, const Share& s1, const Share& s2);

/// True iff all shares lie on one line. Two or fewer shares are always collinear;
/// repeated points must carry equal values.
bool check_collinear(const PrimeField& field, std::span<const Share> shares);

}  // namespace rcl
