#include "rcl/secret_sharing.hpp"

#include <stdexcept>
#include <string>

namespace rcl {

namespace {

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % m);
}

std::uint64_t powmod(std::uint64_t b, std::uint64_t e, std::uint64_t m) {
    std::uint64_t r = 1 % m;
    b %= m;
    while (e > 0) {
        if (e & 1) r = mulmod(r, b, m);
        b = mulmod(b, b, m);
        e >>= 1;
    }
    return r;
}

}  // namespace

bool is_prime(std::uint64_t p) {
    if (p < 2) return false;
    for (std::uint64_t q : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
        if (p % q == 0) return p == q;
    }
    // Miller-Rabin with these bases is exact for all 64-bit inputs
    std::uint64_t d = p - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    for (std::uint64_t a : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
        std::uint64_t x = powmod(a, d, p);
        if (x == 1 || x == p - 1) continue;
        bool composite = true;
        for (int r = 1; r < s && composite; ++r) {
            x = mulmod(x, x, p);
            if (x == p - 1) composite = false;
        }
        if (composite) return false;
    }
    return true;
}

PrimeField::PrimeField(std::uint64_t p) : p_(p) {
    if (p >= (std::uint64_t{1} << 62) || !is_prime(p)) {
        throw std::invalid_argument("PrimeField: modulus " + std::to_string(p) +
                                    " is not a prime below 2^62");
    }
}

std::uint64_t PrimeField::pow(std::uint64_t base, std::uint64_t exp) const {
    std::uint64_t result = 1 % p_;
    base %= p_;
    while (exp > 0) {
        if (exp & 1) result = mul(result, base);
        base = mul(base, base);
        exp >>= 1;
    }
    return result;
}

std::uint64_t PrimeField::inv(std::uint64_t a) const {
    a %= p_;
    if (a == 0) throw std::domain_error("PrimeField::inv: zero has no inverse");
    // extended Euclid on (p, a); p < 2^62 keeps the signed coefficients in range
    std::int64_t r0 = static_cast<std::int64_t>(p_), r1 = static_cast<std::int64_t>(a);
    std::int64_t t0 = 0, t1 = 1;
    while (r1 != 0) {
        const std::int64_t q = r0 / r1;
        std::int64_t tmp = r0 - q * r1;
        r0 = r1;
        r1 = tmp;
        tmp = t0 - q * t1;
        t0 = t1;
        t1 = tmp;
    }
    return static_cast<std::uint64_t>(t0 < 0 ? t0 + static_cast<std::int64_t>(p_) : t0);
}

namespace {

void check_points(const PrimeField& field, std::span<const std::uint64_t> points) {
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (field.reduce(points[i]) == 0) {
            throw std::invalid_argument("make_shares: evaluation point 0 reveals the secret");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (field.reduce(points[i]) == field.reduce(points[j])) {
                throw std::invalid_argument("make_shares: duplicate evaluation point");
            }
        }
    }
}

}  // namespace

SharedSecret make_shares_with_slope(const PrimeField& field, std::uint64_t secret,
                                    std::uint64_t slope, std::span<const std::uint64_t> points) {
    if (secret >= field.modulus()) throw std::invalid_argument("make_shares: secret >= p");
    check_points(field, points);
    SharedSecret out;
    out.poly = LinePoly{secret, field.reduce(slope)};
    out.shares.reserve(points.size());
    for (auto x : points) out.shares.push_back({field.reduce(x), out.poly.eval(field, x)});
    return out;
}

SharedSecret make_shares(const PrimeField& field, std::uint64_t secret, CounterRng& rng,
                         std::span<const std::uint64_t> points) {
    const std::uint64_t slope = rng.uniform_below(field.modulus());
    return make_shares_with_slope(field, secret, slope, points);
}

std::uint64_t reconstruct(const PrimeField& field, const Share& s1, const Share& s2) {
    const std::uint64_t x1 = field.reduce(s1.point);
    const std::uint64_t x2 = field.reduce(s2.point);
    if (x1 == x2) throw std::invalid_argument("reconstruct: shares at the same point");
    // q(0) = (y1 x2 - y2 x1) / (x2 - x1)
    const std::uint64_t num = field.sub(field.mul(s1.value, x2), field.mul(s2.value, x1));
    return field.mul(num, field.inv(field.sub(x2, x1)));
}

bool check_collinear(const PrimeField& field, std::span<const Share> shares) {
    if (shares.empty()) return true;
    const Share& a = shares[0];
    const Share* b = nullptr;
    for (const auto& s : shares) {
        if (field.reduce(s.point) == field.reduce(a.point)) {
            if (field.reduce(s.value) != field.reduce(a.value)) return false;
        } else if (b == nullptr) {
            b = &s;
        }
    }
    if (b == nullptr) return true;
    // slope through a and b, then test every other point
    const std::uint64_t slope = field.mul(field.sub(b->value, a.value),
                                          field.inv(field.sub(b->point, a.point)));
    for (const auto& s : shares) {
        const std::uint64_t expected =
            field.add(a.value, field.mul(slope, field.sub(s.point, a.point)));
        if (expected != field.reduce(s.value)) return false;
    }
    return true;
}

}  // namespace rcl
