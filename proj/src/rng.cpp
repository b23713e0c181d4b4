#include "rcl/rng.hpp"

#include <stdexcept>

namespace rcl {

CounterRng::CounterRng(const StreamKey& key) {
    std::uint64_t h = mix64(key.master);
    h = mix64(h ^ key.trial);
    h = mix64(h ^ static_cast<std::uint64_t>(key.agent));
    h = mix64(h ^ static_cast<std::uint64_t>(key.round));
    h = mix64(h ^ static_cast<std::uint64_t>(key.purpose));
    key_ = h;
}

std::uint64_t CounterRng::uniform_below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_below: bound must be positive");
    // Reject the top partial bucket so every residue is equally likely.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % bound;
}

}  // namespace rcl
