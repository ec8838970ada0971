#pragma once

#include <cstdint>
#include <limits>

namespace engage {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

enum class Purpose : std::uint64_t {
    BaseArrivals = 1,
    BoostArrivals = 2,
    Abandonment = 3,
    Slots = 4,
};

/// Counter-based stream: the sequence depends only on the key, so draws for
/// one (replication, purpose, class, day) never shift when another policy
/// consumes a different number of variates elsewhere.
class Substream {
public:
    using result_type = std::uint64_t;

    Substream(std::uint64_t seed, std::uint64_t rep, Purpose purpose, std::uint64_t cls, std::uint64_t day)
        : state_(mix64(mix64(mix64(mix64(seed ^ 0x9e3779b97f4a7c15ULL) + rep) + static_cast<std::uint64_t>(purpose)) +
                       (cls << 32 | (day & 0xffffffffULL)))) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

private:
    std::uint64_t state_;
};

}  // namespace engage
