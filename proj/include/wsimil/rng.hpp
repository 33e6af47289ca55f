#pragma once

#include <cstdint>
#include <vector>

namespace wsimil {

// xoshiro256++ seeded through splitmix64. Hand-rolled so that every stream
// is bit-reproducible across platforms and independent of the standard
// library's unspecified distribution algorithms. Substreams derived via
// fork() depend only on (seed, tag), never on draw position, which keeps
// parallel consumers deterministic at any thread count.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform double in [0, 1), 53-bit resolution.
    double uniform();

    // Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    // Uniform integer in [0, n), n > 0. Lemire reduction (tiny bias bounded
    // by n / 2^64, irrelevant at our scales but documented).
    std::uint64_t uniform_int(std::uint64_t n);

    // Fair coin.
    bool coin() { return (next_u64() >> 63) != 0; }

    // Independent substream keyed by (seed, tag).
    Rng fork(std::uint64_t tag) const;

    std::uint64_t seed() const { return seed_; }

    // Fisher-Yates with this stream.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::uint64_t s_[4];
};

// splitmix64 single step; also used as a stateless mixer for stream keys.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);

} // namespace wsimil
