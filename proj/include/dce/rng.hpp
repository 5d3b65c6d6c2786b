#pragma once

// Keyed, splittable random streams.
//
// Every consumer of randomness in the library derives its own stream from a
// 64-bit key via a hash chain (splitmix64), so feature sampling, data
// sampling and noise are independent by construction and a draw for
// (run, agent, t) is reproducible no matter how work is scheduled.
// The generator core is xoshiro256++; uniform/normal transforms are spelled
// out explicitly so sequences are bit-identical across platforms.

#include <cmath>
#include <cstdint>

namespace dce {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Well-known sub-stream ids used by the harness. Any integer works; these
// exist so call sites don't sprinkle magic numbers.
enum class Stream : std::uint64_t {
    Features = 0x66656174,   // feature-map sampling (shared across runs)
    Theta = 0x74686574,      // synthetic ground-truth parameter
    Subsample = 0x73756273,  // dataset subsampling
    Run = 0x72756e00,        // per-Monte-Carlo-run base
    GEstimate = 0x67657374,  // Monte-Carlo G estimation
    Surrogate = 0x64617461,  // test-data generation
};

// Immutable stream key. fork() derives child keys; stream() instantiates a
// generator. Keys never advance, so deriving the same tuple twice yields the
// same stream.
class RngKey {
public:
    explicit RngKey(std::uint64_t seed) : key_(seed) {}

    RngKey fork(std::uint64_t id) const {
        std::uint64_t s = key_;
        std::uint64_t h = detail::splitmix64(s);
        s = h ^ (id + 0x9E3779B97F4A7C15ULL);
        return RngKey(detail::splitmix64(s));
    }
    RngKey fork(Stream id) const { return fork(static_cast<std::uint64_t>(id)); }

    template <typename... Rest>
    RngKey fork(std::uint64_t id, Rest... rest) const {
        return fork(id).fork(static_cast<std::uint64_t>(rest)...);
    }
    template <typename... Rest>
    RngKey fork(Stream id, Rest... rest) const {
        return fork(id).fork(static_cast<std::uint64_t>(rest)...);
    }

    std::uint64_t value() const { return key_; }

private:
    std::uint64_t key_;
};

// xoshiro256++ generator seeded from a key.
class Rng {
public:
    explicit Rng(std::uint64_t key) {
        std::uint64_t s = key;
        for (auto& word : state_) word = detail::splitmix64(s);
    }
    explicit Rng(const RngKey& key) : Rng(key.value()) {}

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; second value of each pair is cached.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        // u1 in (0, 1] so the log is finite.
        const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    // Uniform integer in [0, n). Lemire multiply-shift; the O(n/2^64) bias is
    // far below anything observable here.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

private:
    std::uint64_t state_[4];
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace dce
