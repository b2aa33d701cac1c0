#pragma once

#include <cstdint>

namespace cvarplan {

// Counter-based PRNG stream (splitmix64). Cheap to construct, so every
// episode gets its own stream derived from (master seed, episode index) and
// results do not depend on execution order.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). Multiply-shift; bias is negligible for the
    // sample sizes used here (n << 2^32).
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

private:
    std::uint64_t state_;
};

// Master seed plus a deterministic substream derivation rule. Identical seeds
// produce identical episode sequences regardless of evaluation order.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t master_seed) : master_(master_seed) {}

    std::uint64_t master_seed() const { return master_; }

    Rng episode_stream(std::uint64_t episode_index) const {
        return substream(0, episode_index);
    }

    // Tagged substreams keep independent uses (episodes, bootstrap resamples)
    // from colliding.
    Rng substream(std::uint64_t tag, std::uint64_t index) const {
        std::uint64_t h = mix(master_ ^ mix(tag + 0x9e3779b97f4a7c15ULL));
        h = mix(h ^ mix(index + 0xd1b54a32d192ed03ULL));
        return Rng(h);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t master_;
};

}  // namespace cvarplan
