#pragma once

#include <cstdint>

namespace popsynth {

// Counter-splittable deterministic generator. A stream is derived from
// (seed, stream index), so record i of a sampling run gets the same draws
// whether records are produced sequentially or partitioned across threads.
// SplitMix64 finalizer (Steele et al.); full-period, passes BigCrush as a
// mixer of sequential counters.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static SplitMix64 substream(std::uint64_t seed, std::uint64_t stream) {
        // Decorrelate the (seed, stream) pair before using it as a state.
        SplitMix64 g(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
        g.next_u64();
        return g;
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit mantissa, platform-independent.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

}  // namespace popsynth
