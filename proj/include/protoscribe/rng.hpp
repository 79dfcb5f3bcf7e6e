#pragma once

#include <cmath>
#include <cstdint>

namespace protoscribe {

// Self-contained generator so that seeded runs are bit-identical everywhere.
// Standard-library distributions are implementation-defined and would tie
// frozen test values to one libstdc++ version.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0,1) with 53 random bits.
    double uniform01() { return double(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo,hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0,n). n must be > 0.
    std::uint64_t below(std::uint64_t n) { return next() % n; }

    /// Standard normal via Box-Muller (one value per call; no cached spare,
    /// so the stream position is easy to reason about).
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        // avoid log(0)
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::uint64_t state_;
};

/// Derives an independent stream from a base seed and a stream index.
inline SplitMix64 seeded_stream(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 mix(seed ^ (0x510e527fade682d1ULL + stream * 0x9b05688c2b3e6c1fULL));
    mix.next();
    return mix;
}

} // namespace protoscribe
