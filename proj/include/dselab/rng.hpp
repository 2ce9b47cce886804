#pragma once

#include <cmath>
#include <cstdint>

namespace dselab {

/// Counter-based pseudo-random stream. Every draw is a pure function of
/// (seed, stream id, counter), so scenarios are reproducible across
/// platforms and independent sub-streams never interfere.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ull))) {}

    /// Uniform draw in (0, 1).
    double uniform() {
        std::uint64_t bits = mix(key_ ^ mix(counter_++));
        // 53-bit mantissa, shifted into (0,1) so log() below is safe
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (two uniforms per draw).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    // splitmix64 finalizer
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Stream ids used by the pipeline. Keeping them fixed guarantees that
/// e.g. enabling an attack never perturbs the measurement noise.
enum class RngStream : std::uint64_t {
    measurement = 1,
    terminal = 2,
    attack = 3,
    init = 4,
};

inline CounterRng make_rng(std::uint64_t seed, RngStream stream) {
    return CounterRng(seed, static_cast<std::uint64_t>(stream));
}

} // namespace dselab
