#pragma once

#include <cstdint>

namespace mdpsolve {

/// splitmix64 stream. Used everywhere reproducibility across platforms
/// matters: the standard <random> distributions are implementation-defined,
/// so seeded artifacts (instances, simulations) would not be byte-stable
/// across toolchains with them.
class SplitMix64Stream {
  public:
    explicit SplitMix64Stream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Fixed-point multiply keeps the mapping
    /// platform-independent; the bias at 64 bits is far below anything the
    /// library samples.
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

  private:
    std::uint64_t state_;
};

}  // namespace mdpsolve
