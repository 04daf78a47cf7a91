#pragma once

#include <cstdint>
#include <random>

namespace relground {

/// Seeded random stream with platform-independent uniform and normal draws.
///
/// std::normal_distribution output differs between standard libraries, so the
/// conversions here are done by hand on top of mt19937_64.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    /// Standard normal via Box-Muller.
    double normal();

    /// Derive an independent stream, e.g. one per scene or per demo.
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t salt);

    template <class It>
    void shuffle(It first, It last) {
        auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            auto j = below(i);
            std::swap(first[i - 1], first[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace relground
