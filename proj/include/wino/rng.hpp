#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace wino {

// Deterministic RNG wrapper. std::mt19937_64 output is pinned by the standard,
// but the standard *distributions* are not, so all conversions to uniforms and
// gaussians are done by hand to keep seeded runs byte-identical across
// platforms and library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    float next_float() { return static_cast<float>(next_double()); }

    // Uniform integer in [lo, hi] inclusive.
    int next_int(int lo, int hi) {
        auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(engine_() % span);
    }

    // Standard normal via Box-Muller.
    double next_gaussian() {
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) {
            u1 = next_double();
        }
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace wino
