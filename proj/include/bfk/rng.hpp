#ifndef BFK_RNG_HPP
#define BFK_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace bfk {

// Seeded draws layered directly on std::mt19937_64. The engine's output
// sequence is pinned by the standard and the mappings below avoid
// std::*_distribution (whose algorithms are implementation-defined), so a
// given seed yields the same doubles on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

    // Box-Muller, two uniform draws per value, cosine branch only.
    double gaussian(double sigma) {
        double u1 = 1.0 - uniform01();  // (0,1], keeps the log finite
        double u2 = uniform01();
        return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace bfk

#endif
