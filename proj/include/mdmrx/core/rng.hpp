#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

#include "types.hpp"

namespace mdmrx {

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Deterministic stream factory: one master seed, independent named streams.
// Gaussian draws use an explicit Box-Muller so sequences are identical
// across standard library implementations.
class rng_t {
public:
    explicit rng_t(std::uint64_t seed) : eng_(seed) {}

    rng_t(std::uint64_t master, std::string_view stream) {
        std::uint64_t s = master ^ fnv1a64(stream);
        std::uint64_t a = splitmix64(s);
        std::uint64_t b = splitmix64(s);
        std::seed_seq sq{std::uint32_t(a), std::uint32_t(a >> 32),
                         std::uint32_t(b), std::uint32_t(b >> 32)};
        eng_.seed(sq);
    }

    std::uint64_t next_u64() { return eng_(); }

    std::uint32_t bit() { return std::uint32_t(eng_() >> 63); }

    double uniform01() {
        // 53-bit mantissa in [0,1)
        return double(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01(), u2 = uniform01();
        while (u1 <= 1e-300) u1 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(th);
        have_spare_ = true;
        return r * std::cos(th);
    }

    cplx unit_phase() {
        const double th = uniform(0.0, 2.0 * std::numbers::pi);
        return {std::cos(th), std::sin(th)};
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace mdmrx
