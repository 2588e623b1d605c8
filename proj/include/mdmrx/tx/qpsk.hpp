#pragma once

#include <cmath>
#include <cstdint>

#include "../core/rng.hpp"
#include "../core/types.hpp"

namespace mdmrx {

inline constexpr double inv_sqrt2 = 0.70710678118654752440;

// Gray-mapped QPSK, one bit per rail: (b0,b1) -> ((1-2*b0) + i(1-2*b1))/sqrt2
inline cplx qpsk_map(std::uint32_t b0, std::uint32_t b1) {
    return {(1.0 - 2.0 * double(b0)) * inv_sqrt2,
            (1.0 - 2.0 * double(b1)) * inv_sqrt2};
}

inline void qpsk_demap(cplx s, std::uint32_t& b0, std::uint32_t& b1) {
    b0 = s.real() < 0.0 ? 1u : 0u;
    b1 = s.imag() < 0.0 ? 1u : 0u;
}

inline cplx qpsk_decide(cplx s) {
    return {s.real() < 0.0 ? -inv_sqrt2 : inv_sqrt2,
            s.imag() < 0.0 ? -inv_sqrt2 : inv_sqrt2};
}

// decision margin in units of the nominal rail amplitude; >=1 means well inside
inline double qpsk_margin(cplx s) {
    const double a = std::abs(s.real()), b = std::abs(s.imag());
    return (a < b ? a : b) / inv_sqrt2;
}

inline cvec qpsk_sequence(rng_t& rng, std::size_t n) {
    cvec out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t b0 = rng.bit();
        const std::uint32_t b1 = rng.bit();
        out[i] = qpsk_map(b0, b1);
    }
    return out;
}

} // namespace mdmrx
