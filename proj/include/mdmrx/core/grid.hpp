#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>

#include "types.hpp"

namespace mdmrx {

// Sampling grid: n samples at rate fs, sps samples per symbol of rate rs.
struct grid_t {
    std::size_t n;
    double fs;

    double df() const { return fs / double(n); }
};

inline double fftfreq(std::size_t i, std::size_t n, double fs) {
    // matches the usual DFT frequency layout: [0 .. n/2-1, -n/2 .. -1] * fs/n
    const double f = double(i) * fs / double(n);
    return (i < (n + 1) / 2) ? f : f - fs;
}

inline rvec omega_axis(std::size_t n, double fs) {
    rvec w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 2.0 * std::numbers::pi * fftfreq(i, n, fs);
    return w;
}

inline std::size_t next_pow2(std::size_t v) {
    std::size_t n = 1;
    while (n < v) n <<= 1;
    return n;
}

} // namespace mdmrx
