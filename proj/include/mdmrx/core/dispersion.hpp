#pragma once

#include <cmath>
#include <numbers>

#include "fft.hpp"
#include "grid.hpp"
#include "types.hpp"

namespace mdmrx {

// All-pass quadratic-phase multiplier for accumulated dispersion given in
// ps/nm at wavelength lam. Positive values delay the red side.
inline cvec cd_multiplier(std::size_t n, double psnm, double fs, double lam) {
    const double coef = (psnm * 1e-3) * lam * lam / (4.0 * std::numbers::pi * c_light);
    cvec m(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = 2.0 * std::numbers::pi * fftfreq(i, n, fs);
        const double ph = coef * w * w;
        m[i] = {std::cos(ph), std::sin(ph)};
    }
    return m;
}

inline void spectral_multiply(cplx* x, const cplx* m, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= m[i];
}

// x -> ifft(fft(x) .* m), in place
inline void filter_inplace(cplx* x, const cplx* m, std::size_t n) {
    fft_inplace(x, n);
    spectral_multiply(x, m, n);
    ifft_inplace(x, n);
}

inline void disperse_rows(field_t& f, const cvec& mult) {
    for (std::size_t i = 0; i < f.k; ++i) filter_inplace(f.row(i), mult.data(), f.n);
}

} // namespace mdmrx
