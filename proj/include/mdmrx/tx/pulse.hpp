#pragma once

#include <cmath>
#include <numbers>

#include "../core/fft.hpp"
#include "../core/grid.hpp"
#include "../core/types.hpp"

namespace mdmrx {

struct pulse_spec_t {
    double rs = 30e9;  // symbol rate
    int sps = 2;       // samples per symbol
    double beta = 0.1; // roll-off

    double fs() const { return rs * double(sps); }
};

// Root-raised-cosine amplitude spectrum on the DFT grid, scaled so that an
// impulse train of unit symbols keeps unit average power after shaping.
inline rvec rrc_spectrum(std::size_t n, const pulse_spec_t& ps) {
    const double fs = ps.fs();
    const double f1 = (1.0 - ps.beta) * ps.rs / 2.0;
    const double f2 = (1.0 + ps.beta) * ps.rs / 2.0;
    rvec g(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double f = std::abs(fftfreq(i, n, fs));
        double rc = 0.0;
        if (f <= f1)
            rc = 1.0;
        else if (f < f2)
            rc = 0.5 * (1.0 + std::cos(std::numbers::pi * (f - f1) / (ps.beta * ps.rs)));
        g[i] = (fs / ps.rs) * std::sqrt(rc);
    }
    return g;
}

inline rvec band_mask(std::size_t n, const pulse_spec_t& ps) {
    const double fs = ps.fs();
    const double edge = (1.0 + ps.beta) * ps.rs / 2.0;
    rvec m(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(fftfreq(i, n, fs)) <= edge) m[i] = 1.0;
    return m;
}

// Upsample a symbol sequence onto an n-point circular grid and shape it.
inline cvec pulse_shape(const cplx* symbols, std::size_t nsym, std::size_t n,
                        const rvec& g, int sps) {
    cvec x(n, cplx{0.0, 0.0});
    for (std::size_t s = 0; s < nsym; ++s) x[s * std::size_t(sps)] = symbols[s];
    fft_inplace(x.data(), n);
    for (std::size_t i = 0; i < n; ++i) x[i] *= g[i];
    ifft_inplace(x.data(), n);
    return x;
}

inline field_t shape_rows(const field_t& sym, std::size_t n, const rvec& g, int sps) {
    field_t out(sym.k, n);
    for (std::size_t i = 0; i < sym.k; ++i) {
        cvec xi = pulse_shape(sym.row(i), sym.n, n, g, sps);
        std::copy(xi.begin(), xi.end(), out.row(i));
    }
    return out;
}

} // namespace mdmrx
