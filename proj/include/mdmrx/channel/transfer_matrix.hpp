#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>

#include "../core/fft.hpp"
#include "../core/grid.hpp"
#include "../core/types.hpp"

namespace mdmrx {

// FIR K x K channel: taps[t] is a K x K matrix applied with circular
// convolution semantics, y_i(n) = sum_j sum_t h[t](i,j) x_j(n-t).
struct transfer_matrix_t {
    std::size_t l = 0; // tap count
    std::size_t k = 0; // tributaries
    cvec taps;          // [(t*k + i)*k + j]

    transfer_matrix_t() = default;
    transfer_matrix_t(std::size_t l_, std::size_t k_)
        : l(l_), k(k_), taps(l_ * k_ * k_) {}

    cplx& at(std::size_t t, std::size_t i, std::size_t j) {
        return taps[(t * k + i) * k + j];
    }
    const cplx& at(std::size_t t, std::size_t i, std::size_t j) const {
        return taps[(t * k + i) * k + j];
    }

    static transfer_matrix_t identity(std::size_t l, std::size_t k) {
        transfer_matrix_t h(l, k);
        for (std::size_t i = 0; i < k; ++i) h.at(0, i, i) = 1.0;
        return h;
    }
};

// DFT of the tap sequence per matrix entry, zero-padded to n bins.
// out[(f*k + i)*k + j] = sum_t h[t](i,j) e^{-i 2 pi f t / n}
inline cvec channel_freq(const transfer_matrix_t& h, std::size_t n) {
    assert(n >= h.l);
    const std::size_t k = h.k;
    cvec out(n * k * k, cplx{0, 0});
    cvec buf(n);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            std::fill(buf.begin(), buf.end(), cplx{0, 0});
            for (std::size_t t = 0; t < h.l; ++t) buf[t] = h.at(t, i, j);
            fft_inplace(buf.data(), n);
            for (std::size_t f = 0; f < n; ++f) out[(f * k + i) * k + j] = buf[f];
        }
    }
    return out;
}

// y = h (*) x over the circular grid, via the frequency domain.
inline field_t apply_channel(const field_t& x, const transfer_matrix_t& h) {
    const std::size_t k = x.k, n = x.n;
    assert(k == h.k);
    field_t xf = x;
    fft_rows(xf);
    const cvec hf = channel_freq(h, n);
    field_t y(k, n);
    for (std::size_t f = 0; f < n; ++f) {
        for (std::size_t i = 0; i < k; ++i) {
            cplx acc{0, 0};
            const cplx* row = &hf[(f * k + i) * k];
            for (std::size_t j = 0; j < k; ++j) acc += row[j] * xf.at(j, f);
            y.at(i, f) = acc;
        }
    }
    ifft_rows(y);
    return y;
}

// same product given a precomputed frequency response (n*k*k layout)
inline void apply_channel_freq(const cvec& hf, const field_t& xf, field_t& yf) {
    const std::size_t k = xf.k, n = xf.n;
    for (std::size_t f = 0; f < n; ++f) {
        for (std::size_t i = 0; i < k; ++i) {
            cplx acc{0, 0};
            const cplx* row = &hf[(f * k + i) * k];
            for (std::size_t j = 0; j < k; ++j) acc += row[j] * xf.at(j, f);
            yf.at(i, f) = acc;
        }
    }
}

} // namespace mdmrx
