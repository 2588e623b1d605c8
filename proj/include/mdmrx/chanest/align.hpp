#pragma once
// Intensity-domain frame alignment. The field is unknown before retrieval,
// so the lag comes from cross-correlating the measured direct-path intensity
// with the intensity of the locally regenerated, channel-free training
// waveform.

#include <cmath>
#include <cstddef>
#include <vector>

#include "../core/fft.hpp"
#include "../core/types.hpp"
#include "../frontend/capture.hpp"

namespace mdmrx {

// circular cross-correlation peak of one trace pair, mean-removed
inline std::ptrdiff_t align_lag(const double* meas, const double* ref,
                                std::size_t n) {
    double mm = 0.0, mr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mm += meas[i];
        mr += ref[i];
    }
    mm /= double(n);
    mr /= double(n);
    cvec a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = cplx{meas[i] - mm, 0.0};
        b[i] = cplx{ref[i] - mr, 0.0};
    }
    fft_inplace(a.data(), n);
    fft_inplace(b.data(), n);
    for (std::size_t i = 0; i < n; ++i) a[i] *= std::conj(b[i]);
    ifft_inplace(a.data(), n);
    std::size_t pk = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i)
        if (a[i].real() > best) {
            best = a[i].real();
            pk = i;
        }
    return pk <= n / 2 ? std::ptrdiff_t(pk) : std::ptrdiff_t(pk) - std::ptrdiff_t(n);
}

// per-tributary lag of the capture against a channel-free reference field
inline std::vector<std::ptrdiff_t> time_align(const intensity_capture_t& cap,
                                              const field_t& ref) {
    std::vector<std::ptrdiff_t> lags(cap.direct.k, 0);
    rvec ri(cap.direct.n);
    for (std::size_t i = 0; i < cap.direct.k; ++i) {
        const cplx* r = ref.row(i);
        for (std::size_t t = 0; t < cap.direct.n; ++t) ri[t] = std::norm(r[t]);
        lags[i] = align_lag(cap.direct.row(i), ri.data(), cap.direct.n);
    }
    return lags;
}

}  // namespace mdmrx
