#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>

#include "../core/grid.hpp"
#include "transfer_matrix.hpp"

namespace mdmrx {

using mat6 = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;

// Mode-dependent loss of the channel: eigenvalue spread of the
// frequency-averaged Gram matrix over the in-band bins, in dB.
inline double mdl_of(const transfer_matrix_t& h, std::size_t n = 0,
                     double band_frac = 1.0) {
    if (n == 0) n = h.l;
    const std::size_t k = h.k;
    const cvec hf = channel_freq(h, n);
    mat6 gram = mat6::Zero(k, k);
    std::size_t count = 0;
    for (std::size_t f = 0; f < n; ++f) {
        const double nu = fftfreq(f, n, 1.0);
        if (std::abs(nu) > band_frac / 2.0 + 1e-12) continue;
        Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>
            H(&hf[f * k * k], k, k);
        gram += H.adjoint() * H;
        ++count;
    }
    gram /= double(count);
    Eigen::SelfAdjointEigenSolver<mat6> es(gram);
    const auto& ev = es.eigenvalues();
    return 10.0 * std::log10(ev(k - 1) / ev(0));
}

// Relative distance between channel responses with the per-output-row
// scalar phase removed first. Intensity-only captures cannot pin that
// phase: diag(e^{i phi}) h produces identical traces, so the raw norm
// saturates even when the estimate is physically exact.
inline double matrix_err_gauge(const transfer_matrix_t& h_est,
                               const transfer_matrix_t& h_true,
                               std::size_t n = 1024, double band_frac = 0.55) {
    const std::size_t k = h_true.k;
    const cvec he = channel_freq(h_est, n);
    const cvec ht = channel_freq(h_true, n);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        cplx corr{0, 0};
        for (std::size_t f = 0; f < n; ++f) {
            if (std::abs(fftfreq(f, n, 1.0)) > band_frac / 2.0) continue;
            for (std::size_t j = 0; j < k; ++j)
                corr += std::conj(he[(f * k + i) * k + j]) * ht[(f * k + i) * k + j];
        }
        const double ac = std::abs(corr);
        const cplx ph = ac > 0 ? corr / ac : cplx{1, 0};
        for (std::size_t f = 0; f < n; ++f) {
            if (std::abs(fftfreq(f, n, 1.0)) > band_frac / 2.0) continue;
            for (std::size_t j = 0; j < k; ++j) {
                const cplx d = he[(f * k + i) * k + j] * ph - ht[(f * k + i) * k + j];
                num += std::norm(d);
                den += std::norm(ht[(f * k + i) * k + j]);
            }
        }
    }
    return std::sqrt(num / den);
}

inline double matrix_err_raw(const transfer_matrix_t& h_est,
                             const transfer_matrix_t& h_true,
                             std::size_t n = 1024, double band_frac = 0.55) {
    const std::size_t k = h_true.k;
    const cvec he = channel_freq(h_est, n);
    const cvec ht = channel_freq(h_true, n);
    double num = 0.0, den = 0.0;
    for (std::size_t f = 0; f < n; ++f) {
        if (std::abs(fftfreq(f, n, 1.0)) > band_frac / 2.0) continue;
        for (std::size_t e = 0; e < k * k; ++e) {
            num += std::norm(he[f * k * k + e] - ht[f * k * k + e]);
            den += std::norm(ht[f * k * k + e]);
        }
    }
    return std::sqrt(num / den);
}

} // namespace mdmrx
