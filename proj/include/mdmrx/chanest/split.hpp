#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "../channel/transfer_matrix.hpp"
#include "../core/dispersion.hpp"
#include "../core/grid.hpp"

namespace mdmrx {

// h = h_cd * h_md split. The common chirp shows up K-fold in det(H(w)), so a
// weighted quadratic fit of the unwrapped determinant phase on the native tap
// grid recovers the scalar CD; the residual after removing it is h_md.
//
// The md factor must always be re-derived on the target grid as
// H(w) conj(chirp(w)): tap-domain resampling of h_md does not commute with
// the chirp and bends the split.
struct cd_split_t {
    double cd_psnm = 0.0;
    transfer_matrix_t h_md;
};

inline cd_split_t split_cd(const transfer_matrix_t& h, double fs, double lambda_m,
                           double band_frac = 0.55) {
    const std::size_t L = h.l, k = h.k;
    const cvec hf = channel_freq(h, L);

    // det and |det| weight per bin
    std::vector<double> ph_s, wt_s, w_s;
    struct bin_t { double w; cplx det; };
    std::vector<bin_t> bins;
    bins.reserve(L);
    for (std::size_t f = 0; f < L; ++f) {
        Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>
            H(&hf[f * k * k], k, k);
        bins.push_back({2.0 * std::numbers::pi * fftfreq(f, L, fs),
                        Eigen::MatrixXcd(H).determinant()});
    }
    std::sort(bins.begin(), bins.end(),
              [](const bin_t& a, const bin_t& b) { return a.w < b.w; });

    const double w_edge = 2.0 * std::numbers::pi * (band_frac / 2.0) * fs;
    double prev = 0.0;
    bool first = true;
    for (const auto& b : bins) {
        if (std::abs(b.w) > w_edge) continue;
        double p = std::arg(b.det);
        if (!first) {
            while (p - prev > std::numbers::pi) p -= 2.0 * std::numbers::pi;
            while (p - prev < -std::numbers::pi) p += 2.0 * std::numbers::pi;
        }
        first = false;
        prev = p;
        ph_s.push_back(p / double(k));
        wt_s.push_back(std::pow(std::abs(b.det), 1.0 / double(k)));
        w_s.push_back(b.w);
    }

    // weighted LS fit ph ~ c0 + c1 u + c2 u^2, u = w/wscale
    double wscale = 0.0;
    for (double w : w_s) wscale = std::max(wscale, std::abs(w));
    if (wscale <= 0.0) wscale = 1.0;
    Eigen::MatrixXd v(ph_s.size(), 3);
    Eigen::VectorXd rhs(ph_s.size());
    for (std::size_t i = 0; i < ph_s.size(); ++i) {
        const double u = w_s[i] / wscale;
        const double sw = std::sqrt(wt_s[i]);
        v(i, 0) = sw;
        v(i, 1) = sw * u;
        v(i, 2) = sw * u * u;
        rhs(i) = sw * ph_s[i];
    }
    Eigen::Vector3d coef = v.colPivHouseholderQr().solve(rhs);
    const double c2 = coef(2) / (wscale * wscale);

    cd_split_t out;
    out.cd_psnm = c2 * 4.0 * std::numbers::pi * c_light / (lambda_m * lambda_m) * 1e3;

    // residual taps with the fitted chirp removed
    out.h_md = transfer_matrix_t(L, k);
    cvec buf(L);
    const rvec w = omega_axis(L, fs);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            for (std::size_t f = 0; f < L; ++f) {
                const double p = -c2 * w[f] * w[f];
                buf[f] = hf[(f * k + i) * k + j] * cplx{std::cos(p), std::sin(p)};
            }
            ifft_inplace(buf.data(), L);
            for (std::size_t t = 0; t < L; ++t) out.h_md.at(t, i, j) = buf[t];
        }
    }
    return out;
}

// md-only frequency response on an arbitrary grid: H(w) conj(chirp_cd(w)).
inline cvec md_response(const transfer_matrix_t& h, double cd_psnm, std::size_t n,
                        double fs, double lambda_m) {
    cvec hf = channel_freq(h, n);
    const cvec chirp = cd_multiplier(n, cd_psnm, fs, lambda_m);
    const std::size_t kk = h.k * h.k;
    for (std::size_t f = 0; f < n; ++f) {
        const cplx c = std::conj(chirp[f]);
        for (std::size_t e = 0; e < kk; ++e) hf[f * kk + e] *= c;
    }
    return hf;
}

} // namespace mdmrx
