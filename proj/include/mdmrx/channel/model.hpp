#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <vector>

#include "../core/dispersion.hpp"
#include "../core/grid.hpp"
#include "../core/rng.hpp"
#include "transfer_matrix.hpp"

namespace mdmrx {

using mat6 = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;

// tributary -> mode-group id (LP01 x2, then the four LP11 tributaries)
inline int trib_group(std::size_t i) { return i < 2 ? 0 : 1; }

struct channel_spec_t {
    std::size_t n_taps = 64;
    std::size_t n_tribs = 6;
    int n_sections = 8;
    double intra_coupling = 0.7;   // within a mode group
    double inter_db = -15.0;       // across groups, field ratio in dB
    double mdl_db = 1.0;
    double cd_psnm = 0.0;
    double dgd_lp11_s = 0.0;       // LP01 vs LP11 group delay per span half, seconds total
    double dgd_split_s = 0.0;      // LP11a vs LP11b split, seconds total
    bool dgd_compensated = true;   // second half of sections flips delay signs
    double fs = 60e9;
    double lambda_m = 1555e-9;
};

// Random unitary with group-structured coupling strength: eigh of a masked
// Hermitian sample, then V e^{iw} V^H.
inline mat6 rand_unitary_masked(rng_t& rng, std::size_t k, double intra,
                                double inter_lin) {
    mat6 h(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            h(i, j) = cplx{rng.normal(), rng.normal()} / std::sqrt(2.0);
    mat6 herm = (h + h.adjoint()) / 2.0;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            herm(i, j) *= (trib_group(i) == trib_group(j)) ? intra : inter_lin;
    Eigen::SelfAdjointEigenSolver<mat6> es(herm);
    mat6 v = es.eigenvectors();
    Eigen::VectorXd w = es.eigenvalues();
    mat6 u(k, k);
    for (std::size_t c = 0; c < k; ++c) {
        const cplx ph{std::cos(w(c)), std::sin(w(c))};
        for (std::size_t r = 0; r < k; ++r) u(r, c) = v(r, c) * ph;
    }
    return u * v.adjoint();
}

// Sectioned propagation model: per section a random masked unitary followed
// by per-tributary group delays; optional sign flip in the second half so the
// bulk inter-group DGD cancels while intra-group spread survives. CD is a
// common scalar chirp; MDL is applied as a fixed non-unitary matrix at the
// input side.
inline transfer_matrix_t synthesize_channel(const channel_spec_t& cs,
                                            std::uint64_t seed) {
    rng_t rng(seed, "channel");
    const std::size_t L = cs.n_taps, k = cs.n_tribs;
    const rvec w = omega_axis(L, cs.fs);
    const double inter_lin = std::pow(10.0, cs.inter_db / 20.0);

    // frequency-domain accumulation on the native L-point grid
    std::vector<mat6> H(L, mat6::Identity(k, k));
    const int half = std::max(1, cs.n_sections / 2);
    for (int s = 0; s < cs.n_sections; ++s) {
        const double sign =
            (cs.dgd_compensated && s >= cs.n_sections - half) ? -1.0 : 1.0;
        mat6 u = rand_unitary_masked(rng, k, cs.intra_coupling, inter_lin);
        rvec tau(k, 0.0);
        for (std::size_t i = 2; i < k; ++i) tau[i] += sign * cs.dgd_lp11_s / half;
        for (std::size_t i = 2; i < 4; ++i) tau[i] += sign * 0.5 * cs.dgd_split_s / half;
        for (std::size_t i = 4; i < 6 && i < k; ++i) tau[i] -= sign * 0.5 * cs.dgd_split_s / half;
        for (std::size_t f = 0; f < L; ++f) {
            mat6 uh = u * H[f];
            for (std::size_t i = 0; i < k; ++i) {
                const double ph = -w[f] * tau[i];
                const cplx d{std::cos(ph), std::sin(ph)};
                for (std::size_t j = 0; j < k; ++j) uh(i, j) *= d;
            }
            H[f] = uh;
        }
    }
    const cvec cd = cd_multiplier(L, cs.cd_psnm, cs.fs, cs.lambda_m);
    for (std::size_t f = 0; f < L; ++f) H[f] *= cd[f];

    if (cs.mdl_db > 0.0) {
        mat6 um = rand_unitary_masked(rng, k, 1.0, 1.0);
        mat6 vm = rand_unitary_masked(rng, k, 1.0, 1.0);
        rvec g(k);
        double p = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double e = -cs.mdl_db / 2.0 +
                             cs.mdl_db * double(i) / double(k - 1);
            g[i] = std::pow(10.0, e / 20.0);
            p += g[i] * g[i];
        }
        const double norm = std::sqrt(p / double(k));
        for (std::size_t i = 0; i < k; ++i) g[i] /= norm;
        mat6 gm(k, k);
        for (std::size_t r = 0; r < k; ++r)
            for (std::size_t c = 0; c < k; ++c) gm(r, c) = um(r, c) * g[c];
        gm = gm * vm.adjoint();
        for (std::size_t f = 0; f < L; ++f) H[f] = H[f] * gm;
    }

    // back to taps
    transfer_matrix_t h(L, k);
    cvec buf(L);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            for (std::size_t f = 0; f < L; ++f) buf[f] = H[f](i, j);
            ifft_inplace(buf.data(), L);
            for (std::size_t t = 0; t < L; ++t) h.at(t, i, j) = buf[t];
        }
    }
    return h;
}

} // namespace mdmrx
