#pragma once
// Transfer-matrix estimation loop. Each outer iteration predicts the
// training-region waveform from the current tap estimate, retrieves the
// field on the training block with dense soft anchors taken from that
// prediction, and refits the taps by least squares. The anchored retrieval
// supplies the phase reference, so the estimate and the retrieved field pull
// each other in; the method needs no starting knowledge beyond a unitary.
//
// The retrieval block is exactly the training span, treated circularly.
// Anchors sit at every symbol instant away from the block edges and are
// blended softly (alpha < 1): hard replacement lets a wrong early prediction
// lock itself in, soft blending lets the intensity data outvote it. The
// retrieved fields are carried across outer iterations as warm starts.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include "../channel/mdl.hpp"
#include "../channel/model.hpp"
#include "../channel/transfer_matrix.hpp"
#include "../core/dispersion.hpp"
#include "../core/fft.hpp"
#include "../core/rng.hpp"
#include "../core/types.hpp"
#include "../frontend/capture.hpp"
#include "../tx/frame.hpp"
#include "../tx/pulse.hpp"
#include "ls_fit.hpp"

namespace mdmrx {

enum class init_matrix_t { identity, unitary, supplied };

struct estimator_options_t {
    std::size_t n_outer = 15;
    std::size_t n_inner = 250;
    std::size_t n_taps = 64;
    init_matrix_t init = init_matrix_t::identity;
    transfer_matrix_t h_supplied;
    double ridge = 1e-8;
    std::size_t anchor_margin = 48;  // symbols skipped at the block edges
    double anchor_alpha = 0.4;       // soft anchor blend weight
    std::size_t escape_period = 100;
    double escape_strength = 0.3;
    std::uint64_t seed = 7;
    double lambda_m = 1555e-9;
};

struct estimator_result_t {
    transfer_matrix_t h;
    std::vector<double> mdl_history;  // n_outer + 1 entries, index 0 is the init
    std::vector<double> fit_history;  // relative fit residual per outer
    bool diverged = false;
};

inline transfer_matrix_t initial_matrix(const estimator_options_t& opts,
                                        std::size_t k) {
    transfer_matrix_t h(opts.n_taps, k);
    switch (opts.init) {
        case init_matrix_t::supplied:
            return opts.h_supplied;
        case init_matrix_t::unitary: {
            rng_t rng(opts.seed, "chanest/init");
            mat6 u = rand_unitary_masked(rng, k, 1.0, 1.0);
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = 0; j < k; ++j) h.at(0, i, j) = u(i, j);
            return h;
        }
        case init_matrix_t::identity:
        default:
            for (std::size_t i = 0; i < k; ++i) h.at(0, i, i) = 1.0;
            return h;
    }
}

namespace detail {

// One tributary's anchored two-capture retrieval on the training block.
// Keeps the best state seen; random kicks restart stalled progress.
inline void anchored_gs(cvec& z, const double* d_t, const double* v_t,
                        const cvec& fwd, const cvec& back,
                        const std::vector<std::size_t>& anc_loc,
                        const cvec& anc_val, std::size_t iters, double alpha,
                        std::size_t escape_period, double escape_strength,
                        rng_t& rng) {
    const std::size_t n = z.size();
    double nd = 0.0, nv = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        nd += d_t[t] * d_t[t];
        nv += v_t[t] * v_t[t];
    }
    cvec w(n);
    cvec best = z;
    double best_r = 1e30, wstart = 1e30;
    for (std::size_t it = 0; it < iters; ++it) {
        for (std::size_t t = 0; t < n; ++t) {
            const double m = std::abs(z[t]);
            w[t] = m > 0 ? z[t] * (std::sqrt(d_t[t]) / m)
                         : cplx(std::sqrt(d_t[t]), 0.0);
        }
        filter_inplace(w.data(), fwd.data(), n);
        double rv = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double p = std::norm(w[t]);
            rv += (p - v_t[t]) * (p - v_t[t]);
            const double m = std::sqrt(p);
            w[t] = m > 0 ? w[t] * (std::sqrt(v_t[t]) / m)
                         : cplx(std::sqrt(v_t[t]), 0.0);
        }
        rv /= nv;
        filter_inplace(w.data(), back.data(), n);
        double rd = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double p = std::norm(w[t]);
            rd += (p - d_t[t]) * (p - d_t[t]);
        }
        rd /= nd;
        z = w;
        for (std::size_t a = 0; a < anc_loc.size(); ++a)
            z[anc_loc[a]] =
                (1.0 - alpha) * z[anc_loc[a]] + alpha * anc_val[a];
        const double r = 0.5 * (rd + rv);
        if (r < best_r) {
            best_r = r;
            best = z;
        }
        if ((it + 1) % escape_period == 0) {
            if (r > 0.99 * wstart)
                for (std::size_t t = 0; t < n; ++t)
                    z[t] *= std::polar(1.0, rng.normal() * escape_strength);
            wstart = r;
        }
    }
    z = best;
}

}  // namespace detail

inline estimator_result_t estimate_transfer_matrix(
    const intensity_capture_t& cap, const frame_t& frame,
    const pulse_spec_t& ps, const estimator_options_t& opts) {
    const std::size_t k = cap.direct.k, n = cap.direct.n;
    const std::size_t sps = std::size_t(ps.sps);
    const std::size_t nsym_grid = n / sps;
    const std::size_t ts_len = frame.spec.ts_len;
    const std::size_t block = ts_len * sps;
    if (block == 0 || (block & (block - 1)) != 0)
        throw std::invalid_argument(
            "estimate_transfer_matrix: training block length must be a power "
            "of two");
    if (2 * opts.anchor_margin >= ts_len)
        throw std::invalid_argument(
            "estimate_transfer_matrix: anchor margin swallows the training "
            "run");

    // channel-free reference: training symbols only, shaped on the full
    // grid, then restricted to the block
    field_t ref_sym(k, nsym_grid);
    for (std::size_t i = 0; i < k; ++i)
        std::copy(frame.ts[i].begin(), frame.ts[i].end(),
                  ref_sym.row(i) + frame.spec.ts_start());
    const rvec g = rrc_spectrum(n, ps);
    field_t x_ref = shape_rows(ref_sym, n, g, ps.sps);

    const std::size_t win0 = frame.spec.ts_start() * sps;
    field_t x_ref_b(k, block);
    real_field_t d_b(k, block), v_b(k, block);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t t = 0; t < block; ++t) {
            const std::size_t src = (win0 + t) % n;
            x_ref_b.at(i, t) = x_ref.at(i, src);
            d_b.at(i, t) = cap.direct.at(i, src);
            v_b.at(i, t) = cap.dispersed.at(i, src);
        }

    const rvec maskb = band_mask(block, ps);
    const cvec fwd = cd_multiplier(block, cap.d_psnm, ps.fs(), opts.lambda_m);
    cvec back(block);
    for (std::size_t t = 0; t < block; ++t)
        back[t] = std::conj(fwd[t]) * maskb[t];

    // block-local anchor and fit supports, one anchor per symbol instant
    std::vector<std::size_t> anc_loc;
    for (std::size_t s = opts.anchor_margin; s < ts_len - opts.anchor_margin;
         ++s)
        anc_loc.push_back(s * sps);
    std::vector<std::size_t> fit_idx;
    for (std::size_t t = anc_loc.front(); t <= anc_loc.back(); ++t)
        fit_idx.push_back(t);

    const ls_fit_plan_t fit_plan(x_ref_b, fit_idx, opts.n_taps, opts.ridge);

    estimator_result_t out;
    transfer_matrix_t h_e = initial_matrix(opts, k);
    out.mdl_history.push_back(mdl_of(h_e, 0, 0.55));

    field_t z_all(k, block);
    bool warm = false;
    std::size_t grow = 0;
    double best_resid = 1e30;
    char label[48];
    cvec z(block), anc_val(anc_loc.size());
    for (std::size_t outer = 0; outer < opts.n_outer; ++outer) {
        field_t pred = apply_channel(x_ref_b, h_e);
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t a = 0; a < anc_loc.size(); ++a)
                anc_val[a] = pred.at(i, anc_loc[a]);
            const cplx* z0 = warm ? z_all.row(i) : pred.row(i);
            std::copy(z0, z0 + block, z.begin());
            std::snprintf(label, sizeof(label), "chanest/o%zu/t%zu", outer, i);
            rng_t rng(opts.seed, label);
            detail::anchored_gs(z, d_b.row(i), v_b.row(i), fwd, back, anc_loc,
                                anc_val, opts.n_inner, opts.anchor_alpha,
                                opts.escape_period, opts.escape_strength, rng);
            std::copy(z.begin(), z.end(), z_all.row(i));
        }
        warm = true;
        h_e = fit_plan.solve(z_all);
        out.mdl_history.push_back(mdl_of(h_e, 0, 0.55));

        field_t model = apply_channel(x_ref_b, h_e);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t t : fit_idx) {
                num += std::norm(z_all.at(i, t) - model.at(i, t));
                den += std::norm(z_all.at(i, t));
            }
        const double resid = den > 0 ? std::sqrt(num / den) : 0.0;
        if (!out.fit_history.empty() && resid > out.fit_history.back())
            ++grow;
        else
            grow = 0;
        best_resid = std::min(best_resid, resid);
        out.fit_history.push_back(resid);
        // abort on real divergence only: three consecutive growths is normal
        // during the early transient while the anchors still chase a moving
        // prediction, so additionally require the residual to have doubled
        // from its best
        if (grow >= 3 && resid > 2.0 * best_resid) {
            out.diverged = true;
            break;
        }
    }
    out.h = h_e;
    return out;
}

}  // namespace mdmrx
