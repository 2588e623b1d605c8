#pragma once
// Modified Gerchberg-Saxton phase retrieval for a two-path intensity capture.
// One cycle: amplitude projection against the direct trace, dispersion to the
// second path, amplitude projection against the dispersed trace, propagation
// back with the spectral mask folded into the return multiplier, then pilot
// replacement. A random phase kick fires every escape_period iterations when
// the residual window stalls.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <vector>

#include "mdmrx/core/dispersion.hpp"
#include "mdmrx/core/fft.hpp"
#include "mdmrx/core/rng.hpp"
#include "mdmrx/core/types.hpp"
#include "mdmrx/frontend/capture.hpp"

namespace mdmrx {

struct pilot_sample_t {
    std::size_t pos = 0;
    cplx value{0.0, 0.0};
};

struct retrieval_options_t {
    std::size_t max_iterations = 2000;
    std::size_t escape_period = 100;
    double escape_strength = 0.3;
    std::size_t n_parallel_inits = 2;
    std::size_t block_length = 4096;
    std::size_t block_overlap = 512;
    double convergence_threshold = 1e-4;
    double fs = 60e9;
    double lambda_m = 1555e-9;
    double band_edge_hz = 16.5e9;
    std::vector<pilot_sample_t> pilots;
    std::uint64_t seed = 1;

    bool valid() const {
        return block_overlap > 0 && block_overlap < block_length &&
               convergence_threshold > 0 && n_parallel_inits >= 1;
    }
};

struct retrieval_result_t {
    cvec field;
    std::vector<double> residual_history;
    std::size_t iterations_used = 0;
    std::size_t init_index_chosen = 0;
    bool converged = false;
};

// |out[n]| = sqrt(target[n]), phase kept from x, phase 0 at zero amplitude.
inline void project_intensity(cvec& x, const rvec& target) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        double t = std::sqrt(std::max(target[i], 0.0));
        double a = std::abs(x[i]);
        x[i] = a > 0.0 ? cplx{t * x[i].real() / a, t * x[i].imag() / a}
                       : cplx{t, 0.0};
    }
}

inline std::vector<std::uint8_t> band_mask_hz(std::size_t n, double fs,
                                              double edge_hz) {
    std::vector<std::uint8_t> m(n);
    for (std::size_t i = 0; i < n; ++i)
        m[i] = std::abs(fftfreq(i, n, fs)) <= edge_hz ? 1 : 0;
    return m;
}

inline void project_spectrum(cvec& x, const std::vector<std::uint8_t>& mask) {
    fft_inplace(x.data(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!mask[i]) x[i] = cplx{0.0, 0.0};
    ifft_inplace(x.data(), x.size());
}

inline void apply_pilot_constraint(cvec& x,
                                   const std::vector<pilot_sample_t>& pilots) {
    for (const auto& p : pilots) x[p.pos] = p.value;
}

inline void escape_local_minimum(cvec& x, double strength, rng_t& rng) {
    for (auto& v : x) v *= std::polar(1.0, strength * rng.normal());
}

inline void escape_local_minimum(cvec& x, double strength, std::uint64_t seed) {
    rng_t rng(seed, "escape");
    escape_local_minimum(x, strength, rng);
}

// One tributary's capture pair plus the precomputed cycle machinery. The
// state lives in the direct-path domain; d_psnm is the extra dispersion of
// the second path.
struct gs_problem_t {
    rvec direct, dispersed;
    double d_psnm = 0.0;
    double fs = 60e9;
    double lambda_m = 1555e-9;
    std::vector<std::uint8_t> mask;
    std::vector<pilot_sample_t> pilots;

    rvec sqrt_d, sqrt_v;
    cvec fwd, back;
    double nd = 0.0, nv = 0.0;

    void prepare() {
        const std::size_t n = direct.size();
        sqrt_d.resize(n);
        sqrt_v.resize(n);
        nd = nv = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sqrt_d[i] = std::sqrt(std::max(direct[i], 0.0));
            sqrt_v[i] = std::sqrt(std::max(dispersed[i], 0.0));
            nd += direct[i] * direct[i];
            nv += dispersed[i] * dispersed[i];
        }
        fwd = cd_multiplier(n, d_psnm, fs, lambda_m);
        back.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            back[i] = mask[i] ? std::conj(fwd[i]) : cplx{0.0, 0.0};
    }

    // Residual per the capture pair: mean over both paths of
    // sum((|y|^2 - target)^2) / sum(target^2).
    double residual(const cvec& state) const {
        const std::size_t n = state.size();
        cvec w = state;
        double rd = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double e = std::norm(w[i]) - direct[i];
            rd += e * e;
        }
        filter_inplace(w.data(), fwd.data(), n);
        double rv = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double e = std::norm(w[i]) - dispersed[i];
            rv += e * e;
        }
        return 0.5 * ((nd > 0 ? rd / nd : 0.0) + (nv > 0 ? rv / nv : 0.0));
    }

    // One GS cycle in place. Returns the residual of the incoming state.
    double iterate(cvec& state) const {
        const std::size_t n = state.size();
        double rd = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double e = std::norm(state[i]) - direct[i];
            rd += e * e;
            double t = sqrt_d[i];
            double a = std::abs(state[i]);
            state[i] = a > 0.0 ? cplx{t * state[i].real() / a, t * state[i].imag() / a}
                               : cplx{t, 0.0};
        }
        filter_inplace(state.data(), fwd.data(), n);
        double rv = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double e = std::norm(state[i]) - dispersed[i];
            rv += e * e;
            double t = sqrt_v[i];
            double a = std::abs(state[i]);
            state[i] = a > 0.0 ? cplx{t * state[i].real() / a, t * state[i].imag() / a}
                               : cplx{t, 0.0};
        }
        filter_inplace(state.data(), back.data(), n);
        for (const auto& p : pilots) state[p.pos] = p.value;
        return 0.5 * ((nd > 0 ? rd / nd : 0.0) + (nv > 0 ? rv / nv : 0.0));
    }
};

// Spec-level single cycle on a full waveform.
inline double gs_iterate(cvec& state, const rvec& direct, const rvec& dispersed,
                         double d_psnm, const retrieval_options_t& opts) {
    gs_problem_t p;
    p.direct = direct;
    p.dispersed = dispersed;
    p.d_psnm = d_psnm;
    p.fs = opts.fs;
    p.lambda_m = opts.lambda_m;
    p.mask = band_mask_hz(direct.size(), opts.fs, opts.band_edge_hz);
    p.pilots = opts.pilots;
    p.prepare();
    return p.iterate(state);
}

namespace detail {

struct gs_run_t {
    cvec state;
    std::vector<double> history;
    double best_res = std::numeric_limits<double>::infinity();
    cvec best_state;
    std::size_t iters = 0;
    bool converged = false;
};

inline gs_run_t run_gs(const gs_problem_t& p, cvec state,
                       const retrieval_options_t& opts, rng_t& rng) {
    gs_run_t out;
    out.history.reserve(opts.max_iterations);
    double window_start = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < opts.max_iterations; ++it) {
        double r = p.iterate(state);
        out.history.push_back(r);
        ++out.iters;
        if (r < out.best_res) {
            out.best_res = r;
            out.best_state = state;
        }
        if (r < opts.convergence_threshold) {
            out.converged = true;
            break;
        }
        if ((it + 1) % opts.escape_period == 0) {
            if (r > 0.99 * window_start)
                escape_local_minimum(state, opts.escape_strength, rng);
            window_start = r;
        }
    }
    out.state = std::move(state);
    return out;
}

}  // namespace detail

// Block-wise retrieval of one tributary with parallel random-phase inits per
// block, lowest-residual reduction (ties to the lower init index), and
// overlap-discard stitching.
inline retrieval_result_t retrieve(const intensity_capture_t& cap,
                                   std::size_t trib,
                                   const retrieval_options_t& opts) {
    const std::size_t n = cap.direct.n;
    const std::size_t blen = std::min(opts.block_length, n);
    const std::size_t ov = blen < opts.block_length ? 0 : opts.block_overlap;
    const std::size_t stride = blen - ov;

    std::vector<std::size_t> starts;
    for (std::size_t s = 0;; s += stride) {
        if (s + blen >= n) {
            starts.push_back(n - blen);
            break;
        }
        starts.push_back(s);
    }

    retrieval_result_t res;
    res.field.assign(n, cplx{0.0, 0.0});
    res.converged = true;

    std::vector<double> hist_sum;
    std::vector<std::size_t> hist_cnt;
    char label[64];

    for (std::size_t bi = 0; bi < starts.size(); ++bi) {
        const std::size_t s0 = starts[bi];
        gs_problem_t p;
        p.direct.assign(cap.direct.row(trib) + s0, cap.direct.row(trib) + s0 + blen);
        p.dispersed.assign(cap.dispersed.row(trib) + s0,
                           cap.dispersed.row(trib) + s0 + blen);
        p.d_psnm = cap.d_psnm;
        p.fs = opts.fs;
        p.lambda_m = opts.lambda_m;
        p.mask = band_mask_hz(blen, opts.fs, opts.band_edge_hz);
        for (const auto& pl : opts.pilots)
            if (pl.pos >= s0 && pl.pos < s0 + blen)
                p.pilots.push_back({pl.pos - s0, pl.value});
        p.prepare();

        detail::gs_run_t best;
        std::size_t best_init = 0;
        for (std::size_t ii = 0; ii < opts.n_parallel_inits; ++ii) {
            std::snprintf(label, sizeof(label), "retrieve/b%zu/i%zu", bi, ii);
            rng_t rng(opts.seed, label);
            cvec z0(blen);
            for (std::size_t i = 0; i < blen; ++i)
                z0[i] = p.sqrt_d[i] * rng.unit_phase();
            auto run = detail::run_gs(p, std::move(z0), opts, rng);
            if (run.best_res < best.best_res) {
                best = std::move(run);
                best_init = ii;
            }
        }
        if (!best.converged) res.converged = false;
        if (bi == 0) res.init_index_chosen = best_init;
        res.iterations_used = std::max(res.iterations_used, best.iters);

        if (hist_sum.size() < best.history.size()) {
            hist_sum.resize(best.history.size(), 0.0);
            hist_cnt.resize(best.history.size(), 0);
        }
        for (std::size_t i = 0; i < best.history.size(); ++i) {
            hist_sum[i] += best.history[i];
            hist_cnt[i] += 1;
        }

        // overlap-discard: keep the interior, full reach at the frame edges
        std::size_t keep_lo = bi == 0 ? 0 : ov / 2;
        std::size_t keep_hi = bi + 1 == starts.size() ? blen : blen - ov / 2;
        if (bi > 0 && s0 + keep_lo < starts[bi - 1] + blen - ov / 2)
            keep_lo = starts[bi - 1] + blen - ov / 2 - s0;
        for (std::size_t i = keep_lo; i < keep_hi; ++i)
            res.field[s0 + i] = best.best_state[i];
    }

    res.residual_history.resize(hist_sum.size());
    for (std::size_t i = 0; i < hist_sum.size(); ++i)
        res.residual_history[i] = hist_sum[i] / double(hist_cnt[i]);

    // the recorded endpoint is the stitched field's own residual
    gs_problem_t full;
    full.direct.assign(cap.direct.row(trib), cap.direct.row(trib) + n);
    full.dispersed.assign(cap.dispersed.row(trib), cap.dispersed.row(trib) + n);
    full.d_psnm = cap.d_psnm;
    full.fs = opts.fs;
    full.lambda_m = opts.lambda_m;
    full.mask = band_mask_hz(n, opts.fs, opts.band_edge_hz);
    full.prepare();
    res.residual_history.push_back(full.residual(res.field));
    return res;
}

}  // namespace mdmrx
