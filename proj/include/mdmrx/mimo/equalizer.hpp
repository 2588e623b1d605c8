#pragma once
// Frequency-domain 6x6 equalization with symbol-spaced taps. The retrieved
// fields are matched-filtered, decimated at the max-energy timing phase, and
// inverted per symbol-grid bin against the alias-folded response of the
// modal channel. Aliasing makes the folded pulse Nyquist-flat, so the only
// conditioning risk is the channel itself.

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "../channel/transfer_matrix.hpp"
#include "../chanest/ls_fit.hpp"
#include "../core/dispersion.hpp"
#include "../core/fft.hpp"
#include "../core/types.hpp"
#include "../tx/frame.hpp"
#include "../tx/pulse.hpp"

namespace mdmrx {

enum class eq_mode_t { zero_forcing_from_h, mmse_from_h, data_aided_ls };

struct equalizer_config_t {
    std::size_t n_taps = 64;  // symbol-spaced, data-aided mode only
    eq_mode_t mode = eq_mode_t::zero_forcing_from_h;
    double noise_loading = 0.0;
    double zf_reg = 0.0;  // relative ridge on H^H H; 0 demands invertibility
};

struct eq_result_t {
    field_t symbols;  // k streams, one sample per symbol, tx-aligned
    std::size_t timing_phase = 0;
};

// backward common dispersion, identical on every tributary
inline void compensate_cd(field_t& x, double cd_psnm, double fs, double lambda_m) {
    const cvec m = cd_multiplier(x.n, -cd_psnm, fs, lambda_m);
    disperse_rows(x, m);
}

// max-energy decimation phase measured over a sample range
inline std::size_t timing_phase(const field_t& x, std::size_t sps,
                                std::size_t lo, std::size_t hi) {
    std::size_t best = 0;
    double be = -1.0;
    for (std::size_t ph = 0; ph < sps; ++ph) {
        double e = 0.0;
        for (std::size_t i = 0; i < x.k; ++i)
            for (std::size_t t = lo + ph; t < hi; t += sps)
                e += std::norm(x.at(i, t));
        if (e > be) {
            be = e;
            best = ph;
        }
    }
    return best;
}

// alias-folded symbol-spaced response of h after tx pulse and matched filter
inline cvec folded_response(const transfer_matrix_t& h, std::size_t n,
                            const pulse_spec_t& ps) {
    const std::size_t k = h.k, sps = std::size_t(ps.sps), nsym = n / sps;
    const cvec hf = channel_freq(h, n);
    const rvec g = rrc_spectrum(n, ps);
    cvec cf(nsym * k * k, cplx{0.0, 0.0});
    for (std::size_t nu = 0; nu < nsym; ++nu)
        for (std::size_t al = 0; al < sps; ++al) {
            const std::size_t f = nu + al * nsym;
            const double w = g[f] * g[f] / double(sps);
            for (std::size_t e = 0; e < k * k; ++e)
                cf[nu * k * k + e] += hf[f * k * k + e] * w;
        }
    return cf;
}

inline eq_result_t mimo_equalize(const field_t& fields,
                                 const transfer_matrix_t& h_md,
                                 const equalizer_config_t& cfg,
                                 const pulse_spec_t& ps,
                                 const frame_t* frame = nullptr) {
    const std::size_t k = fields.k, n = fields.n, sps = std::size_t(ps.sps);
    const std::size_t nsym = n / sps;

    // matched filter on the sample grid
    field_t mf = fields;
    const rvec g = rrc_spectrum(n, ps);
    for (std::size_t i = 0; i < k; ++i) {
        fft_inplace(mf.row(i), n);
        for (std::size_t f = 0; f < n; ++f) mf.row(i)[f] *= g[f] / double(sps);
        ifft_inplace(mf.row(i), n);
    }

    eq_result_t out;
    std::size_t lo = 0, hi = n;
    if (frame) {
        lo = frame->spec.ts_start() * sps;
        hi = (frame->spec.ts_start() + frame->spec.ts_len) * sps;
    }
    out.timing_phase = timing_phase(mf, sps, lo, hi);

    field_t dec(k, nsym);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t s = 0; s < nsym; ++s)
            dec.at(i, s) = mf.at(i, s * sps + out.timing_phase);

    if (cfg.mode == eq_mode_t::data_aided_ls) {
        if (!frame)
            throw std::invalid_argument("data-aided equalizer needs the frame");
        if (cfg.n_taps * sps < h_md.l)
            throw std::invalid_argument(
                "equalizer taps below channel memory in symbols");
        field_t tx_sym(k, nsym);
        for (std::size_t i = 0; i < k; ++i)
            std::copy(frame->ts[i].begin(), frame->ts[i].end(),
                      tx_sym.row(i) + frame->spec.ts_start());
        std::vector<std::size_t> idx;
        // circular lags reach backwards; stay clear of the training edges
        for (std::size_t s = frame->spec.ts_start() + cfg.n_taps;
             s < frame->spec.ts_start() + frame->spec.ts_len; ++s)
            idx.push_back(s);
        transfer_matrix_t w = ls_channel_fit(tx_sym, dec, idx, cfg.n_taps, 1e-9);
        out.symbols = apply_channel(dec, w);
        return out;
    }

    // frequency-domain inversion of the folded response
    const cvec cf = folded_response(h_md, n, ps);
    field_t df(k, nsym);
    for (std::size_t i = 0; i < k; ++i) {
        std::copy(dec.row(i), dec.row(i) + nsym, df.row(i));
        fft_inplace(df.row(i), nsym);
    }
    Eigen::MatrixXcd hb(k, k), w(k, k);
    Eigen::VectorXcd y(k);
    field_t sf(k, nsym);
    for (std::size_t nu = 0; nu < nsym; ++nu) {
        for (std::size_t r = 0; r < k; ++r)
            for (std::size_t c = 0; c < k; ++c) hb(r, c) = cf[(nu * k + r) * k + c];
        if (cfg.mode == eq_mode_t::mmse_from_h) {
            Eigen::MatrixXcd gram =
                hb * hb.adjoint() +
                cfg.noise_loading * Eigen::MatrixXcd::Identity(k, k);
            w = hb.adjoint() * gram.inverse();
        } else {
            Eigen::MatrixXcd gram = hb.adjoint() * hb;
            const double tr = gram.real().trace() / double(k);
            if (cfg.zf_reg > 0.0)
                gram += cfg.zf_reg * tr * Eigen::MatrixXcd::Identity(k, k);
            else if (std::abs(hb.determinant()) < 1e-12)
                throw std::runtime_error(
                    "singular folded response at frequency bin " +
                    std::to_string(nu));
            w = gram.inverse() * hb.adjoint();
        }
        for (std::size_t r = 0; r < k; ++r) y(r) = df.at(r, nu);
        Eigen::VectorXcd s = w * y;
        for (std::size_t r = 0; r < k; ++r) sf.at(r, nu) = s(r);
    }
    out.symbols = field_t(k, nsym);
    for (std::size_t i = 0; i < k; ++i) {
        std::copy(sf.row(i), sf.row(i) + nsym, out.symbols.row(i));
        ifft_inplace(out.symbols.row(i), nsym);
    }
    return out;
}

}  // namespace mdmrx
