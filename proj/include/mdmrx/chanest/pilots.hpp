#pragma once
// Receiver-side pilot prediction. Each pilot group is pulse-shaped on a
// short local window and pushed through the modal part of the split only;
// the common dispersion is compensated before payload retrieval, so the
// pilot constraints live in the compensated domain. Window truncation trades
// a small prediction error for per-group cost.

#include <cstddef>
#include <vector>

#include "../core/types.hpp"
#include "../retrieval/gs.hpp"
#include "../tx/frame.hpp"
#include "../tx/pulse.hpp"
#include "split.hpp"

namespace mdmrx {

// pilot groups as (payload-relative start, length) runs of consecutive slots
inline std::vector<std::pair<std::size_t, std::size_t>> pilot_groups(
    const frame_t& frame) {
    std::vector<std::pair<std::size_t, std::size_t>> groups;
    const auto& pos = frame.pilot_pos;
    for (std::size_t i = 0; i < pos.size();) {
        std::size_t j = i + 1;
        while (j < pos.size() && pos[j] == pos[j - 1] + 1) ++j;
        groups.push_back({pos[i], j - i});
        i = j;
    }
    return groups;
}

// per-tributary pilot sample constraints at the group symbol instants,
// positions absolute on the frame sample grid
inline std::vector<std::vector<pilot_sample_t>> propagate_pilots(
    const frame_t& frame, const cd_split_t& split, const pulse_spec_t& ps,
    std::size_t window_sym = 128) {
    const std::size_t k = frame.spec.n_tribs;
    const std::size_t sps = std::size_t(ps.sps);
    const std::size_t wn = window_sym * sps;
    const rvec g = rrc_spectrum(wn, ps);
    const cvec hmd_w = channel_freq(split.h_md, wn);

    std::vector<std::vector<pilot_sample_t>> out(k);
    field_t win_sym(k, window_sym);
    field_t win_f(k, wn);
    for (const auto& [g0, m] : pilot_groups(frame)) {
        // group centered in the local window
        const std::size_t off = window_sym / 2 - m / 2;
        for (std::size_t i = 0; i < k; ++i) {
            std::fill(win_sym.row(i), win_sym.row(i) + window_sym, cplx{0.0, 0.0});
            for (std::size_t q = 0; q < m && g0 + q < frame.spec.payload_len; ++q)
                win_sym.at(i, off + q) = frame.payload[i][g0 + q];
        }
        field_t shaped = shape_rows(win_sym, wn, g, ps.sps);
        for (std::size_t i = 0; i < k; ++i) fft_inplace(shaped.row(i), wn);
        std::vector<cplx> acc(k);
        for (std::size_t f = 0; f < wn; ++f) {
            const cplx* hb = &hmd_w[f * k * k];
            for (std::size_t i = 0; i < k; ++i) {
                cplx s{0.0, 0.0};
                for (std::size_t j = 0; j < k; ++j)
                    s += hb[i * k + j] * shaped.at(j, f);
                acc[i] = s;
            }
            for (std::size_t i = 0; i < k; ++i) win_f.at(i, f) = acc[i];
        }
        for (std::size_t i = 0; i < k; ++i) {
            ifft_inplace(win_f.row(i), wn);
            for (std::size_t q = 0; q < m && g0 + q < frame.spec.payload_len; ++q) {
                const std::size_t abs_pos =
                    (frame.spec.payload_start() + g0 + q) * sps;
                out[i].push_back({abs_pos, win_f.at(i, (off + q) * sps)});
            }
        }
    }
    return out;
}

}  // namespace mdmrx
