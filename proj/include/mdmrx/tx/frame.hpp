#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "../core/rng.hpp"
#include "../core/types.hpp"
#include "qpsk.hpp"

namespace mdmrx {

struct frame_spec_t {
    std::size_t n_tribs = 6;
    std::size_t ts_len = 2048;
    std::size_t payload_len = 1 << 14;
    double pilot_pct = 0.20;    // fraction of payload symbols used as pilots
    std::size_t pilot_group = 1; // consecutive pilots per group
    std::size_t guard = 64;      // empty symbols at both frame edges

    std::size_t total_sym() const { return guard + ts_len + payload_len + guard; }
    std::size_t ts_start() const { return guard; }
    std::size_t payload_start() const { return guard + ts_len; }
};

// One transmitted frame: training run, payload with embedded pilot groups,
// guard margins so the frame can sit on a circular grid without wrap mixing.
struct frame_t {
    frame_spec_t spec;
    std::vector<cvec> ts;       // [trib][ts_len]
    std::vector<cvec> payload;  // [trib][payload_len]
    std::vector<std::size_t> pilot_pos; // payload-relative, sorted

    frame_t(const frame_spec_t& sp, rng_t& rng) : spec(sp) {
        ts.reserve(sp.n_tribs);
        payload.reserve(sp.n_tribs);
        for (std::size_t i = 0; i < sp.n_tribs; ++i)
            ts.push_back(qpsk_sequence(rng, sp.ts_len));
        for (std::size_t i = 0; i < sp.n_tribs; ++i)
            payload.push_back(qpsk_sequence(rng, sp.payload_len));

        const std::size_t m = std::max<std::size_t>(1, sp.pilot_group);
        const std::size_t ngroups =
            std::size_t(sp.pilot_pct * double(sp.payload_len) / double(m));
        for (std::size_t g = 0; g < ngroups; ++g) {
            const std::size_t s =
                std::size_t(double(g) * double(sp.payload_len) / double(ngroups));
            for (std::size_t q = 0; q < m; ++q) pilot_pos.push_back(s + q);
        }
        std::sort(pilot_pos.begin(), pilot_pos.end());
        pilot_pos.erase(std::unique(pilot_pos.begin(), pilot_pos.end()),
                        pilot_pos.end());
    }

    // full symbol lattice with guards zeroed
    field_t symbols() const {
        field_t out(spec.n_tribs, spec.total_sym());
        for (std::size_t i = 0; i < spec.n_tribs; ++i) {
            cplx* r = out.row(i);
            std::copy(ts[i].begin(), ts[i].end(), r + spec.ts_start());
            std::copy(payload[i].begin(), payload[i].end(), r + spec.payload_start());
        }
        return out;
    }

    bool is_pilot(std::size_t payload_idx) const {
        return std::binary_search(pilot_pos.begin(), pilot_pos.end(), payload_idx);
    }
};

} // namespace mdmrx
