#pragma once
// BER metrology. Bits are counted per tributary over payload slots with the
// pilot groups excluded; training and guards never enter the count.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "../core/types.hpp"
#include "../tx/frame.hpp"
#include "../tx/qpsk.hpp"

namespace mdmrx {

struct ber_report_t {
    std::vector<double> per_trib;
    std::vector<std::size_t> errors;
    std::vector<std::size_t> bits;
    double mean_ber = 0.0;
    double var_ber = 0.0;
    double pilot_pct = 0.0;

    std::size_t total_bits() const {
        std::size_t t = 0;
        for (auto b : bits) t += b;
        return t;
    }
    std::size_t total_errors() const {
        std::size_t t = 0;
        for (auto e : errors) t += e;
        return t;
    }
};

inline std::size_t count_bit_errors(const cplx* rx, const cplx* tx,
                                    std::size_t n) {
    std::size_t e = 0;
    for (std::size_t s = 0; s < n; ++s) {
        std::uint32_t rb0, rb1, tb0, tb1;
        qpsk_demap(rx[s], rb0, rb1);
        qpsk_demap(tx[s], tb0, tb1);
        e += std::size_t(rb0 != tb0) + std::size_t(rb1 != tb1);
    }
    return e;
}

// rx_payload: k rows of payload_len symbol estimates aligned to tx indices
inline ber_report_t compute_ber(const field_t& rx_payload, const frame_t& frame) {
    const std::size_t k = rx_payload.k;
    ber_report_t rep;
    rep.pilot_pct = frame.spec.pilot_pct;
    rep.per_trib.resize(k);
    rep.errors.assign(k, 0);
    rep.bits.assign(k, 0);
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t e = 0, b = 0;
        const cplx* rx = rx_payload.row(i);
        const cvec& tx = frame.payload[i];
        std::size_t pi = 0;
        for (std::size_t s = 0; s < frame.spec.payload_len; ++s) {
            while (pi < frame.pilot_pos.size() && frame.pilot_pos[pi] < s) ++pi;
            if (pi < frame.pilot_pos.size() && frame.pilot_pos[pi] == s) continue;
            e += count_bit_errors(rx + s, tx.data() + s, 1);
            b += 2;
        }
        rep.errors[i] = e;
        rep.bits[i] = b;
        rep.per_trib[i] = b ? double(e) / double(b) : 0.0;
    }
    double mean = 0.0;
    for (std::size_t i = 0; i < k; ++i) mean += rep.per_trib[i];
    mean /= double(k);
    double var = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double d = rep.per_trib[i] - mean;
        var += d * d;
    }
    rep.mean_ber = mean;
    rep.var_ber = var / double(k);
    return rep;
}

}  // namespace mdmrx
