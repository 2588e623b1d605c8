#pragma once

#include <cmath>

#include "../core/rng.hpp"
#include "../core/types.hpp"

namespace mdmrx {

// Complex AWGN at the given SNR relative to the mean power of the field,
// measured jointly over all tributaries.
inline void add_awgn(field_t& x, double snr_db, rng_t& rng) {
    double p = 0.0;
    for (const auto& v : x.data) p += std::norm(v);
    p /= double(x.data.size());
    const double np = p / std::pow(10.0, snr_db / 10.0);
    const double s = std::sqrt(np / 2.0);
    for (auto& v : x.data)
        v += cplx{s * rng.normal(), s * rng.normal()};
}

} // namespace mdmrx
