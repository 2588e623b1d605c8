#pragma once

#include <algorithm>
#include <cmath>

#include "../core/dispersion.hpp"
#include "../core/rng.hpp"
#include "../core/types.hpp"

namespace mdmrx {

// Two single-ended photodiodes per tributary; the second path holds the
// dispersive element so the pair of intensity traces constrains the field
// in two linked domains.
struct intensity_capture_t {
    real_field_t direct;
    real_field_t dispersed;
    double d_psnm = 0.0; // dispersion of the second path
};

inline real_field_t detect_intensity(const field_t& x) {
    real_field_t out(x.k, x.n);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        out.data[i] = std::norm(x.data[i]);
    return out;
}

// Mid-rise uniform quantizer over [0, max] plus Gaussian noise sized so the
// total SINAD matches 6.02*enob + 1.76 dB on a full-scale sine.
inline void quantize_trace(double* t, std::size_t n, double enob, rng_t& rng) {
    double mx = 0.0;
    for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, t[i]);
    if (mx <= 0.0) return;
    const double levels = std::exp2(enob);
    const double lsb = mx / levels;
    // quantization alone gives SINAD 6.02*enob+1.76; ENOB counts total noise,
    // so add thermal noise of equal power to land at the definition
    const double sig = lsb / std::sqrt(12.0);
    for (std::size_t i = 0; i < n; ++i) {
        double q = (std::floor(t[i] / lsb) + 0.5) * lsb;
        q += sig * rng.normal();
        t[i] = std::max(0.0, q);
    }
}

inline intensity_capture_t capture(const field_t& x, double d_psnm, double fs,
                                   double lambda_m, double enob = 0.0,
                                   rng_t* rng = nullptr) {
    intensity_capture_t cap;
    cap.d_psnm = d_psnm;
    cap.direct = detect_intensity(x);
    field_t disp = x;
    const cvec m = cd_multiplier(x.n, d_psnm, fs, lambda_m);
    disperse_rows(disp, m);
    cap.dispersed = detect_intensity(disp);
    if (enob > 0.0 && rng) {
        for (std::size_t i = 0; i < cap.direct.k; ++i) {
            quantize_trace(cap.direct.row(i), cap.direct.n, enob, *rng);
            quantize_trace(cap.dispersed.row(i), cap.dispersed.n, enob, *rng);
        }
    }
    return cap;
}

} // namespace mdmrx
