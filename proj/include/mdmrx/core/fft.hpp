#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <unordered_map>

#include "types.hpp"

namespace mdmrx {

// Iterative Stockham autosort transform, radix 4 with one radix-2 stage when
// log2(n) is odd. No bit-reversal pass; every stage reads and writes
// sequentially, ping-ponging against a scratch buffer. Forward matches the
// e^{-i 2 pi k n / N} convention; inverse scales by 1/N.
class fft_plan {
public:
    explicit fft_plan(std::size_t n) : n_(n) {
        assert(n >= 1 && (n & (n - 1)) == 0);
        unsigned log2n = 0;
        while ((std::size_t{1} << log2n) < n) ++log2n;
        odd_ = (log2n & 1) != 0;
        // radix-4 stage with l blocks needs twiddles w^(jm), w^(2jm), w^(3jm)
        // for j in [0, l); laid out contiguously per stage
        for (std::size_t l = n / 4, m = 1; l >= 1; l /= 4, m *= 4) {
            stage_t st;
            st.l = l;
            st.m = m;
            st.tw.resize(3 * l);
            for (std::size_t j = 0; j < l; ++j) {
                const double ang =
                    -2.0 * std::numbers::pi * double(j * m) / double(n);
                st.tw[3 * j + 0] = {std::cos(ang), std::sin(ang)};
                st.tw[3 * j + 1] = {std::cos(2 * ang), std::sin(2 * ang)};
                st.tw[3 * j + 2] = {std::cos(3 * ang), std::sin(3 * ang)};
            }
            stages_.push_back(std::move(st));
            if (l == 1) break;
            if (l < 4 && l != 1) break; // l == 2: trailing radix-2 handled below
        }
    }

    std::size_t size() const { return n_; }

    void forward(cplx* a) const { run(a, false); }

    void inverse(cplx* a) const {
        run(a, true);
        const double s = 1.0 / double(n_);
        for (std::size_t i = 0; i < n_; ++i) a[i] *= s;
    }

private:
    struct stage_t {
        std::size_t l, m;
        cvec tw;
    };

    static cvec& scratch(std::size_t n) {
        thread_local cvec buf;
        if (buf.size() < n) buf.resize(n);
        return buf;
    }

    // One radix-4 Stockham stage, decimation in frequency: src blocks of
    // stride m at j, j+l, j+2l, j+3l pass through a 4-point DFT, outputs
    // 1..3 pick up the twiddles, and the result lands at 4j..4j+3.
    template <bool Inv>
    void stage4(const stage_t& st, const cplx* src, cplx* dst) const {
        const std::size_t l = st.l, m = st.m;
        for (std::size_t j = 0; j < l; ++j) {
            cplx w1 = st.tw[3 * j], w2 = st.tw[3 * j + 1], w3 = st.tw[3 * j + 2];
            if constexpr (Inv) {
                w1 = std::conj(w1);
                w2 = std::conj(w2);
                w3 = std::conj(w3);
            }
            const cplx* s0 = src + j * m;
            const cplx* s1 = src + (j + l) * m;
            const cplx* s2 = src + (j + 2 * l) * m;
            const cplx* s3 = src + (j + 3 * l) * m;
            cplx* d = dst + 4 * j * m;
            for (std::size_t k = 0; k < m; ++k) {
                const cplx apc = s0[k] + s2[k], amc = s0[k] - s2[k];
                const cplx bpd = s1[k] + s3[k], bmd = s1[k] - s3[k];
                const cplx ibmd = Inv ? cplx(-bmd.imag(), bmd.real())
                                      : cplx(bmd.imag(), -bmd.real());
                d[k] = apc + bpd;
                d[k + m] = (amc + ibmd) * w1;
                d[k + 2 * m] = (apc - bpd) * w2;
                d[k + 3 * m] = (amc - ibmd) * w3;
            }
        }
    }

    // Final radix-2 stage for odd log2(n): at this point the remaining
    // factor is 2 and every twiddle is unity.
    static void stage2(const cplx* src, cplx* dst, std::size_t n) {
        const std::size_t h = n / 2;
        for (std::size_t q = 0; q < h; ++q) {
            const cplx a = src[q], b = src[q + h];
            dst[q] = a + b;
            dst[q + h] = a - b;
        }
    }

    template <bool Inv>
    void run_t(cplx* a) const {
        if (n_ == 1) return;
        if (n_ == 2) {
            const cplx u = a[0], v = a[1];
            a[0] = u + v;
            a[1] = u - v;
            return;
        }
        cvec& buf = scratch(n_);
        cplx* x = a;
        cplx* y = buf.data();
        for (const stage_t& st : stages_) {
            stage4<Inv>(st, x, y);
            std::swap(x, y);
        }
        if (odd_) {
            stage2(x, y, n_);
            std::swap(x, y);
        }
        if (x != a)
            for (std::size_t i = 0; i < n_; ++i) a[i] = x[i];
    }

    void run(cplx* a, bool inv) const {
        if (inv)
            run_t<true>(a);
        else
            run_t<false>(a);
    }

    std::size_t n_;
    bool odd_;
    std::vector<stage_t> stages_;
};

// Process-wide plan cache. Plans are immutable after construction; the lock
// only guards the map itself.
inline const fft_plan& get_plan(std::size_t n) {
    static std::mutex mu;
    static std::unordered_map<std::size_t, std::unique_ptr<fft_plan>> cache;
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(n);
    if (it == cache.end())
        it = cache.emplace(n, std::make_unique<fft_plan>(n)).first;
    return *it->second;
}

inline void fft_inplace(cplx* a, std::size_t n) { get_plan(n).forward(a); }
inline void ifft_inplace(cplx* a, std::size_t n) { get_plan(n).inverse(a); }

inline cvec fft(const cvec& x) {
    cvec y = x;
    fft_inplace(y.data(), y.size());
    return y;
}

inline cvec ifft(const cvec& x) {
    cvec y = x;
    ifft_inplace(y.data(), y.size());
    return y;
}

inline void fft_rows(field_t& f) {
    for (std::size_t i = 0; i < f.k; ++i) fft_inplace(f.row(i), f.n);
}

inline void ifft_rows(field_t& f) {
    for (std::size_t i = 0; i < f.k; ++i) ifft_inplace(f.row(i), f.n);
}

inline void fft_rows(const field_t& in, field_t& out) {
    out = in;
    fft_rows(out);
}

inline void ifft_rows(const field_t& in, field_t& out) {
    out = in;
    ifft_rows(out);
}

} // namespace mdmrx
