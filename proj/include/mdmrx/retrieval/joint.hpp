#pragma once
// Joint six-tributary retrieval. All tributaries share one symbol sequence
// estimate, tied together through a per-bin stacked alias matrix that maps
// symbol spectra to the received (chromatic-dispersion compensated) field
// spectra. The projection replaces known symbols (training, pilots, guards)
// in the symbol domain, which anchors the global phase and couples the
// tributaries through the channel estimate.
//
// The solver runs heavy-ball accelerated GS cycles with stall kicks, then a
// two-member consensus, then lock rounds that freeze stable high-margin
// decisions and re-dice the field around the slots still open, and finally a
// small re-dice ensemble that votes on whatever remains.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "mdmrx/channel/transfer_matrix.hpp"
#include "mdmrx/core/dispersion.hpp"
#include "mdmrx/core/fft.hpp"
#include "mdmrx/core/rng.hpp"
#include "mdmrx/core/types.hpp"
#include "mdmrx/tx/pulse.hpp"
#include "mdmrx/tx/qpsk.hpp"

namespace mdmrx {

// Per symbol-grid bin nu the stacked matrix ties the sps aliases of the
// received spectrum to the symbol spectrum: rows are blocks of
// Hmd(nu + a*nsym) * G(nu + a*nsym) for alias a, with Hmd the channel
// response on the sample grid times the conjugate compensation chirp.
struct symbol_projector_t {
    std::size_t n = 0, nsym = 0, k = 0, sps = 2;
    std::vector<cplx> m;     // nsym x (sps*k) x k, row-major per bin
    std::vector<cplx> minv;  // nsym x k x (sps*k)

    void build(const transfer_matrix_t& h, double cd_comp_psnm, std::size_t n_,
               const pulse_spec_t& ps, double lambda_m) {
        n = n_;
        k = h.k;
        sps = ps.sps;
        nsym = n / sps;
        const std::size_t rows = sps * k;
        cvec hf = channel_freq(h, n);
        cvec a = cd_multiplier(n, cd_comp_psnm, ps.fs(), lambda_m);
        rvec g = rrc_spectrum(n, ps);
        m.assign(nsym * rows * k, cplx{0.0, 0.0});
        minv.assign(nsym * k * rows, cplx{0.0, 0.0});
        Eigen::MatrixXcd mb(rows, k);
        for (std::size_t nu = 0; nu < nsym; ++nu) {
            for (std::size_t al = 0; al < sps; ++al) {
                const std::size_t f = nu + al * nsym;
                const cplx ca = std::conj(a[f]) * g[f];
                for (std::size_t i = 0; i < k; ++i)
                    for (std::size_t j = 0; j < k; ++j)
                        mb(al * k + i, j) = hf[(f * k + i) * k + j] * ca;
            }
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(mb);
            cod.setThreshold(1e-10);
            Eigen::MatrixXcd pinv = cod.pseudoInverse();
            cplx* mp = &m[nu * rows * k];
            cplx* ip = &minv[nu * k * rows];
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < k; ++c) mp[r * k + c] = mb(r, c);
            for (std::size_t r = 0; r < k; ++r)
                for (std::size_t c = 0; c < rows; ++c)
                    ip[r * rows + c] = pinv(r, c);
        }
    }

    // zf: k rows of length n (field spectra); sf out: k rows of length nsym
    void analyze(const field_t& zf, field_t& sf) const {
        const std::size_t rows = sps * k;
        std::vector<cplx> st(rows);
        for (std::size_t nu = 0; nu < nsym; ++nu) {
            for (std::size_t al = 0; al < sps; ++al)
                for (std::size_t i = 0; i < k; ++i)
                    st[al * k + i] = zf.at(i, nu + al * nsym);
            const cplx* ip = &minv[nu * k * rows];
            for (std::size_t r = 0; r < k; ++r) {
                cplx acc{0.0, 0.0};
                for (std::size_t c = 0; c < rows; ++c)
                    acc += ip[r * rows + c] * st[c];
                sf.at(r, nu) = acc;
            }
        }
    }

    void synthesize(const field_t& sf, field_t& zf) const {
        const std::size_t rows = sps * k;
        std::vector<cplx> sv(k), zt(rows);
        for (std::size_t nu = 0; nu < nsym; ++nu) {
            for (std::size_t j = 0; j < k; ++j) sv[j] = sf.at(j, nu);
            const cplx* mp = &m[nu * rows * k];
            for (std::size_t r = 0; r < rows; ++r) {
                cplx acc{0.0, 0.0};
                for (std::size_t c = 0; c < k; ++c) acc += mp[r * k + c] * sv[c];
                zt[r] = acc;
            }
            for (std::size_t al = 0; al < sps; ++al)
                for (std::size_t i = 0; i < k; ++i)
                    zf.at(i, nu + al * nsym) = zt[al * k + i];
        }
    }
};

struct joint_options_t {
    std::size_t stage1_members = 2;
    std::size_t stage1_iters = 2000;
    std::size_t polish_iters = 300;
    std::size_t max_rounds = 20;
    std::size_t round_iters = 350;
    std::size_t vote_members = 5;
    std::size_t vote_iters = 350;
    std::size_t final_iters = 300;
    std::size_t escape_period = 100;
    double momentum = 0.85;
    double escape_stage1 = 0.3;
    double escape_polish = 0.15;
    double escape_round = 0.12;
    double escape_final = 0.10;
    double lock_margin = 0.6;
    double redice_sigma = 0.8;
    double vote_sigma = 0.9;
    std::size_t round_floor = 6;    // earliest round allowed to settle
    std::size_t settle_count = 60;  // open slots tolerated when settling
    std::uint64_t seed = 777;
};

struct joint_result_t {
    field_t decisions;  // hard QPSK per payload slot (known slots passed through)
    field_t soft;       // last symbol-domain estimate
    field_t field;      // compensated-domain field estimate
    std::vector<double> residual_history;
    std::size_t locked = 0;
    std::size_t voted = 0;
    double final_residual = 0.0;
};

// Everything the joint solver needs about one frame's captures and priors.
// known/sk mark symbol slots fixed during projection (training, pilots,
// guard zeros, and anything the lock rounds freeze); payload_open marks the
// slots the solver must decide.
struct joint_problem_t {
    const real_field_t* direct = nullptr;
    const real_field_t* dispersed = nullptr;
    double cd_comp_psnm = 0.0;
    double dcf_psnm = 0.0;
    double fs = 60e9;
    double lambda_m = 1555e-9;
    const symbol_projector_t* proj = nullptr;
    std::vector<std::uint8_t> known;
    field_t sk;
    std::vector<std::uint8_t> payload_open;
};

namespace detail {

struct joint_engine_t {
    const joint_problem_t& pr;
    const joint_options_t& opt;
    std::size_t n, nsym, k;
    rvec sqrt_d, sqrt_v;
    double nv = 0.0;
    cvec a_mult, b_mult, back_mult;
    std::vector<std::uint8_t> known;
    field_t sk;
    field_t zf, sf, st;

    joint_engine_t(const joint_problem_t& p, const joint_options_t& o)
        : pr(p), opt(o) {
        n = p.direct->n;
        k = p.direct->k;
        nsym = p.proj->nsym;
        known = p.known;
        sk = p.sk;
        sqrt_d.resize(k * n);
        sqrt_v.resize(k * n);
        for (std::size_t i = 0; i < k * n; ++i) {
            sqrt_d[i] = std::sqrt(std::max(p.direct->data[i], 0.0));
            sqrt_v[i] = std::sqrt(std::max(p.dispersed->data[i], 0.0));
            nv += p.dispersed->data[i] * p.dispersed->data[i];
        }
        a_mult = cd_multiplier(n, p.cd_comp_psnm, p.fs, p.lambda_m);
        b_mult = cd_multiplier(n, p.dcf_psnm, p.fs, p.lambda_m);
        back_mult.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            back_mult[i] = std::conj(a_mult[i] * b_mult[i]);
        zf = field_t(k, n);
        sf = field_t(k, nsym);
        st = field_t(k, nsym);
    }

    // symbol-domain projection: analyze, replace known slots, resynthesize
    void project_symbols(field_t& z) {
        fft_rows(z, zf);
        pr.proj->analyze(zf, sf);
        ifft_rows(sf, st);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t s = 0; s < nsym; ++s)
                if (known[s]) st.at(i, s) = sk.at(i, s);
        fft_rows(st, sf);
        pr.proj->synthesize(sf, zf);
        ifft_rows(zf, z);
    }

    // one full cycle; residual is taken against the dispersed capture
    double cycle(field_t& z) {
        double rv = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            cplx* row = z.row(i);
            filter_inplace(row, a_mult.data(), n);
            const double* sd = &sqrt_d[i * n];
            for (std::size_t t = 0; t < n; ++t) {
                double amp = std::abs(row[t]);
                row[t] = amp > 0.0 ? cplx{sd[t] * row[t].real() / amp,
                                          sd[t] * row[t].imag() / amp}
                                   : cplx{sd[t], 0.0};
            }
            filter_inplace(row, b_mult.data(), n);
            const double* v = pr.dispersed->row(i);
            const double* sv = &sqrt_v[i * n];
            for (std::size_t t = 0; t < n; ++t) {
                double e = std::norm(row[t]) - v[t];
                rv += e * e;
                double amp = std::abs(row[t]);
                row[t] = amp > 0.0 ? cplx{sv[t] * row[t].real() / amp,
                                          sv[t] * row[t].imag() / amp}
                                   : cplx{sv[t], 0.0};
            }
            filter_inplace(row, back_mult.data(), n);
        }
        project_symbols(z);
        return nv > 0 ? rv / nv : 0.0;
    }

    struct run_out_t {
        double res = std::numeric_limits<double>::infinity();
        field_t z;
        field_t st;
    };

    // heavy-ball iteration with blow-up restart and stall kicks from the best
    run_out_t run(field_t z, std::size_t iters, double sigma, rng_t& rng,
                  std::vector<double>* hist = nullptr) {
        field_t zprev = z;
        run_out_t best;
        double wstart = std::numeric_limits<double>::infinity();
        double wmin = std::numeric_limits<double>::infinity();
        field_t y(k, n);
        for (std::size_t it = 0; it < iters; ++it) {
            for (std::size_t i = 0; i < k * n; ++i)
                y.data[i] = z.data[i] + opt.momentum * (z.data[i] - zprev.data[i]);
            double res = cycle(y);
            if (res > 2.0 * wmin && it > 50) {
                y = z;
                res = cycle(y);
                zprev = y;
            } else {
                zprev = z;
            }
            z = y;
            wmin = std::min(wmin, res);
            if (hist) hist->push_back(res);
            if (res < best.res) {
                best.res = res;
                best.z = z;
                best.st = st;
            }
            if ((it + 1) % opt.escape_period == 0) {
                if (res > 0.99 * wstart && sigma > 0.0) {
                    z = best.z;
                    for (std::size_t i = 0; i < k * n; ++i)
                        z.data[i] *= std::polar(1.0, sigma * rng.normal());
                    zprev = z;
                    wmin = std::numeric_limits<double>::infinity();
                }
                wstart = res;
            }
            if (best.res < 1e-14) break;
        }
        return best;
    }

    void redice(field_t& z, const std::vector<std::size_t>& open, double sigma,
                rng_t& rng) {
        std::vector<std::uint8_t> bad(n, 0);
        const std::size_t sps = pr.proj->sps;
        for (std::size_t b : open) {
            std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, std::ptrdiff_t(b * sps) - 6);
            std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n, std::ptrdiff_t(b * sps) + 8);
            for (std::ptrdiff_t t = lo; t < hi; ++t) bad[std::size_t(t)] = 1;
        }
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t t = 0; t < n; ++t) {
                double ph = sigma * rng.normal();
                if (bad[t]) z.at(i, t) *= std::polar(1.0, ph);
            }
    }
};

}  // namespace detail

inline joint_result_t joint_retrieve(const joint_problem_t& pr,
                                     const joint_options_t& opt) {
    detail::joint_engine_t eng(pr, opt);
    const std::size_t k = eng.k, n = eng.n, nsym = eng.nsym;
    rng_t rng(opt.seed, "joint");
    joint_result_t out;
    out.residual_history.reserve(4096);

    // structured init: known symbols pushed through the model
    field_t z0(k, n);
    {
        field_t skf(k, nsym), zf(k, n);
        fft_rows(eng.sk, skf);
        pr.proj->synthesize(skf, zf);
        ifft_rows(zf, z0);
    }

    detail::joint_engine_t::run_out_t stage;
    field_t zsum(k, n);
    for (std::size_t mi = 0; mi < opt.stage1_members; ++mi) {
        field_t zi(k, n);
        if (mi == 0) {
            zi = z0;
        } else {
            char label[48];
            std::snprintf(label, sizeof(label), "joint/init%zu", mi);
            rng_t mr(opt.seed, label);
            cvec row(n);
            for (std::size_t i = 0; i < k; ++i) {
                for (std::size_t t = 0; t < n; ++t)
                    row[t] = eng.sqrt_d[i * n + t] * mr.unit_phase();
                fft_inplace(row.data(), n);
                for (std::size_t t = 0; t < n; ++t)
                    row[t] *= std::conj(eng.a_mult[t]);
                ifft_inplace(row.data(), n);
                std::copy(row.begin(), row.end(), zi.row(i));
            }
        }
        auto r = eng.run(std::move(zi), opt.stage1_iters, opt.escape_stage1, rng,
                         &out.residual_history);
        for (std::size_t i = 0; i < k * n; ++i) zsum.data[i] += r.z.data[i];
        if (r.res < stage.res) stage = std::move(r);
    }
    for (std::size_t i = 0; i < k * n; ++i)
        zsum.data[i] /= double(opt.stage1_members);
    stage = eng.run(std::move(zsum), opt.polish_iters, opt.escape_polish, rng,
                    &out.residual_history);

    // lock rounds: freeze decisions that are high-margin and stable across
    // two consecutive rounds, re-dice the field near the remaining slots
    field_t prev_dec(k, nsym);
    bool have_prev = false;
    std::vector<std::uint8_t> open = pr.payload_open;
    field_t dec(k, nsym);
    for (std::size_t rnd = 0; rnd < opt.max_rounds; ++rnd) {
        std::size_t new_locks = 0;
        for (std::size_t s = 0; s < nsym; ++s) {
            double marg = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < k; ++i) {
                dec.at(i, s) = qpsk_decide(stage.st.at(i, s));
                marg = std::min(marg, qpsk_margin(stage.st.at(i, s)));
            }
            if (!open[s] || eng.known[s]) continue;
            // first round has no history, treated as stable
            bool stable = true;
            if (have_prev)
                for (std::size_t i = 0; i < k && stable; ++i)
                    stable = dec.at(i, s) == prev_dec.at(i, s);
            if (stable && marg > opt.lock_margin) {
                eng.known[s] = 1;
                for (std::size_t i = 0; i < k; ++i)
                    eng.sk.at(i, s) = dec.at(i, s);
                ++new_locks;
                ++out.locked;
            }
        }
        prev_dec = dec;
        have_prev = true;
        std::vector<std::size_t> rem;
        for (std::size_t s = 0; s < nsym; ++s)
            if (open[s] && !eng.known[s]) rem.push_back(s);
        if (!rem.empty()) eng.redice(stage.z, rem, opt.redice_sigma, rng);
        stage = eng.run(std::move(stage.z), opt.round_iters, opt.escape_round,
                        rng, &out.residual_history);
        if (rem.empty() ||
            (rnd >= opt.round_floor && new_locks == 0 && rem.size() < opt.settle_count))
            break;
    }

    // ensemble vote on whatever is still open
    std::vector<std::size_t> rem;
    for (std::size_t s = 0; s < nsym; ++s)
        if (open[s] && !eng.known[s]) rem.push_back(s);
    if (!rem.empty()) {
        std::vector<std::vector<double>> vote_re(k), vote_im(k);
        for (std::size_t i = 0; i < k; ++i) {
            vote_re[i].assign(rem.size(), 0.0);
            vote_im[i].assign(rem.size(), 0.0);
        }
        for (std::size_t v = 0; v < opt.vote_members; ++v) {
            field_t zv = stage.z;
            eng.redice(zv, rem, opt.vote_sigma, rng);
            auto rv = eng.run(std::move(zv), opt.vote_iters, opt.escape_round,
                              rng, &out.residual_history);
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t q = 0; q < rem.size(); ++q) {
                    cplx s = rv.st.at(i, rem[q]);
                    vote_re[i][q] += s.real() >= 0 ? 1.0 : -1.0;
                    vote_im[i][q] += s.imag() >= 0 ? 1.0 : -1.0;
                }
        }
        for (std::size_t q = 0; q < rem.size(); ++q) {
            for (std::size_t i = 0; i < k; ++i) {
                double re = vote_re[i][q] >= 0 ? inv_sqrt2 : -inv_sqrt2;
                double im = vote_im[i][q] >= 0 ? inv_sqrt2 : -inv_sqrt2;
                eng.sk.at(i, rem[q]) = cplx{re, im};
            }
            eng.known[rem[q]] = 1;
        }
        out.voted = rem.size();
        stage = eng.run(std::move(stage.z), opt.final_iters, opt.escape_final,
                        rng, &out.residual_history);
    }

    out.decisions = field_t(k, nsym);
    for (std::size_t s = 0; s < nsym; ++s)
        for (std::size_t i = 0; i < k; ++i)
            out.decisions.at(i, s) =
                eng.known[s] ? eng.sk.at(i, s) : qpsk_decide(stage.st.at(i, s));
    out.soft = stage.st;
    out.field = stage.z;
    out.final_residual = stage.res;
    return out;
}

}  // namespace mdmrx
