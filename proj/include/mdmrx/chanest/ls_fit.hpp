#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "../channel/transfer_matrix.hpp"
#include "../core/types.hpp"

namespace mdmrx {

// Least-squares FIR fit of y ~ h (*) x over the sample set fit_idx, circular
// indexing. One shared Gram matrix serves all output tributaries. Ridge is
// relative to the mean diagonal. The design matrix and its factorization
// depend only on (x, fit_idx, l, ridge), so they are kept in a plan that can
// be reused when the same reference is refit against changing observations.
struct ls_fit_plan_t {
    std::size_t k = 0, l = 0;
    std::vector<std::size_t> fit_idx;
    Eigen::MatrixXcd a; // t x (k*l) design matrix
    Eigen::LDLT<Eigen::MatrixXcd> ldlt;

    ls_fit_plan_t(const field_t& x, std::vector<std::size_t> idx,
                  std::size_t l_taps, double ridge = 0.0)
        : k(x.k), l(l_taps), fit_idx(std::move(idx)) {
        const std::size_t n = x.n, t = fit_idx.size(), kl = k * l;
        if (t < kl)
            throw std::invalid_argument(
                "ls_channel_fit: not identifiable, need at least K*L fit "
                "samples");
        a.resize(t, kl);
        for (std::size_t j = 0; j < k; ++j) {
            const cplx* xr = x.row(j);
            for (std::size_t lag = 0; lag < l; ++lag) {
                const std::size_t col = j * l + lag;
                for (std::size_t r = 0; r < t; ++r) {
                    const std::size_t idx_c = (fit_idx[r] + n - lag) % n;
                    a(r, col) = xr[idx_c];
                }
            }
        }
        Eigen::MatrixXcd gram = a.adjoint() * a;
        if (ridge > 0.0) {
            const double tr = gram.real().trace() / double(kl);
            gram += ridge * tr * Eigen::MatrixXcd::Identity(kl, kl);
        }
        ldlt.compute(gram);
        if (ridge <= 0.0) {
            const Eigen::VectorXd d = ldlt.vectorD().real().cwiseAbs();
            if (d.minCoeff() <= 1e-12 * d.maxCoeff())
                throw std::runtime_error(
                    "ls_channel_fit: rank-deficient training matrix, not "
                    "identifiable without regularization");
        }
    }

    transfer_matrix_t solve(const field_t& y) const {
        const std::size_t t = fit_idx.size();
        Eigen::MatrixXcd yt(t, k);
        for (std::size_t i = 0; i < k; ++i) {
            const cplx* yr = y.row(i);
            for (std::size_t r = 0; r < t; ++r) yt(r, i) = yr[fit_idx[r]];
        }
        const Eigen::MatrixXcd sol = ldlt.solve(a.adjoint() * yt);
        transfer_matrix_t h(l, k);
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t lag = 0; lag < l; ++lag)
                for (std::size_t i = 0; i < k; ++i)
                    h.at(lag, i, j) = sol(j * l + lag, i);
        return h;
    }
};

inline transfer_matrix_t ls_channel_fit(const field_t& y, const field_t& x,
                                        const std::vector<std::size_t>& fit_idx,
                                        std::size_t l, double ridge = 0.0) {
    return ls_fit_plan_t(x, fit_idx, l, ridge).solve(y);
}

} // namespace mdmrx
