#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mdmrx {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;
using rvec = std::vector<double>;

inline constexpr double c_light = 299792458.0;

// Multi-tributary sample block, row-major: k rows of n samples each.
struct field_t {
    std::size_t k = 0;
    std::size_t n = 0;
    cvec data;

    field_t() = default;
    field_t(std::size_t k_, std::size_t n_) : k(k_), n(n_), data(k_ * n_) {}

    cplx* row(std::size_t i) { return data.data() + i * n; }
    const cplx* row(std::size_t i) const { return data.data() + i * n; }
    std::span<cplx> row_span(std::size_t i) { return {row(i), n}; }
    std::span<const cplx> row_span(std::size_t i) const { return {row(i), n}; }
    cplx& at(std::size_t i, std::size_t t) { return data[i * n + t]; }
    const cplx& at(std::size_t i, std::size_t t) const { return data[i * n + t]; }
};

struct real_field_t {
    std::size_t k = 0;
    std::size_t n = 0;
    rvec data;

    real_field_t() = default;
    real_field_t(std::size_t k_, std::size_t n_) : k(k_), n(n_), data(k_ * n_) {}

    double* row(std::size_t i) { return data.data() + i * n; }
    const double* row(std::size_t i) const { return data.data() + i * n; }
    double& at(std::size_t i, std::size_t t) { return data[i * n + t]; }
    const double& at(std::size_t i, std::size_t t) const { return data[i * n + t]; }
};

} // namespace mdmrx
