#pragma once

// Data-parallel inner loops used by the field solvers, the misfit
// evaluation and the Krylov iterations.
//
// Every kernel has a scalar reference implementation. On x86-64 an AVX2/FMA
// variant is compiled in a separate translation unit and selected at runtime
// when the CPU reports both extensions. Setting EKI_SIMD=scalar in the
// environment forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace eki::simd {

// Five-point stencil on an n1 x n2 cell grid, x index fastest.
//   y[i] = diag[i]*x[i] + east[i]*x[i+1] + east[i-1]*x[i-1]
//        + north[i]*x[i+n1] + north[i-n1]*x[i-n1]
// east[i] must be zero on the last column, north[i] zero on the last row.
struct Stencil5View {
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    std::span<const double> diag;
    std::span<const double> east;
    std::span<const double> north;
};

struct KernelTable {
    double (*dot)(const double* a, const double* b, std::size_t n);
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    double (*weighted_residual_sq)(const double* y, const double* g, const double* inv_gamma,
                                   std::size_t n);
    void (*stencil5_apply)(const Stencil5View& s, const double* x, double* y);
    void (*inverse_half_power)(double* s, std::size_t n, int k);
    std::string_view name;
};

namespace scalar {
const KernelTable& table();
}

// nullptr when the build has no AVX2 translation unit or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();

// The table picked at startup.
const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size());
}

// sum_m (y_m - g_m)^2 * inv_gamma_m
inline double weighted_residual_sq(std::span<const double> y, std::span<const double> g,
                                   std::span<const double> inv_gamma) {
    return active().weighted_residual_sq(y.data(), g.data(), inv_gamma.data(), y.size());
}

inline void stencil5_apply(const Stencil5View& s, std::span<const double> x, std::span<double> y) {
    active().stencil5_apply(s, x.data(), y.data());
}

// s <- s^(-k/2), entries must be positive, k >= 1.
inline void inverse_half_power(std::span<double> s, int k) {
    active().inverse_half_power(s.data(), s.size(), k);
}

} // namespace eki::simd
