#include "eki/simd/kernels.hpp"

#include <cmath>

namespace eki::simd::scalar {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double weighted_residual_sq(const double* y, const double* g, const double* w, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - g[i];
        s += r * r * w[i];
    }
    return s;
}

void stencil5_apply(const Stencil5View& st, const double* x, double* y) {
    const std::size_t n1 = st.n1;
    const std::size_t n = st.n1 * st.n2;
    const double* d = st.diag.data();
    const double* e = st.east.data();
    const double* nn = st.north.data();
    for (std::size_t i = 0; i < n; ++i) {
        double v = d[i] * x[i];
        if (i + 1 < n) v += e[i] * x[i + 1];
        if (i >= 1) v += e[i - 1] * x[i - 1];
        if (i + n1 < n) v += nn[i] * x[i + n1];
        if (i >= n1) v += nn[i - n1] * x[i - n1];
        y[i] = v;
    }
}

void inverse_half_power(double* s, std::size_t n, int k) {
    for (std::size_t i = 0; i < n; ++i) {
        const double r = 1.0 / std::sqrt(s[i]);
        double p = r;
        for (int j = 1; j < k; ++j) p *= r;
        s[i] = p;
    }
}

} // namespace

const KernelTable& table() {
    static const KernelTable t{dot, axpy, weighted_residual_sq, stencil5_apply, inverse_half_power,
                               "scalar"};
    return t;
}

} // namespace eki::simd::scalar
