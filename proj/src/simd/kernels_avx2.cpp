// Compiled with -mavx2 -mfma. Nothing in here may run before the dispatcher
// has confirmed CPU support.

#include "eki/simd/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace eki::simd::avx2 {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double weighted_residual_sq(const double* y, const double* g, const double* w, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d r = _mm256_sub_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(g + i));
        acc = _mm256_fmadd_pd(_mm256_mul_pd(r, r), _mm256_loadu_pd(w + i), acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        const double r = y[i] - g[i];
        s += r * r * w[i];
    }
    return s;
}

inline double stencil_point(const double* d, const double* e, const double* nn, const double* x,
                            std::size_t i, std::size_t n1, std::size_t n) {
    double v = d[i] * x[i];
    if (i + 1 < n) v += e[i] * x[i + 1];
    if (i >= 1) v += e[i - 1] * x[i - 1];
    if (i + n1 < n) v += nn[i] * x[i + n1];
    if (i >= n1) v += nn[i - n1] * x[i - n1];
    return v;
}

void stencil5_apply(const Stencil5View& st, const double* x, double* y) {
    const std::size_t n1 = st.n1;
    const std::size_t n = st.n1 * st.n2;
    const double* d = st.diag.data();
    const double* e = st.east.data();
    const double* nn = st.north.data();

    const std::size_t lo = n1;
    const std::size_t hi = n >= n1 ? n - n1 : 0;
    for (std::size_t i = 0; i < lo && i < n; ++i) y[i] = stencil_point(d, e, nn, x, i, n1, n);

    std::size_t i = lo;
    for (; i + 4 <= hi; i += 4) {
        __m256d v = _mm256_mul_pd(_mm256_loadu_pd(d + i), _mm256_loadu_pd(x + i));
        v = _mm256_fmadd_pd(_mm256_loadu_pd(e + i), _mm256_loadu_pd(x + i + 1), v);
        v = _mm256_fmadd_pd(_mm256_loadu_pd(e + i - 1), _mm256_loadu_pd(x + i - 1), v);
        v = _mm256_fmadd_pd(_mm256_loadu_pd(nn + i), _mm256_loadu_pd(x + i + n1), v);
        v = _mm256_fmadd_pd(_mm256_loadu_pd(nn + i - n1), _mm256_loadu_pd(x + i - n1), v);
        _mm256_storeu_pd(y + i, v);
    }
    for (; i < n; ++i) y[i] = stencil_point(d, e, nn, x, i, n1, n);
}

void inverse_half_power(double* s, std::size_t n, int k) {
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d r = _mm256_div_pd(one, _mm256_sqrt_pd(_mm256_loadu_pd(s + i)));
        __m256d p = r;
        for (int j = 1; j < k; ++j) p = _mm256_mul_pd(p, r);
        _mm256_storeu_pd(s + i, p);
    }
    for (; i < n; ++i) {
        const double r = 1.0 / std::sqrt(s[i]);
        double p = r;
        for (int j = 1; j < k; ++j) p *= r;
        s[i] = p;
    }
}

} // namespace

const KernelTable& table() {
    static const KernelTable t{dot, axpy, weighted_residual_sq, stencil5_apply, inverse_half_power,
                               "avx2"};
    return t;
}

} // namespace eki::simd::avx2
