#include "eki/simd/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace eki;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                               double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

} // namespace

TEST_CASE("active table is usable") {
    const auto& t = simd::active();
    CHECK(!t.name.empty());
    MESSAGE("active kernels: " << t.name);
}

TEST_CASE("vector kernels agree with the scalar table") {
    const simd::KernelTable* v = simd::avx2_table();
    if (!v) {
        MESSAGE("AVX2 kernels unavailable on this machine; comparing scalar with itself");
        v = &simd::scalar::table();
    }
    const auto& s = simd::scalar::table();
    std::mt19937_64 rng(1);
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 33u, 256u, 1001u}) {
        const auto a = random_vec(n, rng), b = random_vec(n, rng);
        const auto ig = random_vec(n, rng, 0.1, 2.0);
        const double ds = s.dot(a.data(), b.data(), n), dv = v->dot(a.data(), b.data(), n);
        CHECK(std::abs(ds - dv) <= 1e-13 * (1.0 + std::abs(ds)) * std::sqrt(double(n) + 1.0));
        const double ws = s.weighted_residual_sq(a.data(), b.data(), ig.data(), n);
        const double wv = v->weighted_residual_sq(a.data(), b.data(), ig.data(), n);
        CHECK(std::abs(ws - wv) <= 1e-13 * (1.0 + ws));
        auto ys = b, yv = b;
        s.axpy(0.7, a.data(), ys.data(), n);
        v->axpy(0.7, a.data(), yv.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(ys[i] - yv[i]) <= 1e-15);
        for (int k : {1, 2, 3, 4, 5}) {
            auto ps = random_vec(n, rng, 0.5, 4.0);
            auto pv = ps;
            s.inverse_half_power(ps.data(), n, k);
            v->inverse_half_power(pv.data(), n, k);
            for (std::size_t i = 0; i < n; ++i) CHECK(ps[i] == pv[i]);
        }
    }
}

TEST_CASE("inverse half power definition") {
    std::vector<double> x{0.25, 1.0, 4.0, 9.0};
    simd::scalar::table().inverse_half_power(x.data(), x.size(), 3);
    CHECK(x[0] == doctest::Approx(8.0));
    CHECK(x[1] == doctest::Approx(1.0));
    CHECK(x[2] == doctest::Approx(0.125));
    CHECK(x[3] == doctest::Approx(1.0 / 27.0));
}

TEST_CASE("stencil kernels agree") {
    const simd::KernelTable* v = simd::avx2_table();
    if (!v) v = &simd::scalar::table();
    const auto& s = simd::scalar::table();
    std::mt19937_64 rng(2);
    for (auto [n1, n2] : {std::pair<std::size_t, std::size_t>{1, 1}, {2, 3}, {5, 5}, {9, 4}, {50, 50}, {17, 31}}) {
        const std::size_t n = n1 * n2;
        const auto diag = random_vec(n, rng, 2.0, 3.0);
        auto east = random_vec(n, rng), north = random_vec(n, rng);
        const simd::Stencil5View view{n1, n2, diag, east, north};
        const auto x = random_vec(n, rng);
        std::vector<double> ys(n), yv(n);
        s.stencil5_apply(view, x.data(), ys.data());
        v->stencil5_apply(view, x.data(), yv.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(ys[i] - yv[i]) <= 1e-14 * (1.0 + std::abs(ys[i])));
    }
}
