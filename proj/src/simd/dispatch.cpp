#include "eki/simd/kernels.hpp"

#include <cstdlib>
#include <string_view>

#if defined(EKI_WITH_AVX2)
namespace eki::simd::avx2 {
const KernelTable& table();
}
#endif

namespace eki::simd {
namespace {

bool cpu_has_avx2() {
#if defined(EKI_WITH_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable& select() {
    if (const char* forced = std::getenv("EKI_SIMD"); forced && std::string_view(forced) == "scalar")
        return scalar::table();
    if (const KernelTable* t = avx2_table()) return *t;
    return scalar::table();
}

} // namespace

const KernelTable* avx2_table() {
#if defined(EKI_WITH_AVX2)
    static const bool ok = cpu_has_avx2();
    return ok ? &avx2::table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() {
    static const KernelTable& t = select();
    return t;
}

} // namespace eki::simd
