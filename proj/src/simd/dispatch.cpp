#include <cstdlib>
#include <string_view>

#include "askwell/simd.hpp"

namespace askwell::simd {

#if defined(ASKWELL_HAVE_AVX2)
namespace detail {
const KernelTable& avx2_table();
}
#endif

const KernelTable* avx2_kernels() {
#if defined(ASKWELL_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &detail::avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() {
    static const KernelTable& chosen = [] () -> const KernelTable& {
        const char* forced = std::getenv("ASKWELL_SIMD");
        if (forced != nullptr && std::string_view(forced) == "scalar") return scalar_kernels();
        if (const KernelTable* fast = avx2_kernels()) return *fast;
        return scalar_kernels();
    }();
    return chosen;
}

}  // namespace askwell::simd
