#include <cstdlib>
#include <string_view>

#include "gresnet/simd/kernels.hpp"

namespace gresnet::simd {

#if defined(GRESNET_HAVE_AVX2)
namespace detail {
const KernelTable& avx2_table() noexcept;
}
#endif

const KernelTable* avx2_kernels() noexcept {
#if defined(GRESNET_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &detail::avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable& select() noexcept {
  const char* env = std::getenv("GRESNET_SIMD");
  const std::string_view wanted = env ? env : "";
  if (wanted == "scalar") return scalar_kernels();
  if (const KernelTable* avx2 = avx2_kernels()) return *avx2;
  return scalar_kernels();
}

}  // namespace

const KernelTable& active() noexcept {
  static const KernelTable& table = select();
  return table;
}

}  // namespace gresnet::simd
