#include <cstdlib>
#include <string_view>

#include "xsem/simd/kernels.h"

namespace xsem::simd {

#ifdef XSEM_HAVE_AVX2
const Kernels& Avx2KernelTable();
#endif

const Kernels* Avx2Kernels() {
#ifdef XSEM_HAVE_AVX2
  static const bool supported =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &Avx2KernelTable() : nullptr;
#else
  return nullptr;
#endif
}

const Kernels& Active() {
  static const Kernels& chosen = [] () -> const Kernels& {
    const char* env = std::getenv("XSEM_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") {
      return ScalarKernels();
    }
    const Kernels* avx2 = Avx2Kernels();
    return avx2 != nullptr ? *avx2 : ScalarKernels();
  }();
  return chosen;
}

}  // namespace xsem::simd
