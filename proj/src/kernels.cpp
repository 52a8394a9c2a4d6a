#include "scdp/kernels.hpp"

#include <cstdlib>

namespace scdp::kernels {

bool cpu_has_avx2() {
#if defined(__x86_64__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const Backend& select() {
#if defined(__x86_64__)
  if (cpu_has_avx2() && std::getenv("SCDP_NO_SIMD") == nullptr) {
    return avx2::backend;
  }
#endif
  return scalar::backend;
}

}  // namespace

const Backend& active() {
  static const Backend& b = select();
  return b;
}

const char* backend_name() { return active().name; }

}  // namespace scdp::kernels
