#pragma once

// Double-precision compute kernels used by the neural-network and sampling
// code. Every kernel has a scalar reference implementation and, on x86-64
// with AVX2+FMA, a vectorized variant. The active backend is chosen once at
// startup from CPUID; kernels::backend_name() reports which one is live.
//
// All matrices are row-major, densely packed.

#include <cstddef>

namespace scdp::kernels {

// C[m x n] += A[m x k] * B[k x n]
using GemmFn = void (*)(double* c, const double* a, const double* b,
                        std::size_t m, std::size_t k, std::size_t n);

// C[m x n] += A[m x k] * B^T, B stored as [n x k]
using GemmBtFn = void (*)(double* c, const double* a, const double* bt,
                          std::size_t m, std::size_t k, std::size_t n);

// C[m x n] += A^T * B, A stored as [k x m]
using GemmAtFn = void (*)(double* c, const double* at, const double* b,
                          std::size_t m, std::size_t k, std::size_t n);

using DotFn = double (*)(const double* a, const double* b, std::size_t n);
using AxpyFn = void (*)(double alpha, const double* x, double* y, std::size_t n);
using ScaleFn = void (*)(double* x, double alpha, std::size_t n);
// y = inv_std * (x - mean) elementwise, the layer-norm inner loop
using NormalizeFn = void (*)(const double* x, double mean, double inv_std,
                             double* y, std::size_t n);

struct Backend {
  const char* name;
  GemmFn gemm;
  GemmBtFn gemm_bt;
  GemmAtFn gemm_at;
  DotFn dot;
  AxpyFn axpy;
  ScaleFn scale;
  NormalizeFn normalize;
};

namespace scalar {
extern const Backend backend;
}
#if defined(__x86_64__)
namespace avx2 {
extern const Backend backend;  // valid only if cpu_has_avx2()
}
#endif

bool cpu_has_avx2();

// Active backend (AVX2 when available unless SCDP_NO_SIMD is set).
const Backend& active();
const char* backend_name();

// Convenience forwarders through the active backend.
inline void gemm(double* c, const double* a, const double* b,
                 std::size_t m, std::size_t k, std::size_t n) {
  active().gemm(c, a, b, m, k, n);
}
inline void gemm_bt(double* c, const double* a, const double* bt,
                    std::size_t m, std::size_t k, std::size_t n) {
  active().gemm_bt(c, a, bt, m, k, n);
}
inline void gemm_at(double* c, const double* at, const double* b,
                    std::size_t m, std::size_t k, std::size_t n) {
  active().gemm_at(c, at, b, m, k, n);
}
inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline void scale(double* x, double alpha, std::size_t n) {
  active().scale(x, alpha, n);
}
inline void normalize(const double* x, double mean, double inv_std,
                      double* y, std::size_t n) {
  active().normalize(x, mean, inv_std, y, n);
}

// Row-wise softmax with an additive mask bias (0 or -inf); masked-out
// entries get probability exactly 0. Not dispatched: exp dominates.
void softmax_masked(double* row, const double* bias, std::size_t n);

}  // namespace scdp::kernels
