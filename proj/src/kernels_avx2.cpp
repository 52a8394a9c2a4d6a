// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma; callers must gate on cpu_has_avx2() before dispatching here.

#include "scdp/kernels.hpp"

#if defined(__x86_64__)

#include <immintrin.h>

namespace scdp::kernels::avx2 {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// Row-major C += A*B. Inner loop runs along rows of B so stores stay
// contiguous; 4 accumulator registers per row of A, unrolled over j.
void gemm_impl(double* c, const double* a, const double* b,
               std::size_t m, std::size_t k, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t(3);
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const __m256d aip = _mm256_set1_pd(ai[p]);
      const double* bp = b + p * n;
      std::size_t j = 0;
      for (; j + 16 <= n; j += 16) {
        __m256d c0 = _mm256_loadu_pd(ci + j);
        __m256d c1 = _mm256_loadu_pd(ci + j + 4);
        __m256d c2 = _mm256_loadu_pd(ci + j + 8);
        __m256d c3 = _mm256_loadu_pd(ci + j + 12);
        c0 = _mm256_fmadd_pd(aip, _mm256_loadu_pd(bp + j), c0);
        c1 = _mm256_fmadd_pd(aip, _mm256_loadu_pd(bp + j + 4), c1);
        c2 = _mm256_fmadd_pd(aip, _mm256_loadu_pd(bp + j + 8), c2);
        c3 = _mm256_fmadd_pd(aip, _mm256_loadu_pd(bp + j + 12), c3);
        _mm256_storeu_pd(ci + j, c0);
        _mm256_storeu_pd(ci + j + 4, c1);
        _mm256_storeu_pd(ci + j + 8, c2);
        _mm256_storeu_pd(ci + j + 12, c3);
      }
      for (; j < n4; j += 4) {
        __m256d c0 = _mm256_loadu_pd(ci + j);
        c0 = _mm256_fmadd_pd(aip, _mm256_loadu_pd(bp + j), c0);
        _mm256_storeu_pd(ci + j, c0);
      }
      const double s = ai[p];
      for (; j < n; ++j) ci[j] += s * bp[j];
    }
  }
}

void gemm_bt_impl(double* c, const double* a, const double* bt,
                  std::size_t m, std::size_t k, std::size_t n) {
  const std::size_t k4 = k & ~std::size_t(3);
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = bt + j * k;
      __m256d acc0 = _mm256_setzero_pd();
      __m256d acc1 = _mm256_setzero_pd();
      std::size_t p = 0;
      for (; p + 8 <= k; p += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(ai + p),
                               _mm256_loadu_pd(bj + p), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(ai + p + 4),
                               _mm256_loadu_pd(bj + p + 4), acc1);
      }
      for (; p < k4; p += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(ai + p),
                               _mm256_loadu_pd(bj + p), acc0);
      }
      double acc = hsum(_mm256_add_pd(acc0, acc1));
      for (; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

void gemm_at_impl(double* c, const double* at, const double* b,
                  std::size_t m, std::size_t k, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t(3);
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = at + p * m;
    const double* bp = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const __m256d api = _mm256_set1_pd(ap[i]);
      double* ci = c + i * n;
      std::size_t j = 0;
      for (; j < n4; j += 4) {
        __m256d c0 = _mm256_loadu_pd(ci + j);
        c0 = _mm256_fmadd_pd(api, _mm256_loadu_pd(bp + j), c0);
        _mm256_storeu_pd(ci + j, c0);
      }
      const double s = ap[i];
      for (; j < n; ++j) ci[j] += s * bp[j];
    }
  }
}

double dot_impl(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                           _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_impl(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yv = _mm256_loadu_pd(y + i);
    yv = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), yv);
    _mm256_storeu_pd(y + i, yv);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_impl(double* x, double alpha, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= alpha;
}

void normalize_impl(const double* x, double mean, double inv_std,
                    double* y, std::size_t n) {
  const __m256d vm = _mm256_set1_pd(mean);
  const __m256d vs = _mm256_set1_pd(inv_std);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_sub_pd(_mm256_loadu_pd(x + i), vm);
    _mm256_storeu_pd(y + i, _mm256_mul_pd(v, vs));
  }
  for (; i < n; ++i) y[i] = (x[i] - mean) * inv_std;
}

}  // namespace

const Backend backend = {
    "avx2",   gemm_impl, gemm_bt_impl,  gemm_at_impl,
    dot_impl, axpy_impl, scale_impl,    normalize_impl,
};

}  // namespace scdp::kernels::avx2

#endif  // __x86_64__
