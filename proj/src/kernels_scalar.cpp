#include "scdp/kernels.hpp"

#include <cmath>
#include <limits>

namespace scdp::kernels::scalar {
namespace {

void gemm_impl(double* c, const double* a, const double* b,
               std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm_bt_impl(double* c, const double* a, const double* bt,
                  std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = bt + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

void gemm_at_impl(double* c, const double* at, const double* b,
                  std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = at + p * m;
    const double* bp = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double api = ap[i];
      double* ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

double dot_impl(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_impl(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_impl(double* x, double alpha, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void normalize_impl(const double* x, double mean, double inv_std,
                    double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = (x[i] - mean) * inv_std;
}

}  // namespace

const Backend backend = {
    "scalar",   gemm_impl, gemm_bt_impl,  gemm_at_impl,
    dot_impl,   axpy_impl, scale_impl,    normalize_impl,
};

}  // namespace scdp::kernels::scalar

namespace scdp::kernels {

void softmax_masked(double* row, const double* bias, std::size_t n) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = row[i] + bias[i];
    if (v > mx) mx = v;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = row[i] + bias[i];
    row[i] = std::isinf(v) ? 0.0 : std::exp(v - mx);
    sum += row[i];
  }
  const double inv = 1.0 / sum;
  for (std::size_t i = 0; i < n; ++i) row[i] *= inv;
}

}  // namespace scdp::kernels
