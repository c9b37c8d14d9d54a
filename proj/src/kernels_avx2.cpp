#ifdef BDLSTM_HAVE_AVX2

#include <immintrin.h>

#include <cmath>

#include "kernels_impl.hpp"

// AVX2/FMA variants. dot() and matvec_acc() accumulate in four lanes and so
// reassociate the reduction; everything else applies the same mul/add
// sequence per element as the scalar reference and is bit-identical to it.
namespace bdlstm::kernels::avx2_impl {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yv = _mm256_loadu_pd(y + i);
    yv = _mm256_add_pd(yv, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, yv);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(std::size_t n, double alpha, double* x) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), av));
  }
  for (; i < n; ++i) x[i] *= alpha;
}

void matvec_acc(const double* a, std::size_t rows, std::size_t cols,
                const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] += dot(a + r * cols, x, cols);
  }
}

void matvec_t_acc(const double* a, std::size_t rows, std::size_t cols,
                  const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = a + r * cols;
    const __m256d xv = _mm256_set1_pd(x[r]);
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      __m256d yv = _mm256_loadu_pd(y + j);
      yv = _mm256_add_pd(yv, _mm256_mul_pd(xv, _mm256_loadu_pd(row + j)));
      _mm256_storeu_pd(y + j, yv);
    }
    const double xr = x[r];
    for (; j < cols; ++j) y[j] += xr * row[j];
  }
}

void outer_acc(double* a, std::size_t rows, std::size_t cols,
               const double* u, const double* v) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = a + r * cols;
    const __m256d uv = _mm256_set1_pd(u[r]);
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      __m256d rv = _mm256_loadu_pd(row + j);
      rv = _mm256_add_pd(rv, _mm256_mul_pd(uv, _mm256_loadu_pd(v + j)));
      _mm256_storeu_pd(row + j, rv);
    }
    const double ur = u[r];
    for (; j < cols; ++j) row[j] += ur * v[j];
  }
}

void adam_step(std::size_t n, double* p, double* m, double* v, const double* g,
               double lr, double beta1, double beta2, double eps,
               double bc1, double bc2) {
  const __m256d b1 = _mm256_set1_pd(beta1);
  const __m256d b2 = _mm256_set1_pd(beta2);
  const __m256d omb1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d omb2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d lrv = _mm256_set1_pd(lr);
  const __m256d epsv = _mm256_set1_pd(eps);
  const __m256d bc1v = _mm256_set1_pd(bc1);
  const __m256d bc2v = _mm256_set1_pd(bc2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gv = _mm256_loadu_pd(g + i);
    __m256d mv = _mm256_loadu_pd(m + i);
    __m256d vv = _mm256_loadu_pd(v + i);
    mv = _mm256_add_pd(_mm256_mul_pd(b1, mv), _mm256_mul_pd(omb1, gv));
    vv = _mm256_add_pd(_mm256_mul_pd(b2, vv), _mm256_mul_pd(omb2, _mm256_mul_pd(gv, gv)));
    _mm256_storeu_pd(m + i, mv);
    _mm256_storeu_pd(v + i, vv);
    const __m256d mhat = _mm256_div_pd(mv, bc1v);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_div_pd(vv, bc2v)), epsv);
    __m256d pv = _mm256_loadu_pd(p + i);
    pv = _mm256_sub_pd(pv, _mm256_mul_pd(lrv, _mm256_div_pd(mhat, denom)));
    _mm256_storeu_pd(p + i, pv);
  }
  const double somb1 = 1.0 - beta1;
  const double somb2 = 1.0 - beta2;
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + somb1 * g[i];
    v[i] = beta2 * v[i] + somb2 * (g[i] * g[i]);
    p[i] -= lr * ((m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps));
  }
}

void sgd_step(std::size_t n, double* p, const double* g, double lr) {
  const __m256d lrv = _mm256_set1_pd(lr);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d pv = _mm256_loadu_pd(p + i);
    pv = _mm256_sub_pd(pv, _mm256_mul_pd(lrv, _mm256_loadu_pd(g + i)));
    _mm256_storeu_pd(p + i, pv);
  }
  for (; i < n; ++i) p[i] -= lr * g[i];
}

}  // namespace bdlstm::kernels::avx2_impl

#endif  // BDLSTM_HAVE_AVX2
