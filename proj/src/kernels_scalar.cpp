#include <cmath>

#include "kernels_impl.hpp"

// Reference kernels. These define the semantics the SIMD variants are tested
// against; keep them free of clever rewrites.
namespace bdlstm::kernels::scalar_impl {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(std::size_t n, double alpha, double* x) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void matvec_acc(const double* a, std::size_t rows, std::size_t cols,
                const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = a + r * cols;
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += row[j] * x[j];
    y[r] += s;
  }
}

void matvec_t_acc(const double* a, std::size_t rows, std::size_t cols,
                  const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = a + r * cols;
    const double xr = x[r];
    for (std::size_t j = 0; j < cols; ++j) y[j] += xr * row[j];
  }
}

void outer_acc(double* a, std::size_t rows, std::size_t cols,
               const double* u, const double* v) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = a + r * cols;
    const double ur = u[r];
    for (std::size_t j = 0; j < cols; ++j) row[j] += ur * v[j];
  }
}

void adam_step(std::size_t n, double* p, double* m, double* v, const double* g,
               double lr, double beta1, double beta2, double eps,
               double bc1, double bc2) {
  const double omb1 = 1.0 - beta1;
  const double omb2 = 1.0 - beta2;
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + omb1 * g[i];
    v[i] = beta2 * v[i] + omb2 * (g[i] * g[i]);
    p[i] -= lr * ((m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps));
  }
}

void sgd_step(std::size_t n, double* p, const double* g, double lr) {
  for (std::size_t i = 0; i < n; ++i) p[i] -= lr * g[i];
}

}  // namespace bdlstm::kernels::scalar_impl
