#pragma once

#include <cstddef>

// Numeric kernels behind the model's inner loops. A scalar reference
// implementation always exists; on x86-64 an AVX2/FMA variant is selected at
// startup when the CPU supports it (override with BDLSTM_KERNELS=scalar|avx2).
//
// Elementwise kernels (axpy, scale, matvec_t_acc, outer_acc, adam_step,
// sgd_step) produce bit-identical results on every backend. Reductions (dot,
// matvec_acc) reassociate the sum in the AVX2 variant and agree with the
// scalar reference to floating-point roundoff; tests/kernels_test.cpp checks
// both contracts.
namespace bdlstm::kernels {

enum class Backend { scalar, avx2 };

Backend active_backend();
void set_backend(Backend b);  // throws std::runtime_error if unsupported here
bool backend_supported(Backend b);
const char* backend_name(Backend b);

double dot(const double* a, const double* b, std::size_t n);

// y += alpha * x
void axpy(std::size_t n, double alpha, const double* x, double* y);

// x *= alpha
void scale(std::size_t n, double alpha, double* x);

// y += A x   (A row-major rows x cols; x has cols entries, y has rows)
void matvec_acc(const double* a, std::size_t rows, std::size_t cols,
                const double* x, double* y);

// y += A^T x (x has rows entries, y has cols)
void matvec_t_acc(const double* a, std::size_t rows, std::size_t cols,
                  const double* x, double* y);

// A += u v^T (u has rows entries, v has cols)
void outer_acc(double* a, std::size_t rows, std::size_t cols,
               const double* u, const double* v);

// One Adam update over a flat tensor. bc1/bc2 are the bias corrections
// (1 - beta1^t) and (1 - beta2^t) for the current step t.
void adam_step(std::size_t n, double* p, double* m, double* v, const double* g,
               double lr, double beta1, double beta2, double eps,
               double bc1, double bc2);

// p -= lr * g
void sgd_step(std::size_t n, double* p, const double* g, double lr);

}  // namespace bdlstm::kernels
