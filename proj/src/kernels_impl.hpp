#pragma once

#include <cstddef>

// Backend entry points. The dispatcher in kernels.cpp is the only caller.
namespace bdlstm::kernels::scalar_impl {

double dot(const double* a, const double* b, std::size_t n);
void axpy(std::size_t n, double alpha, const double* x, double* y);
void scale(std::size_t n, double alpha, double* x);
void matvec_acc(const double* a, std::size_t rows, std::size_t cols,
                const double* x, double* y);
void matvec_t_acc(const double* a, std::size_t rows, std::size_t cols,
                  const double* x, double* y);
void outer_acc(double* a, std::size_t rows, std::size_t cols,
               const double* u, const double* v);
void adam_step(std::size_t n, double* p, double* m, double* v, const double* g,
               double lr, double beta1, double beta2, double eps,
               double bc1, double bc2);
void sgd_step(std::size_t n, double* p, const double* g, double lr);

}  // namespace bdlstm::kernels::scalar_impl

#ifdef BDLSTM_HAVE_AVX2
namespace bdlstm::kernels::avx2_impl {

double dot(const double* a, const double* b, std::size_t n);
void axpy(std::size_t n, double alpha, const double* x, double* y);
void scale(std::size_t n, double alpha, double* x);
void matvec_acc(const double* a, std::size_t rows, std::size_t cols,
                const double* x, double* y);
void matvec_t_acc(const double* a, std::size_t rows, std::size_t cols,
                  const double* x, double* y);
void outer_acc(double* a, std::size_t rows, std::size_t cols,
               const double* u, const double* v);
void adam_step(std::size_t n, double* p, double* m, double* v, const double* g,
               double lr, double beta1, double beta2, double eps,
               double bc1, double bc2);
void sgd_step(std::size_t n, double* p, const double* g, double lr);

}  // namespace bdlstm::kernels::avx2_impl
#endif
