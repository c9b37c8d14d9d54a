#include "bdlstm/kernels.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "kernels_impl.hpp"

namespace bdlstm::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(BDLSTM_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect_default() {
  Backend b = cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
  if (const char* env = std::getenv("BDLSTM_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) {
      b = Backend::scalar;
    } else if (std::strcmp(env, "avx2") == 0) {
      if (cpu_has_avx2()) {
        b = Backend::avx2;
      } else {
        std::fprintf(stderr, "bdlstm: BDLSTM_KERNELS=avx2 not supported on this CPU, using scalar\n");
        b = Backend::scalar;
      }
    } else {
      std::fprintf(stderr, "bdlstm: ignoring unknown BDLSTM_KERNELS value '%s'\n", env);
    }
  }
  return b;
}

std::atomic<Backend>& backend_slot() {
  static std::atomic<Backend> g{detect_default()};
  return g;
}

}  // namespace

Backend active_backend() { return backend_slot().load(std::memory_order_relaxed); }

bool backend_supported(Backend b) {
  return b == Backend::scalar || (b == Backend::avx2 && cpu_has_avx2());
}

void set_backend(Backend b) {
  if (!backend_supported(b)) {
    throw std::runtime_error("kernel backend not supported on this CPU");
  }
  backend_slot().store(b, std::memory_order_relaxed);
}

const char* backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

#ifdef BDLSTM_HAVE_AVX2
#define BDLSTM_DISPATCH(fn, ...)                       \
  do {                                                 \
    if (active_backend() == Backend::avx2)             \
      return avx2_impl::fn(__VA_ARGS__);               \
    return scalar_impl::fn(__VA_ARGS__);               \
  } while (0)
#else
#define BDLSTM_DISPATCH(fn, ...) return scalar_impl::fn(__VA_ARGS__)
#endif

double dot(const double* a, const double* b, std::size_t n) {
  BDLSTM_DISPATCH(dot, a, b, n);
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  BDLSTM_DISPATCH(axpy, n, alpha, x, y);
}

void scale(std::size_t n, double alpha, double* x) {
  BDLSTM_DISPATCH(scale, n, alpha, x);
}

void matvec_acc(const double* a, std::size_t rows, std::size_t cols,
                const double* x, double* y) {
  BDLSTM_DISPATCH(matvec_acc, a, rows, cols, x, y);
}

void matvec_t_acc(const double* a, std::size_t rows, std::size_t cols,
                  const double* x, double* y) {
  BDLSTM_DISPATCH(matvec_t_acc, a, rows, cols, x, y);
}

void outer_acc(double* a, std::size_t rows, std::size_t cols,
               const double* u, const double* v) {
  BDLSTM_DISPATCH(outer_acc, a, rows, cols, u, v);
}

void adam_step(std::size_t n, double* p, double* m, double* v, const double* g,
               double lr, double beta1, double beta2, double eps,
               double bc1, double bc2) {
  BDLSTM_DISPATCH(adam_step, n, p, m, v, g, lr, beta1, beta2, eps, bc1, bc2);
}

void sgd_step(std::size_t n, double* p, const double* g, double lr) {
  BDLSTM_DISPATCH(sgd_step, n, p, g, lr);
}

#undef BDLSTM_DISPATCH

}  // namespace bdlstm::kernels
