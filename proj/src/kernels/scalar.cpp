// Reference kernels. The SIMD variants must reproduce these bit for bit;
// reductions therefore use the same 4-lane striping an AVX2 register imposes.

#include <cmath>

#include "yieldcast/kernels.hpp"

namespace yieldcast::kernels::detail {
namespace {

void add_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void scale_scalar(double alpha, const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i];
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) lane[i & 3] = lane[i & 3] + a[i] * b[i];
  return (lane[0] + lane[2]) + (lane[1] + lane[3]);
}

double sum_scalar(const double* a, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) lane[i & 3] = lane[i & 3] + a[i];
  return (lane[0] + lane[2]) + (lane[1] + lane[3]);
}

bool all_finite_scalar(const double* a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(a[i])) return false;
  }
  return true;
}

void adam_step_scalar(double* p, double* m, double* v, const double* g,
                      std::size_t n, double lr, double beta1, double beta2,
                      double eps, double c1, double c2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i]);
    double m_hat = m[i] / c1;
    double v_hat = v[i] / c2;
    p[i] = p[i] - lr * (m_hat / (std::sqrt(v_hat) + eps));
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table = {
      add_scalar, sub_scalar,        mul_scalar, axpy_scalar,     scale_scalar,
      dot_scalar, sum_scalar, all_finite_scalar, adam_step_scalar};
  return table;
}

}  // namespace yieldcast::kernels::detail
