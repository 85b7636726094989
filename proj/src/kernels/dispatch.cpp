#include <atomic>

#include "yieldcast/common.hpp"
#include "yieldcast/kernels.hpp"

namespace yieldcast::kernels {

namespace detail {
namespace {

bool cpu_has_avx2() {
#if defined(YIELDCAST_HAVE_AVX2)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable* table_for(Isa isa) {
#if defined(YIELDCAST_HAVE_AVX2)
  if (isa == Isa::avx2) return &avx2_table();
#endif
  (void)isa;
  return &scalar_table();
}

std::atomic<const KernelTable*>& table_slot() {
  static std::atomic<const KernelTable*> slot{nullptr};
  return slot;
}

std::atomic<Isa>& isa_slot() {
  static std::atomic<Isa> slot{Isa::scalar};
  return slot;
}

void select(Isa isa) {
  isa_slot().store(isa, std::memory_order_relaxed);
  table_slot().store(table_for(isa), std::memory_order_release);
}

struct InitOnce {
  InitOnce() { select(cpu_has_avx2() ? Isa::avx2 : Isa::scalar); }
};

void ensure_init() { static InitOnce once; }

}  // namespace

const KernelTable& active_table() {
  ensure_init();
  return *table_slot().load(std::memory_order_acquire);
}

}  // namespace detail

const char* isa_name(Isa isa) {
  return isa == Isa::avx2 ? "avx2" : "scalar";
}

bool isa_supported(Isa isa) {
  if (isa == Isa::scalar) return true;
  return detail::cpu_has_avx2();
}

Isa active_isa() {
  detail::ensure_init();
  return detail::isa_slot().load(std::memory_order_relaxed);
}

void force_isa(Isa isa) {
  detail::ensure_init();
  if (!isa_supported(isa)) {
    fail(ErrorCode::InvalidConfig,
         std::string("ISA not supported on this CPU: ") + isa_name(isa));
  }
  detail::select(isa);
}

void reset_isa() {
  detail::ensure_init();
  detail::select(detail::cpu_has_avx2() ? Isa::avx2 : Isa::scalar);
}

void add(const double* a, const double* b, double* out, std::size_t n) {
  detail::active_table().add(a, b, out, n);
}
void sub(const double* a, const double* b, double* out, std::size_t n) {
  detail::active_table().sub(a, b, out, n);
}
void mul(const double* a, const double* b, double* out, std::size_t n) {
  detail::active_table().mul(a, b, out, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  detail::active_table().axpy(alpha, x, y, n);
}
void scale(double alpha, const double* x, double* out, std::size_t n) {
  detail::active_table().scale(alpha, x, out, n);
}
double dot(const double* a, const double* b, std::size_t n) {
  return detail::active_table().dot(a, b, n);
}
double sum(const double* a, std::size_t n) {
  return detail::active_table().sum(a, n);
}
bool all_finite(const double* a, std::size_t n) {
  return detail::active_table().all_finite(a, n);
}
void adam_step(double* p, double* m, double* v, const double* g, std::size_t n,
               double lr, double beta1, double beta2, double eps, double c1,
               double c2) {
  detail::active_table().adam_step(p, m, v, g, n, lr, beta1, beta2, eps, c1, c2);
}

void matmul_nn_acc(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t k, std::size_t n) {
  const detail::KernelTable& t = detail::active_table();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t j = 0; j < k; ++j) {
      if (arow[j] != 0.0) t.axpy(arow[j], b + j * n, crow, n);
    }
  }
}

void matmul_nt_acc(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t k, std::size_t n) {
  const detail::KernelTable& t = detail::active_table();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      crow[j] += t.dot(arow, b + j * k, k);
    }
  }
}

void matmul_tn_acc(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t k, std::size_t n) {
  const detail::KernelTable& t = detail::active_table();
  for (std::size_t j = 0; j < k; ++j) {
    const double* arow = a + j * m;
    const double* brow = b + j * n;
    for (std::size_t i = 0; i < m; ++i) {
      if (arow[i] != 0.0) t.axpy(arow[i], brow, c + i * n, n);
    }
  }
}

}  // namespace yieldcast::kernels
