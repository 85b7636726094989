#pragma once

#include <cstddef>
#include <cstdint>

// Double-precision inner loops behind the tensor engine. Each primitive has a
// scalar reference implementation and (on x86-64) an AVX2 variant; the active
// set is chosen at runtime from CPUID and can be forced for tests.
//
// Every variant of a primitive is bitwise-identical to the reference:
//   - elementwise kernels apply the same IEEE-754 op per element;
//   - reductions (dot, sum) accumulate into four fixed lanes, lane j taking
//     elements with index ≡ j (mod 4), combined as (l0+l2)+(l1+l3);
//   - no FMA contraction anywhere (the build sets -ffp-contract=off).
// The equivalence suite asserts exact equality, so results do not depend on
// which variant dispatch picks.

namespace yieldcast::kernels {

enum class Isa { scalar, avx2 };

const char* isa_name(Isa isa);
bool isa_supported(Isa isa);
Isa active_isa();
// Testing hook. Throws Error(InvalidConfig) for an unsupported ISA.
void force_isa(Isa isa);
// Back to the best supported ISA.
void reset_isa();

void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);
// out[i] = alpha * x[i]
void scale(double alpha, const double* x, double* out, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
bool all_finite(const double* a, std::size_t n);

// One bias-corrected Adam update. c1 = 1-beta1^t and c2 = 1-beta2^t are
// precomputed by the caller.
//   m = beta1*m + (1-beta1)*g
//   v = beta2*v + (1-beta2)*g*g
//   p -= lr * (m/c1) / (sqrt(v/c2) + eps)
void adam_step(double* p, double* m, double* v, const double* g, std::size_t n,
               double lr, double beta1, double beta2, double eps, double c1,
               double c2);

// Row-major matmul drivers built on axpy/dot; ISA-agnostic apart from the
// dispatched primitives they call. All three accumulate into c.
// c(m×n) += a(m×k) · b(k×n)
void matmul_nn_acc(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t k, std::size_t n);
// c(m×n) += a(m×k) · b(n×k)ᵀ
void matmul_nt_acc(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t k, std::size_t n);
// c(m×n) += a(k×m)ᵀ · b(k×n)
void matmul_tn_acc(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t k, std::size_t n);

namespace detail {

struct KernelTable {
  void (*add)(const double*, const double*, double*, std::size_t);
  void (*sub)(const double*, const double*, double*, std::size_t);
  void (*mul)(const double*, const double*, double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scale)(double, const double*, double*, std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  bool (*all_finite)(const double*, std::size_t);
  void (*adam_step)(double*, double*, double*, const double*, std::size_t,
                    double, double, double, double, double, double);
};

const KernelTable& active_table();
const KernelTable& scalar_table();
#if defined(YIELDCAST_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

}  // namespace detail

}  // namespace yieldcast::kernels
