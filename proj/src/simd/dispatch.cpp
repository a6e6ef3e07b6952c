#include <atomic>
#include <cstdlib>
#include <string>

#include "fedcgau/error.hpp"
#include "fedcgau/simd/kernels.hpp"

namespace fedcgau::simd {
namespace {

struct KernelTable {
  Backend backend;
  double (*dot)(const double*, const double*, std::size_t) noexcept;
  void (*axpy)(double, const double*, double*, std::size_t) noexcept;
  double (*sq_dist)(const double*, const double*, std::size_t) noexcept;
};

constexpr KernelTable kScalarTable{Backend::kScalar, scalar::dot, scalar::axpy, scalar::sq_dist};
#ifdef FEDCGAU_HAVE_AVX2_KERNELS
constexpr KernelTable kAvx2Table{Backend::kAvx2, avx2::dot, avx2::axpy, avx2::sq_dist};
#endif
#ifdef FEDCGAU_HAVE_NEON_KERNELS
constexpr KernelTable kNeonTable{Backend::kNeon, neon::dot, neon::axpy, neon::sq_dist};
#endif

const KernelTable* table_for(Backend b) noexcept {
  switch (b) {
#ifdef FEDCGAU_HAVE_AVX2_KERNELS
    case Backend::kAvx2:
      return &kAvx2Table;
#endif
#ifdef FEDCGAU_HAVE_NEON_KERNELS
    case Backend::kNeon:
      return &kNeonTable;
#endif
    default:
      return &kScalarTable;
  }
}

const KernelTable* initial_table() noexcept {
  if (const char* env = std::getenv("FEDCGAU_SIMD")) {
    const std::string want(env);
    for (Backend b : {Backend::kScalar, Backend::kAvx2, Backend::kNeon}) {
      if (want == backend_name(b) && backend_supported(b)) return table_for(b);
    }
  }
  if (backend_supported(Backend::kAvx2)) return table_for(Backend::kAvx2);
  if (backend_supported(Backend::kNeon)) return table_for(Backend::kNeon);
  return &kScalarTable;
}

std::atomic<const KernelTable*>& current() noexcept {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

std::string_view backend_name(Backend b) noexcept {
  switch (b) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
    case Backend::kNeon:
      return "neon";
  }
  return "unknown";
}

bool backend_supported(Backend b) noexcept {
  switch (b) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
#if defined(FEDCGAU_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::kNeon:
#ifdef FEDCGAU_HAVE_NEON_KERNELS
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend active_backend() noexcept { return current().load(std::memory_order_acquire)->backend; }

void set_backend(Backend b) {
  if (!backend_supported(b)) {
    throw ValidationError("SIMD backend '" + std::string(backend_name(b)) + "' is not supported on this CPU");
  }
  current().store(table_for(b), std::memory_order_release);
}

double dot(const double* a, const double* b, std::size_t n) noexcept {
  return current().load(std::memory_order_relaxed)->dot(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept {
  current().load(std::memory_order_relaxed)->axpy(alpha, x, y, n);
}

double sq_dist(const double* a, const double* b, std::size_t n) noexcept {
  return current().load(std::memory_order_relaxed)->sq_dist(a, b, n);
}

}  // namespace fedcgau::simd
