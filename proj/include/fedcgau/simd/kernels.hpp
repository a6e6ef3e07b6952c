#pragma once

// Data-parallel inner loops shared by the dense linear algebra, k-means and
// the network layers. Every kernel has a scalar reference implementation and
// SIMD variants; the variant is picked once at startup from CPU features and
// may be overridden with FEDCGAU_SIMD=scalar|avx2|neon or set_backend().
//
// Variants are not bit-identical to the scalar reference (lane-parallel
// accumulation reorders sums, FMA skips a rounding). Results are still
// deterministic for a fixed backend on a fixed machine.

#include <cstddef>
#include <string_view>

namespace fedcgau::simd {

enum class Backend { kScalar, kAvx2, kNeon };

std::string_view backend_name(Backend b) noexcept;

// Whether the running CPU (and this build) can execute the backend.
bool backend_supported(Backend b) noexcept;

Backend active_backend() noexcept;

// Throws ValidationError if the backend is unsupported here.
void set_backend(Backend b);

// sum_i a[i] * b[i]
double dot(const double* a, const double* b, std::size_t n) noexcept;
// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept;
// sum_i (a[i] - b[i])^2
double sq_dist(const double* a, const double* b, std::size_t n) noexcept;

namespace scalar {
double dot(const double* a, const double* b, std::size_t n) noexcept;
void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept;
double sq_dist(const double* a, const double* b, std::size_t n) noexcept;
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define FEDCGAU_HAVE_AVX2_KERNELS 1
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n) noexcept;
void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept;
double sq_dist(const double* a, const double* b, std::size_t n) noexcept;
}  // namespace avx2
#endif

#if defined(__aarch64__)
#define FEDCGAU_HAVE_NEON_KERNELS 1
namespace neon {
double dot(const double* a, const double* b, std::size_t n) noexcept;
void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept;
double sq_dist(const double* a, const double* b, std::size_t n) noexcept;
}  // namespace neon
#endif

}  // namespace fedcgau::simd
