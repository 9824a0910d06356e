#pragma once

#include <cstddef>
#include <cstdint>

// Data-parallel inner loops shared by mask construction and mask metrics.
//
// All predicate kernels write packed 64-bit words, bit i of word w = row
// 64*w + i. `valid` is a packed presence mask in the same layout; a clear
// valid bit forces the output bit to 0 (missing input => predicate false).
// Lanes at or beyond `n` in the final word are always written as 0.
//
// Every kernel has a scalar reference implementation and an AVX2 variant.
// The backend is chosen once at startup (AVX2 when the CPU supports it,
// overridable with NOFM_SIMD=scalar) and the two are equivalence-tested
// bit-for-bit.

namespace nofm::kernels {

enum class Cmp : std::uint8_t { gt, ge, lt, le };

enum class Backend { scalar, avx2 };

Backend active_backend();
void force_backend(Backend b);  // tests only

// -- popcounts over packed words --------------------------------------------

std::uint64_t popcount(const std::uint64_t* words, std::size_t nwords);
std::uint64_t and_popcount(const std::uint64_t* a, const std::uint64_t* b,
                           std::size_t nwords);
std::uint64_t or_popcount(const std::uint64_t* a, const std::uint64_t* b,
                          std::size_t nwords);

// -- packed predicate evaluation over double columns -------------------------

// out[i] = valid[i] && (x[i] op c)
void cmp_threshold(const double* x, const std::uint64_t* valid, std::size_t n,
                   Cmp op, double c, std::uint64_t* out);

// out[i] = valid[i] && (lo <= x[i] <= hi)
void cmp_range(const double* x, const std::uint64_t* valid, std::size_t n,
               double lo, double hi, std::uint64_t* out);

// out[i] = va[i] && vb[i] && b[i] != 0 && (a[i]/b[i] op c)
void cmp_ratio(const double* a, const double* b, const std::uint64_t* va,
               const std::uint64_t* vb, std::size_t n, Cmp op, double c,
               std::uint64_t* out);

// out[i] = va[i] && vb[i] && (a[i]-b[i] op c)
void cmp_diff(const double* a, const double* b, const std::uint64_t* va,
              const std::uint64_t* vb, std::size_t n, Cmp op, double c,
              std::uint64_t* out);

// out[i] = v0[i] && v1[i] && x0[i] != 0 && (sign*(x1[i]-x0[i])/x0[i] op pct)
// sign is +1 for "increase", -1 for "decrease".
void cmp_pct_change(const double* x0, const double* x1,
                    const std::uint64_t* v0, const std::uint64_t* v1,
                    std::size_t n, double sign, Cmp op, double pct,
                    std::uint64_t* out);

// -- scalar-only reference entry points (oracle side of the equivalence tests)

namespace scalar {
std::uint64_t popcount(const std::uint64_t* words, std::size_t nwords);
std::uint64_t and_popcount(const std::uint64_t* a, const std::uint64_t* b,
                           std::size_t nwords);
std::uint64_t or_popcount(const std::uint64_t* a, const std::uint64_t* b,
                          std::size_t nwords);
void cmp_threshold(const double* x, const std::uint64_t* valid, std::size_t n,
                   Cmp op, double c, std::uint64_t* out);
void cmp_range(const double* x, const std::uint64_t* valid, std::size_t n,
               double lo, double hi, std::uint64_t* out);
void cmp_ratio(const double* a, const double* b, const std::uint64_t* va,
               const std::uint64_t* vb, std::size_t n, Cmp op, double c,
               std::uint64_t* out);
void cmp_diff(const double* a, const double* b, const std::uint64_t* va,
              const std::uint64_t* vb, std::size_t n, Cmp op, double c,
              std::uint64_t* out);
void cmp_pct_change(const double* x0, const double* x1,
                    const std::uint64_t* v0, const std::uint64_t* v1,
                    std::size_t n, double sign, Cmp op, double pct,
                    std::uint64_t* out);
}  // namespace scalar

#ifdef __x86_64__
namespace avx2 {
bool supported();
std::uint64_t popcount(const std::uint64_t* words, std::size_t nwords);
std::uint64_t and_popcount(const std::uint64_t* a, const std::uint64_t* b,
                           std::size_t nwords);
std::uint64_t or_popcount(const std::uint64_t* a, const std::uint64_t* b,
                          std::size_t nwords);
void cmp_threshold(const double* x, const std::uint64_t* valid, std::size_t n,
                   Cmp op, double c, std::uint64_t* out);
void cmp_range(const double* x, const std::uint64_t* valid, std::size_t n,
               double lo, double hi, std::uint64_t* out);
void cmp_ratio(const double* a, const double* b, const std::uint64_t* va,
               const std::uint64_t* vb, std::size_t n, Cmp op, double c,
               std::uint64_t* out);
void cmp_diff(const double* a, const double* b, const std::uint64_t* va,
              const std::uint64_t* vb, std::size_t n, Cmp op, double c,
              std::uint64_t* out);
void cmp_pct_change(const double* x0, const double* x1,
                    const std::uint64_t* v0, const std::uint64_t* v1,
                    std::size_t n, double sign, Cmp op, double pct,
                    std::uint64_t* out);
}  // namespace avx2
#endif

}  // namespace nofm::kernels
