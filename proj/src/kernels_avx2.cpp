#ifdef __x86_64__

#include <immintrin.h>

#include <algorithm>
#include <bit>
#include <cstdint>

#include "nofm/kernels.hpp"

namespace nofm::kernels::avx2 {

bool supported() { return __builtin_cpu_supports("avx2"); }

namespace {

// 4-bit lookup popcount over a 256-bit lane, accumulated with sad_epu8.
inline __m256i popcount256(__m256i v) {
  const __m256i lookup = _mm256_setr_epi8(
      0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
      0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
  const __m256i low_mask = _mm256_set1_epi8(0x0f);
  const __m256i lo = _mm256_and_si256(v, low_mask);
  const __m256i hi = _mm256_and_si256(_mm256_srli_epi32(v, 4), low_mask);
  const __m256i cnt =
      _mm256_add_epi8(_mm256_shuffle_epi8(lookup, lo),
                      _mm256_shuffle_epi8(lookup, hi));
  return _mm256_sad_epu8(cnt, _mm256_setzero_si256());
}

inline std::uint64_t hsum64(__m256i acc) {
  alignas(32) std::uint64_t lanes[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
  return lanes[0] + lanes[1] + lanes[2] + lanes[3];
}

}  // namespace

std::uint64_t popcount(const std::uint64_t* words, std::size_t nwords) {
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 4 <= nwords; i += 4) {
    const __m256i v =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(words + i));
    acc = _mm256_add_epi64(acc, popcount256(v));
  }
  std::uint64_t total = hsum64(acc);
  for (; i < nwords; ++i) total += std::popcount(words[i]);
  return total;
}

std::uint64_t and_popcount(const std::uint64_t* a, const std::uint64_t* b,
                           std::size_t nwords) {
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 4 <= nwords; i += 4) {
    const __m256i va =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    const __m256i vb =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
    acc = _mm256_add_epi64(acc, popcount256(_mm256_and_si256(va, vb)));
  }
  std::uint64_t total = hsum64(acc);
  for (; i < nwords; ++i) total += std::popcount(a[i] & b[i]);
  return total;
}

std::uint64_t or_popcount(const std::uint64_t* a, const std::uint64_t* b,
                          std::size_t nwords) {
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 4 <= nwords; i += 4) {
    const __m256i va =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    const __m256i vb =
        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
    acc = _mm256_add_epi64(acc, popcount256(_mm256_or_si256(va, vb)));
  }
  std::uint64_t total = hsum64(acc);
  for (; i < nwords; ++i) total += std::popcount(a[i] | b[i]);
  return total;
}

namespace {

template <int IMM>
void cmp_threshold_imm(const double* x, const std::uint64_t* valid,
                       std::size_t n, Cmp op, double c, std::uint64_t* out) {
  const __m256d vc = _mm256_set1_pd(c);
  const std::size_t full = n / 64;
  for (std::size_t w = 0; w < full; ++w) {
    std::uint64_t bits = 0;
    for (std::size_t g = 0; g < 16; ++g) {
      const __m256d v = _mm256_loadu_pd(x + w * 64 + g * 4);
      const int m = _mm256_movemask_pd(_mm256_cmp_pd(v, vc, IMM));
      bits |= static_cast<std::uint64_t>(m) << (g * 4);
    }
    out[w] = bits & valid[w];
  }
  if (n % 64)
    scalar::cmp_threshold(x + full * 64, valid + full, n - full * 64, op, c,
                          out + full);
}

template <int IMM, typename Lane>
void cmp_binary_imm(const double* a, const double* b, const std::uint64_t* va,
                    const std::uint64_t* vb, std::size_t n, double c,
                    std::uint64_t* out, Lane lane) {
  const __m256d vc = _mm256_set1_pd(c);
  const std::size_t full = n / 64;
  for (std::size_t w = 0; w < full; ++w) {
    std::uint64_t bits = 0;
    for (std::size_t g = 0; g < 16; ++g) {
      const __m256d xa = _mm256_loadu_pd(a + w * 64 + g * 4);
      const __m256d xb = _mm256_loadu_pd(b + w * 64 + g * 4);
      __m256d guard;
      const __m256d v = lane(xa, xb, guard);
      const __m256d hit =
          _mm256_and_pd(_mm256_cmp_pd(v, vc, IMM), guard);
      bits |= static_cast<std::uint64_t>(_mm256_movemask_pd(hit)) << (g * 4);
    }
    out[w] = bits & va[w] & vb[w];
  }
  // caller finishes the tail with the scalar kernel
  (void)out;
}

}  // namespace

void cmp_threshold(const double* x, const std::uint64_t* valid, std::size_t n,
                   Cmp op, double c, std::uint64_t* out) {
  switch (op) {
    case Cmp::gt: cmp_threshold_imm<_CMP_GT_OQ>(x, valid, n, op, c, out); break;
    case Cmp::ge: cmp_threshold_imm<_CMP_GE_OQ>(x, valid, n, op, c, out); break;
    case Cmp::lt: cmp_threshold_imm<_CMP_LT_OQ>(x, valid, n, op, c, out); break;
    case Cmp::le: cmp_threshold_imm<_CMP_LE_OQ>(x, valid, n, op, c, out); break;
  }
}

void cmp_range(const double* x, const std::uint64_t* valid, std::size_t n,
               double lo, double hi, std::uint64_t* out) {
  const __m256d vlo = _mm256_set1_pd(lo);
  const __m256d vhi = _mm256_set1_pd(hi);
  const std::size_t full = n / 64;
  for (std::size_t w = 0; w < full; ++w) {
    std::uint64_t bits = 0;
    for (std::size_t g = 0; g < 16; ++g) {
      const __m256d v = _mm256_loadu_pd(x + w * 64 + g * 4);
      const __m256d hit = _mm256_and_pd(_mm256_cmp_pd(v, vlo, _CMP_GE_OQ),
                                        _mm256_cmp_pd(v, vhi, _CMP_LE_OQ));
      bits |= static_cast<std::uint64_t>(_mm256_movemask_pd(hit)) << (g * 4);
    }
    out[w] = bits & valid[w];
  }
  if (n % 64)
    scalar::cmp_range(x + full * 64, valid + full, n - full * 64, lo, hi,
                      out + full);
}

void cmp_ratio(const double* a, const double* b, const std::uint64_t* va,
               const std::uint64_t* vb, std::size_t n, Cmp op, double c,
               std::uint64_t* out) {
  const __m256d zero = _mm256_setzero_pd();
  auto lane = [&zero](__m256d xa, __m256d xb, __m256d& guard) {
    guard = _mm256_cmp_pd(xb, zero, _CMP_NEQ_OQ);
    return _mm256_div_pd(xa, xb);
  };
  const std::size_t full = n / 64;
  switch (op) {
    case Cmp::gt: cmp_binary_imm<_CMP_GT_OQ>(a, b, va, vb, n, c, out, lane); break;
    case Cmp::ge: cmp_binary_imm<_CMP_GE_OQ>(a, b, va, vb, n, c, out, lane); break;
    case Cmp::lt: cmp_binary_imm<_CMP_LT_OQ>(a, b, va, vb, n, c, out, lane); break;
    case Cmp::le: cmp_binary_imm<_CMP_LE_OQ>(a, b, va, vb, n, c, out, lane); break;
  }
  if (n % 64)
    scalar::cmp_ratio(a + full * 64, b + full * 64, va + full, vb + full,
                      n - full * 64, op, c, out + full);
}

void cmp_diff(const double* a, const double* b, const std::uint64_t* va,
              const std::uint64_t* vb, std::size_t n, Cmp op, double c,
              std::uint64_t* out) {
  auto lane = [](__m256d xa, __m256d xb, __m256d& guard) {
    guard = _mm256_castsi256_pd(_mm256_set1_epi64x(-1));
    return _mm256_sub_pd(xa, xb);
  };
  const std::size_t full = n / 64;
  switch (op) {
    case Cmp::gt: cmp_binary_imm<_CMP_GT_OQ>(a, b, va, vb, n, c, out, lane); break;
    case Cmp::ge: cmp_binary_imm<_CMP_GE_OQ>(a, b, va, vb, n, c, out, lane); break;
    case Cmp::lt: cmp_binary_imm<_CMP_LT_OQ>(a, b, va, vb, n, c, out, lane); break;
    case Cmp::le: cmp_binary_imm<_CMP_LE_OQ>(a, b, va, vb, n, c, out, lane); break;
  }
  if (n % 64)
    scalar::cmp_diff(a + full * 64, b + full * 64, va + full, vb + full,
                     n - full * 64, op, c, out + full);
}

void cmp_pct_change(const double* x0, const double* x1,
                    const std::uint64_t* v0, const std::uint64_t* v1,
                    std::size_t n, double sign, Cmp op, double pct,
                    std::uint64_t* out) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d vsign = _mm256_set1_pd(sign);
  auto lane = [&](__m256d xa, __m256d xb, __m256d& guard) {
    // xa = x0, xb = x1; value = sign*(x1-x0)/x0
    guard = _mm256_cmp_pd(xa, zero, _CMP_NEQ_OQ);
    return _mm256_mul_pd(vsign,
                         _mm256_div_pd(_mm256_sub_pd(xb, xa), xa));
  };
  const std::size_t full = n / 64;
  switch (op) {
    case Cmp::gt: cmp_binary_imm<_CMP_GT_OQ>(x0, x1, v0, v1, n, pct, out, lane); break;
    case Cmp::ge: cmp_binary_imm<_CMP_GE_OQ>(x0, x1, v0, v1, n, pct, out, lane); break;
    case Cmp::lt: cmp_binary_imm<_CMP_LT_OQ>(x0, x1, v0, v1, n, pct, out, lane); break;
    case Cmp::le: cmp_binary_imm<_CMP_LE_OQ>(x0, x1, v0, v1, n, pct, out, lane); break;
  }
  if (n % 64)
    scalar::cmp_pct_change(x0 + full * 64, x1 + full * 64, v0 + full,
                           v1 + full, n - full * 64, sign, op, pct,
                           out + full);
}

}  // namespace nofm::kernels::avx2

#endif  // __x86_64__
