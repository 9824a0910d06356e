#include "nofm/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <cstring>

namespace nofm::kernels {

namespace scalar {

std::uint64_t popcount(const std::uint64_t* words, std::size_t nwords) {
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < nwords; ++i) total += std::popcount(words[i]);
  return total;
}

std::uint64_t and_popcount(const std::uint64_t* a, const std::uint64_t* b,
                           std::size_t nwords) {
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < nwords; ++i)
    total += std::popcount(a[i] & b[i]);
  return total;
}

std::uint64_t or_popcount(const std::uint64_t* a, const std::uint64_t* b,
                          std::size_t nwords) {
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < nwords; ++i)
    total += std::popcount(a[i] | b[i]);
  return total;
}

namespace {

inline bool apply_cmp(double v, Cmp op, double c) {
  // Ordered comparisons: NaN on either side yields false.
  switch (op) {
    case Cmp::gt: return v > c;
    case Cmp::ge: return v >= c;
    case Cmp::lt: return v < c;
    case Cmp::le: return v <= c;
  }
  return false;
}

inline bool word_bit(const std::uint64_t* w, std::size_t i) {
  return (w[i >> 6] >> (i & 63)) & 1u;
}

}  // namespace

void cmp_threshold(const double* x, const std::uint64_t* valid, std::size_t n,
                   Cmp op, double c, std::uint64_t* out) {
  const std::size_t nwords = (n + 63) / 64;
  for (std::size_t w = 0; w < nwords; ++w) {
    std::uint64_t bits = 0;
    const std::size_t lim = std::min<std::size_t>(64, n - w * 64);
    for (std::size_t j = 0; j < lim; ++j) {
      const std::size_t i = w * 64 + j;
      if (word_bit(valid, i) && apply_cmp(x[i], op, c))
        bits |= std::uint64_t{1} << j;
    }
    out[w] = bits;
  }
}

void cmp_range(const double* x, const std::uint64_t* valid, std::size_t n,
               double lo, double hi, std::uint64_t* out) {
  const std::size_t nwords = (n + 63) / 64;
  for (std::size_t w = 0; w < nwords; ++w) {
    std::uint64_t bits = 0;
    const std::size_t lim = std::min<std::size_t>(64, n - w * 64);
    for (std::size_t j = 0; j < lim; ++j) {
      const std::size_t i = w * 64 + j;
      if (word_bit(valid, i) && x[i] >= lo && x[i] <= hi)
        bits |= std::uint64_t{1} << j;
    }
    out[w] = bits;
  }
}

void cmp_ratio(const double* a, const double* b, const std::uint64_t* va,
               const std::uint64_t* vb, std::size_t n, Cmp op, double c,
               std::uint64_t* out) {
  const std::size_t nwords = (n + 63) / 64;
  for (std::size_t w = 0; w < nwords; ++w) {
    std::uint64_t bits = 0;
    const std::size_t lim = std::min<std::size_t>(64, n - w * 64);
    for (std::size_t j = 0; j < lim; ++j) {
      const std::size_t i = w * 64 + j;
      if (word_bit(va, i) && word_bit(vb, i) && b[i] != 0.0 &&
          apply_cmp(a[i] / b[i], op, c))
        bits |= std::uint64_t{1} << j;
    }
    out[w] = bits;
  }
}

void cmp_diff(const double* a, const double* b, const std::uint64_t* va,
              const std::uint64_t* vb, std::size_t n, Cmp op, double c,
              std::uint64_t* out) {
  const std::size_t nwords = (n + 63) / 64;
  for (std::size_t w = 0; w < nwords; ++w) {
    std::uint64_t bits = 0;
    const std::size_t lim = std::min<std::size_t>(64, n - w * 64);
    for (std::size_t j = 0; j < lim; ++j) {
      const std::size_t i = w * 64 + j;
      if (word_bit(va, i) && word_bit(vb, i) && apply_cmp(a[i] - b[i], op, c))
        bits |= std::uint64_t{1} << j;
    }
    out[w] = bits;
  }
}

void cmp_pct_change(const double* x0, const double* x1,
                    const std::uint64_t* v0, const std::uint64_t* v1,
                    std::size_t n, double sign, Cmp op, double pct,
                    std::uint64_t* out) {
  const std::size_t nwords = (n + 63) / 64;
  for (std::size_t w = 0; w < nwords; ++w) {
    std::uint64_t bits = 0;
    const std::size_t lim = std::min<std::size_t>(64, n - w * 64);
    for (std::size_t j = 0; j < lim; ++j) {
      const std::size_t i = w * 64 + j;
      if (word_bit(v0, i) && word_bit(v1, i) && x0[i] != 0.0 &&
          apply_cmp(sign * (x1[i] - x0[i]) / x0[i], op, pct))
        bits |= std::uint64_t{1} << j;
    }
    out[w] = bits;
  }
}

}  // namespace scalar

namespace {

Backend pick_backend() {
#ifdef __x86_64__
  const char* env = std::getenv("NOFM_SIMD");
  if (env && std::strcmp(env, "scalar") == 0) return Backend::scalar;
  if (avx2::supported()) return Backend::avx2;
#endif
  return Backend::scalar;
}

Backend g_backend = pick_backend();

}  // namespace

Backend active_backend() { return g_backend; }
void force_backend(Backend b) { g_backend = b; }

#ifdef __x86_64__
#define NOFM_DISPATCH(fn, ...)                          \
  do {                                                  \
    if (g_backend == Backend::avx2)                     \
      return avx2::fn(__VA_ARGS__);                     \
    return scalar::fn(__VA_ARGS__);                     \
  } while (0)
#else
#define NOFM_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

std::uint64_t popcount(const std::uint64_t* words, std::size_t nwords) {
  NOFM_DISPATCH(popcount, words, nwords);
}

std::uint64_t and_popcount(const std::uint64_t* a, const std::uint64_t* b,
                           std::size_t nwords) {
  NOFM_DISPATCH(and_popcount, a, b, nwords);
}

std::uint64_t or_popcount(const std::uint64_t* a, const std::uint64_t* b,
                          std::size_t nwords) {
  NOFM_DISPATCH(or_popcount, a, b, nwords);
}

void cmp_threshold(const double* x, const std::uint64_t* valid, std::size_t n,
                   Cmp op, double c, std::uint64_t* out) {
  NOFM_DISPATCH(cmp_threshold, x, valid, n, op, c, out);
}

void cmp_range(const double* x, const std::uint64_t* valid, std::size_t n,
               double lo, double hi, std::uint64_t* out) {
  NOFM_DISPATCH(cmp_range, x, valid, n, lo, hi, out);
}

void cmp_ratio(const double* a, const double* b, const std::uint64_t* va,
               const std::uint64_t* vb, std::size_t n, Cmp op, double c,
               std::uint64_t* out) {
  NOFM_DISPATCH(cmp_ratio, a, b, va, vb, n, op, c, out);
}

void cmp_diff(const double* a, const double* b, const std::uint64_t* va,
              const std::uint64_t* vb, std::size_t n, Cmp op, double c,
              std::uint64_t* out) {
  NOFM_DISPATCH(cmp_diff, a, b, va, vb, n, op, c, out);
}

void cmp_pct_change(const double* x0, const double* x1,
                    const std::uint64_t* v0, const std::uint64_t* v1,
                    std::size_t n, double sign, Cmp op, double pct,
                    std::uint64_t* out) {
  NOFM_DISPATCH(cmp_pct_change, x0, x1, v0, v1, n, sign, op, pct, out);
}

#undef NOFM_DISPATCH

}  // namespace nofm::kernels
