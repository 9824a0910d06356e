#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "nofm/bitvec.hpp"
#include "nofm/kernels.hpp"

using namespace nofm;
namespace k = nofm::kernels;

namespace {

struct Inputs {
  std::vector<double> a, b;
  std::vector<std::uint64_t> va, vb;
  std::size_t n;
};

Inputs random_inputs(std::size_t n, std::mt19937_64& rng) {
  Inputs in;
  in.n = n;
  const std::size_t nwords = (n + 63) / 64;
  std::normal_distribution<double> dist(0.0, 10.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    double x = dist(rng);
    double y = dist(rng);
    if (unif(rng) < 0.05) x = std::numeric_limits<double>::quiet_NaN();
    if (unif(rng) < 0.05) y = 0.0;  // exercise zero divisors
    in.a.push_back(x);
    in.b.push_back(y);
  }
  for (std::size_t w = 0; w < nwords; ++w) {
    in.va.push_back(rng());
    in.vb.push_back(rng());
  }
  // keep tail bits clear, as BitVec guarantees
  if (n % 64) {
    const std::uint64_t tail = (std::uint64_t{1} << (n % 64)) - 1;
    in.va.back() &= tail;
    in.vb.back() &= tail;
  }
  return in;
}

}  // namespace

#ifdef __x86_64__

TEST_CASE("scalar and AVX2 kernels agree bit for bit") {
  if (!k::avx2::supported()) return;  // nothing to compare on this machine
  std::mt19937_64 rng(42);
  const k::Cmp ops[] = {k::Cmp::gt, k::Cmp::ge, k::Cmp::lt, k::Cmp::le};

  for (std::size_t n : {1u, 63u, 64u, 65u, 128u, 300u, 1000u, 4096u, 4097u}) {
    const Inputs in = random_inputs(n, rng);
    const std::size_t nwords = (n + 63) / 64;
    std::vector<std::uint64_t> out_s(nwords), out_v(nwords);

    for (k::Cmp op : ops) {
      for (double c : {-5.0, 0.0, 3.7}) {
        k::scalar::cmp_threshold(in.a.data(), in.va.data(), n, op, c,
                                 out_s.data());
        k::avx2::cmp_threshold(in.a.data(), in.va.data(), n, op, c,
                               out_v.data());
        CHECK(out_s == out_v);

        k::scalar::cmp_ratio(in.a.data(), in.b.data(), in.va.data(),
                             in.vb.data(), n, op, c, out_s.data());
        k::avx2::cmp_ratio(in.a.data(), in.b.data(), in.va.data(),
                           in.vb.data(), n, op, c, out_v.data());
        CHECK(out_s == out_v);

        k::scalar::cmp_diff(in.a.data(), in.b.data(), in.va.data(),
                            in.vb.data(), n, op, c, out_s.data());
        k::avx2::cmp_diff(in.a.data(), in.b.data(), in.va.data(),
                          in.vb.data(), n, op, c, out_v.data());
        CHECK(out_s == out_v);

        for (double sign : {1.0, -1.0}) {
          k::scalar::cmp_pct_change(in.a.data(), in.b.data(), in.va.data(),
                                    in.vb.data(), n, sign, op, c,
                                    out_s.data());
          k::avx2::cmp_pct_change(in.a.data(), in.b.data(), in.va.data(),
                                  in.vb.data(), n, sign, op, c, out_v.data());
          CHECK(out_s == out_v);
        }
      }
    }

    k::scalar::cmp_range(in.a.data(), in.va.data(), n, -2.0, 4.0, out_s.data());
    k::avx2::cmp_range(in.a.data(), in.va.data(), n, -2.0, 4.0, out_v.data());
    CHECK(out_s == out_v);

    CHECK(k::scalar::popcount(in.va.data(), nwords) ==
          k::avx2::popcount(in.va.data(), nwords));
    CHECK(k::scalar::and_popcount(in.va.data(), in.vb.data(), nwords) ==
          k::avx2::and_popcount(in.va.data(), in.vb.data(), nwords));
    CHECK(k::scalar::or_popcount(in.va.data(), in.vb.data(), nwords) ==
          k::avx2::or_popcount(in.va.data(), in.vb.data(), nwords));
  }
}

#endif  // __x86_64__

TEST_CASE("popcount kernels match bit-by-bit accounting") {
  std::mt19937_64 rng(7);
  for (std::size_t nwords : {0u, 1u, 3u, 4u, 7u, 33u}) {
    std::vector<std::uint64_t> a(nwords), b(nwords);
    for (auto& w : a) w = rng();
    for (auto& w : b) w = rng();
    std::uint64_t expect_pop = 0, expect_and = 0, expect_or = 0;
    for (std::size_t w = 0; w < nwords; ++w)
      for (int bit = 0; bit < 64; ++bit) {
        const std::uint64_t mask = std::uint64_t{1} << bit;
        expect_pop += (a[w] & mask) != 0;
        expect_and += (a[w] & b[w] & mask) != 0;
        expect_or += ((a[w] | b[w]) & mask) != 0;
      }
    CHECK(k::popcount(a.data(), nwords) == expect_pop);
    CHECK(k::and_popcount(a.data(), b.data(), nwords) == expect_and);
    CHECK(k::or_popcount(a.data(), b.data(), nwords) == expect_or);
  }
}

TEST_CASE("threshold kernel semantics: NaN and invalid lanes are false") {
  const double x[] = {1.0, std::numeric_limits<double>::quiet_NaN(), 7.0, 5.0};
  std::uint64_t valid = 0b1011;  // lane 2 masked out
  std::uint64_t out = ~std::uint64_t{0};
  k::cmp_threshold(x, &valid, 4, k::Cmp::ge, 5.0, &out);
  CHECK(out == 0b1000);  // only lane 3: 5.0 >= 5.0, valid
}

TEST_CASE("ratio kernel refuses zero denominators") {
  const double a[] = {4.0, 4.0, 4.0};
  const double b[] = {2.0, 0.0, 1.0};
  std::uint64_t valid = 0b111;
  std::uint64_t out = 0;
  k::cmp_ratio(a, b, &valid, &valid, 3, k::Cmp::ge, 1.5, &out);
  CHECK(out == 0b101);  // 2.0 and 4.0 pass, the 4/0 lane is forced false
}

TEST_CASE("BitVec keeps its tail clear") {
  BitVec v(70);
  for (std::size_t i = 0; i < 70; ++i) v.set(i);
  CHECK(v.count() == 70);
  CHECK(v.nwords() == 2);
  CHECK(v.words()[1] == (std::uint64_t{1} << 6) - 1);

  BitVec w(70);
  w.set(0);
  w.set(69);
  CHECK(BitVec::and_count(v, w) == 2);
  CHECK(BitVec::or_count(v, w) == 70);
}

TEST_CASE("dispatch honours forced backend") {
  const k::Backend original = k::active_backend();
  k::force_backend(k::Backend::scalar);
  CHECK(k::active_backend() == k::Backend::scalar);
  std::uint64_t word = 0xff;
  CHECK(k::popcount(&word, 1) == 8);
  k::force_backend(original);
}
