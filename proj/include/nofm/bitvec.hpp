#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nofm/kernels.hpp"

namespace nofm {

// Packed bit vector over 64-bit words. All bits at positions >= size() are
// kept zero so popcounts over whole words are exact.
class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(std::size_t n, bool fill = false)
      : n_(n), words_((n + 63) / 64, fill ? ~std::uint64_t{0} : 0) {
    clear_tail();
  }

  std::size_t size() const { return n_; }
  std::size_t nwords() const { return words_.size(); }
  std::uint64_t* words() { return words_.data(); }
  const std::uint64_t* words() const { return words_.data(); }

  bool test(std::size_t i) const {
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }
  void set(std::size_t i, bool v = true) {
    const std::uint64_t bit = std::uint64_t{1} << (i & 63);
    if (v)
      words_[i >> 6] |= bit;
    else
      words_[i >> 6] &= ~bit;
  }

  // Zeroes any bits past size(); kernels writing whole words rely on callers
  // re-establishing this invariant.
  void clear_tail() {
    if (n_ % 64 && !words_.empty())
      words_.back() &= (std::uint64_t{1} << (n_ % 64)) - 1;
  }

  std::uint64_t count() const {
    return kernels::popcount(words_.data(), words_.size());
  }

  static std::uint64_t and_count(const BitVec& a, const BitVec& b) {
    check_same(a, b);
    return kernels::and_popcount(a.words(), b.words(), a.nwords());
  }
  static std::uint64_t or_count(const BitVec& a, const BitVec& b) {
    check_same(a, b);
    return kernels::or_popcount(a.words(), b.words(), a.nwords());
  }

  BitVec& operator&=(const BitVec& o) {
    check_same(*this, o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
    return *this;
  }
  BitVec& operator|=(const BitVec& o) {
    check_same(*this, o);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    return *this;
  }

  friend BitVec operator&(BitVec a, const BitVec& b) { return a &= b; }
  friend BitVec operator|(BitVec a, const BitVec& b) { return a |= b; }

  bool operator==(const BitVec& o) const {
    return n_ == o.n_ && words_ == o.words_;
  }

 private:
  static void check_same(const BitVec& a, const BitVec& b) {
    if (a.n_ != b.n_) throw std::invalid_argument("BitVec length mismatch");
  }

  std::size_t n_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace nofm
