#include "nofm/rule_space.hpp"

#include <stdexcept>

namespace nofm {

namespace {

u128 checked_mul(u128 a, u128 b) {
  u128 out;
  if (__builtin_mul_overflow(a, b, &out))
    throw std::overflow_error("rule-space size exceeds 128 bits");
  return out;
}

}  // namespace

std::string u128_to_string(u128 v) {
  if (v == 0) return "0";
  std::string digits;
  while (v > 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return {digits.rbegin(), digits.rend()};
}

double u128_to_double(u128 v) {
  return static_cast<double>(v);
}

CardinalityReport estimate_rule_space(std::uint64_t p, std::uint64_t T) {
  if (p < 1 || T < 1)
    throw std::invalid_argument("p and T must be positive");
  CardinalityReport r;
  r.features = p;
  r.thresholds = T;
  const u128 prim = checked_mul(p, 2 * static_cast<u128>(T) +
                                       checked_mul(T, T));
  if (prim > ~std::uint64_t{0})
    throw std::overflow_error("primitive count exceeds 64 bits");
  r.primitive = static_cast<std::uint64_t>(prim);
  // 2 * C(prim, 2) = prim * (prim - 1)
  r.compositional = prim < 2 ? 0 : checked_mul(prim, prim - 1);
  const u128 temporal_variants = 1 + 12;
  const u128 pair_ratios = 1 + (static_cast<u128>(p) * (p - 1)) / 2;
  r.universe_order =
      checked_mul(checked_mul(r.compositional, temporal_variants), pair_ratios);
  return r;
}

u128 packed_matrix_bytes(u128 rules, std::uint64_t n_samples) {
  const u128 bits = checked_mul(rules, n_samples);
  return (bits + 7) / 8;
}

double time_wall_seconds(u128 rules, double per_rule_seconds) {
  return u128_to_double(rules) * per_rule_seconds;
}

nlohmann::json CardinalityReport::to_json() const {
  return nlohmann::json{
      {"features", features},
      {"thresholds_per_feature", thresholds},
      {"primitive", primitive},
      {"compositional", u128_to_string(compositional)},
      {"compositional_approx", u128_to_double(compositional)},
      {"universe_order", u128_to_string(universe_order)},
      {"universe_order_approx", u128_to_double(universe_order)}};
}

}  // namespace nofm
