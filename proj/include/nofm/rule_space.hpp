#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

namespace nofm {

using u128 = unsigned __int128;

std::string u128_to_string(u128 v);
double u128_to_double(u128 v);

// Order-of-magnitude size of the grammar-induced rule space for p features
// and T thresholds per feature:
//   primitive     = p * (2T + T^2)
//   compositional = 2 * C(primitive, 2)
//   universe      = compositional * (1 + 12) * (1 + C(p, 2))
// plus the storage and evaluation-time walls implied by materializing the
// full candidate-by-sample bit matrix.
struct CardinalityReport {
  std::uint64_t features = 0;    // p
  std::uint64_t thresholds = 0;  // T
  std::uint64_t primitive = 0;
  u128 compositional = 0;
  u128 universe_order = 0;

  nlohmann::json to_json() const;
};

CardinalityReport estimate_rule_space(std::uint64_t p, std::uint64_t T);

// Bit-packed matrix size in bytes (rounded up) for n_samples rows over
// `rules` candidate columns.
u128 packed_matrix_bytes(u128 rules, std::uint64_t n_samples);

double time_wall_seconds(u128 rules, double per_rule_seconds);

}  // namespace nofm
