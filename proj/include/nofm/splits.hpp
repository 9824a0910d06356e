#pragma once

#include <cstdint>
#include <vector>

#include "nofm/dataset.hpp"

namespace nofm {

// One cross-validation fold. The training side is already divided 80/20 by
// group into construction and internal-validation subsets; rules are
// accepted on the former, checklists selected and thresholded on the latter.
struct FoldSplit {
  std::vector<std::uint32_t> construction_rows;
  std::vector<std::uint32_t> validation_rows;
  std::vector<std::uint32_t> test_rows;
  std::vector<std::string> test_groups;
};

// Group-aware stratified k-fold: groups never straddle folds, per-fold class
// counts stay within one group of an even deal, and the assignment depends
// only on group ids and the seed (stable under row reordering).
std::vector<FoldSplit> stratified_group_kfold(const Dataset& d, int k,
                                              std::uint64_t seed);

}  // namespace nofm
