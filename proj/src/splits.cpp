#include "nofm/splits.hpp"

#include <algorithm>
#include <map>
#include <random>

namespace nofm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::vector<FoldSplit> stratified_group_kfold(const Dataset& d, int k,
                                              std::uint64_t seed) {
  if (k < 2) throw DataError(DataErrorCode::too_few_groups, "k must be >= 2");

  // Group id -> rows, keyed by name so the split is independent of row order.
  std::map<std::string, std::vector<std::uint32_t>> rows_of;
  std::map<std::string, bool> label_of;
  for (std::size_t i = 0; i < d.n_rows; ++i) {
    const std::string& gid = d.group_names[d.group_index[i]];
    const bool y = d.labels.test(i);
    auto it = label_of.find(gid);
    if (it == label_of.end())
      label_of[gid] = y;
    else if (it->second != y)
      throw DataError(DataErrorCode::mixed_label_group,
                      "group " + gid + " has mixed labels");
    rows_of[gid].push_back(static_cast<std::uint32_t>(i));
  }

  std::vector<std::string> pos_groups, neg_groups;
  for (const auto& [gid, y] : label_of)
    (y ? pos_groups : neg_groups).push_back(gid);

  const std::size_t uk = static_cast<std::size_t>(k);
  if (pos_groups.size() < uk || neg_groups.size() < uk)
    throw DataError(DataErrorCode::too_few_groups,
                    "need at least k groups of each class");

  std::mt19937_64 rng_pos(splitmix64(seed ^ 0x706f73ULL));
  std::mt19937_64 rng_neg(splitmix64(seed ^ 0x6e6567ULL));
  std::shuffle(pos_groups.begin(), pos_groups.end(), rng_pos);
  std::shuffle(neg_groups.begin(), neg_groups.end(), rng_neg);

  // Round-robin deal per class: fold test counts stay within +-1 of even.
  std::vector<std::vector<std::string>> fold_groups(uk);
  for (std::size_t i = 0; i < pos_groups.size(); ++i)
    fold_groups[i % uk].push_back(pos_groups[i]);
  for (std::size_t i = 0; i < neg_groups.size(); ++i)
    fold_groups[i % uk].push_back(neg_groups[i]);

  std::vector<FoldSplit> folds(uk);
  for (std::size_t f = 0; f < uk; ++f) {
    FoldSplit& fold = folds[f];
    fold.test_groups = fold_groups[f];
    std::sort(fold.test_groups.begin(), fold.test_groups.end());

    std::vector<std::string> train_pos, train_neg;
    for (std::size_t other = 0; other < uk; ++other) {
      if (other == f) continue;
      for (const std::string& gid : fold_groups[other])
        (label_of[gid] ? train_pos : train_neg).push_back(gid);
    }
    std::sort(train_pos.begin(), train_pos.end());
    std::sort(train_neg.begin(), train_neg.end());

    // Inner 80/20 by group, stratified: every 5th group goes to validation.
    std::mt19937_64 rng_inner(splitmix64(seed ^ (0x696e6eULL + f)));
    std::shuffle(train_pos.begin(), train_pos.end(), rng_inner);
    std::shuffle(train_neg.begin(), train_neg.end(), rng_inner);

    auto deal_inner = [&](const std::vector<std::string>& groups) {
      for (std::size_t i = 0; i < groups.size(); ++i) {
        // A class with a single training group stays in construction.
        const bool to_val = groups.size() > 1 && i % 5 == 0;
        auto& target = to_val ? fold.validation_rows : fold.construction_rows;
        const auto& rows = rows_of[groups[i]];
        target.insert(target.end(), rows.begin(), rows.end());
      }
    };
    deal_inner(train_pos);
    deal_inner(train_neg);

    for (const std::string& gid : fold.test_groups) {
      const auto& rows = rows_of[gid];
      fold.test_rows.insert(fold.test_rows.end(), rows.begin(), rows.end());
    }

    std::sort(fold.construction_rows.begin(), fold.construction_rows.end());
    std::sort(fold.validation_rows.begin(), fold.validation_rows.end());
    std::sort(fold.test_rows.begin(), fold.test_rows.end());
  }
  return folds;
}

}  // namespace nofm
