#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nofm/config.hpp"
#include "nofm/eval.hpp"
#include "nofm/rule_io.hpp"

namespace nofm {

struct RuleRecord {
  Rule rule;
  std::string serialized;  // canonical form, used for duplicate checks
  RuleFamily family = RuleFamily::threshold;
  double auroc_con = 0;
  CoverageMask mask_con;
  BitVec pos_mask;  // mask restricted to positive rows
  std::uint64_t pos_coverage = 0;
  std::uint32_t ordinal = 0;  // insertion index, strictly increasing
};

enum class RejectReason { low_auroc, redundant, duplicate, unusable_stats };
const char* to_string(RejectReason r);

struct ConsiderOutcome {
  bool accepted = false;
  RejectReason reason = RejectReason::low_auroc;
  std::string detail;
  double auroc = 0;
  double max_jaccard = 0;
  int most_similar_ordinal = -1;
  std::optional<RuleRecord> record;  // set when accepted
};

struct PoolLoadResult;

// Append-only pool of retained rules plus the gate configuration it was
// built under. Accepting is split in two: consider() is a pure check
// against the current pool, admit() appends and assigns the ordinal.
class RulePool {
 public:
  RulePool() = default;
  explicit RulePool(const PipelineConfig& cfg);

  // Retention gate: (a) AUROC on the construction split >= auc_threshold,
  // (b) max positive-class Jaccard against retained rules <= threshold, or
  // the candidate beats the most-similar record by min_pos_gain,
  // (c) no structural duplicate. Evaluation errors become
  // Reject(unusable_stats).
  ConsiderOutcome consider(const Rule& candidate, const Dataset& d_con,
                           const FeatureStats& stats) const;

  const RuleRecord& admit(RuleRecord record);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::vector<RuleRecord>& records() const { return records_; }
  const RuleRecord& at(std::size_t i) const { return records_[i]; }
  const std::array<int, kNumRuleFamilies>& family_counts() const {
    return family_counts_;
  }

  double auc_threshold() const { return cfg_.auc_threshold; }
  const PipelineConfig& config() const { return cfg_; }
  std::string config_hash() const { return cfg_.hash(); }

  // Ordered digest of the retained rules: serialized forms + metrics.
  std::string state_hash() const;

  void save(const std::string& path) const;

  // Rebuilds masks by re-evaluating each stored rule on d_con; verifies the
  // stored coverage counts still hold.
  static PoolLoadResult load(const std::string& path,
                             const PipelineConfig& cfg, const Dataset& d_con,
                             const FeatureStats& stats);

 private:
  PipelineConfig cfg_;
  std::vector<RuleRecord> records_;
  std::set<std::string> seen_;
  std::array<int, kNumRuleFamilies> family_counts_{};
};

struct PoolLoadResult {
  RulePool pool;
  bool config_hash_matched = true;
  std::string file_config_hash;
};

// Families currently below their minimum target. Guidance only: proposers
// bias sampling toward the returned families, the gate never consults them.
struct DiversityTargets {
  std::array<int, kNumRuleFamilies> min_count;
  DiversityTargets() { min_count.fill(1); }
};

std::vector<RuleFamily> diversity_guidance(const RulePool& pool,
                                           const DiversityTargets& targets);

}  // namespace nofm
