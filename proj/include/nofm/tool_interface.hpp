#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "nofm/pool.hpp"

namespace nofm {

// The only view of the data a proposer ever gets. Every return type carries
// aggregates: feature metadata, split-level statistics, rule-level metrics.
// Nothing here can surface a row, a cell or an identifier.
class ToolInterface {
 public:
  ToolInterface(const Dataset& d_con, const FeatureStats& stats,
                const RulePool& pool)
      : d_con_(d_con), stats_(stats), pool_(pool) {}

  const FeatureCatalog& catalog() const { return d_con_.catalog; }

  // Per-feature aggregates: quantile grid, mean/std, missingness, category
  // frequencies.
  nlohmann::json aggregate_digest() const;

  struct CandidateMetrics {
    double auroc = 0;
    std::uint64_t coverage = 0;
    std::uint64_t pos_coverage = 0;
  };
  CandidateMetrics evaluate_candidate(const Rule& r) const;  // may throw EvalError

  // Retained rules with their construction-split AUROCs and family tallies.
  nlohmann::json pool_summary() const;

  const FeatureStats& stats() const { return stats_; }

 private:
  const Dataset& d_con_;
  const FeatureStats& stats_;
  const RulePool& pool_;
};

// Everything a proposer sees for one iteration, assembled exclusively from
// ToolInterface outputs. to_json() is the payload the taint test inspects.
struct ProposalContext {
  std::string task_description;
  nlohmann::json catalog_digest;     // names/kinds/units
  nlohmann::json aggregate_insights; // ToolInterface::aggregate_digest
  nlohmann::json pool_summary;
  std::vector<RuleFamily> diversity;  // under-represented families
  double auc_threshold = 0.6;
  int logic_depth = 1;

  // prior-iteration feedback
  std::uint64_t proposed = 0;
  std::uint64_t accepted = 0;
  std::uint64_t rejected_low_auroc = 0;
  std::uint64_t rejected_redundant = 0;
  std::uint64_t rejected_duplicate = 0;
  std::uint64_t rejected_unusable = 0;
  std::uint64_t rejected_malformed = 0;
  std::uint64_t rejected_implausible = 0;

  nlohmann::json to_json() const;
};

ProposalContext build_context(const ToolInterface& tools,
                              const std::string& task_description,
                              const std::vector<RuleFamily>& diversity,
                              double auc_threshold, int logic_depth);

}  // namespace nofm
