#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nofm/pool.hpp"
#include "nofm/prompts.hpp"

namespace nofm {

class ChatClient;

struct AgentSpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unit-weighted N-of-M checklist: rules from the pool, decision threshold K,
// provenance of how it was selected. No weight field exists by construction.
struct Checklist {
  std::string name = "checklist";
  std::string description;
  std::vector<Rule> rules;  // 1..M, all structurally present in the pool
  int threshold_k = -1;     // set by finalize

  std::string pool_hash;
  int fold_id = -1;
  std::string mode;
  std::uint64_t candidates_evaluated = 0;

  nlohmann::json to_json() const;
};

struct AgentHooks {
  ChatClient* client = nullptr;
  const PromptSet* prompts = nullptr;
  std::string task_description;
  int* calls_left = nullptr;  // shared per-fold budget, decremented per call
};

// Caches per-rule validation masks so subset evaluations are popcount-cheap.
class AssemblyContext {
 public:
  AssemblyContext(const RulePool& pool, const Dataset& d_val,
                  const FeatureStats& stats);

  double subset_auroc(const std::vector<std::uint32_t>& ordinals) const;
  std::vector<int> subset_scores(const std::vector<std::uint32_t>& ordinals) const;

  const RulePool& pool() const { return pool_; }
  const Dataset& d_val() const { return d_val_; }
  const FeatureStats& stats() const { return stats_; }

  mutable std::uint64_t evaluations = 0;

 private:
  const RulePool& pool_;
  const Dataset& d_val_;
  const FeatureStats& stats_;
  std::vector<BitVec> val_masks_;
};

// Phase-2 selection. greedy forward-selects on validation AUROC with
// deterministic tie-breaks; exhaustive enumerates subsets of size <= M when
// the count fits the cap (greedy otherwise); agent asks the remote endpoint
// and falls back to greedy on an invalid spec. Whatever the mode, the
// returned checklist is the best-by-validation-AUROC subset among all
// candidates evaluated.
Checklist assemble(const AssemblyContext& ctx, int max_rules, AssembleMode mode,
                   std::uint64_t exhaustive_cap = 200000,
                   const AgentHooks* agent = nullptr);

// Bounded inclusion/exclusion refinement within the pool. Offline mode
// applies the best single add/drop/swap per step; agent mode proposes via
// the refinement template. Output is the argmax over the input and every
// proposal, so refinement never loses validation AUROC.
Checklist refine(const Checklist& c, const AssemblyContext& ctx, int max_rules,
                 int steps, const AgentHooks* agent = nullptr);

// Fixes the decision threshold on validation data.
Checklist finalize(Checklist c, const Dataset& d_val, const FeatureStats& stats,
                   ThresholdObjective objective, double spec_floor = 0.9);

}  // namespace nofm
