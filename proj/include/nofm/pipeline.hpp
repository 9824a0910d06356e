#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nofm/assemble.hpp"
#include "nofm/report.hpp"
#include "nofm/splits.hpp"
#include "nofm/synth.hpp"
#include "nofm/transcript.hpp"

namespace nofm {

struct FoldOutput {
  FoldReport report;
  RulePool pool;
  FeatureStats stats;
  Checklist checklist;
  std::vector<TranscriptEvent> events;
  int test_accesses = 0;  // score passes over the held-out slice
};

struct RunOutput {
  RunReport report;
  Transcript transcript;  // all folds, in fold order
  std::vector<FoldOutput> folds;
};

// One full cross-validated run: group-stratified outer folds, frozen
// construction-split stats, the proposal/validation loop, assembly and
// refinement on internal validation, threshold selection, and exactly one
// scoring pass over each held-out fold. Deterministic for a fixed config
// and seed when the proposer is heuristic.
RunOutput run_pipeline(const Dataset& data, const PipelineConfig& cfg,
                       const PromptSet* prompts = nullptr);

struct SweepRow {
  int max_rules = 0;
  double mean_auroc = 0;
  double std_auroc = 0;
};

std::vector<SweepRow> sweep_rule_budget(const Dataset& data,
                                        PipelineConfig cfg,
                                        const std::vector<int>& m_values,
                                        const PromptSet* prompts = nullptr);

// Replays a fold's recorded candidate stream through the retention gate
// with proposers disabled, reusing recorded plausibility verdicts.
// `divergences` counts events whose statistical outcome changed.
RulePool replay_pool(const std::vector<TranscriptEvent>& events,
                     const PipelineConfig& cfg, const Dataset& d_con,
                     const FeatureStats& stats, int* divergences = nullptr);

// Full offline replay: pools from the transcript, Phase 2 re-run
// deterministically. Returns per-fold pool hashes and checklists.
struct ReplayResult {
  std::vector<std::string> pool_hashes;
  std::vector<Checklist> checklists;
  int divergences = 0;
};

ReplayResult replay_run(const Dataset& data, const Transcript& t,
                        const PipelineConfig& cfg);

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

}  // namespace nofm
