#pragma once

#include <map>
#include <string>
#include <vector>

#include "nofm/assemble.hpp"

namespace nofm {

// Checklist card: a fixed Markdown layout (one "+1" per rule, total range,
// threshold line) plus a machine-readable JSON twin. Quantile and z-score
// rules are shown with their frozen-stat cutpoints resolved to numbers.
std::string render_card_markdown(const Checklist& c, const FeatureStats& stats);
nlohmann::json card_json(const Checklist& c, const FeatureStats& stats);

// Rule text with distributional cutpoints resolved, e.g.
// "wbc >= Q0.75(wbc) [= 11.3]".
std::string describe_resolved(const Rule& r, const FeatureStats& stats);

struct FoldReport {
  int fold = 0;
  Checklist checklist;
  EvalReport test;
  std::string card_markdown;

  std::uint64_t proposed = 0;
  std::uint64_t parsed_ok = 0;
  std::uint64_t admitted = 0;
  std::map<std::string, std::uint64_t> rejected;  // reason -> count
  std::uint64_t pool_size = 0;
  int calls_proposal = 0;
  int calls_plausibility = 0;
  int calls_assembly = 0;

  nlohmann::json to_json() const;
};

struct RunReport {
  nlohmann::json config_echo;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<FoldReport> folds;
  double mean_test_auroc = 0;
  double std_test_auroc = 0;

  void compute_aggregates();
  nlohmann::json to_json() const;
  void save(const std::string& path) const;
  static RunReport from_json(const nlohmann::json& j);  // fold AUROCs only
  std::vector<double> fold_aurocs() const;
};

}  // namespace nofm
