#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "nofm/bitvec.hpp"
#include "nofm/dataset.hpp"
#include "nofm/feature_stats.hpp"
#include "nofm/rules.hpp"

namespace nofm {

// Bit i = rule fires on row i. Missing inputs, zero divisors and unusable
// stats force bits to 0; see evaluate_rule.
struct CoverageMask {
  BitVec bits;
  SplitTag split = SplitTag::full;

  std::uint64_t count() const { return bits.count(); }
  std::size_t size() const { return bits.size(); }
};

// Pure predicate evaluation: any required input missing on a row makes the
// predicate false there; a logical child with missing inputs contributes
// false; ratio and percent-change rules are false on zero denominators.
// Z-score rules on a zero-variance feature and quantile/z rules on an
// all-missing feature throw EvalError(unusable_stats).
CoverageMask evaluate_rule(const Rule& r, const Dataset& d,
                           const FeatureStats& stats);

// Probability that a random positive outranks a random negative, ties
// counted 1/2 (rank-based; matches the pairwise definition exactly).
double auroc(std::span<const double> scores, const BitVec& labels);
double auroc_int(std::span<const int> scores, const BitVec& labels);

// Jaccard similarity of the positive-class restrictions of two masks.
// An empty union counts as maximally redundant (1.0).
double jaccard_positive(const CoverageMask& a, const CoverageMask& b,
                        const BitVec& labels);
// Same, over already-restricted positive-class masks.
double jaccard(const BitVec& a, const BitVec& b);

struct ChecklistScores {
  std::vector<int> score;     // 0..M per row
  std::vector<double> p_hat;  // score / M
  int n_rules = 0;
};

ChecklistScores score_rules(const std::vector<Rule>& rules, const Dataset& d,
                            const FeatureStats& stats);

enum class ThresholdObjective { youden, f1, balanced_accuracy, sens_at_spec };
const char* to_string(ThresholdObjective o);
ThresholdObjective threshold_objective_from_string(const std::string& s);

struct RiskRow {
  int score = 0;
  std::uint64_t n = 0;
  std::uint64_t events = 0;
  double rate = 0;
};

struct NonMonotonePair {
  int lower_score = 0, higher_score = 0;
  double rate_drop = 0;
  std::uint64_t n_lower = 0, n_higher = 0;  // flags small-bin artifacts
};

struct RiskTable {
  std::vector<RiskRow> rows;  // observed score levels, ascending
  std::vector<NonMonotonePair> non_monotone;

  bool strictly_increasing() const;
  nlohmann::json to_json() const;
};

RiskTable risk_table(std::span<const int> scores, const BitVec& labels);

struct EvalReport {
  double auroc = 0;
  int threshold = 0;
  double sensitivity = 0;
  double specificity = 0;
  double youden_j = 0;
  RiskTable risk;

  nlohmann::json to_json() const;
};

// Exhaustive scan over K in {0..m}; ties break toward the smallest K.
std::pair<int, EvalReport> select_threshold(std::span<const int> scores,
                                            const BitVec& labels, int m,
                                            ThresholdObjective objective,
                                            double spec_floor = 0.9);

}  // namespace nofm
