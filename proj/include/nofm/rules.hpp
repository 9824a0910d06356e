#pragma once

#include <string>
#include <variant>
#include <vector>

namespace nofm {

enum class CmpOp { gt, ge, lt, le };
enum class BoolOp { logical_and, logical_or };
enum class DerivedOp { ratio, difference };
enum class ChangeDir { increase, decrease };

const char* to_string(CmpOp op);
CmpOp cmp_op_from_string(const std::string& s);

struct Rule;

// One variant per schema in the proposal wire format. Thresholds are stored
// as exact doubles; nothing is rounded on the way in or out.

struct NumericThreshold {
  std::string feature;
  CmpOp op;
  double threshold;
  bool operator==(const NumericThreshold&) const = default;
};

struct NumericRange {
  std::string feature;
  double low;
  double high;  // low <= high
  bool operator==(const NumericRange&) const = default;
};

struct CategoricalIn {
  std::string feature;
  std::vector<std::string> categories;  // sorted, unique, non-empty
  bool operator==(const CategoricalIn&) const = default;
};

struct BinaryTrue {
  std::string feature;
  bool operator==(const BinaryTrue&) const = default;
};

// Only x_a / x_b and x_a - x_b are representable; anything else is rejected
// at the parse boundary.
struct DerivedExpr {
  DerivedOp op;
  std::string left;
  std::string right;
  bool operator==(const DerivedExpr&) const = default;
};

struct DerivedThreshold {
  DerivedExpr expr;
  CmpOp op;
  double threshold;
  bool operator==(const DerivedThreshold&) const = default;
};

struct CountPresent {
  std::vector<std::string> features;  // binary features, no duplicates
  int min_count;                      // 1 <= min_count <= |features|
  bool operator==(const CountPresent&) const = default;
};

struct Logical {
  BoolOp op;
  std::vector<Rule> rules;  // length >= 2
  bool operator==(const Logical&) const = default;
};

struct PercentChange {
  std::string feature_t0;
  std::string feature_t1;
  double pct;
  CmpOp op;
  ChangeDir direction;
  bool operator==(const PercentChange&) const = default;
};

struct ZScoreThreshold {
  std::string feature;
  CmpOp op;
  double z;
  bool operator==(const ZScoreThreshold&) const = default;
};

struct QuantileThreshold {
  std::string feature;
  CmpOp op;
  double q;  // 0 < q < 1
  bool operator==(const QuantileThreshold&) const = default;
};

using RuleNode =
    std::variant<NumericThreshold, NumericRange, CategoricalIn, BinaryTrue,
                 DerivedThreshold, CountPresent, Logical, PercentChange,
                 ZScoreThreshold, QuantileThreshold>;

struct Rule {
  RuleNode node;
  bool operator==(const Rule&) const = default;
};

enum class RuleFamily {
  threshold,
  range,
  categorical,
  binary,
  derived,
  count,
  logical,
  temporal_distributional,
};

constexpr int kNumRuleFamilies = 8;

RuleFamily rule_family(const Rule& r);
const char* to_string(RuleFamily f);

// Number of nested logical operations; atomic rules have depth 0.
int logic_depth(const Rule& r);

// Every feature name the rule reads, with duplicates.
std::vector<std::string> referenced_features(const Rule& r);

// Human-readable one-liner ("BUN >= 30", "hr/map >= 1.5", ...).
std::string describe(const Rule& r);

}  // namespace nofm
