#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nofm/eval.hpp"
#include "test_support.hpp"

using namespace nofm;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// In-memory dataset builder covering the test catalog.
struct Builder {
  std::size_t n = 0;
  std::map<std::string, std::vector<double>> numeric;
  std::map<std::string, std::vector<int>> binary;  // -1 = missing
  std::map<std::string, std::vector<std::string>> categorical;  // "" = missing
  std::vector<int> labels;

  Dataset build() const {
    Dataset d;
    d.catalog = testing::make_test_catalog();
    d.n_rows = n;
    d.labels = BitVec(n);
    for (std::size_t i = 0; i < n; ++i)
      if (i < labels.size() && labels[i]) d.labels.set(i);
    d.group_index.assign(n, 0);
    d.group_names = {"g"};
    for (const FeatureInfo& f : d.catalog.features()) {
      switch (f.kind) {
        case FeatureKind::numeric: {
          NumericColumn col;
          col.values.assign(n, kNaN);
          col.present = BitVec(n);
          auto it = numeric.find(f.name);
          if (it != numeric.end())
            for (std::size_t i = 0; i < n; ++i) {
              col.values[i] = it->second[i];
              if (!std::isnan(it->second[i])) col.present.set(i);
            }
          d.column_of.push_back({FeatureKind::numeric, d.numeric.size()});
          d.numeric.push_back(std::move(col));
          break;
        }
        case FeatureKind::binary: {
          BinaryColumn col;
          col.values = BitVec(n);
          col.present = BitVec(n);
          auto it = binary.find(f.name);
          if (it != binary.end())
            for (std::size_t i = 0; i < n; ++i) {
              if (it->second[i] < 0) continue;
              col.present.set(i);
              if (it->second[i]) col.values.set(i);
            }
          d.column_of.push_back({FeatureKind::binary, d.binary.size()});
          d.binary.push_back(std::move(col));
          break;
        }
        case FeatureKind::categorical: {
          CategoricalColumn col;
          col.present = BitVec(n);
          col.codes.assign(n, -1);
          auto it = categorical.find(f.name);
          std::set<std::string> labels_seen;
          if (it != categorical.end())
            for (const std::string& s : it->second)
              if (!s.empty()) labels_seen.insert(s);
          col.dict.assign(labels_seen.begin(), labels_seen.end());
          if (it != categorical.end())
            for (std::size_t i = 0; i < n; ++i) {
              if (it->second[i].empty()) continue;
              col.codes[i] = col.code_of(it->second[i]);
              col.present.set(i);
            }
          d.column_of.push_back({FeatureKind::categorical, d.categorical.size()});
          d.categorical.push_back(std::move(col));
          break;
        }
      }
    }
    return d;
  }
};

// Row-by-row interpreter, the oracle the mask evaluator is checked against.
// Reads cells directly and resolves missingness the slow way.
struct Interpreter {
  const Dataset& d;
  const FeatureStats& stats;

  bool cmp(double v, CmpOp op, double c) const {
    switch (op) {
      case CmpOp::gt: return v > c;
      case CmpOp::ge: return v >= c;
      case CmpOp::lt: return v < c;
      case CmpOp::le: return v <= c;
    }
    return false;
  }

  bool eval(const Rule& r, std::size_t i) const {
    struct V {
      const Interpreter& in;
      std::size_t i;
      bool operator()(const NumericThreshold& n) {
        const NumericColumn& col = in.d.numeric_col(n.feature);
        return col.present.test(i) && in.cmp(col.values[i], n.op, n.threshold);
      }
      bool operator()(const NumericRange& n) {
        const NumericColumn& col = in.d.numeric_col(n.feature);
        return col.present.test(i) && col.values[i] >= n.low &&
               col.values[i] <= n.high;
      }
      bool operator()(const CategoricalIn& n) {
        const CategoricalColumn& col = in.d.categorical_col(n.feature);
        if (!col.present.test(i)) return false;
        const std::string& label = col.dict[col.codes[i]];
        return std::find(n.categories.begin(), n.categories.end(), label) !=
               n.categories.end();
      }
      bool operator()(const BinaryTrue& n) {
        const BinaryColumn& col = in.d.binary_col(n.feature);
        return col.present.test(i) && col.values.test(i);
      }
      bool operator()(const DerivedThreshold& n) {
        const NumericColumn& a = in.d.numeric_col(n.expr.left);
        const NumericColumn& b = in.d.numeric_col(n.expr.right);
        if (!a.present.test(i) || !b.present.test(i)) return false;
        if (n.expr.op == DerivedOp::ratio) {
          if (b.values[i] == 0.0) return false;
          return in.cmp(a.values[i] / b.values[i], n.op, n.threshold);
        }
        return in.cmp(a.values[i] - b.values[i], n.op, n.threshold);
      }
      bool operator()(const CountPresent& n) {
        int count = 0;
        for (const std::string& f : n.features) {
          const BinaryColumn& col = in.d.binary_col(f);
          if (col.present.test(i) && col.values.test(i)) ++count;
        }
        return count >= n.min_count;
      }
      bool operator()(const Logical& n) {
        if (n.op == BoolOp::logical_and) {
          for (const Rule& child : n.rules)
            if (!in.eval(child, i)) return false;
          return true;
        }
        for (const Rule& child : n.rules)
          if (in.eval(child, i)) return true;
        return false;
      }
      bool operator()(const PercentChange& n) {
        const NumericColumn& t0 = in.d.numeric_col(n.feature_t0);
        const NumericColumn& t1 = in.d.numeric_col(n.feature_t1);
        if (!t0.present.test(i) || !t1.present.test(i)) return false;
        if (t0.values[i] == 0.0) return false;
        double v = (t1.values[i] - t0.values[i]) / t0.values[i];
        if (n.direction == ChangeDir::decrease) v = -v;
        return in.cmp(v, n.op, n.pct);
      }
      bool operator()(const ZScoreThreshold& n) {
        const NumericColumn& col = in.d.numeric_col(n.feature);
        if (!col.present.test(i)) return false;
        const NumericStats& st = in.stats.numeric(n.feature);
        return in.cmp((col.values[i] - st.mean) / st.stddev, n.op, n.z);
      }
      bool operator()(const QuantileThreshold& n) {
        const NumericColumn& col = in.d.numeric_col(n.feature);
        if (!col.present.test(i)) return false;
        return in.cmp(col.values[i], n.op,
                      in.stats.numeric(n.feature).quantile(n.q));
      }
    };
    return std::visit(V{*this, i}, r.node);
  }
};

Dataset random_dataset(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(50, 20);
  Builder b;
  b.n = n;
  for (const char* name :
       {"hr", "map_bp", "lactate", "wbc", "creat__first", "creat__last"}) {
    std::vector<double> col(n);
    for (auto& v : col) {
      v = dist(rng);
      if (rng() % 12 == 0) v = kNaN;
      if (rng() % 30 == 0) v = 0.0;  // zero divisors
    }
    b.numeric[name] = std::move(col);
  }
  for (const char* name : {"vent", "smoker", "prior_icu"}) {
    std::vector<int> col(n);
    for (auto& v : col) v = rng() % 10 == 0 ? -1 : static_cast<int>(rng() % 2);
    b.binary[name] = std::move(col);
  }
  for (const char* name : {"admission_type", "sex"}) {
    const auto& cats = testing::categories_for(name);
    std::vector<std::string> col(n);
    for (auto& v : col)
      v = rng() % 10 == 0 ? "" : cats[rng() % cats.size()];
    b.categorical[name] = std::move(col);
  }
  b.labels.resize(n);
  for (auto& y : b.labels) y = rng() % 3 == 0;
  return b.build();
}

}  // namespace

TEST_CASE("threshold evaluation: missing is false") {
  Builder b;
  b.n = 3;
  b.numeric["hr"] = {3, kNaN, 7};
  b.labels = {0, 0, 1};
  const Dataset d = b.build();
  const FeatureStats stats = FeatureStats::fit(d);
  const CoverageMask mask =
      evaluate_rule(Rule{NumericThreshold{"hr", CmpOp::ge, 5}}, d, stats);
  CHECK_FALSE(mask.bits.test(0));
  CHECK_FALSE(mask.bits.test(1));
  CHECK(mask.bits.test(2));
  CHECK(mask.count() == 1);
  CHECK(mask.split == SplitTag::full);
}

TEST_CASE("mask evaluation matches the row interpreter on random rules") {
  const Dataset d = random_dataset(500, 31);
  const FeatureStats stats = FeatureStats::fit(d);
  const Interpreter interp{d, stats};
  testing::RuleFuzzer fuzz(d.catalog, 77);
  int evaluated = 0;
  for (int k = 0; k < 400; ++k) {
    const Rule r = fuzz.next(2);
    CoverageMask mask;
    try {
      mask = evaluate_rule(r, d, stats);
    } catch (const EvalError&) {
      continue;  // z-rule on a degenerate feature
    }
    ++evaluated;
    for (std::size_t i = 0; i < d.n_rows; ++i)
      CHECK(mask.bits.test(i) == interp.eval(r, i));
  }
  CHECK(evaluated > 300);
}

TEST_CASE("evaluation is pure: identical masks across repeats and backends") {
  const Dataset d = random_dataset(300, 5);
  const FeatureStats stats = FeatureStats::fit(d);
  testing::RuleFuzzer fuzz(d.catalog, 3);
  for (int k = 0; k < 50; ++k) {
    const Rule r = fuzz.next(1);
    try {
      const CoverageMask a = evaluate_rule(r, d, stats);
      const CoverageMask b = evaluate_rule(r, d, stats);
      CHECK(a.bits == b.bits);
      const auto backend = kernels::active_backend();
      kernels::force_backend(kernels::Backend::scalar);
      const CoverageMask c = evaluate_rule(r, d, stats);
      kernels::force_backend(backend);
      CHECK(a.bits == c.bits);
    } catch (const EvalError&) {
    }
  }
}

TEST_CASE("z-score rules on degenerate features raise UnusableStats") {
  Builder b;
  b.n = 4;
  b.numeric["hr"] = {5, 5, 5, 5};  // zero variance
  b.labels = {0, 1, 0, 1};
  const Dataset d = b.build();
  const FeatureStats stats = FeatureStats::fit(d);
  try {
    evaluate_rule(Rule{ZScoreThreshold{"hr", CmpOp::ge, 1.0}}, d, stats);
    FAIL("expected UnusableStats");
  } catch (const EvalError& e) {
    CHECK(e.code == EvalErrorCode::unusable_stats);
  }
}

TEST_CASE("auroc: separations, ties, and the pairwise oracle") {
  BitVec labels(4);
  labels.set(2);
  labels.set(3);
  const std::vector<double> separated = {0.1, 0.2, 0.8, 0.9};
  CHECK(auroc(separated, labels) == 1.0);
  const std::vector<double> equal = {1, 1, 1, 1};
  CHECK(auroc(equal, labels) == 0.5);

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 20 + rng() % 180;
    std::vector<double> scores(n);
    BitVec y(n);
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng() % 40) / 4.0;  // force ties
      if (rng() % 2) {
        y.set(i);
        has_pos = true;
      } else {
        has_neg = true;
      }
    }
    if (!has_pos || !has_neg) continue;
    // O(n^2) pairwise oracle with half credit for ties
    double credit = 0;
    std::uint64_t pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!y.test(i)) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (y.test(j)) continue;
        ++pairs;
        if (scores[i] > scores[j])
          credit += 1.0;
        else if (scores[i] == scores[j])
          credit += 0.5;
      }
    }
    const double expect = credit / static_cast<double>(pairs);
    CHECK(auroc(scores, y) == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("auroc invariances: monotone transforms and complement") {
  std::mt19937_64 rng(13);
  const std::size_t n = 200;
  std::vector<double> scores(n), negated(n), transformed(n);
  BitVec y(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = static_cast<double>(rng() % 50);
    negated[i] = -scores[i];
    transformed[i] = std::exp(scores[i] / 10.0) + 3.0;
    if (rng() % 3 == 0) y.set(i);
  }
  const double base = auroc(scores, y);
  CHECK(auroc(transformed, y) == doctest::Approx(base).epsilon(1e-14));
  CHECK(auroc(negated, y) == doctest::Approx(1.0 - base).epsilon(1e-14));
}

TEST_CASE("positive-class jaccard with the set oracle") {
  std::mt19937_64 rng(17);
  const std::size_t n = 257;
  BitVec labels(n);
  for (std::size_t i = 0; i < n; ++i)
    if (rng() % 3 == 0) labels.set(i);
  for (int trial = 0; trial < 100; ++trial) {
    CoverageMask a, b;
    a.bits = BitVec(n);
    b.bits = BitVec(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (rng() % 2) a.bits.set(i);
      if (rng() % 2) b.bits.set(i);
    }
    std::set<std::size_t> sa, sb;
    for (std::size_t i = 0; i < n; ++i) {
      if (a.bits.test(i) && labels.test(i)) sa.insert(i);
      if (b.bits.test(i) && labels.test(i)) sb.insert(i);
    }
    std::set<std::size_t> inter, uni;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(),
                          std::inserter(inter, inter.begin()));
    std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(),
                   std::inserter(uni, uni.begin()));
    const double expect =
        uni.empty() ? 1.0
                    : static_cast<double>(inter.size()) /
                          static_cast<double>(uni.size());
    CHECK(jaccard_positive(a, b, labels) == expect);
  }
}

TEST_CASE("jaccard conventions: identity, disjoint, empty union") {
  const std::size_t n = 64;
  BitVec labels(n, true);
  CoverageMask a, b;
  a.bits = BitVec(n);
  b.bits = BitVec(n);
  a.bits.set(1);
  a.bits.set(2);
  CHECK(jaccard_positive(a, a, labels) == 1.0);
  b.bits.set(10);
  CHECK(jaccard_positive(a, b, labels) == 0.0);
  CoverageMask empty1, empty2;
  empty1.bits = BitVec(n);
  empty2.bits = BitVec(n);
  CHECK(jaccard_positive(empty1, empty2, labels) == 1.0);
}

TEST_CASE("checklist scoring equals the sum of individual masks") {
  const Dataset d = random_dataset(300, 23);
  const FeatureStats stats = FeatureStats::fit(d);
  testing::RuleFuzzer fuzz(d.catalog, 29);
  std::vector<Rule> rules;
  while (rules.size() < 5) {
    const Rule r = fuzz.next(1);
    try {
      evaluate_rule(r, d, stats);
      rules.push_back(r);
    } catch (const EvalError&) {
    }
  }
  const ChecklistScores scores = score_rules(rules, d, stats);
  std::vector<int> expect(d.n_rows, 0);
  for (const Rule& r : rules) {
    const CoverageMask mask = evaluate_rule(r, d, stats);
    for (std::size_t i = 0; i < d.n_rows; ++i)
      if (mask.bits.test(i)) ++expect[i];
  }
  CHECK(scores.score == expect);
  for (std::size_t i = 0; i < d.n_rows; ++i)
    CHECK(scores.p_hat[i] == doctest::Approx(expect[i] / 5.0));
}

TEST_CASE("threshold selection: exact separation picks K=2") {
  const std::vector<int> scores = {0, 1, 2, 3};
  BitVec labels(4);
  labels.set(2);
  labels.set(3);
  const auto [k, report] =
      select_threshold(scores, labels, 3, ThresholdObjective::youden);
  CHECK(k == 2);
  CHECK(report.youden_j == 1.0);
  CHECK(report.youden_j == report.sensitivity + report.specificity - 1.0);
}

TEST_CASE("threshold selection: constant scores fall back to K=0") {
  const std::vector<int> scores = {2, 2, 2, 2};
  BitVec labels(4);
  labels.set(0);
  const auto [k, report] =
      select_threshold(scores, labels, 4, ThresholdObjective::youden);
  CHECK(k == 0);
  CHECK(report.youden_j == 0.0);
}

TEST_CASE("threshold selection matches exhaustive enumeration") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 500; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 8);
    const std::size_t n = 30 + rng() % 100;
    std::vector<int> scores(n);
    BitVec labels(n);
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<int>(rng() % (m + 1));
      if (rng() % 3 == 0) {
        labels.set(i);
        pos = true;
      } else {
        neg = true;
      }
    }
    if (!pos || !neg) continue;
    const auto [k, report] =
        select_threshold(scores, labels, m, ThresholdObjective::youden);

    // independent enumeration of every K
    double best_j = -2;
    int best_k = 0;
    const double n_pos = static_cast<double>(labels.count());
    const double n_neg = static_cast<double>(n - labels.count());
    for (int kk = 0; kk <= m; ++kk) {
      double tp = 0, fp = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (scores[i] >= kk) (labels.test(i) ? tp : fp) += 1;
      const double j = tp / n_pos + (n_neg - fp) / n_neg - 1.0;
      if (j > best_j) {
        best_j = j;
        best_k = kk;
      }
    }
    CHECK(k == best_k);
    CHECK(report.youden_j == doctest::Approx(best_j).epsilon(1e-12));
    CHECK(report.youden_j == report.sensitivity + report.specificity - 1.0);
  }
}

TEST_CASE("coverage at K shrinks as K grows") {
  std::mt19937_64 rng(41);
  const std::size_t n = 500;
  std::vector<int> scores(n);
  for (auto& s : scores) s = static_cast<int>(rng() % 7);
  std::uint64_t prev = n + 1;
  for (int k = 0; k <= 6; ++k) {
    std::uint64_t covered = 0;
    for (int s : scores)
      if (s >= k) ++covered;
    CHECK(covered <= prev);
    prev = covered;
  }
}

TEST_CASE("risk table accounting and monotonicity flags") {
  const std::vector<int> scores = {0, 0, 0, 1, 1, 2, 2, 2, 3};
  BitVec labels(9);
  labels.set(4);  // score 1: 1/2
  labels.set(5);  // score 2: 2/3
  labels.set(6);
  labels.set(8);  // score 3: 1/1
  const RiskTable table = risk_table(scores, labels);
  REQUIRE(table.rows.size() == 4);
  std::uint64_t total = 0;
  for (const RiskRow& r : table.rows) {
    total += r.n;
    CHECK(r.rate >= 0.0);
    CHECK(r.rate <= 1.0);
  }
  CHECK(total == 9);
  CHECK(table.rows[0].rate == 0.0);
  CHECK(table.rows[1].rate == 0.5);
  CHECK(table.strictly_increasing());

  // single level present -> one-row table
  const std::vector<int> flat = {2, 2, 2};
  BitVec y(3);
  y.set(0);
  const RiskTable single = risk_table(flat, y);
  CHECK(single.rows.size() == 1);

  // a planted dip is flagged with both bin sizes
  const std::vector<int> dip_scores = {0, 0, 1, 1, 1, 1};
  BitVec dip_labels(6);
  dip_labels.set(0);  // score 0 rate 0.5, score 1 rate 0.25
  dip_labels.set(2);
  const RiskTable dipped = risk_table(dip_scores, dip_labels);
  REQUIRE(dipped.non_monotone.size() == 1);
  CHECK(dipped.non_monotone[0].lower_score == 0);
  CHECK(dipped.non_monotone[0].n_lower == 2);
  CHECK(dipped.non_monotone[0].n_higher == 4);
}

TEST_CASE("missingness forces every family to false") {
  // one row per family: all inputs present and the predicate true, then we
  // mask each required input in turn and demand false
  Builder b;
  b.n = 1;
  b.numeric["hr"] = {120};
  b.numeric["map_bp"] = {60};
  b.numeric["lactate"] = {4.0};
  b.numeric["creat__first"] = {1.0};
  b.numeric["creat__last"] = {1.6};
  b.numeric["wbc"] = {15};
  b.binary["vent"] = {1};
  b.binary["smoker"] = {1};
  b.categorical["admission_type"] = {"emergency"};
  b.labels = {1};
  const Dataset full = b.build();

  Builder stats_b = b;  // spread so z-rules are usable
  stats_b.n = 3;
  stats_b.numeric["hr"] = {120, 80, 100};
  stats_b.numeric["map_bp"] = {60, 80, 70};
  stats_b.numeric["lactate"] = {4.0, 1.0, 2.0};
  stats_b.numeric["creat__first"] = {1.0, 1.1, 0.9};
  stats_b.numeric["creat__last"] = {1.6, 1.0, 1.2};
  stats_b.numeric["wbc"] = {15, 8, 10};
  stats_b.binary["vent"] = {1, 0, 0};
  stats_b.binary["smoker"] = {1, 0, 1};
  stats_b.categorical["admission_type"] = {"emergency", "elective", "urgent"};
  stats_b.labels = {1, 0, 0};
  const FeatureStats stats = FeatureStats::fit(stats_b.build());

  struct Case {
    Rule rule;
    std::vector<std::string> required;
  };
  const std::vector<Case> cases = {
      {Rule{NumericThreshold{"hr", CmpOp::ge, 100}}, {"hr"}},
      {Rule{NumericRange{"map_bp", 50, 65}}, {"map_bp"}},
      {Rule{CategoricalIn{"admission_type", {"emergency", "urgent"}}},
       {"admission_type"}},
      {Rule{BinaryTrue{"vent"}}, {"vent"}},
      {Rule{DerivedThreshold{{DerivedOp::ratio, "hr", "map_bp"}, CmpOp::ge, 1.5}},
       {"hr", "map_bp"}},
      {Rule{CountPresent{{"smoker", "vent"}, 2}}, {"vent", "smoker"}},
      {Rule{Logical{BoolOp::logical_and,
                    {Rule{NumericThreshold{"hr", CmpOp::ge, 100}},
                     Rule{BinaryTrue{"vent"}}}}},
       {"hr", "vent"}},
      {Rule{Logical{BoolOp::logical_or,
                    {Rule{NumericThreshold{"hr", CmpOp::ge, 100}},
                     Rule{NumericThreshold{"lactate", CmpOp::ge, 100}}}}},
       {"hr"}},  // only the true child's input is required
      {Rule{PercentChange{"creat__first", "creat__last", 0.3, CmpOp::ge,
                          ChangeDir::increase}},
       {"creat__first", "creat__last"}},
      {Rule{ZScoreThreshold{"lactate", CmpOp::ge, 0.5}}, {"lactate"}},
      {Rule{QuantileThreshold{"wbc", CmpOp::ge, 0.75}}, {"wbc"}},
  };

  for (const Case& c : cases) {
    REQUIRE(evaluate_rule(c.rule, full, stats).bits.test(0));
    for (const std::string& feature : c.required) {
      Builder masked = b;
      if (masked.numeric.count(feature))
        masked.numeric[feature] = {kNaN};
      else if (masked.binary.count(feature))
        masked.binary[feature] = {-1};
      else
        masked.categorical[feature] = {""};
      const Dataset d = masked.build();
      CHECK_FALSE(evaluate_rule(c.rule, d, stats).bits.test(0));
    }
  }
}
