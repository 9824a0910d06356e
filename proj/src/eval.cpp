#include "nofm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nofm/kernels.hpp"

namespace nofm {

namespace {

kernels::Cmp to_kernel(CmpOp op) {
  switch (op) {
    case CmpOp::gt: return kernels::Cmp::gt;
    case CmpOp::ge: return kernels::Cmp::ge;
    case CmpOp::lt: return kernels::Cmp::lt;
    case CmpOp::le: return kernels::Cmp::le;
  }
  return kernels::Cmp::gt;
}

// Resolves a z-score or quantile rule to a plain threshold on the raw value.
// Valid because sigma > 0 preserves the comparison direction.
double resolve_z(const NumericStats& st, const std::string& feature, double z) {
  if (!st.usable)
    throw EvalError(EvalErrorCode::unusable_stats,
                    feature + " has no usable stats");
  if (st.stddev == 0.0)
    throw EvalError(EvalErrorCode::unusable_stats,
                    feature + " has zero variance");
  return st.mean + z * st.stddev;
}

double resolve_q(const NumericStats& st, const std::string& feature, double q) {
  if (!st.usable)
    throw EvalError(EvalErrorCode::unusable_stats,
                    feature + " has no usable stats");
  return st.quantile(q);
}

struct Evaluator {
  const Dataset& d;
  const FeatureStats& stats;

  BitVec eval(const Rule& r) const {
    struct Visitor {
      const Evaluator& ev;
      BitVec operator()(const NumericThreshold& n) {
        const NumericColumn& col = ev.d.numeric_col(n.feature);
        BitVec out(ev.d.n_rows);
        kernels::cmp_threshold(col.values.data(), col.present.words(),
                               ev.d.n_rows, to_kernel(n.op), n.threshold,
                               out.words());
        return out;
      }
      BitVec operator()(const NumericRange& n) {
        const NumericColumn& col = ev.d.numeric_col(n.feature);
        BitVec out(ev.d.n_rows);
        kernels::cmp_range(col.values.data(), col.present.words(), ev.d.n_rows,
                           n.low, n.high, out.words());
        return out;
      }
      BitVec operator()(const CategoricalIn& n) {
        const CategoricalColumn& col = ev.d.categorical_col(n.feature);
        std::vector<bool> hit(col.dict.size(), false);
        for (const std::string& c : n.categories) {
          const int code = col.code_of(c);
          if (code >= 0) hit[code] = true;
        }
        BitVec out(ev.d.n_rows);
        for (std::size_t i = 0; i < ev.d.n_rows; ++i)
          if (col.codes[i] >= 0 && hit[col.codes[i]]) out.set(i);
        return out;  // present mask implicit: missing rows have code -1
      }
      BitVec operator()(const BinaryTrue& n) {
        const BinaryColumn& col = ev.d.binary_col(n.feature);
        BitVec out = col.values;
        out &= col.present;
        return out;
      }
      BitVec operator()(const DerivedThreshold& n) {
        const NumericColumn& a = ev.d.numeric_col(n.expr.left);
        const NumericColumn& b = ev.d.numeric_col(n.expr.right);
        BitVec out(ev.d.n_rows);
        if (n.expr.op == DerivedOp::ratio)
          kernels::cmp_ratio(a.values.data(), b.values.data(),
                             a.present.words(), b.present.words(), ev.d.n_rows,
                             to_kernel(n.op), n.threshold, out.words());
        else
          kernels::cmp_diff(a.values.data(), b.values.data(),
                            a.present.words(), b.present.words(), ev.d.n_rows,
                            to_kernel(n.op), n.threshold, out.words());
        return out;
      }
      BitVec operator()(const CountPresent& n) {
        std::vector<std::uint16_t> counts(ev.d.n_rows, 0);
        for (const std::string& f : n.features) {
          const BinaryColumn& col = ev.d.binary_col(f);
          for (std::size_t i = 0; i < ev.d.n_rows; ++i)
            if (col.present.test(i) && col.values.test(i)) ++counts[i];
        }
        BitVec out(ev.d.n_rows);
        for (std::size_t i = 0; i < ev.d.n_rows; ++i)
          if (counts[i] >= n.min_count) out.set(i);
        return out;
      }
      BitVec operator()(const Logical& n) {
        BitVec out = ev.eval(n.rules[0]);
        for (std::size_t i = 1; i < n.rules.size(); ++i) {
          const BitVec child = ev.eval(n.rules[i]);
          if (n.op == BoolOp::logical_and)
            out &= child;
          else
            out |= child;
        }
        return out;
      }
      BitVec operator()(const PercentChange& n) {
        const NumericColumn& x0 = ev.d.numeric_col(n.feature_t0);
        const NumericColumn& x1 = ev.d.numeric_col(n.feature_t1);
        BitVec out(ev.d.n_rows);
        kernels::cmp_pct_change(
            x0.values.data(), x1.values.data(), x0.present.words(),
            x1.present.words(), ev.d.n_rows,
            n.direction == ChangeDir::increase ? 1.0 : -1.0, to_kernel(n.op),
            n.pct, out.words());
        return out;
      }
      BitVec operator()(const ZScoreThreshold& n) {
        const NumericColumn& col = ev.d.numeric_col(n.feature);
        const double c = resolve_z(ev.stats.numeric(n.feature), n.feature, n.z);
        BitVec out(ev.d.n_rows);
        kernels::cmp_threshold(col.values.data(), col.present.words(),
                               ev.d.n_rows, to_kernel(n.op), c, out.words());
        return out;
      }
      BitVec operator()(const QuantileThreshold& n) {
        const NumericColumn& col = ev.d.numeric_col(n.feature);
        const double c = resolve_q(ev.stats.numeric(n.feature), n.feature, n.q);
        BitVec out(ev.d.n_rows);
        kernels::cmp_threshold(col.values.data(), col.present.words(),
                               ev.d.n_rows, to_kernel(n.op), c, out.words());
        return out;
      }
    };
    return std::visit(Visitor{*this}, r.node);
  }
};

}  // namespace

CoverageMask evaluate_rule(const Rule& r, const Dataset& d,
                           const FeatureStats& stats) {
  Evaluator ev{d, stats};
  CoverageMask mask;
  mask.bits = ev.eval(r);
  mask.bits.clear_tail();
  mask.split = d.split;
  return mask;
}

namespace {

double auroc_from_sorted(const std::vector<std::pair<double, bool>>& sorted) {
  // Walk runs of tied scores; positives in a run get credit for all
  // negatives below plus half the negatives inside the run. Counts are
  // integers and halves, so the sum is exact in double well past any
  // realistic n.
  std::uint64_t n_pos = 0, n_neg = 0;
  for (const auto& [s, y] : sorted) (y ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw EvalError(EvalErrorCode::single_class,
                    "need both classes for AUROC");
  double credit = 0;
  std::uint64_t neg_below = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    std::uint64_t run_pos = 0, run_neg = 0;
    while (j < sorted.size() && sorted[j].first == sorted[i].first) {
      (sorted[j].second ? run_pos : run_neg)++;
      ++j;
    }
    credit += static_cast<double>(run_pos) *
              (static_cast<double>(neg_below) +
               0.5 * static_cast<double>(run_neg));
    neg_below += run_neg;
    i = j;
  }
  return credit /
         (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace

double auroc(std::span<const double> scores, const BitVec& labels) {
  if (scores.size() != labels.size())
    throw EvalError(EvalErrorCode::length_mismatch, "scores/labels mismatch");
  std::vector<std::pair<double, bool>> sorted(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    sorted[i] = {scores[i], labels.test(i)};
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return auroc_from_sorted(sorted);
}

double auroc_int(std::span<const int> scores, const BitVec& labels) {
  std::vector<double> s(scores.begin(), scores.end());
  return auroc(s, labels);
}

double jaccard(const BitVec& a, const BitVec& b) {
  const std::uint64_t unions = BitVec::or_count(a, b);
  if (unions == 0) return 1.0;  // by convention: maximally redundant
  return static_cast<double>(BitVec::and_count(a, b)) /
         static_cast<double>(unions);
}

double jaccard_positive(const CoverageMask& a, const CoverageMask& b,
                        const BitVec& labels) {
  if (a.size() != b.size() || a.size() != labels.size())
    throw EvalError(EvalErrorCode::length_mismatch, "mask length mismatch");
  if (a.split != b.split)
    throw EvalError(EvalErrorCode::length_mismatch,
                    "masks come from different splits");
  BitVec ca = a.bits;
  ca &= labels;
  BitVec cb = b.bits;
  cb &= labels;
  return jaccard(ca, cb);
}

ChecklistScores score_rules(const std::vector<Rule>& rules, const Dataset& d,
                            const FeatureStats& stats) {
  if (rules.empty())
    throw EvalError(EvalErrorCode::empty_checklist, "checklist has no rules");
  ChecklistScores out;
  out.n_rules = static_cast<int>(rules.size());
  out.score.assign(d.n_rows, 0);
  for (const Rule& r : rules) {
    const CoverageMask mask = evaluate_rule(r, d, stats);
    for (std::size_t w = 0; w < mask.bits.nwords(); ++w) {
      std::uint64_t bits = mask.bits.words()[w];
      while (bits) {
        const int b = std::countr_zero(bits);
        ++out.score[w * 64 + b];
        bits &= bits - 1;
      }
    }
  }
  out.p_hat.resize(d.n_rows);
  for (std::size_t i = 0; i < d.n_rows; ++i)
    out.p_hat[i] =
        static_cast<double>(out.score[i]) / static_cast<double>(out.n_rules);
  return out;
}

const char* to_string(ThresholdObjective o) {
  switch (o) {
    case ThresholdObjective::youden: return "youden";
    case ThresholdObjective::f1: return "f1";
    case ThresholdObjective::balanced_accuracy: return "balanced_accuracy";
    case ThresholdObjective::sens_at_spec: return "sens_at_spec";
  }
  return "?";
}

ThresholdObjective threshold_objective_from_string(const std::string& s) {
  if (s == "youden") return ThresholdObjective::youden;
  if (s == "f1") return ThresholdObjective::f1;
  if (s == "balanced_accuracy") return ThresholdObjective::balanced_accuracy;
  if (s == "sens_at_spec") return ThresholdObjective::sens_at_spec;
  throw ConfigError("unknown threshold objective: " + s);
}

bool RiskTable::strictly_increasing() const {
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!(rows[i].rate > rows[i - 1].rate)) return false;
  return true;
}

nlohmann::json RiskTable::to_json() const {
  nlohmann::json jrows = nlohmann::json::array();
  for (const RiskRow& r : rows)
    jrows.push_back({{"score", r.score},
                     {"n", r.n},
                     {"events", r.events},
                     {"rate", r.rate}});
  nlohmann::json flags = nlohmann::json::array();
  for (const NonMonotonePair& p : non_monotone)
    flags.push_back({{"lower_score", p.lower_score},
                     {"higher_score", p.higher_score},
                     {"rate_drop", p.rate_drop},
                     {"n_lower", p.n_lower},
                     {"n_higher", p.n_higher}});
  return nlohmann::json{{"rows", std::move(jrows)},
                        {"non_monotone", std::move(flags)}};
}

RiskTable risk_table(std::span<const int> scores, const BitVec& labels) {
  if (scores.size() != labels.size())
    throw EvalError(EvalErrorCode::length_mismatch, "scores/labels mismatch");
  std::map<int, RiskRow> levels;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    RiskRow& row = levels[scores[i]];
    row.score = scores[i];
    ++row.n;
    if (labels.test(i)) ++row.events;
  }
  RiskTable table;
  for (auto& [score, row] : levels) {
    row.rate = static_cast<double>(row.events) / static_cast<double>(row.n);
    table.rows.push_back(row);
  }
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    const RiskRow& lo = table.rows[i - 1];
    const RiskRow& hi = table.rows[i];
    if (hi.rate < lo.rate)
      table.non_monotone.push_back(
          {lo.score, hi.score, lo.rate - hi.rate, lo.n, hi.n});
  }
  return table;
}

nlohmann::json EvalReport::to_json() const {
  return nlohmann::json{{"auroc", auroc},
                        {"threshold", threshold},
                        {"sensitivity", sensitivity},
                        {"specificity", specificity},
                        {"youden_j", youden_j},
                        {"risk_table", risk.to_json()}};
}

std::pair<int, EvalReport> select_threshold(std::span<const int> scores,
                                            const BitVec& labels, int m,
                                            ThresholdObjective objective,
                                            double spec_floor) {
  if (scores.size() != labels.size())
    throw EvalError(EvalErrorCode::length_mismatch, "scores/labels mismatch");
  const std::uint64_t n_pos = labels.count();
  const std::uint64_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw EvalError(EvalErrorCode::single_class,
                    "need both classes to pick a threshold");

  // Tally once, then sweep K with suffix sums.
  std::vector<std::uint64_t> pos_at(m + 1, 0), tot_at(m + 1, 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int s = std::clamp(scores[i], 0, m);
    ++tot_at[s];
    if (labels.test(i)) ++pos_at[s];
  }

  int best_k = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  double best_sens = 0, best_spec = 0;
  bool any_meets_floor = false;

  std::uint64_t tp = n_pos, fp = n_neg;  // predictions at K=0: everyone
  for (int k = 0; k <= m; ++k) {
    if (k > 0) {
      tp -= pos_at[k - 1];
      fp -= tot_at[k - 1] - pos_at[k - 1];
    }
    const double sens = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double spec =
        static_cast<double>(n_neg - fp) / static_cast<double>(n_neg);
    double value = 0;
    switch (objective) {
      case ThresholdObjective::youden:
        value = sens + spec - 1.0;
        break;
      case ThresholdObjective::balanced_accuracy:
        value = 0.5 * (sens + spec);
        break;
      case ThresholdObjective::f1: {
        const std::uint64_t predicted = tp + fp;
        value = predicted == 0
                    ? 0.0
                    : 2.0 * static_cast<double>(tp) /
                          static_cast<double>(predicted + n_pos);
        break;
      }
      case ThresholdObjective::sens_at_spec: {
        // Prefer any K meeting the floor; among those maximize sensitivity.
        const bool meets = spec >= spec_floor;
        if (meets && !any_meets_floor) {
          any_meets_floor = true;
          best_value = -std::numeric_limits<double>::infinity();
        }
        if (meets == any_meets_floor)
          value = meets ? sens : spec;
        else
          value = -std::numeric_limits<double>::infinity();
        break;
      }
    }
    if (value > best_value) {
      best_value = value;
      best_k = k;
      best_sens = sens;
      best_spec = spec;
    }
  }

  EvalReport report;
  report.threshold = best_k;
  report.sensitivity = best_sens;
  report.specificity = best_spec;
  report.youden_j = best_sens + best_spec - 1.0;
  report.auroc = auroc_int(scores, labels);
  report.risk = risk_table(scores, labels);
  return {best_k, report};
}

}  // namespace nofm
