#include "nofm/propose.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

#include "nofm/remote.hpp"
#include "nofm/rule_io.hpp"

namespace nofm {

namespace {

double round_sig3(double v) {
  if (v == 0.0 || !std::isfinite(v)) return 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return std::strtod(buf, nullptr);
}

struct NumFeat {
  std::string name;
  std::vector<std::pair<double, double>> quantiles;  // (q, value)
  double mean = 0, stddev = 0;
  bool usable = false;
};

// The proposer's entire view of the data, decoded from the aggregate
// context payload.
struct DigestView {
  std::vector<NumFeat> numerics;
  std::vector<std::pair<std::string, std::vector<std::string>>> categoricals;
  std::vector<std::string> binaries;
  std::vector<std::pair<std::string, std::string>> temporal_pairs;
  FeatureCatalog catalog;
  std::vector<Rule> pool_atomics;  // top retained atomic rules, by AUROC
};

DigestView parse_digest(const ProposalContext& ctx) {
  DigestView view;
  view.catalog = FeatureCatalog::from_json(ctx.catalog_digest);

  if (ctx.aggregate_insights.contains("features")) {
    for (const auto& f : ctx.aggregate_insights["features"]) {
      const std::string name = f.at("name").get<std::string>();
      const std::string kind = f.at("kind").get<std::string>();
      if (kind == "numeric") {
        NumFeat nf;
        nf.name = name;
        if (f.contains("quantiles")) {
          nf.usable = true;
          nf.mean = f.value("mean", 0.0);
          nf.stddev = f.value("stddev", 0.0);
          for (const auto& [key, value] : f["quantiles"].items())
            nf.quantiles.emplace_back(std::stod(key.substr(1)) / 100.0,
                                      value.get<double>());
          std::sort(nf.quantiles.begin(), nf.quantiles.end());
        }
        view.numerics.push_back(std::move(nf));
      } else if (kind == "categorical") {
        std::vector<std::string> cats;
        if (f.contains("category_counts"))
          for (const auto& [label, count] : f["category_counts"].items())
            cats.push_back(label);
        view.categoricals.emplace_back(name, std::move(cats));
      } else if (kind == "binary") {
        view.binaries.push_back(name);
      }
    }
  }

  std::set<std::string> numeric_names;
  for (const NumFeat& nf : view.numerics) numeric_names.insert(nf.name);
  for (const NumFeat& nf : view.numerics) {
    const auto pos = nf.name.rfind("__first");
    if (pos == std::string::npos || pos + 7 != nf.name.size()) continue;
    const std::string last = nf.name.substr(0, pos) + "__last";
    if (numeric_names.count(last)) view.temporal_pairs.emplace_back(nf.name, last);
  }

  if (ctx.pool_summary.contains("rules")) {
    std::vector<std::pair<double, Rule>> scored;
    for (const auto& entry : ctx.pool_summary["rules"]) {
      try {
        Rule r = rule_from_json(entry.at("rule"), view.catalog,
                                std::max(ctx.logic_depth, 1));
        if (logic_depth(r) == 0)
          scored.emplace_back(entry.value("auroc", 0.0), std::move(r));
      } catch (const RuleError&) {
        // stale pool entries are simply not used for composition
      }
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; i < scored.size() && i < 8; ++i)
      view.pool_atomics.push_back(std::move(scored[i].second));
  }
  return view;
}

class Sampler {
 public:
  Sampler(const DigestView& view, const ProposalContext& ctx,
          std::uint64_t seed)
      : view_(view), ctx_(ctx), rng_(seed) {}

  std::vector<RuleFamily> feasible_families() const {
    std::vector<RuleFamily> out;
    const bool have_numeric = usable_numeric_count() > 0;
    if (have_numeric) {
      out.push_back(RuleFamily::threshold);
      out.push_back(RuleFamily::range);
      out.push_back(RuleFamily::temporal_distributional);
    }
    if (!view_.categoricals.empty()) {
      for (const auto& [name, cats] : view_.categoricals)
        if (!cats.empty()) {
          out.push_back(RuleFamily::categorical);
          break;
        }
    }
    if (!view_.binaries.empty()) {
      out.push_back(RuleFamily::binary);
      out.push_back(RuleFamily::count);
    }
    if (usable_numeric_count() >= 2) out.push_back(RuleFamily::derived);
    if (ctx_.logic_depth >= 1 && (have_numeric || !view_.binaries.empty()))
      out.push_back(RuleFamily::logical);
    return out;
  }

  Rule sample(RuleFamily family) {
    switch (family) {
      case RuleFamily::threshold: return sample_threshold();
      case RuleFamily::range: return sample_range();
      case RuleFamily::categorical: return sample_categorical();
      case RuleFamily::binary: return sample_binary();
      case RuleFamily::derived: return sample_derived();
      case RuleFamily::count: return sample_count();
      case RuleFamily::logical: return sample_logical();
      case RuleFamily::temporal_distributional: return sample_temporal();
    }
    return sample_threshold();
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::size_t usable_numeric_count() const {
    std::size_t n = 0;
    for (const NumFeat& f : view_.numerics)
      if (f.usable && !f.quantiles.empty()) ++n;
    return n;
  }

  const NumFeat& pick_numeric() {
    std::vector<const NumFeat*> usable;
    for (const NumFeat& f : view_.numerics)
      if (f.usable && !f.quantiles.empty()) usable.push_back(&f);
    return *usable[rng_() % usable.size()];
  }

  std::pair<double, double> pick_quantile(const NumFeat& f) {
    return f.quantiles[rng_() % f.quantiles.size()];
  }

  // Thresholds fire on the tail the cutpoint carves off; a small fraction
  // are flipped so both risk directions stay reachable.
  CmpOp tail_op(double q) {
    const bool upper = q >= 0.5;
    const bool strict = rng_() % 2 == 0;
    bool flip = rng_() % 10 == 0;
    if (upper != flip) return strict ? CmpOp::gt : CmpOp::ge;
    return strict ? CmpOp::lt : CmpOp::le;
  }

  Rule sample_threshold() {
    const NumFeat& f = pick_numeric();
    const auto [q, value] = pick_quantile(f);
    return Rule{NumericThreshold{f.name, tail_op(q), round_sig3(value)}};
  }

  Rule sample_range() {
    const NumFeat& f = pick_numeric();
    auto a = pick_quantile(f);
    auto b = pick_quantile(f);
    if (a.second > b.second) std::swap(a, b);
    double lo = round_sig3(a.second);
    double hi = round_sig3(b.second);
    if (lo > hi) std::swap(lo, hi);
    return Rule{NumericRange{f.name, lo, hi}};
  }

  Rule sample_categorical() {
    std::vector<std::size_t> nonempty;
    for (std::size_t i = 0; i < view_.categoricals.size(); ++i)
      if (!view_.categoricals[i].second.empty()) nonempty.push_back(i);
    const auto& [name, cats] = view_.categoricals[nonempty[rng_() % nonempty.size()]];
    std::set<std::string> chosen;
    for (const std::string& c : cats)
      if (rng_() % 2) chosen.insert(c);
    if (chosen.empty()) chosen.insert(cats[rng_() % cats.size()]);
    return Rule{CategoricalIn{name, {chosen.begin(), chosen.end()}}};
  }

  Rule sample_binary() {
    return Rule{BinaryTrue{view_.binaries[rng_() % view_.binaries.size()]}};
  }

  Rule sample_derived() {
    const NumFeat& a = pick_numeric();
    const NumFeat* b = &pick_numeric();
    for (int tries = 0; tries < 8 && b->name == a.name; ++tries)
      b = &pick_numeric();
    if (b->name == a.name) return sample_threshold();
    const bool ratio = rng_() % 2 == 0;
    static constexpr double kFactors[] = {0.8, 0.9, 1.0, 1.1, 1.25, 1.5};
    const CmpOp op = rng_() % 2 ? CmpOp::ge : CmpOp::le;
    if (ratio) {
      const double med_a = median_of(a);
      const double med_b = median_of(*b);
      double c = med_b != 0.0 ? med_a / med_b : 1.0;
      c *= kFactors[rng_() % 6];
      return Rule{DerivedThreshold{{DerivedOp::ratio, a.name, b->name}, op,
                                   round_sig3(c)}};
    }
    const auto qa = pick_quantile(a);
    const auto qb = pick_quantile(*b);
    return Rule{DerivedThreshold{{DerivedOp::difference, a.name, b->name}, op,
                                 round_sig3(qa.second - qb.second)}};
  }

  double median_of(const NumFeat& f) {
    for (const auto& [q, v] : f.quantiles)
      if (q == 0.5) return v;
    return f.quantiles[f.quantiles.size() / 2].second;
  }

  Rule sample_count() {
    const std::size_t n = view_.binaries.size();
    const std::size_t size = std::min<std::size_t>(n, 2 + rng_() % 3);
    std::vector<std::string> names = view_.binaries;
    std::shuffle(names.begin(), names.end(), rng_);
    names.resize(std::max<std::size_t>(1, size));
    std::sort(names.begin(), names.end());
    const int min_count = 1 + static_cast<int>(rng_() % names.size());
    return Rule{CountPresent{std::move(names), min_count}};
  }

  Rule sample_logical() {
    Rule a = view_.pool_atomics.size() >= 2
                 ? view_.pool_atomics[rng_() % view_.pool_atomics.size()]
                 : sample_atomic();
    Rule b = view_.pool_atomics.size() >= 2
                 ? view_.pool_atomics[rng_() % view_.pool_atomics.size()]
                 : sample_atomic();
    for (int tries = 0; tries < 8 && a == b; ++tries)
      b = view_.pool_atomics.size() >= 2
              ? view_.pool_atomics[rng_() % view_.pool_atomics.size()]
              : sample_atomic();
    if (a == b) return a;
    const BoolOp op = rng_() % 2 ? BoolOp::logical_and : BoolOp::logical_or;
    std::vector<Rule> children;
    children.push_back(std::move(a));
    children.push_back(std::move(b));
    return Rule{Logical{op, std::move(children)}};
  }

  Rule sample_atomic() {
    if (usable_numeric_count() > 0 && (view_.binaries.empty() || rng_() % 2))
      return sample_threshold();
    if (!view_.binaries.empty()) return sample_binary();
    return sample_threshold();
  }

  Rule sample_temporal() {
    const int kind = static_cast<int>(rng_() % 3);
    if (kind == 0 && !view_.temporal_pairs.empty()) {
      static constexpr double kPcts[] = {0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5};
      const auto& [first, last] = view_.temporal_pairs[rng_() % view_.temporal_pairs.size()];
      const ChangeDir dir =
          rng_() % 2 ? ChangeDir::increase : ChangeDir::decrease;
      return Rule{PercentChange{first, last, kPcts[rng_() % 7],
                                rng_() % 4 == 0 ? CmpOp::gt : CmpOp::ge, dir}};
    }
    if (kind == 1) {
      // z-score rule on a feature with spread
      for (int tries = 0; tries < 8; ++tries) {
        const NumFeat& f = pick_numeric();
        if (f.stddev <= 0) continue;
        static constexpr double kZ[] = {0.5, 1.0, 1.5, 2.0};
        const double z = kZ[rng_() % 4] * (rng_() % 4 == 0 ? -1.0 : 1.0);
        const CmpOp op = z >= 0 ? (rng_() % 2 ? CmpOp::ge : CmpOp::gt)
                                : (rng_() % 2 ? CmpOp::le : CmpOp::lt);
        return Rule{ZScoreThreshold{f.name, op, z}};
      }
    }
    static constexpr double kQ[] = {0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95};
    const NumFeat& f = pick_numeric();
    const double q = kQ[rng_() % 7];
    return Rule{QuantileThreshold{f.name, tail_op(q), q}};
  }

  const DigestView& view_;
  const ProposalContext& ctx_;
  std::mt19937_64 rng_;
};

}  // namespace

std::vector<Rule> propose_heuristic(const ProposalContext& ctx, int batch,
                                    std::uint64_t seed) {
  if (batch < 1) throw ConfigError("batch must be >= 1");
  const DigestView view = parse_digest(ctx);
  Sampler sampler(view, ctx, seed);

  const std::vector<RuleFamily> feasible = sampler.feasible_families();
  if (feasible.empty())
    throw ConfigError("no features available to propose rules over");

  std::vector<RuleFamily> guided;
  for (RuleFamily f : ctx.diversity)
    if (std::find(feasible.begin(), feasible.end(), f) != feasible.end())
      guided.push_back(f);

  std::vector<Rule> out;
  out.reserve(batch);
  for (int b = 0; b < batch; ++b) {
    const bool use_guidance = !guided.empty() && sampler.rng()() % 2 == 0;
    const auto& families = use_guidance ? guided : feasible;
    const RuleFamily family = families[sampler.rng()() % families.size()];
    out.push_back(sampler.sample(family));
  }
  return out;
}

RemoteProposal propose_remote(const ProposalContext& ctx, ChatClient& client,
                              const PromptSet& prompts,
                              const FeatureCatalog& catalog, int max_depth) {
  std::ostringstream variables;
  for (const FeatureInfo& f : catalog.features()) {
    variables << f.name << " (" << to_string(f.kind);
    if (!f.unit.empty()) variables << ", " << f.unit;
    variables << ")";
    if (!f.description.empty()) variables << " - " << f.description;
    variables << "\n";
  }

  nlohmann::json guidance = nlohmann::json::array();
  for (RuleFamily f : ctx.diversity) guidance.push_back(to_string(f));
  const nlohmann::json summaries{
      {"under_represented_families", std::move(guidance)},
      {"feedback",
       {{"proposed", ctx.proposed},
        {"accepted", ctx.accepted},
        {"rejected_low_auroc", ctx.rejected_low_auroc},
        {"rejected_redundant", ctx.rejected_redundant},
        {"rejected_duplicate", ctx.rejected_duplicate},
        {"rejected_unusable", ctx.rejected_unusable},
        {"rejected_malformed", ctx.rejected_malformed},
        {"rejected_implausible", ctx.rejected_implausible}}}};

  char auc[32];
  std::snprintf(auc, sizeof auc, "%.2f", ctx.auc_threshold);

  const std::string prompt = render_template(
      prompts.feature_proposal(),
      {{"task_description", ctx.task_description},
       {"variable_list", variables.str()},
       {"analysis_context", ctx.aggregate_insights.dump(2)},
       {"tool_summaries", summaries.dump(2)},
       {"auc_threshold", auc}});

  const std::string reply = client.complete("", prompt);

  RemoteProposal result;
  std::istringstream lines(reply);
  std::string line;
  while (std::getline(lines, line)) {
    const auto from = line.find_first_not_of(" \t\r");
    if (from == std::string::npos) continue;
    const auto to = line.find_last_not_of(" \t\r");
    const std::string trimmed = line.substr(from, to - from + 1);
    try {
      result.rules.push_back(parse_rule(trimmed, catalog, max_depth));
      result.raw_lines.push_back(trimmed);
    } catch (const RuleError&) {
      ++result.malformed;
    }
  }
  return result;
}

PlausibilityVerdict plausibility_gate(const Rule& r, PlausibilityMode mode,
                                      ChatClient* client,
                                      const PromptSet* prompts) {
  if (mode == PlausibilityMode::accept_all) return {true, "accept_all"};
  if (!client || !prompts)
    throw ConfigError("remote plausibility gate needs a client and prompts");
  const std::string prompt = render_template(
      prompts->plausibility_review(), {{"rule_json", serialize_rule(r)}});
  const std::string reply = client->complete("", prompt);
  try {
    const nlohmann::json j = nlohmann::json::parse(reply);
    PlausibilityVerdict verdict;
    verdict.plausible = j.at("plausible").get<bool>();
    verdict.reason = j.value("reason", std::string());
    return verdict;
  } catch (const nlohmann::json::exception&) {
    return {false, "gate-parse-failure"};
  }
}

}  // namespace nofm
