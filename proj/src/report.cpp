#include "nofm/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace nofm {

namespace {

std::string fmt_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Collects resolved cutpoints for every distributional predicate in a rule.
void collect_resolved(const Rule& r, const FeatureStats& stats,
                      std::map<std::string, double>& out) {
  if (const auto* q = std::get_if<QuantileThreshold>(&r.node)) {
    out["Q" + fmt_num(q->q) + "(" + q->feature + ")"] =
        stats.numeric(q->feature).quantile(q->q);
  } else if (const auto* z = std::get_if<ZScoreThreshold>(&r.node)) {
    const NumericStats& st = stats.numeric(z->feature);
    out["z=" + fmt_num(z->z) + "(" + z->feature + ")"] =
        st.mean + z->z * st.stddev;
  } else if (const auto* l = std::get_if<Logical>(&r.node)) {
    for (const Rule& child : l->rules) collect_resolved(child, stats, out);
  }
}

}  // namespace

namespace {

struct ResolvedVisitor {
  const FeatureStats& stats;
  std::string operator()(const QuantileThreshold& n) const {
    const double v = stats.numeric(n.feature).quantile(n.q);
    return n.feature + " " + to_string(n.op) + " Q" + fmt_num(n.q) + "(" +
           n.feature + ") [= " + fmt_num(v) + "]";
  }
  std::string operator()(const ZScoreThreshold& n) const {
    const NumericStats& st = stats.numeric(n.feature);
    const double v = st.mean + n.z * st.stddev;
    return "z(" + n.feature + ") " + to_string(n.op) + " " + fmt_num(n.z) +
           " [" + n.feature + " " + to_string(n.op) + " " + fmt_num(v) + "]";
  }
  std::string operator()(const Logical& n) const {
    const char* sep = n.op == BoolOp::logical_and ? " and " : " or ";
    std::string s = "(";
    for (std::size_t i = 0; i < n.rules.size(); ++i) {
      if (i) s += sep;
      s += describe_resolved(n.rules[i], stats);
    }
    return s + ")";
  }
  template <typename T>
  std::string operator()(const T& n) const {
    return describe(Rule{n});
  }
};

}  // namespace

std::string describe_resolved(const Rule& r, const FeatureStats& stats) {
  return std::visit(ResolvedVisitor{stats}, r.node);
}

std::string render_card_markdown(const Checklist& c, const FeatureStats& stats) {
  std::ostringstream os;
  os << "# " << c.name << "\n\n";
  if (!c.description.empty()) os << c.description << "\n\n";
  os << "| Checklist rule (satisfied?) | Points |\n";
  os << "|---|---|\n";
  for (const Rule& r : c.rules)
    os << "| " << describe_resolved(r, stats) << " | +1 |\n";
  os << "| **Total score** | **0-" << c.rules.size() << "** |\n";
  os << "| **High-risk threshold** | **S(x) >= " << c.threshold_k << "** |\n";
  return os.str();
}

nlohmann::json card_json(const Checklist& c, const FeatureStats& stats) {
  nlohmann::json rules = nlohmann::json::array();
  std::map<std::string, double> resolved;
  for (const Rule& r : c.rules) {
    rules.push_back({{"rule", rule_to_json(r)},
                     {"text", describe_resolved(r, stats)},
                     {"points", 1}});
    collect_resolved(r, stats, resolved);
  }
  return nlohmann::json{{"name", c.name},
                        {"description", c.description},
                        {"rules", std::move(rules)},
                        {"threshold_k", c.threshold_k},
                        {"total_range", {0, c.rules.size()}},
                        {"resolved_cutpoints", resolved},
                        {"provenance",
                         {{"pool_hash", c.pool_hash},
                          {"fold", c.fold_id},
                          {"mode", c.mode},
                          {"candidates_evaluated", c.candidates_evaluated}}}};
}

nlohmann::json FoldReport::to_json() const {
  return nlohmann::json{{"fold", fold},
                        {"checklist", checklist.to_json()},
                        {"test", test.to_json()},
                        {"card_markdown", card_markdown},
                        {"tallies",
                         {{"proposed", proposed},
                          {"parsed_ok", parsed_ok},
                          {"admitted", admitted},
                          {"rejected", rejected},
                          {"pool_size", pool_size}}},
                        {"calls",
                         {{"proposal", calls_proposal},
                          {"plausibility", calls_plausibility},
                          {"assembly", calls_assembly}}}};
}

void RunReport::compute_aggregates() {
  const std::size_t n = folds.size();
  if (n == 0) {
    mean_test_auroc = std_test_auroc = 0;
    return;
  }
  double sum = 0;
  for (const FoldReport& f : folds) sum += f.test.auroc;
  mean_test_auroc = sum / static_cast<double>(n);
  double ss = 0;
  for (const FoldReport& f : folds) {
    const double d = f.test.auroc - mean_test_auroc;
    ss += d * d;
  }
  std_test_auroc = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
}

nlohmann::json RunReport::to_json() const {
  nlohmann::json jfolds = nlohmann::json::array();
  for (const FoldReport& f : folds) jfolds.push_back(f.to_json());
  return nlohmann::json{{"config", config_echo},
                        {"config_hash", config_hash},
                        {"seed", seed},
                        {"folds", std::move(jfolds)},
                        {"aggregate",
                         {{"mean_test_auroc", mean_test_auroc},
                          {"std_test_auroc", std_test_auroc},
                          {"n_folds", folds.size()}}}};
}

void RunReport::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << to_json().dump(2) << "\n";
}

RunReport RunReport::from_json(const nlohmann::json& j) {
  RunReport r;
  r.config_echo = j.value("config", nlohmann::json::object());
  r.config_hash = j.value("config_hash", std::string());
  r.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("folds"))
    for (const auto& jf : j["folds"]) {
      FoldReport f;
      f.fold = jf.value("fold", 0);
      if (jf.contains("test")) {
        f.test.auroc = jf["test"].value("auroc", 0.0);
        f.test.threshold = jf["test"].value("threshold", 0);
        f.test.sensitivity = jf["test"].value("sensitivity", 0.0);
        f.test.specificity = jf["test"].value("specificity", 0.0);
        f.test.youden_j = jf["test"].value("youden_j", 0.0);
      }
      r.folds.push_back(std::move(f));
    }
  if (j.contains("aggregate")) {
    r.mean_test_auroc = j["aggregate"].value("mean_test_auroc", 0.0);
    r.std_test_auroc = j["aggregate"].value("std_test_auroc", 0.0);
  }
  return r;
}

std::vector<double> RunReport::fold_aurocs() const {
  std::vector<double> out;
  for (const FoldReport& f : folds) out.push_back(f.test.auroc);
  return out;
}

}  // namespace nofm
