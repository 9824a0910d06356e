#include "nofm/tool_interface.hpp"

namespace nofm {

nlohmann::json ToolInterface::aggregate_digest() const {
  return stats_.digest(d_con_.catalog);
}

ToolInterface::CandidateMetrics ToolInterface::evaluate_candidate(
    const Rule& r) const {
  const CoverageMask mask = evaluate_rule(r, d_con_, stats_);
  std::vector<double> scores(d_con_.n_rows, 0.0);
  for (std::size_t i = 0; i < d_con_.n_rows; ++i)
    if (mask.bits.test(i)) scores[i] = 1.0;
  CandidateMetrics m;
  m.auroc = auroc(scores, d_con_.labels);
  m.coverage = mask.count();
  m.pos_coverage = BitVec::and_count(mask.bits, d_con_.labels);
  return m;
}

nlohmann::json ToolInterface::pool_summary() const {
  nlohmann::json rules = nlohmann::json::array();
  for (const RuleRecord& r : pool_.records())
    rules.push_back({{"ordinal", r.ordinal},
                     {"rule", rule_to_json(r.rule)},
                     {"family", to_string(r.family)},
                     {"auroc", r.auroc_con}});
  nlohmann::json families = nlohmann::json::object();
  for (int f = 0; f < kNumRuleFamilies; ++f)
    families[to_string(static_cast<RuleFamily>(f))] =
        pool_.family_counts()[f];
  return nlohmann::json{{"rules", std::move(rules)},
                        {"family_counts", std::move(families)}};
}

nlohmann::json ProposalContext::to_json() const {
  nlohmann::json guidance = nlohmann::json::array();
  for (RuleFamily f : diversity) guidance.push_back(to_string(f));
  return nlohmann::json{
      {"task_description", task_description},
      {"catalog", catalog_digest},
      {"aggregates", aggregate_insights},
      {"pool", pool_summary},
      {"diversity_guidance", std::move(guidance)},
      {"auc_threshold", auc_threshold},
      {"logic_depth", logic_depth},
      {"feedback",
       {{"proposed", proposed},
        {"accepted", accepted},
        {"rejected_low_auroc", rejected_low_auroc},
        {"rejected_redundant", rejected_redundant},
        {"rejected_duplicate", rejected_duplicate},
        {"rejected_unusable", rejected_unusable},
        {"rejected_malformed", rejected_malformed},
        {"rejected_implausible", rejected_implausible}}}};
}

ProposalContext build_context(const ToolInterface& tools,
                              const std::string& task_description,
                              const std::vector<RuleFamily>& diversity,
                              double auc_threshold, int logic_depth) {
  ProposalContext ctx;
  ctx.task_description = task_description;
  ctx.catalog_digest = tools.catalog().to_json();
  ctx.aggregate_insights = tools.aggregate_digest();
  ctx.pool_summary = tools.pool_summary();
  ctx.diversity = diversity;
  ctx.auc_threshold = auc_threshold;
  ctx.logic_depth = logic_depth;
  return ctx;
}

}  // namespace nofm
