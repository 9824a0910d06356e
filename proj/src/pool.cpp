#include "nofm/pool.hpp"

#include <fstream>
#include <sstream>

namespace nofm {

const char* to_string(RejectReason r) {
  switch (r) {
    case RejectReason::low_auroc: return "low_auroc";
    case RejectReason::redundant: return "redundant";
    case RejectReason::duplicate: return "duplicate";
    case RejectReason::unusable_stats: return "unusable_stats";
  }
  return "?";
}

RulePool::RulePool(const PipelineConfig& cfg) : cfg_(cfg) {}

ConsiderOutcome RulePool::consider(const Rule& candidate, const Dataset& d_con,
                                   const FeatureStats& stats) const {
  ConsiderOutcome out;
  const std::string serialized = serialize_rule(candidate);
  if (seen_.count(serialized)) {
    out.reason = RejectReason::duplicate;
    out.detail = "structurally identical rule already retained";
    return out;
  }

  CoverageMask mask;
  try {
    mask = evaluate_rule(candidate, d_con, stats);
  } catch (const EvalError& e) {
    out.reason = RejectReason::unusable_stats;
    out.detail = e.what();
    return out;
  }

  std::vector<double> scores(d_con.n_rows, 0.0);
  for (std::size_t i = 0; i < d_con.n_rows; ++i)
    if (mask.bits.test(i)) scores[i] = 1.0;
  out.auroc = auroc(scores, d_con.labels);

  if (out.auroc < cfg_.auc_threshold) {
    out.reason = RejectReason::low_auroc;
    out.detail = "univariate AUROC below threshold";
    return out;
  }

  BitVec pos = mask.bits;
  pos &= d_con.labels;

  if (cfg_.use_jaccard && !records_.empty()) {
    double max_j = -1.0;
    const RuleRecord* most_similar = nullptr;
    for (const RuleRecord& r : records_) {
      const double j = jaccard(pos, r.pos_mask);
      if (j > max_j) {
        max_j = j;
        most_similar = &r;
      }
    }
    out.max_jaccard = max_j;
    out.most_similar_ordinal = static_cast<int>(most_similar->ordinal);
    if (max_j > cfg_.jaccard_threshold) {
      bool gained = false;
      if (cfg_.gain_mode == GainMode::auroc_gain) {
        gained = out.auroc >= most_similar->auroc_con + cfg_.min_pos_gain;
      } else {
        // coverage variant: new positives beyond the most-similar rule,
        // as a fraction of all positives
        const std::uint64_t n_pos = d_con.labels.count();
        const std::uint64_t added =
            pos.count() - BitVec::and_count(pos, most_similar->pos_mask);
        gained = n_pos > 0 && static_cast<double>(added) /
                                      static_cast<double>(n_pos) >=
                                  cfg_.min_pos_gain;
      }
      if (!gained) {
        out.reason = RejectReason::redundant;
        std::ostringstream msg;
        msg << "J+ " << max_j << " vs rule #" << most_similar->ordinal
            << " without sufficient gain";
        out.detail = msg.str();
        return out;
      }
    }
  }

  RuleRecord record;
  record.rule = candidate;
  record.serialized = serialized;
  record.family = rule_family(candidate);
  record.auroc_con = out.auroc;
  record.pos_coverage = pos.count();
  record.mask_con = std::move(mask);
  record.pos_mask = std::move(pos);
  out.accepted = true;
  out.record = std::move(record);
  return out;
}

const RuleRecord& RulePool::admit(RuleRecord record) {
  record.ordinal = static_cast<std::uint32_t>(records_.size());
  seen_.insert(record.serialized);
  ++family_counts_[static_cast<int>(record.family)];
  records_.push_back(std::move(record));
  return records_.back();
}

std::string RulePool::state_hash() const {
  std::ostringstream os;
  for (const RuleRecord& r : records_)
    os << r.ordinal << '\t' << r.serialized << '\t' << r.auroc_con << '\t'
       << r.pos_coverage << '\n';
  return fnv1a_hex(os.str());
}

void RulePool::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  nlohmann::json header{{"kind", "rule_pool"},
                        {"config_hash", config_hash()},
                        {"n_rules", records_.size()}};
  out << header.dump() << "\n";
  for (const RuleRecord& r : records_) {
    nlohmann::json line{{"ordinal", r.ordinal},
                        {"rule", rule_to_json(r.rule)},
                        {"family", to_string(r.family)},
                        {"auroc_con", r.auroc_con},
                        {"pos_coverage", r.pos_coverage},
                        {"coverage", r.mask_con.count()}};
    out << line.dump() << "\n";
  }
}

PoolLoadResult RulePool::load(const std::string& path,
                                    const PipelineConfig& cfg,
                                    const Dataset& d_con,
                                    const FeatureStats& stats) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + " is empty");
  nlohmann::json header = nlohmann::json::parse(line);

  PoolLoadResult result;
  result.pool = RulePool(cfg);
  result.file_config_hash = header.value("config_hash", std::string());
  result.config_hash_matched = result.file_config_hash == cfg.hash();

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    Rule rule = rule_from_json(j.at("rule"), d_con.catalog, cfg.logic_depth);
    RuleRecord record;
    record.rule = rule;
    record.serialized = serialize_rule(rule);
    record.family = rule_family(rule);
    record.auroc_con = j.at("auroc_con").get<double>();
    record.mask_con = evaluate_rule(rule, d_con, stats);
    record.pos_mask = record.mask_con.bits;
    record.pos_mask &= d_con.labels;
    record.pos_coverage = record.pos_mask.count();
    if (record.pos_coverage != j.at("pos_coverage").get<std::uint64_t>() ||
        record.mask_con.count() != j.at("coverage").get<std::uint64_t>())
      throw IoError(path + ": stored coverage does not match re-evaluation");
    result.pool.admit(std::move(record));
  }
  return result;
}

std::vector<RuleFamily> diversity_guidance(const RulePool& pool,
                                           const DiversityTargets& targets) {
  std::vector<RuleFamily> under;
  for (int f = 0; f < kNumRuleFamilies; ++f)
    if (pool.family_counts()[f] < targets.min_count[f])
      under.push_back(static_cast<RuleFamily>(f));
  return under;
}

}  // namespace nofm
