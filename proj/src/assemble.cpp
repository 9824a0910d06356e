#include "nofm/assemble.hpp"

#include <algorithm>
#include <sstream>

#include "nofm/remote.hpp"

namespace nofm {

nlohmann::json Checklist::to_json() const {
  nlohmann::json jrules = nlohmann::json::array();
  for (const Rule& r : rules) jrules.push_back({{"rule", rule_to_json(r)}});
  return nlohmann::json{{"name", name},
                        {"description", description},
                        {"rules", std::move(jrules)},
                        {"threshold_k", threshold_k},
                        {"pool_hash", pool_hash},
                        {"fold", fold_id},
                        {"mode", mode},
                        {"candidates_evaluated", candidates_evaluated}};
}

AssemblyContext::AssemblyContext(const RulePool& pool, const Dataset& d_val,
                                 const FeatureStats& stats)
    : pool_(pool), d_val_(d_val), stats_(stats) {
  val_masks_.reserve(pool.size());
  for (const RuleRecord& r : pool.records())
    val_masks_.push_back(evaluate_rule(r.rule, d_val, stats).bits);
}

std::vector<int> AssemblyContext::subset_scores(
    const std::vector<std::uint32_t>& ordinals) const {
  std::vector<int> score(d_val_.n_rows, 0);
  for (std::uint32_t o : ordinals) {
    const BitVec& mask = val_masks_[o];
    for (std::size_t w = 0; w < mask.nwords(); ++w) {
      std::uint64_t bits = mask.words()[w];
      while (bits) {
        score[w * 64 + std::countr_zero(bits)] += 1;
        bits &= bits - 1;
      }
    }
  }
  return score;
}

double AssemblyContext::subset_auroc(
    const std::vector<std::uint32_t>& ordinals) const {
  ++evaluations;
  const std::vector<int> score = subset_scores(ordinals);
  return auroc_int(score, d_val_.labels);
}

namespace {

struct Best {
  double auroc = -1.0;
  std::vector<std::uint32_t> ordinals;

  // strict improvement only: first encountered wins ties
  void offer(double a, const std::vector<std::uint32_t>& subset) {
    if (a > auroc) {
      auroc = a;
      ordinals = subset;
    }
  }
};

Checklist make_checklist(const AssemblyContext& ctx, const Best& best,
                         const std::string& mode) {
  Checklist c;
  c.mode = mode;
  c.pool_hash = ctx.pool().state_hash();
  std::vector<std::uint32_t> ordered = best.ordinals;
  std::sort(ordered.begin(), ordered.end());
  for (std::uint32_t o : ordered) c.rules.push_back(ctx.pool().at(o).rule);
  c.candidates_evaluated = ctx.evaluations;
  return c;
}

Best greedy_select(const AssemblyContext& ctx, int max_rules) {
  Best best;
  std::vector<std::uint32_t> current;
  std::vector<bool> used(ctx.pool().size(), false);
  for (int step = 0; step < max_rules; ++step) {
    double step_auroc = -1.0;
    int step_pick = -1;
    for (std::uint32_t o = 0; o < ctx.pool().size(); ++o) {
      if (used[o]) continue;
      current.push_back(o);
      const double a = ctx.subset_auroc(current);
      best.offer(a, current);
      current.pop_back();
      if (a > step_auroc) {
        step_auroc = a;
        step_pick = static_cast<int>(o);
      }
    }
    if (step_pick < 0) break;
    used[step_pick] = true;
    current.push_back(static_cast<std::uint32_t>(step_pick));
  }
  return best;
}

std::uint64_t subset_count(std::uint64_t n, int max_k, std::uint64_t cap) {
  std::uint64_t total = 0;
  for (int k = 1; k <= max_k; ++k) {
    // C(n, k), clamped against the cap as we go
    long double c = 1;
    for (int i = 0; i < k; ++i)
      c = c * static_cast<long double>(n - i) / static_cast<long double>(i + 1);
    if (c > static_cast<long double>(cap)) return cap + 1;
    total += static_cast<std::uint64_t>(c + 0.5);
    if (total > cap) return cap + 1;
  }
  return total;
}

void enumerate_subsets(const AssemblyContext& ctx, int max_rules, Best& best) {
  const std::uint32_t n = static_cast<std::uint32_t>(ctx.pool().size());
  std::vector<std::uint32_t> subset;
  // lexicographic enumeration by ordinal, sizes interleaved via recursion
  struct Rec {
    const AssemblyContext& ctx;
    Best& best;
    std::vector<std::uint32_t>& subset;
    std::uint32_t n;
    int max_rules;
    void go(std::uint32_t from) {
      if (!subset.empty()) best.offer(ctx.subset_auroc(subset), subset);
      if (static_cast<int>(subset.size()) == max_rules) return;
      for (std::uint32_t o = from; o < n; ++o) {
        subset.push_back(o);
        go(o + 1);
        subset.pop_back();
      }
    }
  };
  Rec{ctx, best, subset, n, max_rules}.go(0);
}

std::string render_pool_lines(const RulePool& pool) {
  std::ostringstream os;
  for (const RuleRecord& r : pool.records()) {
    char auc[32];
    std::snprintf(auc, sizeof auc, "%.4f", r.auroc_con);
    os << r.serialized << "  # AUROC " << auc << "\n";
  }
  return os.str();
}

// Parses an agent checklist spec and maps its rules onto pool ordinals.
std::vector<std::uint32_t> parse_agent_spec(const std::string& reply,
                                            const AssemblyContext& ctx,
                                            int max_rules, std::string* name,
                                            std::string* description) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(reply);
  } catch (const nlohmann::json::exception& e) {
    throw AgentSpecError(std::string("spec is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("rules") || !j["rules"].is_array())
    throw AgentSpecError("spec must be an object with a rules list");
  if (name) *name = j.value("name", std::string("checklist"));
  if (description) *description = j.value("description", std::string());

  std::vector<std::uint32_t> ordinals;
  for (const auto& entry : j["rules"]) {
    const nlohmann::json& rule_json =
        entry.is_object() && entry.contains("rule") ? entry["rule"] : entry;
    Rule rule;
    try {
      rule = rule_from_json(rule_json, ctx.d_val().catalog,
                            ctx.pool().config().logic_depth);
    } catch (const RuleError& e) {
      throw AgentSpecError(std::string("spec rule does not parse: ") + e.what());
    }
    const std::string serialized = serialize_rule(rule);
    int found = -1;
    for (const RuleRecord& r : ctx.pool().records())
      if (r.serialized == serialized) {
        found = static_cast<int>(r.ordinal);
        break;
      }
    if (found < 0)
      throw AgentSpecError("spec introduces a rule outside the pool: " +
                           serialized);
    if (std::find(ordinals.begin(), ordinals.end(),
                  static_cast<std::uint32_t>(found)) == ordinals.end())
      ordinals.push_back(static_cast<std::uint32_t>(found));
  }
  if (ordinals.empty()) throw AgentSpecError("spec selects no rules");
  if (static_cast<int>(ordinals.size()) > max_rules)
    throw AgentSpecError("spec exceeds the rule budget");
  return ordinals;
}

bool agent_call_allowed(const AgentHooks* agent) {
  return agent && agent->client && agent->prompts &&
         (!agent->calls_left || *agent->calls_left > 0);
}

std::string agent_complete(const AgentHooks* agent, const std::string& prompt) {
  if (agent->calls_left) --*agent->calls_left;
  return agent->client->complete("", prompt);
}

}  // namespace

Checklist assemble(const AssemblyContext& ctx, int max_rules,
                   AssembleMode mode, std::uint64_t exhaustive_cap,
                   const AgentHooks* agent) {
  if (ctx.pool().empty())
    throw EvalError(EvalErrorCode::empty_pool, "cannot assemble from an empty pool");

  if (mode == AssembleMode::exhaustive) {
    if (subset_count(ctx.pool().size(), max_rules, exhaustive_cap) >
        exhaustive_cap) {
      Checklist c = assemble(ctx, max_rules, AssembleMode::greedy);
      c.mode = "exhaustive:over-cap,greedy";
      return c;
    }
    Best best;
    enumerate_subsets(ctx, max_rules, best);
    return make_checklist(ctx, best, "exhaustive");
  }

  if (mode == AssembleMode::agent) {
    if (agent_call_allowed(agent)) {
      try {
        const std::string prompt = render_template(
            agent->prompts->score_construction(),
            {{"task_description", agent->task_description},
             {"max_rules", std::to_string(max_rules)},
             {"retained_rules_with_auc", render_pool_lines(ctx.pool())}});
        const std::string reply = agent_complete(agent, prompt);
        std::string name, description;
        const std::vector<std::uint32_t> ordinals =
            parse_agent_spec(reply, ctx, max_rules, &name, &description);
        Best best;
        best.offer(ctx.subset_auroc(ordinals), ordinals);
        Checklist c = make_checklist(ctx, best, "agent");
        c.name = name;
        c.description = description;
        return c;
      } catch (const AgentSpecError&) {
        // fall through to greedy
      } catch (const TransportError&) {
        // endpoint unreachable: the fold continues offline
      }
    }
    Checklist c = assemble(ctx, max_rules, AssembleMode::greedy);
    c.mode = "agent:fallback,greedy";
    return c;
  }

  Best best = greedy_select(ctx, max_rules);
  return make_checklist(ctx, best, "greedy");
}

Checklist refine(const Checklist& c, const AssemblyContext& ctx, int max_rules,
                 int steps, const AgentHooks* agent) {
  // map checklist rules back to ordinals
  std::vector<std::uint32_t> current;
  for (const Rule& rule : c.rules) {
    const std::string serialized = serialize_rule(rule);
    for (const RuleRecord& r : ctx.pool().records())
      if (r.serialized == serialized) {
        current.push_back(r.ordinal);
        break;
      }
  }
  if (current.size() != c.rules.size())
    throw EvalError(EvalErrorCode::empty_pool,
                    "checklist contains rules outside the pool");

  Best best;
  double current_auroc = ctx.subset_auroc(current);
  best.offer(current_auroc, current);

  const bool agent_mode = agent_call_allowed(agent);

  for (int step = 0; step < steps; ++step) {
    if (agent_mode) {
      if (!agent_call_allowed(agent)) break;
      Checklist snapshot = c;
      snapshot.rules.clear();
      for (std::uint32_t o : current)
        snapshot.rules.push_back(ctx.pool().at(o).rule);
      const std::vector<int> scores = ctx.subset_scores(current);
      const auto [k, report] = select_threshold(
          scores, ctx.d_val().labels, static_cast<int>(current.size()),
          ThresholdObjective::youden);
      const nlohmann::json metrics{{"val_auroc", current_auroc},
                                   {"threshold_k", k},
                                   {"sensitivity", report.sensitivity},
                                   {"specificity", report.specificity},
                                   {"youden_j", report.youden_j}};
      try {
        const std::string prompt = render_template(
            agent->prompts->score_refinement(),
            {{"current_score_json", snapshot.to_json().dump()},
             {"score_metrics", metrics.dump()},
             {"max_rules", std::to_string(max_rules)}});
        const std::string reply = agent_complete(agent, prompt);
        const std::vector<std::uint32_t> proposal =
            parse_agent_spec(reply, ctx, max_rules, nullptr, nullptr);
        current = proposal;
        current_auroc = ctx.subset_auroc(current);
        best.offer(current_auroc, current);
      } catch (const AgentSpecError&) {
        continue;  // invalid move proposal: skip the step
      } catch (const TransportError&) {
        break;
      }
      continue;
    }

    // offline: best single add / drop / swap, deterministic order
    double move_auroc = -1.0;
    std::vector<std::uint32_t> move;
    auto consider_move = [&](std::vector<std::uint32_t> subset) {
      std::sort(subset.begin(), subset.end());
      const double a = ctx.subset_auroc(subset);
      best.offer(a, subset);
      if (a > move_auroc) {
        move_auroc = a;
        move = std::move(subset);
      }
    };

    std::vector<bool> in_current(ctx.pool().size(), false);
    for (std::uint32_t o : current) in_current[o] = true;

    if (static_cast<int>(current.size()) < max_rules)
      for (std::uint32_t o = 0; o < ctx.pool().size(); ++o)
        if (!in_current[o]) {
          auto subset = current;
          subset.push_back(o);
          consider_move(std::move(subset));
        }
    if (current.size() > 1)
      for (std::size_t drop = 0; drop < current.size(); ++drop) {
        auto subset = current;
        subset.erase(subset.begin() + drop);
        consider_move(std::move(subset));
      }
    for (std::size_t swap_out = 0; swap_out < current.size(); ++swap_out)
      for (std::uint32_t o = 0; o < ctx.pool().size(); ++o)
        if (!in_current[o]) {
          auto subset = current;
          subset[swap_out] = o;
          consider_move(std::move(subset));
        }

    if (move_auroc > current_auroc) {
      current = move;
      current_auroc = move_auroc;
    } else {
      break;  // local optimum
    }
  }

  Checklist out = make_checklist(ctx, best, c.mode + "+refine");
  out.name = c.name;
  out.description = c.description;
  out.fold_id = c.fold_id;
  return out;
}

Checklist finalize(Checklist c, const Dataset& d_val, const FeatureStats& stats,
                   ThresholdObjective objective, double spec_floor) {
  const ChecklistScores scores = score_rules(c.rules, d_val, stats);
  const auto [k, report] =
      select_threshold(scores.score, d_val.labels,
                       static_cast<int>(c.rules.size()), objective, spec_floor);
  c.threshold_k = k;
  return c;
}

}  // namespace nofm
