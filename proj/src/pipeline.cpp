#include "nofm/pipeline.hpp"

#include <future>

#include "nofm/propose.hpp"
#include "nofm/remote.hpp"

namespace nofm {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = seed ^ (a * 0x9e3779b97f4a7c15ULL) ^
                    (b * 0xbf58476d1ce4e5b9ULL);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

// Metrics of a fixed-threshold checklist on a split.
EvalReport evaluate_at_k(std::span<const int> scores, const BitVec& labels,
                         int k) {
  const std::uint64_t n_pos = labels.count();
  const std::uint64_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw EvalError(EvalErrorCode::single_class, "test split has one class");
  std::uint64_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i] >= k) (labels.test(i) ? tp : fp)++;
  EvalReport r;
  r.threshold = k;
  r.sensitivity = static_cast<double>(tp) / static_cast<double>(n_pos);
  r.specificity =
      static_cast<double>(n_neg - fp) / static_cast<double>(n_neg);
  r.youden_j = r.sensitivity + r.specificity - 1.0;
  r.auroc = auroc_int(scores, labels);
  r.risk = risk_table(scores, labels);
  return r;
}

struct FoldRunner {
  const Dataset& data;
  const FoldSplit& split;
  int fold_id;
  const PipelineConfig& cfg;
  const PromptSet* prompts;

  FoldOutput run() const {
    FoldOutput out;
    out.report.fold = fold_id;

    const Dataset d_con = slice(data, split.construction_rows,
                                SplitTag::construction);
    const Dataset d_val = slice(data, split.validation_rows,
                                SplitTag::validation);
    const Dataset d_test = slice(data, split.test_rows, SplitTag::test);
    out.stats = FeatureStats::fit(d_con);

    std::optional<ChatClient> client;
    const bool needs_remote = cfg.proposer == ProposerMode::remote ||
                              cfg.plausibility == PlausibilityMode::remote ||
                              cfg.assemble_mode == AssembleMode::agent ||
                              cfg.llm_only;
    if (needs_remote) client.emplace(cfg.remote);

    int calls_left = cfg.call_budget;

    if (cfg.llm_only) {
      run_llm_only(out, d_con, d_val, d_test, client ? &*client : nullptr,
                   &calls_left);
      return out;
    }

    RulePool pool(cfg);
    run_phase1(out, pool, d_con, client ? &*client : nullptr, &calls_left);
    run_phase2(out, pool, d_val, client ? &*client : nullptr, &calls_left);
    score_test(out, d_test);
    out.pool = std::move(pool);
    return out;
  }

  void run_phase1(FoldOutput& out, RulePool& pool, const Dataset& d_con,
                  ChatClient* client, int* calls_left) const {
    FoldReport& rep = out.report;
    DiversityTargets targets;
    int plausibility_calls = 0;

    for (int iter = 0; iter < cfg.iterations; ++iter) {
      const std::vector<RuleFamily> guidance =
          cfg.use_diversity ? diversity_guidance(pool, targets)
                            : std::vector<RuleFamily>{};
      const ToolInterface tools(d_con, out.stats, pool);
      ProposalContext ctx = build_context(tools, cfg.task_description,
                                          guidance, cfg.auc_threshold,
                                          cfg.logic_depth);
      ctx.proposed = rep.proposed;
      ctx.accepted = rep.admitted;
      ctx.rejected_low_auroc = rep.rejected["low_auroc"];
      ctx.rejected_redundant = rep.rejected["redundant"];
      ctx.rejected_duplicate = rep.rejected["duplicate"];
      ctx.rejected_unusable = rep.rejected["unusable_stats"];
      ctx.rejected_malformed = rep.rejected["malformed"];
      ctx.rejected_implausible = rep.rejected["implausible"];

      std::vector<Rule> batch;
      std::vector<std::string> raws;
      std::string source;
      if (cfg.proposer == ProposerMode::heuristic) {
        source = "heuristic";
        batch = propose_heuristic(ctx, cfg.batch_size,
                                  mix_seed(cfg.seed, fold_id, iter));
      } else {
        source = "remote";
        if (*calls_left <= 0) break;
        --*calls_left;
        ++rep.calls_proposal;
        try {
          RemoteProposal proposal = propose_remote(ctx, *client, *prompts,
                                                   d_con.catalog,
                                                   cfg.logic_depth);
          batch = std::move(proposal.rules);
          raws = std::move(proposal.raw_lines);
          if (proposal.malformed > 0) {
            rep.rejected["malformed"] += proposal.malformed;
            rep.proposed += proposal.malformed;
          }
        } catch (const TransportError&) {
          // the iteration yields an empty batch; the fold continues
          TranscriptEvent ev;
          ev.fold = fold_id;
          ev.iteration = iter;
          ev.source = "remote";
          ev.parse_ok = false;
          ev.parse_error = "transport";
          ev.stat_outcome = "transport_error";
          out.events.push_back(std::move(ev));
          continue;
        }
      }

      for (std::size_t b = 0; b < batch.size(); ++b) {
        const Rule& candidate = batch[b];
        ++rep.proposed;
        ++rep.parsed_ok;

        TranscriptEvent ev;
        ev.fold = fold_id;
        ev.iteration = iter;
        ev.source = source;
        ev.rule_json = serialize_rule(candidate);
        if (b < raws.size()) ev.raw = raws[b];

        ConsiderOutcome outcome = pool.consider(candidate, d_con, out.stats);
        ev.auroc = outcome.auroc;
        ev.max_jaccard = outcome.max_jaccard;
        if (!outcome.accepted) {
          ev.stat_outcome = to_string(outcome.reason);
          ++rep.rejected[to_string(outcome.reason)];
          out.events.push_back(std::move(ev));
          continue;
        }
        ev.stat_outcome = "accepted";

        PlausibilityVerdict verdict{true, "accept_all"};
        if (cfg.plausibility == PlausibilityMode::remote) {
          if (plausibility_calls < cfg.plausibility_cap && *calls_left > 0) {
            --*calls_left;
            ++plausibility_calls;
            ++rep.calls_plausibility;
            try {
              verdict = plausibility_gate(candidate, PlausibilityMode::remote,
                                          client, prompts);
            } catch (const TransportError&) {
              verdict = {false, "gate-transport-error"};
            }
          } else {
            verdict = {true, "budget-exhausted"};
          }
        }
        ev.plausibility = verdict.plausible ? "plausible" : "implausible";
        ev.plausibility_reason = verdict.reason;
        if (!verdict.plausible) {
          ++rep.rejected["implausible"];
          out.events.push_back(std::move(ev));
          continue;
        }

        const RuleRecord& admitted = pool.admit(std::move(*outcome.record));
        ev.admitted = true;
        ev.ordinal = static_cast<int>(admitted.ordinal);
        ++rep.admitted;
        out.events.push_back(std::move(ev));
      }
    }
    rep.pool_size = pool.size();
  }

  void run_phase2(FoldOutput& out, const RulePool& pool, const Dataset& d_val,
                  ChatClient* client, int* calls_left) const {
    const AssemblyContext actx(pool, d_val, out.stats);
    AgentHooks hooks;
    const AgentHooks* hooks_ptr = nullptr;
    if (cfg.assemble_mode == AssembleMode::agent && client && prompts) {
      hooks.client = client;
      hooks.prompts = prompts;
      hooks.task_description = cfg.task_description;
      hooks.calls_left = calls_left;
      hooks_ptr = &hooks;
    }

    const int calls_before = client ? client->calls_made() : 0;
    Checklist checklist = assemble(actx, cfg.max_rules, cfg.assemble_mode,
                                   cfg.exhaustive_cap, hooks_ptr);
    checklist.fold_id = fold_id;
    if (!cfg.single_pass)
      for (int phase = 0; phase < cfg.refine_phases; ++phase)
        checklist = refine(checklist, actx, cfg.max_rules, cfg.refine_steps,
                           hooks_ptr);
    checklist = finalize(std::move(checklist), d_val, out.stats, cfg.objective,
                         cfg.spec_floor);
    out.report.calls_assembly = (client ? client->calls_made() : 0) -
                                calls_before;
    out.checklist = std::move(checklist);
  }

  void score_test(FoldOutput& out, const Dataset& d_test) const {
    // The held-out slice is touched exactly once, after finalize.
    ++out.test_accesses;
    const ChecklistScores scores =
        score_rules(out.checklist.rules, d_test, out.stats);
    out.report.test =
        evaluate_at_k(scores.score, d_test.labels, out.checklist.threshold_k);
    out.report.checklist = out.checklist;
    out.report.card_markdown = render_card_markdown(out.checklist, out.stats);
  }

  void run_llm_only(FoldOutput& out, const Dataset& d_con,
                    const Dataset& d_val, const Dataset& d_test,
                    ChatClient* client, int* calls_left) const {
    if (!client || !prompts)
      throw ConfigError("llm_only mode needs a remote endpoint");
    const RulePool empty_pool(cfg);
    const ToolInterface tools(d_con, out.stats, empty_pool);
    ProposalContext ctx = build_context(tools, cfg.task_description, {},
                                        cfg.auc_threshold, cfg.logic_depth);
    --*calls_left;
    ++out.report.calls_proposal;
    RemoteProposal proposal =
        propose_remote(ctx, *client, *prompts, d_con.catalog, cfg.logic_depth);
    out.report.proposed = proposal.rules.size() + proposal.malformed;
    out.report.parsed_ok = proposal.rules.size();
    out.report.rejected["malformed"] += proposal.malformed;
    if (proposal.rules.empty())
      throw EvalError(EvalErrorCode::empty_pool,
                      "llm_only call produced no parseable rules");
    Checklist checklist;
    checklist.mode = "llm_only";
    checklist.fold_id = fold_id;
    for (const Rule& r : proposal.rules) {
      if (static_cast<int>(checklist.rules.size()) >= cfg.max_rules) break;
      checklist.rules.push_back(r);
    }
    checklist = finalize(std::move(checklist), d_val, out.stats, cfg.objective,
                         cfg.spec_floor);
    out.checklist = checklist;
    score_test(out, d_test);
  }
};

}  // namespace

RunOutput run_pipeline(const Dataset& data, const PipelineConfig& cfg,
                       const PromptSet* prompts) {
  cfg.validate();
  std::optional<PromptSet> local_prompts;
  const bool needs_prompts = cfg.proposer == ProposerMode::remote ||
                             cfg.plausibility == PlausibilityMode::remote ||
                             cfg.assemble_mode == AssembleMode::agent ||
                             cfg.llm_only;
  if (needs_prompts && !prompts) {
    local_prompts = PromptSet::load(cfg.prompts_dir);
    prompts = &*local_prompts;
  }

  const std::vector<FoldSplit> folds =
      stratified_group_kfold(data, cfg.folds, cfg.seed);

  RunOutput out;
  out.folds.resize(folds.size());

  // Remote runs stay sequential: one in-flight request per run.
  const int jobs = needs_prompts ? 1 : cfg.jobs;
  if (jobs <= 1) {
    for (std::size_t f = 0; f < folds.size(); ++f)
      out.folds[f] = FoldRunner{data, folds[f], static_cast<int>(f), cfg,
                                prompts}
                         .run();
  } else {
    std::vector<std::future<FoldOutput>> futures;
    futures.reserve(folds.size());
    std::size_t next = 0;
    while (next < folds.size() || !futures.empty()) {
      while (next < folds.size() &&
             futures.size() < static_cast<std::size_t>(jobs)) {
        const std::size_t f = next++;
        futures.push_back(std::async(std::launch::async, [&, f] {
          return FoldRunner{data, folds[f], static_cast<int>(f), cfg, prompts}
              .run();
        }));
      }
      const std::size_t f = next - futures.size();
      out.folds[f] = futures.front().get();
      futures.erase(futures.begin());
    }
  }

  out.report.config_echo = cfg.to_json();
  out.report.config_hash = cfg.hash();
  out.report.seed = cfg.seed;
  for (FoldOutput& fo : out.folds) {
    out.report.folds.push_back(fo.report);
    for (TranscriptEvent& e : fo.events)
      out.transcript.events.push_back(std::move(e));
  }
  out.report.compute_aggregates();
  return out;
}

std::vector<SweepRow> sweep_rule_budget(const Dataset& data, PipelineConfig cfg,
                                        const std::vector<int>& m_values,
                                        const PromptSet* prompts) {
  std::vector<SweepRow> rows;
  for (int m : m_values) {
    if (m < 1) throw ConfigError("max_rules values must be >= 1");
    cfg.max_rules = m;
    const RunOutput run = run_pipeline(data, cfg, prompts);
    rows.push_back(
        {m, run.report.mean_test_auroc, run.report.std_test_auroc});
  }
  return rows;
}

RulePool replay_pool(const std::vector<TranscriptEvent>& events,
                     const PipelineConfig& cfg, const Dataset& d_con,
                     const FeatureStats& stats, int* divergences) {
  RulePool pool(cfg);
  int mismatches = 0;
  for (const TranscriptEvent& e : events) {
    if (!e.parse_ok || e.rule_json.empty()) continue;
    Rule rule;
    try {
      rule = parse_rule(e.rule_json, d_con.catalog, cfg.logic_depth);
    } catch (const RuleError&) {
      ++mismatches;
      continue;
    }
    ConsiderOutcome outcome = pool.consider(rule, d_con, stats);
    const std::string stat =
        outcome.accepted ? "accepted" : to_string(outcome.reason);
    if (stat != e.stat_outcome) ++mismatches;
    if (!outcome.accepted) continue;
    // recorded verdicts stand in for the remote gate
    const bool plausible = e.plausibility != "implausible";
    if (plausible) pool.admit(std::move(*outcome.record));
  }
  if (divergences) *divergences = mismatches;
  return pool;
}

ReplayResult replay_run(const Dataset& data, const Transcript& t,
                        const PipelineConfig& cfg) {
  const std::vector<FoldSplit> folds =
      stratified_group_kfold(data, cfg.folds, cfg.seed);
  ReplayResult result;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<TranscriptEvent> events;
    for (const TranscriptEvent& e : t.events)
      if (e.fold == static_cast<int>(f)) events.push_back(e);
    const Dataset d_con =
        slice(data, folds[f].construction_rows, SplitTag::construction);
    const Dataset d_val =
        slice(data, folds[f].validation_rows, SplitTag::validation);
    const FeatureStats stats = FeatureStats::fit(d_con);
    int div = 0;
    RulePool pool = replay_pool(events, cfg, d_con, stats, &div);
    result.divergences += div;
    result.pool_hashes.push_back(pool.state_hash());

    if (!pool.empty()) {
      const AssemblyContext actx(pool, d_val, stats);
      const AssembleMode mode = cfg.assemble_mode == AssembleMode::agent
                                    ? AssembleMode::greedy
                                    : cfg.assemble_mode;
      Checklist c = assemble(actx, cfg.max_rules, mode, cfg.exhaustive_cap);
      c.fold_id = static_cast<int>(f);
      if (!cfg.single_pass)
        for (int phase = 0; phase < cfg.refine_phases; ++phase)
          c = refine(c, actx, cfg.max_rules, cfg.refine_steps);
      result.checklists.push_back(
          finalize(std::move(c), d_val, stats, cfg.objective, cfg.spec_floor));
    } else {
      result.checklists.emplace_back();
    }
  }
  return result;
}

}  // namespace nofm
