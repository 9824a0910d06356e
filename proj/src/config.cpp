#include "nofm/config.hpp"

#include <cinttypes>

#include "nofm/errors.hpp"

namespace nofm {

const char* to_string(ProposerMode m) {
  return m == ProposerMode::heuristic ? "heuristic" : "remote";
}
const char* to_string(PlausibilityMode m) {
  return m == PlausibilityMode::accept_all ? "accept_all" : "remote";
}
const char* to_string(AssembleMode m) {
  switch (m) {
    case AssembleMode::greedy: return "greedy";
    case AssembleMode::exhaustive: return "exhaustive";
    case AssembleMode::agent: return "agent";
  }
  return "?";
}
const char* to_string(GainMode m) {
  return m == GainMode::auroc_gain ? "auroc" : "coverage";
}

namespace {

ProposerMode proposer_from_string(const std::string& s) {
  if (s == "heuristic") return ProposerMode::heuristic;
  if (s == "remote") return ProposerMode::remote;
  throw ConfigError("unknown proposer: " + s);
}
PlausibilityMode plausibility_from_string(const std::string& s) {
  if (s == "accept_all") return PlausibilityMode::accept_all;
  if (s == "remote") return PlausibilityMode::remote;
  throw ConfigError("unknown plausibility mode: " + s);
}
AssembleMode assemble_from_string(const std::string& s) {
  if (s == "greedy") return AssembleMode::greedy;
  if (s == "exhaustive") return AssembleMode::exhaustive;
  if (s == "agent") return AssembleMode::agent;
  throw ConfigError("unknown assemble mode: " + s);
}
GainMode gain_from_string(const std::string& s) {
  if (s == "auroc") return GainMode::auroc_gain;
  if (s == "coverage") return GainMode::coverage_gain;
  throw ConfigError("unknown gain mode: " + s);
}

}  // namespace

void PipelineConfig::validate() const {
  if (max_rules < 1) throw ConfigError("max_rules must be >= 1");
  if (!(auc_threshold >= 0.5 && auc_threshold < 1.0))
    throw ConfigError("auc_threshold must be in [0.5, 1)");
  if (!(jaccard_threshold > 0.0 && jaccard_threshold <= 1.0))
    throw ConfigError("jaccard_threshold must be in (0, 1]");
  if (logic_depth < 0) throw ConfigError("logic_depth must be >= 0");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (refine_steps < 0) throw ConfigError("refine_steps must be >= 0");
  if (refine_phases < 0) throw ConfigError("refine_phases must be >= 0");
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (min_pos_gain < 0) throw ConfigError("min_pos_gain must be >= 0");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

nlohmann::json PipelineConfig::to_json() const {
  return nlohmann::json{
      {"max_rules", max_rules},
      {"iterations", iterations},
      {"auc_threshold", auc_threshold},
      {"jaccard_threshold", jaccard_threshold},
      {"min_pos_gain", min_pos_gain},
      {"gain_mode", to_string(gain_mode)},
      {"refine_steps", refine_steps},
      {"refine_phases", refine_phases},
      {"logic_depth", logic_depth},
      {"objective", to_string(objective)},
      {"spec_floor", spec_floor},
      {"batch_size", batch_size},
      {"seed", seed},
      {"folds", folds},
      {"proposer", to_string(proposer)},
      {"plausibility", to_string(plausibility)},
      {"assemble_mode", to_string(assemble_mode)},
      {"llm_only", llm_only},
      {"use_jaccard", use_jaccard},
      {"use_diversity", use_diversity},
      {"single_pass", single_pass},
      {"exhaustive_cap", exhaustive_cap},
      {"call_budget", call_budget},
      {"plausibility_cap", plausibility_cap},
      {"task_description", task_description},
      {"prompts_dir", prompts_dir},
      {"jobs", jobs},
      {"remote",
       {{"url", remote.url},
        {"model", remote.model},
        {"temperature", remote.temperature},
        {"max_tokens", remote.max_tokens},
        {"max_attempts", remote.max_attempts},
        {"backoff_ms", remote.backoff_ms},
        {"token_env", remote.token_env}}}};
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  PipelineConfig c;
  try {
    c.max_rules = j.value("max_rules", c.max_rules);
    c.iterations = j.value("iterations", c.iterations);
    c.auc_threshold = j.value("auc_threshold", c.auc_threshold);
    c.jaccard_threshold = j.value("jaccard_threshold", c.jaccard_threshold);
    c.min_pos_gain = j.value("min_pos_gain", c.min_pos_gain);
    if (j.contains("gain_mode"))
      c.gain_mode = gain_from_string(j["gain_mode"].get<std::string>());
    c.refine_steps = j.value("refine_steps", c.refine_steps);
    c.refine_phases = j.value("refine_phases", c.refine_phases);
    c.logic_depth = j.value("logic_depth", c.logic_depth);
    if (j.contains("objective"))
      c.objective =
          threshold_objective_from_string(j["objective"].get<std::string>());
    c.spec_floor = j.value("spec_floor", c.spec_floor);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    c.folds = j.value("folds", c.folds);
    if (j.contains("proposer"))
      c.proposer = proposer_from_string(j["proposer"].get<std::string>());
    if (j.contains("plausibility"))
      c.plausibility =
          plausibility_from_string(j["plausibility"].get<std::string>());
    if (j.contains("assemble_mode"))
      c.assemble_mode =
          assemble_from_string(j["assemble_mode"].get<std::string>());
    c.llm_only = j.value("llm_only", c.llm_only);
    c.use_jaccard = j.value("use_jaccard", c.use_jaccard);
    c.use_diversity = j.value("use_diversity", c.use_diversity);
    c.single_pass = j.value("single_pass", c.single_pass);
    c.exhaustive_cap = j.value("exhaustive_cap", c.exhaustive_cap);
    c.call_budget = j.value("call_budget", c.call_budget);
    c.plausibility_cap = j.value("plausibility_cap", c.plausibility_cap);
    c.task_description = j.value("task_description", c.task_description);
    c.prompts_dir = j.value("prompts_dir", c.prompts_dir);
    c.jobs = j.value("jobs", c.jobs);
    if (j.contains("remote")) {
      const auto& r = j["remote"];
      c.remote.url = r.value("url", c.remote.url);
      c.remote.model = r.value("model", c.remote.model);
      c.remote.temperature = r.value("temperature", c.remote.temperature);
      c.remote.max_tokens = r.value("max_tokens", c.remote.max_tokens);
      c.remote.max_attempts = r.value("max_attempts", c.remote.max_attempts);
      c.remote.backoff_ms = r.value("backoff_ms", c.remote.backoff_ms);
      c.remote.token_env = r.value("token_env", c.remote.token_env);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  c.validate();
  return c;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a_hex(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a(bytes));
  return buf;
}

std::string PipelineConfig::hash() const {
  // Execution knobs (parallelism, asset paths, transport retry settings)
  // do not change what gets learned, so they stay out of the identity hash.
  nlohmann::json j = to_json();
  j.erase("jobs");
  j.erase("prompts_dir");
  j["remote"].erase("max_attempts");
  j["remote"].erase("backoff_ms");
  j["remote"].erase("token_env");
  return fnv1a_hex(j.dump());
}

}  // namespace nofm
