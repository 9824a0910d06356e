#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "nofm/eval.hpp"

namespace nofm {

enum class ProposerMode { heuristic, remote };
enum class PlausibilityMode { accept_all, remote };
enum class AssembleMode { greedy, exhaustive, agent };
enum class GainMode { auroc_gain, coverage_gain };

const char* to_string(ProposerMode m);
const char* to_string(PlausibilityMode m);
const char* to_string(AssembleMode m);
const char* to_string(GainMode m);

struct RemoteConfig {
  std::string url;            // chat-completions endpoint
  std::string model;
  double temperature = 1.0;
  int max_tokens = 1024;
  int max_attempts = 3;
  int backoff_ms = 500;
  std::string token_env = "NOFM_API_TOKEN";
};

struct PipelineConfig {
  int max_rules = 6;              // M
  int iterations = 100;           // proposal batches per fold
  double auc_threshold = 0.60;    // minimum univariate AUROC to retain
  double jaccard_threshold = 0.9; // maximum positive-class overlap
  double min_pos_gain = 0.01;     // gain needed to accept a similar rule
  GainMode gain_mode = GainMode::auroc_gain;
  int refine_steps = 10;
  int refine_phases = 2;
  int logic_depth = 1;
  ThresholdObjective objective = ThresholdObjective::youden;
  double spec_floor = 0.9;  // for the sens_at_spec objective
  int batch_size = 3;
  std::uint64_t seed = 7;
  int folds = 5;

  ProposerMode proposer = ProposerMode::heuristic;
  PlausibilityMode plausibility = PlausibilityMode::accept_all;
  AssembleMode assemble_mode = AssembleMode::greedy;
  bool llm_only = false;  // single unconstrained call, no validation loop

  // Ablation switches.
  bool use_jaccard = true;
  bool use_diversity = true;
  bool single_pass = false;  // skip refinement

  std::uint64_t exhaustive_cap = 200000;
  int call_budget = 221;  // per fold: proposals + reviews + assembly
  int plausibility_cap = 100;

  std::string task_description = "Binary clinical outcome prediction.";
  std::string prompts_dir;  // empty = auto-discover
  RemoteConfig remote;

  int jobs = 1;  // folds evaluated in parallel

  void validate() const;
  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);

  // FNV-1a over the canonical JSON; stable across runs of the same build.
  std::string hash() const;
};

std::uint64_t fnv1a(const std::string& bytes);
std::string fnv1a_hex(const std::string& bytes);

}  // namespace nofm
