#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nofm/catalog.hpp"
#include "nofm/rules.hpp"

namespace nofm {

// Planted-checklist generator. Draws a mixed-kind feature table, plants a
// 6-rule unit-weighted checklist, and draws labels from a monotone
// per-score risk curve pi(s) = Phi((s - c) / sigma):
//   - calibrated mode (noise unset): sigma is solved so the planted
//     checklist's AUROC hits target_auroc, c is solved for the requested
//     prevalence;
//   - fixed-noise mode: sigma given; sigma = 0 degenerates to labels
//     deterministic in the planted score (y = 1 iff s >= K).
// The generator verifies the achieved AUROC with its own score-histogram
// computation before writing anything.
struct SynthSpec {
  std::uint64_t n = 10000;
  double prevalence = 0.15;
  std::uint64_t seed = 20240501;
  std::optional<double> noise;  // sigma; overrides target_auroc when set
  double target_auroc = 0.95;
  double tolerance = 0.02;
};

struct SynthResult {
  TableSchema schema;
  std::vector<Rule> planted;
  int intended_k = 0;
  double sigma = 0;
  double achieved_auroc = 0;
  double achieved_prevalence = 0;
  nlohmann::json manifest;

  std::string data_path, schema_path, manifest_path;
};

SynthResult synth_gen(const SynthSpec& spec, const std::string& out_dir);

}  // namespace nofm
