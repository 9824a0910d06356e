#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace nofm {

// One candidate's trip through the gates. The transcript is the audit
// artifact: replaying it with proposers disabled reproduces the pool
// bit-identically.
struct TranscriptEvent {
  int fold = 0;
  int iteration = 0;
  std::string source;       // heuristic | remote | replay
  std::string rule_json;    // canonical serialized rule ("" if unparseable)
  std::string raw;          // raw line as received (remote only)
  bool parse_ok = true;
  std::string parse_error;
  std::string stat_outcome;  // accepted | low_auroc | redundant | ...
  double auroc = 0;
  double max_jaccard = 0;
  std::string plausibility;  // accept_all | plausible | implausible | ...
  std::string plausibility_reason;
  bool admitted = false;
  int ordinal = -1;

  nlohmann::json to_json() const;
  static TranscriptEvent from_json(const nlohmann::json& j);
};

struct Transcript {
  std::vector<TranscriptEvent> events;

  void save(const std::string& path) const;  // JSON-lines
  static Transcript load(const std::string& path);
};

}  // namespace nofm
