#include "nofm/transcript.hpp"

#include <fstream>

#include "nofm/errors.hpp"

namespace nofm {

nlohmann::json TranscriptEvent::to_json() const {
  return nlohmann::json{{"fold", fold},
                        {"iteration", iteration},
                        {"source", source},
                        {"rule", rule_json},
                        {"raw", raw},
                        {"parse_ok", parse_ok},
                        {"parse_error", parse_error},
                        {"stat", stat_outcome},
                        {"auroc", auroc},
                        {"max_jaccard", max_jaccard},
                        {"plausibility", plausibility},
                        {"plausibility_reason", plausibility_reason},
                        {"admitted", admitted},
                        {"ordinal", ordinal}};
}

TranscriptEvent TranscriptEvent::from_json(const nlohmann::json& j) {
  TranscriptEvent e;
  e.fold = j.value("fold", 0);
  e.iteration = j.value("iteration", 0);
  e.source = j.value("source", std::string());
  e.rule_json = j.value("rule", std::string());
  e.raw = j.value("raw", std::string());
  e.parse_ok = j.value("parse_ok", true);
  e.parse_error = j.value("parse_error", std::string());
  e.stat_outcome = j.value("stat", std::string());
  e.auroc = j.value("auroc", 0.0);
  e.max_jaccard = j.value("max_jaccard", 0.0);
  e.plausibility = j.value("plausibility", std::string());
  e.plausibility_reason = j.value("plausibility_reason", std::string());
  e.admitted = j.value("admitted", false);
  e.ordinal = j.value("ordinal", -1);
  return e;
}

void Transcript::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const TranscriptEvent& e : events) out << e.to_json().dump() << "\n";
}

Transcript Transcript::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  Transcript t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.events.push_back(TranscriptEvent::from_json(nlohmann::json::parse(line)));
  }
  return t;
}

}  // namespace nofm
