#include "nofm/prompts.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "nofm/errors.hpp"

namespace nofm {

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open prompt asset " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

PromptSet PromptSet::load(const std::string& dir_hint) {
  std::vector<std::filesystem::path> candidates;
  if (!dir_hint.empty()) candidates.emplace_back(dir_hint);
  if (const char* env = std::getenv("NOFM_PROMPTS_DIR"))
    candidates.emplace_back(env);
  candidates.emplace_back("assets/prompts");
#ifdef NOFM_SOURCE_ASSETS_DIR
  candidates.emplace_back(std::filesystem::path(NOFM_SOURCE_ASSETS_DIR) /
                          "prompts");
#endif

  for (const auto& dir : candidates) {
    if (!std::filesystem::exists(dir / "feature_proposal.txt")) continue;
    PromptSet set;
    set.dir_ = dir.string();
    set.feature_proposal_ = read_file(dir / "feature_proposal.txt");
    set.plausibility_review_ = read_file(dir / "plausibility_review.txt");
    set.score_construction_ = read_file(dir / "score_construction.txt");
    set.score_refinement_ = read_file(dir / "score_refinement.txt");
    return set;
  }
  throw IoError("prompt assets not found; set NOFM_PROMPTS_DIR");
}

std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] != '$') {
      out.push_back(tmpl[i++]);
      continue;
    }
    // longest matching variable name after '$'
    std::size_t best_len = 0;
    const std::string* best_value = nullptr;
    for (const auto& [name, value] : vars) {
      if (name.size() > best_len &&
          tmpl.compare(i + 1, name.size(), name) == 0) {
        best_len = name.size();
        best_value = &value;
      }
    }
    if (best_value) {
      out += *best_value;
      i += 1 + best_len;
    } else {
      out.push_back(tmpl[i++]);
    }
  }
  return out;
}

}  // namespace nofm
