#pragma once

#include <map>
#include <string>

namespace nofm {

// Loads the message templates shipped under assets/prompts and fills in
// $variable placeholders. Lookup order for the directory: explicit config
// value, NOFM_PROMPTS_DIR, ./assets/prompts, then the source-tree assets.
class PromptSet {
 public:
  static PromptSet load(const std::string& dir_hint = "");

  const std::string& feature_proposal() const { return feature_proposal_; }
  const std::string& plausibility_review() const { return plausibility_review_; }
  const std::string& score_construction() const { return score_construction_; }
  const std::string& score_refinement() const { return score_refinement_; }
  const std::string& directory() const { return dir_; }

 private:
  std::string dir_;
  std::string feature_proposal_;
  std::string plausibility_review_;
  std::string score_construction_;
  std::string score_refinement_;
};

// Replaces each $name (longest match first) with its value. Unknown
// placeholders are left untouched.
std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& vars);

}  // namespace nofm
