#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nofm/prompts.hpp"
#include "nofm/tool_interface.hpp"

namespace nofm {

// Offline grammar-search proposer. Samples syntactically valid rules using
// only the aggregate fields of the context: thresholds at quantile-grid
// cutpoints rounded to clinical precision, ranges between quantile pairs,
// ratios/differences over numeric pairs, percent change over
// (__first, __last) column pairs, shallow AND/OR over the pool's top atomic
// rules. Families named in the diversity guidance are sampled more often.
// Deterministic for a given (context, batch, seed).
std::vector<Rule> propose_heuristic(const ProposalContext& ctx, int batch,
                                    std::uint64_t seed);

class ChatClient;  // remote.hpp

struct RemoteProposal {
  std::vector<Rule> rules;
  std::vector<std::string> raw_lines;  // one per parsed rule, in order
  int malformed = 0;
};

// Renders the feature-proposal template over the context, makes one
// chat-completion call and parses the reply as JSON-lines. Malformed lines
// are counted and dropped, never repaired.
RemoteProposal propose_remote(const ProposalContext& ctx, ChatClient& client,
                              const PromptSet& prompts,
                              const FeatureCatalog& catalog, int max_depth);

struct PlausibilityVerdict {
  bool plausible = true;
  std::string reason;
};

// Eliminative gate. accept_all always passes; remote renders the review
// template and parses a single {"plausible": ..., "reason": ...} object,
// rejecting conservatively when the reply does not parse.
PlausibilityVerdict plausibility_gate(const Rule& r, PlausibilityMode mode,
                                      ChatClient* client,
                                      const PromptSet* prompts);

}  // namespace nofm
