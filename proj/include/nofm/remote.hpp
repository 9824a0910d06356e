#pragma once

#include <cstdint>
#include <string>

#include "nofm/config.hpp"

namespace nofm {

// Minimal chat-completions client: one POST per call, bearer token from the
// configured environment variable, bounded retries with exponential
// backoff. Throws TransportError once attempts are exhausted.
class ChatClient {
 public:
  explicit ChatClient(const RemoteConfig& cfg);

  // Returns the assistant message content. `system` may be empty.
  std::string complete(const std::string& system, const std::string& user);

  int calls_made() const { return calls_made_; }
  int calls_attempted() const { return calls_attempted_; }

 private:
  RemoteConfig cfg_;
  std::string scheme_host_;
  std::string path_;
  int calls_made_ = 0;       // successful round trips
  int calls_attempted_ = 0;  // including retries
};

}  // namespace nofm
