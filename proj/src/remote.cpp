#include "nofm/remote.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "nofm/errors.hpp"

namespace nofm {

ChatClient::ChatClient(const RemoteConfig& cfg) : cfg_(cfg) {
  if (cfg_.url.empty()) throw ConfigError("remote.url is not set");
  // split "<scheme>://<host>[:port]" from the request path
  const auto scheme_end = cfg_.url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("remote.url must start with http:// or https://");
  const auto path_start = cfg_.url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_ = cfg_.url;
    path_ = "/v1/chat/completions";
  } else {
    scheme_host_ = cfg_.url.substr(0, path_start);
    path_ = cfg_.url.substr(path_start);
  }
}

std::string ChatClient::complete(const std::string& system,
                                 const std::string& user) {
  nlohmann::json messages = nlohmann::json::array();
  if (!system.empty())
    messages.push_back({{"role", "system"}, {"content", system}});
  messages.push_back({{"role", "user"}, {"content", user}});
  const nlohmann::json body{{"model", cfg_.model},
                            {"messages", std::move(messages)},
                            {"temperature", cfg_.temperature},
                            {"max_tokens", cfg_.max_tokens}};

  httplib::Headers headers;
  if (const char* token = std::getenv(cfg_.token_env.c_str()))
    headers.emplace("Authorization", std::string("Bearer ") + token);

  std::string last_error;
  for (int attempt = 0; attempt < cfg_.max_attempts; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(
          std::chrono::milliseconds(cfg_.backoff_ms << (attempt - 1)));
    ++calls_attempted_;
    httplib::Client client(scheme_host_);
    client.set_connection_timeout(30);
    client.set_read_timeout(120);
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    try {
      const nlohmann::json reply = nlohmann::json::parse(res->body);
      const auto& content = reply.at("choices").at(0).at("message").at("content");
      ++calls_made_;
      return content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      last_error = std::string("bad completion payload: ") + e.what();
    }
  }
  throw TransportError("chat completion failed after " +
                           std::to_string(cfg_.max_attempts) +
                           " attempts: " + last_error,
                       cfg_.max_attempts);
}

}  // namespace nofm
