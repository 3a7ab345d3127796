#pragma once
// AgentClient over an OpenAI-style chat-completions endpoint.

#include <chrono>
#include <cstddef>
#include <string>

#include <json.hpp>

#include "exg/loop.hpp"

namespace exg {

struct ChatClientConfig {
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string model;
  double temperature = 0.0;
  std::size_t max_tokens = 1024;
  std::string api_key_env = "EXG_API_KEY";
  std::chrono::milliseconds timeout{60000};
  int max_retries = 2;  // extra tries after the first failure
};

class ChatCompletionClient final : public AgentClient {
 public:
  explicit ChatCompletionClient(ChatClientConfig config);

  AgentResponse act(const std::string& prompt) override;

  std::string endpoint() const;
  // Request body for one prompt, sent as a single user message.
  nlohmann::json request_body(const std::string& prompt) const;

 private:
  ChatClientConfig config_;
};

}  // namespace exg
