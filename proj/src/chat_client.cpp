#include "exg/chat_client.hpp"

#include <cstdlib>

#include "exg/http.hpp"

namespace exg {

ChatCompletionClient::ChatCompletionClient(ChatClientConfig config) : config_(std::move(config)) {
  if (config_.model.empty()) throw std::invalid_argument("chat client: model must be set");
  parse_url(endpoint());
}

std::string ChatCompletionClient::endpoint() const {
  std::string base = config_.base_url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  return base + "/chat/completions";
}

nlohmann::json ChatCompletionClient::request_body(const std::string& prompt) const {
  return nlohmann::json{{"model", config_.model},
                        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
                        {"temperature", config_.temperature},
                        {"max_tokens", config_.max_tokens}};
}

AgentResponse ChatCompletionClient::act(const std::string& prompt) {
  std::vector<std::pair<std::string, std::string>> headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
      headers.emplace_back("Authorization", std::string("Bearer ") + key);
    }
  }

  const auto body = request_body(prompt);
  nlohmann::json reply;
  for (int attempt = 0;; ++attempt) {
    try {
      reply = post_json(endpoint(), body, headers, config_.timeout);
      break;
    } catch (const TransportError&) {
      if (attempt >= config_.max_retries) throw;
    }
  }

  AgentResponse r;
  try {
    r.output = reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("chat completion reply without message content: ") + e.what());
  }
  const auto usage = reply.find("usage");
  if (usage != reply.end() && usage->is_object() && usage->contains("prompt_tokens") &&
      usage->contains("completion_tokens")) {
    r.input_tokens = usage->at("prompt_tokens").get<std::size_t>();
    r.output_tokens = usage->at("completion_tokens").get<std::size_t>();
  } else {
    r.input_tokens = count_whitespace_tokens(prompt);
    r.output_tokens = count_whitespace_tokens(r.output);
    r.tokens_estimated = true;
  }
  return r;
}

}  // namespace exg
