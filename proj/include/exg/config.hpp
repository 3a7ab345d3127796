#pragma once
// Run configuration for the command-line tool: a JSON document with the
// sections loop, retrieval, rerank, embedder and agent, plus dotted
// `section.key=value` overrides. Unknown keys are rejected.

#include <memory>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "exg/chat_client.hpp"
#include "exg/embed.hpp"
#include "exg/loop.hpp"

namespace exg {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct EmbedderSettings {
  std::string kind = "hashing";  // hashing | remote
  int dimension = HashingEmbedder::kDefaultDimension;
  std::string url;
  int timeout_ms = 10000;
};

struct AgentSettings {
  std::string kind = "mock";  // mock | http
  ChatClientConfig chat;
};

struct RunConfig {
  LoopConfig loop;
  EmbedderSettings embedder;
  AgentSettings agent;
};

nlohmann::json to_json(const RunConfig& cfg);
// Starts from the defaults; keys absent from `j` keep them. Throws
// ConfigError on unknown keys, wrong types or invalid values.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
// `section.key=value`; the value is read as JSON when it parses, otherwise
// as a bare string.
void apply_override(RunConfig& cfg, const std::string& assignment);

std::shared_ptr<const Embedder> make_embedder(const EmbedderSettings& settings);

}  // namespace exg
