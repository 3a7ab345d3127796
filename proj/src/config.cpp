#include "exg/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <type_traits>

namespace exg {

using nlohmann::json;

json to_json(const RunConfig& cfg) {
  const LoopConfig& l = cfg.loop;
  const RetrievalConfig& r = l.retrieval;
  const ChatClientConfig& c = cfg.agent.chat;
  return json{
      {"loop",
       {{"max_attempts", l.max_attempts},
        {"mode", to_string(l.mode)},
        {"hint_budget", l.hint_budget},
        {"include_counterparts", l.include_counterparts},
        {"fix_limit", l.fix_limit ? json(*l.fix_limit) : json(nullptr)},
        {"reflection_enabled", l.reflection_enabled},
        {"similarity_link_m", l.similarity_link_m},
        {"similarity_link_threshold", l.similarity_link_threshold},
        {"store_cases", l.store_cases},
        {"create_similar_edges", l.create_similar_edges},
        {"create_fixed_edges", l.create_fixed_edges},
        {"system_text", l.system_text},
        {"instruction_text", l.instruction_text}}},
      {"retrieval",
       {{"k_seeds", r.k_seeds},
        {"fanout_sim", r.fanout_sim},
        {"fanout_bridge", r.fanout_bridge},
        {"max_anchor_selected", r.max_anchor_selected},
        {"pool_cap", r.pool_cap},
        {"enabled", r.enabled},
        {"use_anchor", r.use_anchor},
        {"use_similarity", r.use_similarity},
        {"use_fix", r.use_fix}}},
      {"rerank", {{"alpha", l.rerank.alpha}, {"propagate", l.rerank.propagate}}},
      {"embedder",
       {{"kind", cfg.embedder.kind},
        {"dimension", cfg.embedder.dimension},
        {"url", cfg.embedder.url},
        {"timeout_ms", cfg.embedder.timeout_ms}}},
      {"agent",
       {{"kind", cfg.agent.kind},
        {"base_url", c.base_url},
        {"model", c.model},
        {"temperature", c.temperature},
        {"max_tokens", c.max_tokens},
        {"api_key_env", c.api_key_env},
        {"timeout_ms", c.timeout.count()},
        {"max_retries", c.max_retries}}}};
}

namespace {

using Setter = std::function<void(RunConfig&, const json&)>;

template <typename T, typename Field>
Setter set(Field field) {
  return [field](RunConfig& cfg, const json& v) {
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!v.is_number_unsigned()) throw ConfigError("expected a non-negative integer, got " + v.dump());
    }
    field(cfg) = v.get<T>();
  };
}

const std::map<std::string, std::map<std::string, Setter>>& setters() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"loop",
       {{"max_attempts", set<int>([](RunConfig& c) -> int& { return c.loop.max_attempts; })},
        {"mode",
         [](RunConfig& c, const json& v) {
           const auto s = v.get<std::string>();
           if (s == "online") {
             c.loop.mode = Mode::Online;
           } else if (s == "offline") {
             c.loop.mode = Mode::Offline;
           } else {
             throw ConfigError("loop.mode must be online or offline");
           }
         }},
        {"hint_budget",
         set<std::size_t>([](RunConfig& c) -> std::size_t& { return c.loop.hint_budget; })},
        {"include_counterparts",
         set<bool>([](RunConfig& c) -> bool& { return c.loop.include_counterparts; })},
        {"fix_limit",
         [](RunConfig& c, const json& v) {
           if (v.is_null()) {
             c.loop.fix_limit.reset();
           } else {
             c.loop.fix_limit = v.get<std::size_t>();
           }
         }},
        {"reflection_enabled",
         set<bool>([](RunConfig& c) -> bool& { return c.loop.reflection_enabled; })},
        {"similarity_link_m",
         set<std::size_t>([](RunConfig& c) -> std::size_t& { return c.loop.similarity_link_m; })},
        {"similarity_link_threshold",
         set<double>([](RunConfig& c) -> double& { return c.loop.similarity_link_threshold; })},
        {"store_cases", set<bool>([](RunConfig& c) -> bool& { return c.loop.store_cases; })},
        {"create_similar_edges",
         set<bool>([](RunConfig& c) -> bool& { return c.loop.create_similar_edges; })},
        {"create_fixed_edges",
         set<bool>([](RunConfig& c) -> bool& { return c.loop.create_fixed_edges; })},
        {"system_text",
         set<std::string>([](RunConfig& c) -> std::string& { return c.loop.system_text; })},
        {"instruction_text",
         set<std::string>([](RunConfig& c) -> std::string& { return c.loop.instruction_text; })}}},
      {"retrieval",
       {{"k_seeds",
         set<std::size_t>([](RunConfig& c) -> std::size_t& { return c.loop.retrieval.k_seeds; })},
        {"fanout_sim",
         set<std::size_t>([](RunConfig& c) -> std::size_t& { return c.loop.retrieval.fanout_sim; })},
        {"fanout_bridge", set<std::size_t>([](RunConfig& c) -> std::size_t& {
           return c.loop.retrieval.fanout_bridge;
         })},
        {"max_anchor_selected", set<std::size_t>([](RunConfig& c) -> std::size_t& {
           return c.loop.retrieval.max_anchor_selected;
         })},
        {"pool_cap",
         set<std::size_t>([](RunConfig& c) -> std::size_t& { return c.loop.retrieval.pool_cap; })},
        {"enabled", set<bool>([](RunConfig& c) -> bool& { return c.loop.retrieval.enabled; })},
        {"use_anchor", set<bool>([](RunConfig& c) -> bool& { return c.loop.retrieval.use_anchor; })},
        {"use_similarity",
         set<bool>([](RunConfig& c) -> bool& { return c.loop.retrieval.use_similarity; })},
        {"use_fix", set<bool>([](RunConfig& c) -> bool& { return c.loop.retrieval.use_fix; })}}},
      {"rerank",
       {{"alpha", set<double>([](RunConfig& c) -> double& { return c.loop.rerank.alpha; })},
        {"propagate", set<bool>([](RunConfig& c) -> bool& { return c.loop.rerank.propagate; })}}},
      {"embedder",
       {{"kind", set<std::string>([](RunConfig& c) -> std::string& { return c.embedder.kind; })},
        {"dimension", set<int>([](RunConfig& c) -> int& { return c.embedder.dimension; })},
        {"url", set<std::string>([](RunConfig& c) -> std::string& { return c.embedder.url; })},
        {"timeout_ms", set<int>([](RunConfig& c) -> int& { return c.embedder.timeout_ms; })}}},
      {"agent",
       {{"kind", set<std::string>([](RunConfig& c) -> std::string& { return c.agent.kind; })},
        {"base_url",
         set<std::string>([](RunConfig& c) -> std::string& { return c.agent.chat.base_url; })},
        {"model", set<std::string>([](RunConfig& c) -> std::string& { return c.agent.chat.model; })},
        {"temperature",
         set<double>([](RunConfig& c) -> double& { return c.agent.chat.temperature; })},
        {"max_tokens",
         set<std::size_t>([](RunConfig& c) -> std::size_t& { return c.agent.chat.max_tokens; })},
        {"api_key_env",
         set<std::string>([](RunConfig& c) -> std::string& { return c.agent.chat.api_key_env; })},
        {"timeout_ms",
         [](RunConfig& c, const json& v) {
           c.agent.chat.timeout = std::chrono::milliseconds(v.get<long long>());
         }},
        {"max_retries", set<int>([](RunConfig& c) -> int& { return c.agent.chat.max_retries; })}}},
  };
  return table;
}

void validate(const RunConfig& cfg) {
  cfg.loop.validate();
  if (cfg.embedder.kind != "hashing" && cfg.embedder.kind != "remote") {
    throw ConfigError("embedder.kind must be hashing or remote");
  }
  if (cfg.embedder.dimension < 1) throw ConfigError("embedder.dimension must be >= 1");
  if (cfg.embedder.kind == "remote" && cfg.embedder.url.empty()) {
    throw ConfigError("embedder.url is required for a remote embedder");
  }
  if (cfg.agent.kind != "mock" && cfg.agent.kind != "http") {
    throw ConfigError("agent.kind must be mock or http");
  }
  if (cfg.agent.chat.max_retries < 0) throw ConfigError("agent.max_retries must be >= 0");
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig cfg;
  const auto& table = setters();
  for (const auto& [section, body] : j.items()) {
    const auto sec = table.find(section);
    if (sec == table.end()) throw ConfigError("unknown config section '" + section + "'");
    if (!body.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      const auto it = sec->second.find(key);
      if (it == sec->second.end()) throw ConfigError("unknown config key '" + section + "." + key + "'");
      try {
        it->second(cfg, value);
      } catch (const json::exception& e) {
        throw ConfigError("bad value for '" + section + "." + key + "': " + e.what());
      }
    }
  }
  try {
    validate(cfg);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override must look like section.key=value: '" + assignment + "'");
  }
  const std::string section = assignment.substr(0, dot);
  const std::string key = assignment.substr(dot + 1, eq - dot - 1);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json doc = to_json(cfg);
  if (!doc.contains(section)) throw ConfigError("unknown config section '" + section + "'");
  if (!doc[section].contains(key)) throw ConfigError("unknown config key '" + section + "." + key + "'");
  doc[section][key] = std::move(value);
  cfg = run_config_from_json(doc);
}

std::shared_ptr<const Embedder> make_embedder(const EmbedderSettings& settings) {
  if (settings.kind == "remote") {
    return std::make_shared<RemoteEmbedder>(
        RemoteEmbedderConfig{settings.url, std::chrono::milliseconds(settings.timeout_ms)});
  }
  return std::make_shared<HashingEmbedder>(settings.dimension);
}

}  // namespace exg
