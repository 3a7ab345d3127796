#pragma once
// Minimal JSON-over-HTTP POST used by the remote embedder and the chat client.

#include <chrono>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace exg {

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HttpTarget {
  std::string scheme_host_port;  // http://host:port
  std::string path;              // /v1/chat/completions
};

// Splits an absolute http(s) URL. Throws std::invalid_argument otherwise.
HttpTarget parse_url(const std::string& url);

// Throws TransportError on connection failures, non-2xx status or a body
// that is not JSON.
nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                         const std::vector<std::pair<std::string, std::string>>& headers,
                         std::chrono::milliseconds timeout);

}  // namespace exg
