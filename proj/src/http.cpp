#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "exg/http.hpp"

namespace exg {

HttpTarget parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("not an absolute URL: '" + url + "'");
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw std::invalid_argument("unsupported URL scheme '" + scheme + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  HttpTarget t;
  if (path_start == std::string::npos) {
    t.scheme_host_port = url;
    t.path = "/";
  } else {
    t.scheme_host_port = url.substr(0, path_start);
    t.path = url.substr(path_start);
  }
  return t;
}

nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                         const std::vector<std::pair<std::string, std::string>>& headers,
                         std::chrono::milliseconds timeout) {
  const HttpTarget target = parse_url(url);
  httplib::Client client(target.scheme_host_port);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);

  auto res = client.Post(target.path, h, body.dump(), "application/json");
  if (!res) {
    throw TransportError("POST " + url + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("POST " + url + " returned HTTP " + std::to_string(res->status));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw TransportError("POST " + url + " returned a non-JSON body: " + e.what());
  }
}

}  // namespace exg
