#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "autolf/http.hpp"

#include <chrono>
#include <thread>

#include "autolf/errors.hpp"
#include "httplib.h"

namespace autolf {

HttpTarget parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw PreconditionError("URL without scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                         const std::string& api_key, int timeout_seconds,
                         int retries, int backoff_ms) {
  const HttpTarget target = parse_url(url);
  httplib::Client client(target.scheme_host_port);
  client.set_connection_timeout(timeout_seconds, 0);
  client.set_read_timeout(timeout_seconds, 0);
  client.set_write_timeout(timeout_seconds, 0);
  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

  std::string last_error;
  const std::string payload = body.dump();
  for (int attempt = 0; attempt <= retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms << (attempt - 1)));
    }
    auto res = client.Post(target.path, headers, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status >= 400) {
      throw ProviderUnreachable(url + ": HTTP " + std::to_string(res->status));
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
      throw MalformedProviderReply(res->body.substr(0, 200));
    }
  }
  throw ProviderUnreachable(url + ": " + last_error);
}

}  // namespace autolf
