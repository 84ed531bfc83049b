#pragma once

#include <string>

#include "json.hpp"

namespace autolf {

struct HttpTarget {
  std::string scheme_host_port;  // e.g. http://127.0.0.1:8080
  std::string path;              // e.g. /v1/embeddings
};

HttpTarget parse_url(const std::string& url);

// POSTs JSON with bearer auth, retrying transport failures and 5xx replies
// with exponential backoff. Throws ProviderUnreachable once retries are
// exhausted or on a 4xx reply.
nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                         const std::string& api_key, int timeout_seconds,
                         int retries, int backoff_ms);

}  // namespace autolf
