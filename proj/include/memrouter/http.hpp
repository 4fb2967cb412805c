#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace memrouter {

enum class HttpFailure { None, Timeout, Transport, Status };

struct HttpResult {
  HttpFailure failure = HttpFailure::None;
  int status = 0;
  std::string body;
  std::string error;

  bool ok() const noexcept { return failure == HttpFailure::None; }
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// POSTs a JSON body to `url` (http:// or https://). Never throws for
/// network conditions; the failure kind is reported in the result.
HttpResult http_post_json(const std::string& url, const std::string& body,
                          const HttpHeaders& headers, std::chrono::milliseconds timeout);

/// Bearer header from MEMROUTER_API_KEY, if set.
HttpHeaders auth_headers();

}  // namespace memrouter
