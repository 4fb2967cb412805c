#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "memrouter/http.hpp"

#include <cstdlib>

namespace memrouter {

namespace {

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

UrlParts split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto slash = url.find('/', host_start);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

HttpResult http_post_json(const std::string& url, const std::string& body,
                          const HttpHeaders& headers, std::chrono::milliseconds timeout) {
  HttpResult result;
  auto parts = split_url(url);
  httplib::Client client(parts.origin);
  if (!client.is_valid()) {
    result.failure = HttpFailure::Transport;
    result.error = "invalid endpoint '" + url + "'";
    return result;
  }
  const auto secs = timeout.count() / 1000;
  const auto usecs = (timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) hdrs.emplace(k, v);

  const auto start = std::chrono::steady_clock::now();
  auto res = client.Post(parts.path, hdrs, body, "application/json");
  const auto elapsed = std::chrono::steady_clock::now() - start;
  if (!res) {
    const auto err = res.error();
    const bool timed_out = (err == httplib::Error::Read || err == httplib::Error::Connection ||
                            err == httplib::Error::Write) &&
                           elapsed >= timeout;
    result.failure = timed_out ? HttpFailure::Timeout : HttpFailure::Transport;
    result.error = httplib::to_string(err);
    return result;
  }
  result.status = res->status;
  result.body = res->body;
  if (res->status < 200 || res->status >= 300) {
    result.failure = HttpFailure::Status;
    result.error = "HTTP " + std::to_string(res->status);
  }
  return result;
}

HttpHeaders auth_headers() {
  HttpHeaders h;
  if (const char* key = std::getenv("MEMROUTER_API_KEY"); key && *key) {
    h.emplace_back("Authorization", std::string("Bearer ") + key);
  }
  return h;
}

}  // namespace memrouter
