#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "taskdialog/llm_client.hpp"

namespace taskdialog {

HttpResponse HttplibTransport::post_json(const std::string& url, const std::string& body,
                                         const std::map<std::string, std::string>& headers) {
  // Split "scheme://host[:port]/path" into client origin and request path.
  auto scheme_end = url.find("://");
  auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) hdrs.emplace(k, v);

  HttpResponse out;
  auto res = client.Post(path, hdrs, body, "application/json");
  if (!res) {
    out.error = httplib::to_string(res.error());
    return out;
  }
  out.status = res->status;
  out.body = res->body;
  return out;
}

}  // namespace taskdialog
