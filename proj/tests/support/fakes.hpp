#pragma once

#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "taskdialog/llm_client.hpp"

namespace taskdialog::testing {

/// Answers every request through a callback and keeps the requests it saw.
class FakeBackend : public LlmBackend {
 public:
  using Responder = std::function<std::string(const PromptRequest&)>;
  explicit FakeBackend(Responder responder) : responder_(std::move(responder)) {}

  Completion complete(const PromptRequest& request) override {
    {
      std::lock_guard lock(mu_);
      requests_.push_back(request);
    }
    return {responder_(request), FinishReason::kStop, fingerprint(request)};
  }

  std::size_t calls() const {
    std::lock_guard lock(mu_);
    return requests_.size();
  }
  std::vector<PromptRequest> requests() const {
    std::lock_guard lock(mu_);
    return requests_;
  }

 private:
  Responder responder_;
  mutable std::mutex mu_;
  std::vector<PromptRequest> requests_;
};

inline bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

inline std::string chat_body(const std::string& content, const std::string& finish = "stop") {
  nlohmann::json j = {{"choices", nlohmann::json::array({{{"message", {{"role", "assistant"}, {"content", content}}},
                                                          {"finish_reason", finish}}})}};
  return j.dump();
}

/// Replays a fixed list of HTTP responses (the last one repeats) and counts posts.
class FakeTransport : public Transport {
 public:
  explicit FakeTransport(std::vector<HttpResponse> responses) : responses_(std::move(responses)) {}

  HttpResponse post_json(const std::string& url, const std::string& body,
                         const std::map<std::string, std::string>& headers) override {
    std::lock_guard lock(mu_);
    urls.push_back(url);
    bodies.push_back(body);
    last_headers = headers;
    auto i = std::min(posts++, responses_.size() - 1);
    return responses_[i];
  }

  std::size_t posts = 0;
  std::vector<std::string> urls;
  std::vector<std::string> bodies;
  std::map<std::string, std::string> last_headers;

 private:
  std::vector<HttpResponse> responses_;
  std::mutex mu_;
};

}  // namespace taskdialog::testing
