#include "taskdialog/llm_client.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <thread>

#include <json.hpp>

#include "taskdialog/error.hpp"
#include "taskdialog/io.hpp"
#include "taskdialog/text.hpp"

namespace taskdialog {

using json = nlohmann::json;

void PromptRequest::validate() const {
  if (text::trim(system_text).empty() || text::trim(user_text).empty())
    throw Error(ErrorCode::kInvalidArgument, "prompt texts must be non-empty");
  if (!(temperature >= 0.0 && temperature <= 4.0))
    throw Error(ErrorCode::kInvalidArgument, "temperature outside [0, 4]");
  if (max_output_tokens <= 0) throw Error(ErrorCode::kInvalidArgument, "max_output_tokens must be positive");
}

std::string_view to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::kStop: return "stop";
    case FinishReason::kLength: return "length";
    case FinishReason::kError: return "error";
  }
  return "error";
}

FinishReason parse_finish_reason(std::string_view s) {
  if (s == "stop" || s == "end_turn" || s == "STOP") return FinishReason::kStop;
  if (s == "length" || s == "max_tokens" || s == "MAX_TOKENS") return FinishReason::kLength;
  return FinishReason::kError;
}

std::string fingerprint(const PromptRequest& request) {
  char temp[32];
  std::snprintf(temp, sizeof(temp), "%.4f", request.temperature);
  json canon = {
      {"model", request.model_id},
      {"system", request.system_text},
      {"user", request.user_text},
      {"temperature", temp},
      {"max_tokens", request.max_output_tokens},
  };
  return io::sha256_hex(canon.dump());
}

// ---------------------------------------------------------------------------
// Cassette

Cassette::Cassette(Cassette&& other) noexcept {
  std::lock_guard lock(other.mu_);
  name_ = std::move(other.name_);
  entries_ = std::move(other.entries_);
  index_ = std::move(other.index_);
}

Cassette Cassette::parse(std::string_view jsonl, std::string name) {
  Cassette cassette(std::move(name));
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(jsonl)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string where = cassette.name_ + " line " + std::to_string(line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kSchemaViolation, where + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("fingerprint") || !obj.contains("completion_text"))
      throw Error(ErrorCode::kSchemaViolation, where + ": expected fingerprint and completion_text");
    Entry entry;
    entry.fingerprint = obj["fingerprint"].get<std::string>();
    entry.summary_json = obj.value("request_summary", json::object()).dump();
    entry.completion.text = obj["completion_text"].get<std::string>();
    entry.completion.finish_reason = parse_finish_reason(obj.value("finish_reason", "stop"));
    entry.completion.request_fingerprint = entry.fingerprint;
    if (cassette.index_.contains(entry.fingerprint))
      throw Error(ErrorCode::kSchemaViolation, where + ": duplicate fingerprint " + entry.fingerprint);
    cassette.index_[entry.fingerprint] = cassette.entries_.size();
    cassette.entries_.push_back(std::move(entry));
  }
  return cassette;
}

Cassette Cassette::load(const std::filesystem::path& path) {
  return parse(io::read_file(path), path.filename().string());
}

std::string Cassette::to_jsonl() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& e : entries_) {
    json obj = {
        {"fingerprint", e.fingerprint},
        {"request_summary", json::parse(e.summary_json)},
        {"completion_text", e.completion.text},
        {"finish_reason", std::string(to_string(e.completion.finish_reason))},
    };
    out += obj.dump() + "\n";
  }
  return out;
}

void Cassette::save(const std::filesystem::path& path) const { io::write_file_atomic(path, to_jsonl()); }

std::optional<Completion> Cassette::find(const std::string& fp) const {
  std::lock_guard lock(mu_);
  auto it = index_.find(fp);
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second].completion;
}

bool Cassette::append(const PromptRequest& request, const Completion& completion) {
  const std::string fp = fingerprint(request);
  std::lock_guard lock(mu_);
  if (index_.contains(fp)) return false;
  auto head = [](const std::string& s) { return s.size() <= 160 ? s : s.substr(0, 160) + "..."; };
  json summary = {
      {"tag", request.tag},
      {"model", request.model_id},
      {"temperature", request.temperature},
      {"max_tokens", request.max_output_tokens},
      {"system_head", head(request.system_text)},
      {"user_head", head(request.user_text)},
  };
  Entry entry{fp, summary.dump(), completion};
  entry.completion.request_fingerprint = fp;
  index_[fp] = entries_.size();
  entries_.push_back(std::move(entry));
  return true;
}

std::size_t Cassette::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

// ---------------------------------------------------------------------------
// Transport and adapter

std::string EndpointAdapter::build_body(const PromptRequest& request) const {
  json body = {
      {"model", request.model_id},
      {"messages", json::array({{{"role", "system"}, {"content", request.system_text}},
                                {{"role", "user"}, {"content", request.user_text}}})},
      {"temperature", request.temperature},
      {"max_tokens", request.max_output_tokens},
  };
  return body.dump();
}

std::pair<std::string, FinishReason> EndpointAdapter::parse_body(const std::string& body) const {
  try {
    auto obj = json::parse(body);
    const auto& choice = obj.at("choices").at(0);
    std::string content = choice.at("message").at("content").get<std::string>();
    std::string reason = choice.value("finish_reason", "stop");
    return {content, parse_finish_reason(reason)};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kEndpointError, std::string("malformed response body: ") + e.what());
  }
}

LiveConfig LiveConfig::from_env() {
  LiveConfig cfg;
  auto env = [](const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
  };
  cfg.endpoint = env("TASKDIALOG_ENDPOINT");
  cfg.api_key = env("TASKDIALOG_API_KEY");
  cfg.default_model = env("TASKDIALOG_MODEL");
  return cfg;
}

LiveBackend::LiveBackend(LiveConfig config, std::shared_ptr<Transport> transport,
                         std::shared_ptr<const EndpointAdapter> adapter, Sleeper sleeper)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      adapter_(adapter ? std::move(adapter) : std::make_shared<EndpointAdapter>()),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      in_flight_(std::clamp(config_.max_in_flight, 1, 1024)) {
  if (config_.endpoint.empty()) throw Error(ErrorCode::kConfigError, "live backend needs an endpoint URL");
  if (!transport_) throw Error(ErrorCode::kConfigError, "live backend needs a transport");
}

void LiveBackend::throttle() {
  if (config_.requests_per_minute <= 0) return;
  const auto interval = std::chrono::milliseconds(60000 / config_.requests_per_minute);
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_slot_);
    next_slot_ = slot + interval;
  }
  auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(slot - std::chrono::steady_clock::now());
  if (wait.count() > 0) std::this_thread::sleep_for(wait);
}

Completion LiveBackend::complete(const PromptRequest& request) {
  request.validate();
  PromptRequest effective = request;
  if (effective.model_id.empty()) effective.model_id = config_.default_model;
  const std::string body = adapter_->build_body(effective);
  std::map<std::string, std::string> headers;
  if (!config_.api_key.empty()) headers["Authorization"] = "Bearer " + config_.api_key;

  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<1024>& sem;
    ~Release() { sem.release(); }
  } release{in_flight_};

  auto delay = config_.initial_backoff;
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      {
        std::lock_guard lock(mu_);
        backoffs_.push_back(delay);
      }
      sleeper_(delay);
      delay = std::min(delay * 2, config_.max_backoff);
    }
    throttle();
    HttpResponse resp = transport_->post_json(config_.endpoint, body, headers);
    if (resp.status >= 200 && resp.status < 300) {
      auto [text_out, reason] = adapter_->parse_body(resp.body);
      return Completion{std::move(text_out), reason, fingerprint(request)};
    }
    last_error = resp.status == 0 ? "transport failure: " + resp.error
                                  : "HTTP " + std::to_string(resp.status) + ": " + resp.body.substr(0, 200);
    bool retryable = resp.status == 0 || resp.status == 429 || resp.status >= 500;
    spdlog::warn("llm call '{}' attempt {} failed ({})", request.tag, attempt + 1, last_error);
    if (!retryable) break;
  }
  throw Error(ErrorCode::kEndpointError, last_error);
}

std::vector<std::chrono::milliseconds> LiveBackend::backoff_history() const {
  std::lock_guard lock(mu_);
  return backoffs_;
}

Completion ReplayBackend::complete(const PromptRequest& request) {
  request.validate();
  const std::string fp = fingerprint(request);
  auto hit = cassette_->find(fp);
  if (!hit) throw Error(ErrorCode::kCassetteMiss, cassette_->name() + ": no entry for '" + request.tag + "' (" + fp.substr(0, 16) + ")");
  return *hit;
}

Completion RecordBackend::complete(const PromptRequest& request) {
  if (auto hit = cassette_->find(fingerprint(request))) return *hit;
  Completion c = live_->complete(request);
  c.request_fingerprint = fingerprint(request);
  cassette_->append(request, c);
  return c;
}

}  // namespace taskdialog
