#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

namespace taskdialog {

inline constexpr double kGenerationTemperature = 1.5;
inline constexpr double kEvaluationTemperature = 0.0;
inline constexpr int kDialogueMaxTokens = 1024;
inline constexpr int kTurnMaxTokens = 256;

struct PromptRequest {
  std::string system_text;
  std::string user_text;
  double temperature = kGenerationTemperature;
  int max_output_tokens = kDialogueMaxTokens;
  std::string model_id;
  std::string tag;  // call-site label for logs and cassette summaries; not fingerprinted

  /// Throws kInvalidArgument when a field is out of range.
  void validate() const;
};

enum class FinishReason { kStop, kLength, kError };
std::string_view to_string(FinishReason reason);
FinishReason parse_finish_reason(std::string_view s);

struct Completion {
  std::string text;
  FinishReason finish_reason = FinishReason::kStop;
  std::string request_fingerprint;
  bool operator==(const Completion&) const = default;
};

/// SHA-256 over a canonical JSON rendering of model, texts, temperature and
/// token limit.
std::string fingerprint(const PromptRequest& request);

/// Request -> completion store, persisted as JSON Lines. Appends are
/// serialized; the first completion stored for a fingerprint wins.
class Cassette {
 public:
  explicit Cassette(std::string name = "cassette") : name_(std::move(name)) {}
  Cassette(Cassette&& other) noexcept;
  Cassette& operator=(Cassette&&) = delete;

  static Cassette load(const std::filesystem::path& path);
  static Cassette parse(std::string_view jsonl, std::string name);
  void save(const std::filesystem::path& path) const;
  std::string to_jsonl() const;

  std::optional<Completion> find(const std::string& fingerprint) const;
  bool append(const PromptRequest& request, const Completion& completion);
  std::size_t size() const;
  const std::string& name() const { return name_; }

 private:
  struct Entry {
    std::string fingerprint;
    std::string summary_json;
    Completion completion;
  };
  std::string name_;
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
  mutable std::mutex mu_;
};

struct HttpResponse {
  int status = 0;  // 0 means the request never completed
  std::string body;
  std::string error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post_json(const std::string& url, const std::string& body,
                                 const std::map<std::string, std::string>& headers) = 0;
};

/// cpp-httplib backed transport (http and https).
class HttplibTransport : public Transport {
 public:
  explicit HttplibTransport(std::chrono::seconds timeout = std::chrono::seconds(120)) : timeout_(timeout) {}
  HttpResponse post_json(const std::string& url, const std::string& body,
                         const std::map<std::string, std::string>& headers) override;

 private:
  std::chrono::seconds timeout_;
};

/// Maps requests to a vendor wire format. The default speaks the common
/// chat-completions schema: {model, messages:[{role, content}], temperature, max_tokens}.
class EndpointAdapter {
 public:
  virtual ~EndpointAdapter() = default;
  virtual std::string build_body(const PromptRequest& request) const;
  /// Returns text and finish reason; throws kEndpointError on a malformed body.
  virtual std::pair<std::string, FinishReason> parse_body(const std::string& body) const;
};

struct LiveConfig {
  std::string endpoint;
  std::string api_key;
  std::string default_model;
  int max_retries = 4;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{16000};
  int max_in_flight = 4;
  int requests_per_minute = 0;  // 0 disables the throttle

  /// Reads TASKDIALOG_ENDPOINT, TASKDIALOG_API_KEY and TASKDIALOG_MODEL.
  static LiveConfig from_env();
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual Completion complete(const PromptRequest& request) = 0;
};

class LiveBackend : public LlmBackend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  LiveBackend(LiveConfig config, std::shared_ptr<Transport> transport,
              std::shared_ptr<const EndpointAdapter> adapter = nullptr, Sleeper sleeper = nullptr);

  /// Retries status 0, 429 and 5xx with doubling backoff capped at
  /// max_backoff; throws kEndpointError once retries are exhausted or on a
  /// non-retryable status.
  Completion complete(const PromptRequest& request) override;

  /// Delays slept between attempts, in order (for inspection).
  std::vector<std::chrono::milliseconds> backoff_history() const;

 private:
  void throttle();

  LiveConfig config_;
  std::shared_ptr<Transport> transport_;
  std::shared_ptr<const EndpointAdapter> adapter_;
  Sleeper sleeper_;
  std::counting_semaphore<1024> in_flight_;
  mutable std::mutex mu_;
  std::chrono::steady_clock::time_point next_slot_{};
  std::vector<std::chrono::milliseconds> backoffs_;
};

class ReplayBackend : public LlmBackend {
 public:
  explicit ReplayBackend(std::shared_ptr<const Cassette> cassette) : cassette_(std::move(cassette)) {}
  /// Throws kCassetteMiss for an unknown fingerprint.
  Completion complete(const PromptRequest& request) override;

 private:
  std::shared_ptr<const Cassette> cassette_;
};

class RecordBackend : public LlmBackend {
 public:
  RecordBackend(std::shared_ptr<LlmBackend> live, std::shared_ptr<Cassette> cassette)
      : live_(std::move(live)), cassette_(std::move(cassette)) {}
  Completion complete(const PromptRequest& request) override;

 private:
  std::shared_ptr<LlmBackend> live_;
  std::shared_ptr<Cassette> cassette_;
};

inline Completion complete(const PromptRequest& request, LlmBackend& backend) { return backend.complete(request); }

}  // namespace taskdialog
