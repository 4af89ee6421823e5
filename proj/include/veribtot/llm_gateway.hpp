#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace veribtot {

enum class Role { System, User, Assistant };

const char* to_string(Role role);
Role role_from_string(const std::string& text);

struct ChatMessage {
  Role role = Role::User;
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_output_tokens = 4096;
  std::string tag;  // operator label for the token ledger

  /// Throws ValidationError unless there is at least one message, the last
  /// message is from the user, temperature >= 0 and max_output_tokens > 0.
  void validate() const;
};

struct ChatResponse {
  std::string text;
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

/// Append-only token accounting, safe for concurrent appends.
class TokenLedger {
public:
  struct Entry {
    std::string tag;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    std::chrono::system_clock::time_point timestamp;
  };

  struct Totals {
    long prompt_tokens = 0;
    long completion_tokens = 0;
  };

  TokenLedger() = default;
  TokenLedger(const TokenLedger& other);
  TokenLedger& operator=(const TokenLedger& other);

  void append(const std::string& tag, long prompt_tokens, long completion_tokens);

  std::vector<Entry> entries() const;
  std::size_t size() const;
  Totals totals() const;
  std::map<std::string, Totals> by_tag() const;

private:
  mutable std::mutex mutex_;
  std::vector<Entry> entries_;
};

/// Anything that can answer a chat request: live backends, replay, mocks,
/// and decorators all share this surface.
class LlmClient {
public:
  virtual ~LlmClient() = default;
  virtual ChatResponse chat(const ChatRequest& request) = 0;
};

/// Stable digest of the message list (role + content only; sampling
/// parameters excluded). FNV-1a 64, hex encoded.
std::string request_digest(const std::vector<ChatMessage>& messages);

// ---------------------------------------------------------------------------
// Transcripts (JSON Lines; line 0 is a schema header record)

struct TranscriptRecord {
  std::uint64_t index = 0;
  std::string request_digest;
  ChatResponse response;
};

struct Transcript {
  std::vector<TranscriptRecord> records;

  static Transcript load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  TokenLedger::Totals usage_totals() const;
};

// ---------------------------------------------------------------------------
// Backends

struct HttpConfig {
  std::string endpoint = "https://api.openai.com/v1";  // /chat/completions is appended
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds request_timeout{120000};
  std::optional<std::uint64_t> seed;
};

/// OpenAI-compatible chat-completions client with bounded, jittered
/// exponential backoff on transient failures.
class HttpLlmClient : public LlmClient {
public:
  explicit HttpLlmClient(HttpConfig config);
  ChatResponse chat(const ChatRequest& request) override;

private:
  HttpConfig config_;
};

/// Replays a recorded transcript in index order. In strict mode every
/// request digest must match the recording.
class ReplayLlmClient : public LlmClient {
public:
  explicit ReplayLlmClient(Transcript transcript, bool strict = false);
  static std::unique_ptr<ReplayLlmClient> from_file(const std::filesystem::path& path,
                                                    bool strict = false);

  ChatResponse chat(const ChatRequest& request) override;
  std::size_t cursor() const { return cursor_; }

private:
  Transcript transcript_;
  bool strict_;
  std::size_t cursor_ = 0;
};

/// Delegates to an inner client and appends one transcript record per call.
/// Records are flushed to disk line by line.
class RecordingLlmClient : public LlmClient {
public:
  RecordingLlmClient(std::shared_ptr<LlmClient> inner, std::filesystem::path out_path);
  ~RecordingLlmClient() override;

  ChatResponse chat(const ChatRequest& request) override;

private:
  std::shared_ptr<LlmClient> inner_;
  std::filesystem::path out_path_;
  std::uint64_t next_index_ = 0;
  std::mutex mutex_;
};

/// The uniform access point: validates requests, delegates to the backend,
/// and accounts every call in the ledger.
class LlmGateway : public LlmClient {
public:
  LlmGateway(std::shared_ptr<LlmClient> backend, std::shared_ptr<TokenLedger> ledger);

  ChatResponse chat(const ChatRequest& request) override;
  const TokenLedger& ledger() const { return *ledger_; }
  std::shared_ptr<TokenLedger> ledger_ptr() const { return ledger_; }

private:
  std::shared_ptr<LlmClient> backend_;
  std::shared_ptr<TokenLedger> ledger_;
};

}  // namespace veribtot
