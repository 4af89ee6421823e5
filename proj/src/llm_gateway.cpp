#include "veribtot/llm_gateway.hpp"

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "veribtot/errors.hpp"

namespace veribtot {

using nlohmann::json;

const char* to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

Role role_from_string(const std::string& text) {
  if (text == "system") return Role::System;
  if (text == "user") return Role::User;
  if (text == "assistant") return Role::Assistant;
  throw ValidationError("unknown chat role: '" + text + "'");
}

void ChatRequest::validate() const {
  if (messages.empty()) {
    throw ValidationError("chat request needs at least one message");
  }
  if (messages.back().role != Role::User) {
    throw ValidationError("the last chat message must come from the user");
  }
  if (temperature < 0) {
    throw ValidationError("temperature must be >= 0");
  }
  if (max_output_tokens <= 0) {
    throw ValidationError("max_output_tokens must be positive");
  }
}

// ---------------------------------------------------------------------------
// TokenLedger

TokenLedger::TokenLedger(const TokenLedger& other) {
  std::lock_guard<std::mutex> lock(other.mutex_);
  entries_ = other.entries_;
}

TokenLedger& TokenLedger::operator=(const TokenLedger& other) {
  if (this == &other) {
    return *this;
  }
  std::vector<Entry> copy;
  {
    std::lock_guard<std::mutex> lock(other.mutex_);
    copy = other.entries_;
  }
  std::lock_guard<std::mutex> lock(mutex_);
  entries_ = std::move(copy);
  return *this;
}

void TokenLedger::append(const std::string& tag, long prompt_tokens, long completion_tokens) {
  if (prompt_tokens < 0 || completion_tokens < 0) {
    throw ValidationError("token counts must be non-negative");
  }
  std::lock_guard<std::mutex> lock(mutex_);
  entries_.push_back({tag, prompt_tokens, completion_tokens, std::chrono::system_clock::now()});
}

std::vector<TokenLedger::Entry> TokenLedger::entries() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_;
}

std::size_t TokenLedger::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_.size();
}

TokenLedger::Totals TokenLedger::totals() const {
  std::lock_guard<std::mutex> lock(mutex_);
  Totals t;
  for (const auto& e : entries_) {
    t.prompt_tokens += e.prompt_tokens;
    t.completion_tokens += e.completion_tokens;
  }
  return t;
}

std::map<std::string, TokenLedger::Totals> TokenLedger::by_tag() const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::map<std::string, Totals> out;
  for (const auto& e : entries_) {
    auto& t = out[e.tag];
    t.prompt_tokens += e.prompt_tokens;
    t.completion_tokens += e.completion_tokens;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Digest

std::string request_digest(const std::vector<ChatMessage>& messages) {
  std::uint64_t hash = 1469598103934665603ull;
  auto mix = [&hash](std::string_view text) {
    for (unsigned char c : text) {
      hash ^= c;
      hash *= 1099511628211ull;
    }
  };
  for (const auto& m : messages) {
    mix(to_string(m.role));
    mix("\x1f");
    mix(m.content);
    mix("\x1e");
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

// ---------------------------------------------------------------------------
// Transcript file format

namespace {

constexpr const char* kTranscriptSchema = "veribtot-transcript";
constexpr int kTranscriptVersion = 1;

json response_to_json(const ChatResponse& r) {
  return json{{"text", r.text},
              {"prompt_tokens", r.prompt_tokens},
              {"completion_tokens", r.completion_tokens}};
}

ChatResponse response_from_json(const json& j) {
  ChatResponse r;
  r.text = j.at("text").get<std::string>();
  r.prompt_tokens = j.at("prompt_tokens").get<long>();
  r.completion_tokens = j.at("completion_tokens").get<long>();
  if (r.prompt_tokens < 0 || r.completion_tokens < 0) {
    throw ValidationError("transcript usage counts must be non-negative");
  }
  return r;
}

std::string header_line() {
  return json{{"schema", kTranscriptSchema}, {"version", kTranscriptVersion}}.dump();
}

std::string record_line(const TranscriptRecord& rec) {
  return json{{"index", rec.index},
              {"request_digest", rec.request_digest},
              {"response", response_to_json(rec.response)}}
      .dump();
}

}  // namespace

Transcript Transcript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open transcript: " + path.string());
  }
  Transcript t;
  std::string line;
  bool saw_header = false;
  std::uint64_t expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& ex) {
      throw ValidationError("bad transcript line in " + path.string() + ": " + ex.what());
    }
    if (!saw_header) {
      if (j.value("schema", "") != kTranscriptSchema) {
        throw ValidationError("not a transcript file: " + path.string());
      }
      if (j.value("version", 0) != kTranscriptVersion) {
        throw ValidationError("unsupported transcript version in " + path.string());
      }
      saw_header = true;
      continue;
    }
    TranscriptRecord rec;
    rec.index = j.at("index").get<std::uint64_t>();
    rec.request_digest = j.value("request_digest", "");
    rec.response = response_from_json(j.at("response"));
    if (rec.index != expected) {
      throw ValidationError("transcript indices must increase from 0 without gaps: " +
                            path.string());
    }
    ++expected;
    t.records.push_back(std::move(rec));
  }
  if (!saw_header) {
    throw ValidationError("empty transcript: " + path.string());
  }
  return t;
}

void Transcript::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw ValidationError("cannot write transcript: " + path.string());
  }
  out << header_line() << "\n";
  for (const auto& rec : records) {
    out << record_line(rec) << "\n";
  }
}

TokenLedger::Totals Transcript::usage_totals() const {
  TokenLedger::Totals t;
  for (const auto& rec : records) {
    t.prompt_tokens += rec.response.prompt_tokens;
    t.completion_tokens += rec.response.completion_tokens;
  }
  return t;
}

// ---------------------------------------------------------------------------
// HTTP backend

namespace {

struct ParsedEndpoint {
  std::string host_part;  // scheme://host[:port], what httplib::Client wants
  std::string path_prefix;
};

ParsedEndpoint split_endpoint(const std::string& endpoint) {
  auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError("endpoint must include a scheme: " + endpoint);
  }
  auto path_start = endpoint.find('/', scheme_end + 3);
  ParsedEndpoint out;
  if (path_start == std::string::npos) {
    out.host_part = endpoint;
  } else {
    out.host_part = endpoint.substr(0, path_start);
    out.path_prefix = endpoint.substr(path_start);
  }
  while (!out.path_prefix.empty() && out.path_prefix.back() == '/') {
    out.path_prefix.pop_back();
  }
  return out;
}

bool transient_status(int status) {
  return status == 408 || status == 429 || status >= 500;
}

std::chrono::milliseconds backoff_delay(int attempt, std::chrono::milliseconds base) {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  auto cap = base.count() << attempt;
  std::uniform_int_distribution<long long> jitter(cap / 2, cap);
  return std::chrono::milliseconds(jitter(rng));
}

}  // namespace

HttpLlmClient::HttpLlmClient(HttpConfig config) : config_(std::move(config)) {
  if (config_.model.empty()) {
    throw ValidationError("http backend needs a model name");
  }
}

ChatResponse HttpLlmClient::chat(const ChatRequest& request) {
  request.validate();

  const char* key = std::getenv(config_.api_key_env.c_str());
  if (!key || !*key) {
    throw AuthError("environment variable " + config_.api_key_env + " is not set");
  }

  json body;
  body["model"] = config_.model;
  auto messages = json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  body["messages"] = std::move(messages);
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_output_tokens;
  if (config_.seed) {
    body["seed"] = *config_.seed;
  }
  const std::string payload = body.dump();

  auto parsed = split_endpoint(config_.endpoint);
  const std::string path = parsed.path_prefix + "/chat/completions";

  std::string last_failure = "no attempt made";
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff_delay(attempt - 1, config_.initial_backoff));
    }

    httplib::Client client(parsed.host_part);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(
        config_.request_timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(
        config_.request_timeout));
    httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};

    auto result = client.Post(path, headers, payload, "application/json");
    if (!result) {
      last_failure = "transport: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status == 401 || result->status == 403) {
      throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(result->status) +
                      ")");
    }
    if (transient_status(result->status)) {
      last_failure = "HTTP " + std::to_string(result->status);
      continue;
    }
    if (result->status != 200) {
      throw TransportError("HTTP " + std::to_string(result->status) + ": " + result->body);
    }

    try {
      json j = json::parse(result->body);
      ChatResponse response;
      response.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
      if (j.contains("usage")) {
        response.prompt_tokens = j["usage"].value("prompt_tokens", 0L);
        response.completion_tokens = j["usage"].value("completion_tokens", 0L);
      }
      return response;
    } catch (const json::exception& ex) {
      throw TransportError(std::string("malformed completion payload: ") + ex.what());
    }
  }
  throw TransportError("request failed after " + std::to_string(config_.max_retries) +
                       " retries (" + last_failure + ")");
}

// ---------------------------------------------------------------------------
// Replay backend

ReplayLlmClient::ReplayLlmClient(Transcript transcript, bool strict)
    : transcript_(std::move(transcript)), strict_(strict) {}

std::unique_ptr<ReplayLlmClient> ReplayLlmClient::from_file(const std::filesystem::path& path,
                                                            bool strict) {
  return std::make_unique<ReplayLlmClient>(Transcript::load(path), strict);
}

ChatResponse ReplayLlmClient::chat(const ChatRequest& request) {
  request.validate();
  if (cursor_ >= transcript_.records.size()) {
    throw ReplayExhaustedError("transcript exhausted after " +
                               std::to_string(transcript_.records.size()) + " records");
  }
  const auto& rec = transcript_.records[cursor_];
  if (strict_) {
    const std::string digest = request_digest(request.messages);
    if (digest != rec.request_digest) {
      throw ReplayDigestMismatchError("record " + std::to_string(rec.index) + " expected digest " +
                                      rec.request_digest + ", got " + digest);
    }
  }
  ++cursor_;
  return rec.response;
}

// ---------------------------------------------------------------------------
// Recording backend

RecordingLlmClient::RecordingLlmClient(std::shared_ptr<LlmClient> inner,
                                       std::filesystem::path out_path)
    : inner_(std::move(inner)), out_path_(std::move(out_path)) {
  std::ofstream out(out_path_, std::ios::trunc);
  if (!out) {
    throw ValidationError("cannot write transcript: " + out_path_.string());
  }
  out << header_line() << "\n";
}

RecordingLlmClient::~RecordingLlmClient() = default;

ChatResponse RecordingLlmClient::chat(const ChatRequest& request) {
  ChatResponse response = inner_->chat(request);
  std::lock_guard<std::mutex> lock(mutex_);
  TranscriptRecord rec;
  rec.index = next_index_++;
  rec.request_digest = request_digest(request.messages);
  rec.response = response;
  std::ofstream out(out_path_, std::ios::app);
  out << record_line(rec) << "\n";
  return response;
}

// ---------------------------------------------------------------------------
// Gateway

LlmGateway::LlmGateway(std::shared_ptr<LlmClient> backend, std::shared_ptr<TokenLedger> ledger)
    : backend_(std::move(backend)), ledger_(std::move(ledger)) {
  if (!backend_ || !ledger_) {
    throw ValidationError("gateway needs a backend and a ledger");
  }
}

ChatResponse LlmGateway::chat(const ChatRequest& request) {
  request.validate();
  ChatResponse response = backend_->chat(request);
  ledger_->append(request.tag, response.prompt_tokens, response.completion_tokens);
  return response;
}

}  // namespace veribtot
