#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace composerx::llm {

enum class Role { system, user, assistant };

std::string_view to_string(Role role);
std::optional<Role> role_from_string(std::string_view text);

struct ChatMessage {
    Role role = Role::user;
    std::string content;
    // Agent label for transcripts ("leader", "melody", ...).
    std::optional<std::string> speaker_tag;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.7;
    std::optional<int> max_tokens;
    // Who is asking; lets scripted backends answer per agent. Not sent over the wire.
    std::optional<std::string> speaker_tag;

    // Throws std::invalid_argument when the request breaks its invariants.
    void validate() const;
};

struct Usage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;

    std::int64_t total() const { return prompt_tokens + completion_tokens; }
    Usage& operator+=(const Usage& other) {
        prompt_tokens += other.prompt_tokens;
        completion_tokens += other.completion_tokens;
        return *this;
    }
    friend bool operator==(const Usage&, const Usage&) = default;
};

struct ChatResponse {
    std::string content;
    Usage usage;
    std::int64_t latency_ms = 0;
};

enum class BackendErrorKind { timeout, http_status, malformed_body, exhausted_retries };

std::string_view to_string(BackendErrorKind kind);

class BackendError : public std::runtime_error {
public:
    BackendError(BackendErrorKind kind, std::string detail, int status = 0);
    BackendErrorKind kind() const { return kind_; }
    const std::string& detail() const { return detail_; }
    int status() const { return status_; }
    // Worth another attempt: timeouts, 429 and 5xx.
    bool transient() const;

private:
    BackendErrorKind kind_;
    std::string detail_;
    int status_;
};

// A scripted backend ran out of responses for a key. Never retried.
class ScriptExhausted : public std::logic_error {
public:
    explicit ScriptExhausted(const std::string& key)
        : std::logic_error("mock script exhausted for key '" + key + "'"), key_(key) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

// One attempt at a chat completion. Implementations throw BackendError.
class Backend {
public:
    virtual ~Backend() = default;
    virtual ChatResponse send(const ChatRequest& request) = 0;
    // Number of send() calls made so far.
    virtual std::size_t calls() const = 0;
};

struct RetryPolicy {
    int retries = 3;
    std::chrono::milliseconds base_delay{500};
    // Replaced in tests to avoid real sleeping.
    std::function<void(std::chrono::milliseconds)> sleep;
};

// Sends with retries on transient errors and exponential backoff
// (base_delay, 2×base_delay, ...). At most 1 + policy.retries attempts.
ChatResponse complete(Backend& backend, const ChatRequest& request, const RetryPolicy& policy = {});

// One scripted reply: content with optional usage, or an injected failure.
struct ScriptedReply {
    std::string content;
    Usage usage;
    std::optional<BackendErrorKind> error;
    int status = 0;
};

// Deterministic backend for tests and offline runs.
//
// Each call looks up the request's speaker_tag, then the zero-based call index
// ("0", "1", ...), then the wildcard "*", and consumes the next reply queued under
// the first key present. Consumption is serialized, so shared keys are served
// first-come first-served.
class MockBackend final : public Backend {
public:
    using Script = std::map<std::string, std::vector<ScriptedReply>>;

    explicit MockBackend(Script script);

    // Script file: {"<key>": [reply, ...], ...} where a reply is a string, or
    // {"content": "...", "usage": {"prompt_tokens": n, "completion_tokens": m}},
    // or {"error": "timeout" | "http_status" | "malformed_body", "status": 503}.
    static MockBackend from_json(const std::string& json_text);
    static Script parse_script(const std::string& json_text);

    ChatResponse send(const ChatRequest& request) override;
    std::size_t calls() const override;

    // Requests received, in order.
    std::vector<ChatRequest> requests() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::deque<ScriptedReply>> queues_;
    std::vector<ChatRequest> requests_;
    std::size_t calls_ = 0;
};

struct HttpConfig {
    std::string base_url = "https://api.openai.com";
    std::string api_key;  // usually from COMPOSERX_API_KEY
    std::chrono::seconds timeout{120};
};

// OpenAI-compatible client: POST {base_url}/v1/chat/completions.
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpConfig config);

    ChatResponse send(const ChatRequest& request) override;
    std::size_t calls() const override;

    static std::string request_body(const ChatRequest& request);
    // Reads choices[0].message.content and usage; throws BackendError{malformed_body}.
    static ChatResponse parse_response_body(const std::string& body);

private:
    HttpConfig config_;
    mutable std::mutex mutex_;
    std::size_t calls_ = 0;
};

}  // namespace composerx::llm
