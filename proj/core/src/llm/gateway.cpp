#include <thread>

#include <nlohmann/json.hpp>

#include "composerx/llm.hpp"

namespace composerx::llm {

using nlohmann::json;

std::string_view to_string(Role role) {
    switch (role) {
        case Role::system:
            return "system";
        case Role::user:
            return "user";
        case Role::assistant:
            return "assistant";
    }
    return "";
}

std::optional<Role> role_from_string(std::string_view text) {
    if (text == "system") return Role::system;
    if (text == "user") return Role::user;
    if (text == "assistant") return Role::assistant;
    return std::nullopt;
}

std::string_view to_string(BackendErrorKind kind) {
    switch (kind) {
        case BackendErrorKind::timeout:
            return "timeout";
        case BackendErrorKind::http_status:
            return "http_status";
        case BackendErrorKind::malformed_body:
            return "malformed_body";
        case BackendErrorKind::exhausted_retries:
            return "exhausted_retries";
    }
    return "";
}

BackendError::BackendError(BackendErrorKind kind, std::string detail, int status)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail),
      kind_(kind),
      detail_(std::move(detail)),
      status_(status) {}

bool BackendError::transient() const {
    switch (kind_) {
        case BackendErrorKind::timeout:
            return true;
        case BackendErrorKind::http_status:
            return status_ == 0 || status_ == 429 || status_ >= 500;
        default:
            return false;
    }
}

void ChatRequest::validate() const {
    if (messages.empty()) throw std::invalid_argument("chat request has no messages");
    if (messages.front().role == Role::assistant) {
        throw std::invalid_argument("first message must be a system or user message");
    }
    if (temperature < 0.0 || temperature > 2.0) throw std::invalid_argument("temperature outside [0, 2]");
    if (max_tokens && *max_tokens <= 0) throw std::invalid_argument("max_tokens must be positive");
    for (const auto& m : messages) {
        if (m.content.empty() && m.role != Role::assistant) {
            throw std::invalid_argument("empty " + std::string(to_string(m.role)) + " message");
        }
    }
}

ChatResponse complete(Backend& backend, const ChatRequest& request, const RetryPolicy& policy) {
    request.validate();
    auto delay = policy.base_delay;
    std::string last_error;
    for (int attempt = 0; attempt <= policy.retries; ++attempt) {
        try {
            return backend.send(request);
        } catch (const BackendError& e) {
            if (!e.transient()) throw;
            last_error = e.what();
        }
        if (attempt < policy.retries) {
            if (policy.sleep) {
                policy.sleep(delay);
            } else {
                std::this_thread::sleep_for(delay);
            }
            delay *= 2;
        }
    }
    throw BackendError(BackendErrorKind::exhausted_retries,
                       std::to_string(policy.retries + 1) + " attempts failed, last: " + last_error);
}

// ---- MockBackend ----

MockBackend::MockBackend(Script script) {
    if (script.empty()) throw std::invalid_argument("mock script is empty");
    for (auto& [key, replies] : script) queues_[key] = {replies.begin(), replies.end()};
}

MockBackend::Script MockBackend::parse_script(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("mock script is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw std::invalid_argument("mock script must be a JSON object of reply lists");
    Script script;
    for (const auto& [key, list] : doc.items()) {
        if (!list.is_array()) throw std::invalid_argument("mock script key '" + key + "' must map to a list");
        auto& replies = script[key];
        for (const auto& item : list) {
            ScriptedReply reply;
            if (item.is_string()) {
                reply.content = item.get<std::string>();
            } else if (item.is_object() && item.contains("error")) {
                const auto kind = item.at("error").get<std::string>();
                if (kind == "timeout") {
                    reply.error = BackendErrorKind::timeout;
                } else if (kind == "http_status") {
                    reply.error = BackendErrorKind::http_status;
                } else if (kind == "malformed_body") {
                    reply.error = BackendErrorKind::malformed_body;
                } else {
                    throw std::invalid_argument("unknown scripted error kind: " + kind);
                }
                reply.status = item.value("status", 503);
            } else if (item.is_object() && item.contains("content")) {
                reply.content = item.at("content").get<std::string>();
                if (item.contains("usage")) {
                    reply.usage.prompt_tokens = item["usage"].value("prompt_tokens", 0);
                    reply.usage.completion_tokens = item["usage"].value("completion_tokens", 0);
                }
            } else {
                throw std::invalid_argument("unreadable scripted reply under key '" + key + "'");
            }
            replies.push_back(std::move(reply));
        }
    }
    return script;
}

MockBackend MockBackend::from_json(const std::string& json_text) {
    return MockBackend(parse_script(json_text));
}

ChatResponse MockBackend::send(const ChatRequest& request) {
    std::lock_guard lock(mutex_);
    const auto index = std::to_string(calls_);
    ++calls_;
    requests_.push_back(request);

    std::string key;
    if (request.speaker_tag && queues_.contains(*request.speaker_tag)) {
        key = *request.speaker_tag;
    } else if (queues_.contains(index)) {
        key = index;
    } else if (queues_.contains("*")) {
        key = "*";
    } else {
        throw ScriptExhausted(request.speaker_tag.value_or(index));
    }
    auto& queue = queues_[key];
    if (queue.empty()) throw ScriptExhausted(key);
    auto reply = std::move(queue.front());
    queue.pop_front();
    if (reply.error) throw BackendError(*reply.error, "scripted failure", reply.status);
    return {std::move(reply.content), reply.usage, 0};
}

std::size_t MockBackend::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

std::vector<ChatRequest> MockBackend::requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
}

}  // namespace composerx::llm
