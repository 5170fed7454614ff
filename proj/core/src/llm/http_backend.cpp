#include <httplib.h>

#include <nlohmann/json.hpp>

#include "composerx/llm.hpp"

namespace composerx::llm {

using nlohmann::json;

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;    // prefix + /v1/chat/completions
};

Endpoint split_url(std::string base) {
    while (!base.empty() && base.back() == '/') base.pop_back();
    const auto scheme = base.find("://");
    const auto path_start = base.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    Endpoint ep;
    if (path_start == std::string::npos) {
        ep.origin = base;
    } else {
        ep.origin = base.substr(0, path_start);
        ep.path = base.substr(path_start);
    }
    ep.path += "/v1/chat/completions";
    return ep;
}

}  // namespace

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {}

std::string HttpBackend::request_body(const ChatRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    json body = {{"model", request.model}, {"messages", messages}, {"temperature", request.temperature}};
    if (request.max_tokens) body["max_tokens"] = *request.max_tokens;
    return body.dump();
}

ChatResponse HttpBackend::parse_response_body(const std::string& body) {
    ChatResponse response;
    try {
        const auto doc = json::parse(body);
        response.content = doc.at("choices").at(0).at("message").at("content").get<std::string>();
        if (doc.contains("usage") && doc["usage"].is_object()) {
            response.usage.prompt_tokens = doc["usage"].value("prompt_tokens", std::int64_t{0});
            response.usage.completion_tokens = doc["usage"].value("completion_tokens", std::int64_t{0});
        }
    } catch (const json::exception& e) {
        throw BackendError(BackendErrorKind::malformed_body, e.what());
    }
    return response;
}

ChatResponse HttpBackend::send(const ChatRequest& request) {
    {
        std::lock_guard lock(mutex_);
        ++calls_;
    }
    const auto ep = split_url(config_.base_url);
    httplib::Client client(ep.origin);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);

    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    const auto started = std::chrono::steady_clock::now();
    auto result = client.Post(ep.path, headers, request_body(request), "application/json");
    const auto elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);

    if (!result) {
        const auto err = result.error();
        const auto kind = err == httplib::Error::Read || err == httplib::Error::Write ||
                                  err == httplib::Error::ConnectionTimeout
                              ? BackendErrorKind::timeout
                              : BackendErrorKind::http_status;
        throw BackendError(kind, "request to " + ep.origin + ep.path + " failed: " + httplib::to_string(err));
    }
    if (result->status != 200) {
        throw BackendError(BackendErrorKind::http_status,
                           "HTTP " + std::to_string(result->status) + ": " + result->body.substr(0, 200),
                           result->status);
    }
    auto response = parse_response_body(result->body);
    response.latency_ms = elapsed.count();
    return response;
}

std::size_t HttpBackend::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

}  // namespace composerx::llm
