#include <doctest.h>

#include <algorithm>
#include <random>
#include <thread>

#include "composerx/llm.hpp"
#include "test_support.hpp"

using namespace composerx;
using namespace composerx::llm;
using testing::failure;
using testing::instant_retry;
using testing::reply;

namespace {

ChatRequest simple_request(std::optional<std::string> tag = std::nullopt) {
    ChatRequest request;
    request.model = "gpt-4-turbo";
    request.messages = {{Role::system, "sys", std::nullopt}, {Role::user, "hi", std::nullopt}};
    request.speaker_tag = std::move(tag);
    return request;
}

}  // namespace

TEST_CASE("scripted reply without usage reports zeros") {
    MockBackend backend({{"*", {reply("hello")}}});
    const auto response = complete(backend, simple_request(), instant_retry(0));
    CHECK(response.content == "hello");
    CHECK(response.usage == Usage{0, 0});
    CHECK(backend.calls() == 1);
}

TEST_CASE("transient failures are retried within the budget") {
    std::vector<std::chrono::milliseconds> delays;
    MockBackend backend({{"*", {failure(BackendErrorKind::timeout), failure(BackendErrorKind::http_status, 503),
                                reply("ok", 10, 5)}}});
    auto policy = instant_retry(3, &delays);
    policy.base_delay = std::chrono::milliseconds(100);
    const auto response = complete(backend, simple_request(), policy);
    CHECK(response.content == "ok");
    CHECK(response.usage.total() == 15);
    CHECK(backend.calls() == 3);
    CHECK(delays == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(100),
                                                           std::chrono::milliseconds(200)});
}

TEST_CASE("persistent failure exhausts retries") {
    MockBackend backend({{"*", std::vector<ScriptedReply>(5, failure(BackendErrorKind::timeout))}});
    try {
        complete(backend, simple_request(), instant_retry(2));
        FAIL("expected exhausted retries");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendErrorKind::exhausted_retries);
    }
    CHECK(backend.calls() == 3);
}

TEST_CASE("non-transient errors are not retried") {
    SUBCASE("malformed body") {
        MockBackend backend({{"*", {failure(BackendErrorKind::malformed_body), reply("never")}}});
        CHECK_THROWS_AS(complete(backend, simple_request(), instant_retry(3)), BackendError);
        CHECK(backend.calls() == 1);
    }
    SUBCASE("client status") {
        MockBackend backend({{"*", {failure(BackendErrorKind::http_status, 401), reply("never")}}});
        try {
            complete(backend, simple_request(), instant_retry(3));
            FAIL("expected a BackendError");
        } catch (const BackendError& e) {
            CHECK(e.kind() == BackendErrorKind::http_status);
            CHECK(e.status() == 401);
        }
        CHECK(backend.calls() == 1);
    }
    SUBCASE("rate limit is transient") {
        MockBackend backend({{"*", {failure(BackendErrorKind::http_status, 429), reply("fine")}}});
        CHECK(complete(backend, simple_request(), instant_retry(1)).content == "fine");
    }
}

TEST_CASE("script exhaustion is distinct from backend errors") {
    MockBackend backend({{"leader", {reply("one")}}});
    CHECK(complete(backend, simple_request("leader"), instant_retry(3)).content == "one");
    CHECK_THROWS_AS(complete(backend, simple_request("leader"), instant_retry(3)), ScriptExhausted);
    CHECK(backend.calls() == 2);
    CHECK_THROWS_AS(complete(backend, simple_request("melody"), instant_retry(3)), ScriptExhausted);
}

TEST_CASE("script keying prefers tag, then index, then wildcard") {
    MockBackend backend({{"melody", {reply("tagged")}}, {"1", {reply("indexed")}}, {"*", {reply("any"), reply("any2")}}});
    CHECK(backend.send(simple_request("leader")).content == "any");
    CHECK(backend.send(simple_request("leader")).content == "indexed");
    CHECK(backend.send(simple_request("melody")).content == "tagged");
    // A drained key does not fall through to the wildcard.
    CHECK_THROWS_AS(backend.send(simple_request("melody")), ScriptExhausted);
    CHECK(backend.send(simple_request("harmony")).content == "any2");
    const auto seen = backend.requests();
    REQUIRE(seen.size() == 5);
    CHECK(seen[2].speaker_tag == std::optional<std::string>("melody"));
}

TEST_CASE("script files") {
    const auto script = MockBackend::parse_script(R"({
        "leader": ["plain", {"content": "counted", "usage": {"prompt_tokens": 3, "completion_tokens": 4}}],
        "*": [{"error": "http_status", "status": 502}, {"error": "timeout"}]
    })");
    REQUIRE(script.at("leader").size() == 2);
    CHECK(script.at("leader")[1].usage == Usage{3, 4});
    CHECK(script.at("*")[0].status == 502);
    CHECK(script.at("*")[1].error == BackendErrorKind::timeout);
    CHECK_THROWS_AS(MockBackend::parse_script("[1,2]"), std::invalid_argument);
    CHECK_THROWS_AS(MockBackend::parse_script(R"({"*": [{"error": "gremlins"}]})"), std::invalid_argument);
    CHECK_THROWS_AS(MockBackend::parse_script("{oops"), std::invalid_argument);
    CHECK_THROWS_AS(MockBackend({}), std::invalid_argument);
}

TEST_CASE("request validation") {
    MockBackend backend({{"*", {reply("x")}}});
    auto bad = simple_request();
    bad.messages.clear();
    CHECK_THROWS_AS(complete(backend, bad), std::invalid_argument);
    bad = simple_request();
    bad.temperature = 2.5;
    CHECK_THROWS_AS(complete(backend, bad), std::invalid_argument);
    bad = simple_request();
    bad.max_tokens = 0;
    CHECK_THROWS_AS(complete(backend, bad), std::invalid_argument);
    bad = simple_request();
    bad.messages.insert(bad.messages.begin(), ChatMessage{Role::assistant, "first", std::nullopt});
    CHECK_THROWS_AS(complete(backend, bad), std::invalid_argument);
    CHECK(backend.calls() == 0);
}

TEST_CASE("retry count never exceeds the budget") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const int retries = std::uniform_int_distribution<int>(0, 5)(rng);
        const int failures = std::uniform_int_distribution<int>(0, 8)(rng);
        std::vector<ScriptedReply> replies(static_cast<std::size_t>(failures), failure(BackendErrorKind::timeout));
        replies.push_back(reply("done"));
        MockBackend backend({{"*", replies}});
        int sleeps = 0;
        RetryPolicy policy;
        policy.retries = retries;
        policy.sleep = [&](std::chrono::milliseconds) { ++sleeps; };
        bool succeeded = true;
        try {
            complete(backend, simple_request(), policy);
        } catch (const BackendError& e) {
            CHECK(e.kind() == BackendErrorKind::exhausted_retries);
            succeeded = false;
        }
        CHECK(backend.calls() <= static_cast<std::size_t>(retries + 1));
        CHECK(succeeded == (failures <= retries));
        CHECK(backend.calls() == static_cast<std::size_t>(std::min(failures, retries) + 1));
        CHECK(sleeps == std::min(failures, retries));
    }
}

TEST_CASE("token accounting sums usage") {
    MockBackend backend({{"*", {reply("a", 10, 2), reply("b", 7, 3), reply("c", 0, 0)}}});
    Usage total;
    for (int i = 0; i < 3; ++i) total += complete(backend, simple_request(), instant_retry(0)).usage;
    CHECK(total == Usage{17, 5});
    CHECK(total.total() == 22);
}

TEST_CASE("concurrent callers share a wildcard queue") {
    std::vector<ScriptedReply> replies;
    for (int i = 0; i < 64; ++i) replies.push_back(reply(std::to_string(i)));
    MockBackend backend({{"*", replies}});
    std::vector<std::thread> threads;
    std::mutex mutex;
    std::vector<int> seen;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&] {
            for (int i = 0; i < 16; ++i) {
                const auto r = backend.send(simple_request());
                std::lock_guard lock(mutex);
                seen.push_back(std::stoi(r.content));
            }
        });
    }
    for (auto& t : threads) t.join();
    std::sort(seen.begin(), seen.end());
    CHECK(seen.size() == 64);
    CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
    CHECK(backend.calls() == 64);
}
