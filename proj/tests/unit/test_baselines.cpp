#include <doctest.h>

#include "composerx/baselines.hpp"
#include "test_support.hpp"

using namespace composerx;
using namespace composerx::baselines;
using orchestration::Stage;
using testing::fenced;
using testing::reply;

namespace {

prompts::UserPrompt chanson() {
    for (const auto& p : prompts::starter_prompts()) {
        if (p.id == "vintage-french-chanson") return p;
    }
    throw std::logic_error("starter set lacks the chanson prompt");
}

BaselineConfig quiet() {
    BaselineConfig config;
    config.retry = testing::instant_retry(0);
    return config;
}

}  // namespace

TEST_CASE("single-call baselines make one request") {
    const auto tune = testing::fixture("chanson.abc");
    for (auto method : {BaselineMethod::ori, BaselineMethod::role, BaselineMethod::icl}) {
        CAPTURE(to_string(method));
        llm::MockBackend backend({{"*", {reply("Here it is:\n" + fenced(tune), 40, 300)}}});
        const auto result =
            run_baseline(method, chanson(), backend, prompts::bundled_icl_examples(), analysis::RangeTable::defaults(), quiet());
        CHECK(backend.calls() == 1);
        CHECK(result.backend_calls == 1);
        CHECK(result.state.stage == Stage::done);
        REQUIRE(result.state.transcript.size() == 1);
        CHECK(result.state.transcript[0].role == llm::Role::assistant);
        CHECK(result.state.transcript[0].speaker_tag == std::optional<std::string>(to_string(method)));
        CHECK(result.final_tune.has_value());
        REQUIRE(result.validation);
        CHECK(result.validation->bars_found == 16);
        CHECK(result.token_usage == llm::Usage{40, 300});
        CHECK(backend.requests()[0].speaker_tag == std::optional<std::string>(to_string(method)));
    }
}

TEST_CASE("chain of thought makes three growing calls") {
    const std::string header = "X:1\nT:Vintage French Chanson\nM:4/4\nL:1/8\nK:C";
    const std::string chords = "|C|Am|Dm|G|C|Am|Dm|G|C|Am|Dm|G|C|Am|Dm|G|";
    llm::MockBackend backend(
        {{"cot", {reply(header, 1, 1), reply(chords, 1, 1), reply(fenced(testing::fixture("chanson.abc")), 1, 1)}}});
    const auto result = run_baseline(BaselineMethod::cot, chanson(), backend, {}, analysis::RangeTable::defaults(), quiet());
    CHECK(backend.calls() == 3);
    CHECK(result.state.transcript.size() == 3);
    CHECK(result.state.round == 3);
    CHECK(result.final_tune.has_value());
    CHECK(result.token_usage.total() == 6);

    const auto requests = backend.requests();
    REQUIRE(requests.size() == 3);
    CHECK(requests[0].messages.size() == 2);
    CHECK(requests[1].messages.size() == 4);
    CHECK(requests[2].messages.size() == 6);
    auto carries = [](const llm::ChatRequest& request, const std::string& text) {
        for (const auto& m : request.messages) {
            if (m.content.find(text) != std::string::npos) return true;
        }
        return false;
    };
    CHECK(carries(requests[1], header));
    CHECK(carries(requests[2], header));
    CHECK(carries(requests[2], chords));
    CHECK(requests[1].messages.back().content.find("16-bar long") != std::string::npos);
}

TEST_CASE("icl needs examples before any call") {
    llm::MockBackend backend({{"*", {reply("never")}}});
    CHECK_THROWS_AS(run_baseline(BaselineMethod::icl, chanson(), backend, {}, analysis::RangeTable::defaults(), quiet()),
                    prompts::MissingExamples);
    CHECK(backend.calls() == 0);
}

TEST_CASE("icl places the configured number of examples") {
    const auto examples = prompts::bundled_icl_examples();
    auto config = quiet();
    config.icl_examples = 2;
    llm::MockBackend backend({{"*", {reply("no tune")}}});
    run_baseline(BaselineMethod::icl, chanson(), backend, examples, analysis::RangeTable::defaults(), config);
    const auto system = backend.requests()[0].messages[0].content;
    CHECK(system.find(examples[0].abc) != std::string::npos);
    CHECK(system.find(examples[1].abc) != std::string::npos);
}

TEST_CASE("baseline replies without ABC leave no final tune") {
    llm::MockBackend backend({{"*", {reply("A chanson should feel wistful.")}}});
    const auto result = run_baseline(BaselineMethod::ori, chanson(), backend, {}, analysis::RangeTable::defaults(), quiet());
    CHECK(result.state.stage == Stage::done);
    CHECK_FALSE(result.final_abc);
    CHECK_FALSE(result.validation);
}

TEST_CASE("baseline backend errors abort") {
    llm::MockBackend backend({{"*", {reply("X:1"), testing::failure(llm::BackendErrorKind::http_status, 400)}}});
    const auto result = run_baseline(BaselineMethod::cot, chanson(), backend, {}, analysis::RangeTable::defaults(), quiet());
    CHECK(result.state.stage == Stage::aborted);
    CHECK(result.state.abort_reason.has_value());
    CHECK(result.state.transcript.size() == 1);
    CHECK_FALSE(result.final_abc);
    CHECK(backend.calls() == 2);
}

TEST_CASE("method names round trip") {
    for (auto m : {BaselineMethod::ori, BaselineMethod::role, BaselineMethod::cot, BaselineMethod::icl}) {
        CHECK(baseline_method_from_string(to_string(m)) == m);
    }
    CHECK_FALSE(baseline_method_from_string("multi"));
}
