#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "composerx/orchestrator.hpp"
#include "test_support.hpp"

using namespace composerx;
using namespace composerx::orchestration;
using testing::failure;
using testing::fenced;
using testing::reply;

namespace {

prompts::UserPrompt chanson() {
    for (const auto& p : prompts::starter_prompts()) {
        if (p.id == "vintage-french-chanson") return p;
    }
    throw std::logic_error("starter set lacks the chanson prompt");
}

OrchestratorConfig quiet_config() {
    OrchestratorConfig config;
    config.retry = testing::instant_retry(0);
    return config;
}

llm::MockBackend::Script happy_script() {
    return llm::MockBackend::parse_script(testing::fixture("happy.json"));
}

std::vector<std::string> speakers(const ConversationState& state) {
    std::vector<std::string> out;
    for (const auto& m : state.transcript) out.push_back(m.speaker_tag.value_or("?"));
    return out;
}

const std::string kShortTune = "X:1\nM:4/4\nL:1/8\nK:C\nCDEF GABc|c8|]";

}  // namespace

TEST_CASE("happy path runs ten agent messages in pipeline order") {
    llm::MockBackend backend(happy_script());
    const auto result = run_composition(chanson(), quiet_config(), backend, analysis::RangeTable::defaults());
    const auto& state = result.state;
    CHECK(state.stage == Stage::done);
    CHECK(state.round == 10);
    CHECK(speakers(state) == std::vector<std::string>{"user_proxy", "leader", "melody", "harmony", "instrument",
                                                      "reviewer", "melody", "harmony", "instrument", "reviewer",
                                                      "arrangement"});
    CHECK(state.review_cycles_completed == 1);
    CHECK(result.backend_calls == 10);
    auto expected = testing::fixture("chanson.abc");
    expected.pop_back();
    CHECK(result.final_abc == std::optional<std::string>(expected));
    REQUIRE(result.final_tune);
    REQUIRE(result.validation);
    CHECK(result.token_usage.total() > 0);
    CHECK(state.stage_history.front() == Stage::planning);
    CHECK(state.stage_history.back() == Stage::done);
    CHECK(state.warnings.empty());
    for (auto role : {AgentRole::leader, AgentRole::melody, AgentRole::harmony, AgentRole::instrument,
                      AgentRole::reviewer, AgentRole::arrangement}) {
        CHECK(state.artifacts.contains(role));
    }
}

TEST_CASE("chanson arrangement validates against the prompt attributes") {
    llm::MockBackend backend(happy_script());
    const auto result = run_composition(chanson(), quiet_config(), backend, analysis::RangeTable::defaults());
    REQUIRE(result.validation);
    const auto& report = *result.validation;
    CHECK(report.bars_found == 16);
    CHECK(report.bars_requested == std::optional<int>(16));
    REQUIRE(report.key_match);
    CHECK(report.key_match->matched);
    REQUIRE(report.chord_match);
    CHECK(report.chord_match->matched_positions == 16);
    CHECK(report.alignment.aligned);
    CHECK(report.range_violations.empty());
    CHECK_FALSE(report.has_problems());
}

TEST_CASE("each agent sees the whole conversation") {
    llm::MockBackend backend(happy_script());
    run_composition(chanson(), quiet_config(), backend, analysis::RangeTable::defaults());
    const auto requests = backend.requests();
    REQUIRE(requests.size() == 10);
    for (std::size_t i = 0; i < requests.size(); ++i) {
        const auto& messages = requests[i].messages;
        CHECK(messages.front().role == llm::Role::system);
        CHECK(messages.size() == i + 2);
        CHECK(messages[1].content == chanson().text.insert(0, "[user_proxy]\n"));
    }
    // The second melody turn sees its first reply as its own assistant turn.
    const auto& revise = requests[5].messages;
    CHECK(requests[5].speaker_tag == std::optional<std::string>("melody"));
    CHECK(revise[3].role == llm::Role::assistant);
    CHECK(revise[4].role == llm::Role::user);
    CHECK(revise[4].content.rfind("[harmony]\n", 0) == 0);
}

TEST_CASE("round cap aborts before arrangement") {
    auto config = quiet_config();
    config.max_rounds = 6;
    llm::MockBackend backend(happy_script());
    const auto result = run_composition(chanson(), config, backend, analysis::RangeTable::defaults());
    CHECK(result.state.stage == Stage::aborted);
    CHECK(result.state.round == 6);
    CHECK(result.state.transcript.size() == 7);
    CHECK(result.state.abort_reason.has_value());
    CHECK_FALSE(result.final_abc);
    CHECK(result.backend_calls == 6);
}

TEST_CASE("backend error at harmony aborts with the partial transcript") {
    auto script = happy_script();
    script["harmony"] = {failure(llm::BackendErrorKind::malformed_body)};
    llm::MockBackend backend(script);
    const auto result = run_composition(chanson(), quiet_config(), backend, analysis::RangeTable::defaults());
    CHECK(result.state.stage == Stage::aborted);
    CHECK(result.state.transcript.size() == 3);
    REQUIRE(result.state.abort_reason);
    CHECK(result.state.abort_reason->find("composing_harmony") != std::string::npos);
    CHECK_FALSE(result.final_abc);
    CHECK(result.backend_calls == 3);
}

TEST_CASE("transient errors are retried inside a turn") {
    auto script = happy_script();
    script["harmony"].insert(script["harmony"].begin(), failure(llm::BackendErrorKind::timeout));
    auto config = quiet_config();
    config.retry = testing::instant_retry(2);
    llm::MockBackend backend(script);
    const auto result = run_composition(chanson(), config, backend, analysis::RangeTable::defaults());
    CHECK(result.state.stage == Stage::done);
    CHECK(result.state.round == 10);
    CHECK(result.backend_calls == 11);
}

TEST_CASE("arrangement without ABC finishes without a final tune") {
    auto script = happy_script();
    script["arrangement"] = {reply("I think the piece is lovely as it is.")};
    llm::MockBackend backend(script);
    const auto result = run_composition(chanson(), quiet_config(), backend, analysis::RangeTable::defaults());
    CHECK(result.state.stage == Stage::done);
    CHECK_FALSE(result.final_abc);
    CHECK_FALSE(result.validation);
    CHECK(result.state.warnings.size() == 1);
}

TEST_CASE("arrangement with two blocks keeps the last") {
    auto script = happy_script();
    const std::string first = "X:1\nM:4/4\nL:1/8\nK:C\nC8|]";
    script["arrangement"] = {reply("Draft:\n" + fenced(first) + "\nFinal:\n" + fenced(kShortTune))};
    llm::MockBackend backend(script);
    const auto result = run_composition(chanson(), quiet_config(), backend, analysis::RangeTable::defaults());
    CHECK(result.final_abc == std::optional<std::string>(kShortTune));
}

TEST_CASE("unparseable arrangement records the parse error") {
    auto script = happy_script();
    script["arrangement"] = {reply(fenced("X:1\nM:4/4\nL:1/8\nK:C\nC8|H2|]"))};
    llm::MockBackend backend(script);
    const auto result = run_composition(chanson(), quiet_config(), backend, analysis::RangeTable::defaults());
    CHECK(result.final_abc.has_value());
    CHECK_FALSE(result.final_tune);
    CHECK(result.parse_error.has_value());
}

TEST_CASE("more review cycles repeat the revision loop") {
    auto config = quiet_config();
    config.max_review_cycles = 2;
    config.max_rounds = 20;
    auto script = happy_script();
    for (const char* role : {"melody", "harmony", "instrument", "reviewer"}) {
        script[role].push_back(script[role].back());
    }
    llm::MockBackend backend(script);
    const auto result = run_composition(chanson(), config, backend, analysis::RangeTable::defaults());
    CHECK(result.state.stage == Stage::done);
    CHECK(result.state.round == 14);
    CHECK(result.state.review_cycles_completed == 2);
}

TEST_CASE("reviewer approval skips revision when enabled") {
    auto script = happy_script();
    script["reviewer"] = {reply("Solid work.\nAPPROVE")};
    SUBCASE("enabled") {
        auto config = quiet_config();
        config.reviewer_can_approve = true;
        llm::MockBackend backend(script);
        const auto result = run_composition(chanson(), config, backend, analysis::RangeTable::defaults());
        CHECK(result.state.stage == Stage::done);
        CHECK(result.state.round == 6);
    }
    SUBCASE("disabled by default") {
        script["reviewer"].push_back(reply("Still fine."));
        llm::MockBackend backend(script);
        const auto result = run_composition(chanson(), quiet_config(), backend, analysis::RangeTable::defaults());
        CHECK(result.state.round == 10);
    }
}

TEST_CASE("musician replies without ABC leave a warning") {
    auto script = happy_script();
    script["melody"][0] = reply("I would rather describe the tune in words.");
    llm::MockBackend backend(script);
    const auto result = run_composition(chanson(), quiet_config(), backend, analysis::RangeTable::defaults());
    CHECK(result.state.stage == Stage::done);
    CHECK(result.state.warnings.size() == 1);
}

TEST_CASE("managed selection falls back on illegal picks") {
    auto config = quiet_config();
    config.selection_policy = SelectionPolicy::llm_managed;
    auto script = happy_script();
    script["manager"] = {reply("drummer"), reply("melody"), failure(llm::BackendErrorKind::malformed_body)};
    for (int i = 0; i < 7; ++i) script["manager"].push_back(reply("leader"));
    llm::MockBackend backend(script);
    const auto result = run_composition(chanson(), config, backend, analysis::RangeTable::defaults());
    CHECK(result.state.stage == Stage::done);
    CHECK(speakers(result.state)[1] == "leader");
    CHECK(speakers(result.state)[2] == "melody");
    // drummer, the backend failure and seven illegal leader picks.
    CHECK(result.state.warnings.size() == 9);
    CHECK(result.state.warnings[0].find("drummer") != std::string::npos);
    CHECK(result.backend_calls == 20);
}

TEST_CASE("advance refuses terminal and capped states") {
    llm::MockBackend backend(happy_script());
    auto state = start_conversation(chanson(), quiet_config());
    state.stage = Stage::done;
    CHECK_THROWS_AS(advance(state, backend), std::logic_error);
    CHECK(backend.calls() == 0);
}

TEST_CASE("configuration bounds") {
    OrchestratorConfig config;
    config.max_rounds = 5;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config.max_rounds = 6;
    config.max_review_cycles = 0;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config.max_review_cycles = 1;
    CHECK_NOTHROW(config.validate());
}

TEST_CASE("stage names round trip") {
    for (const auto& [from, to] : transition_edges()) {
        CHECK(stage_from_string(to_string(from)) == from);
        CHECK(stage_from_string(to_string(to)) == to);
        CHECK_FALSE(is_terminal(from));
    }
    CHECK_FALSE(stage_from_string("jamming"));
}

namespace {

struct RandomRun {
    llm::MockBackend::Script script;
    OrchestratorConfig config;
};

RandomRun random_run(std::mt19937& rng) {
    auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };
    RandomRun run;
    run.config = quiet_config();
    run.config.max_rounds = std::uniform_int_distribution<int>(6, 24)(rng);
    run.config.max_review_cycles = std::uniform_int_distribution<int>(1, 3)(rng);
    run.config.reviewer_can_approve = coin(0.3);
    auto& replies = run.script["*"];
    for (int i = 0; i < 30; ++i) {
        const double r = std::uniform_real_distribution<double>(0, 1)(rng);
        if (r < 0.03) {
            replies.push_back(failure(llm::BackendErrorKind::malformed_body));
        } else if (r < 0.15) {
            replies.push_back(reply("APPROVE", 3, 1));
        } else if (r < 0.55) {
            replies.push_back(reply(fenced(kShortTune), 5, 7));
        } else {
            replies.push_back(reply("Some thoughts on the piece.", 2, 2));
        }
    }
    return run;
}

}  // namespace

TEST_CASE("random conversations obey the stage graph and the round cap") {
    std::mt19937 rng(424242);
    const std::set<std::pair<Stage, Stage>> edges(transition_edges().begin(), transition_edges().end());
    for (int trial = 0; trial < 300; ++trial) {
        const auto run = random_run(rng);
        llm::MockBackend backend(run.script);
        const auto result = run_composition(chanson(), run.config, backend, analysis::RangeTable::defaults());
        const auto& state = result.state;
        const auto& history = state.stage_history;
        REQUIRE(history.size() >= 2);
        CHECK(history.front() == Stage::planning);
        CHECK(is_terminal(history.back()));
        for (std::size_t i = 0; i + 1 < history.size(); ++i) {
            CHECK(edges.contains({history[i], history[i + 1]}));
            CHECK_FALSE(is_terminal(history[i]));
        }
        CHECK(state.round <= run.config.max_rounds);
        CHECK(state.transcript.size() == static_cast<std::size_t>(state.round) + 1);
        CHECK(state.review_cycles_completed <= run.config.max_review_cycles);
        const bool backend_failed = state.abort_reason && state.abort_reason->find("backend") != std::string::npos;
        CHECK(result.backend_calls == static_cast<std::size_t>(state.round) + (backend_failed ? 1 : 0));
        if (state.stage == Stage::done) {
            const bool arranged = std::any_of(state.transcript.begin(), state.transcript.end(),
                                              [](const llm::ChatMessage& m) { return m.speaker_tag == "arrangement"; });
            CHECK(arranged);
        }
        if (result.final_abc) CHECK(state.stage == Stage::done);
        llm::Usage sum;
        for (std::size_t i = 0; i < static_cast<std::size_t>(state.round); ++i) {
            sum += run.script.at("*")[i].usage;
        }
        if (!backend_failed) CHECK(sum == state.usage);
    }
}

TEST_CASE("identical scripts give identical conversations") {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const auto run = random_run(rng);
        llm::MockBackend a(run.script);
        llm::MockBackend b(run.script);
        const auto ra = run_composition(chanson(), run.config, a, analysis::RangeTable::defaults());
        const auto rb = run_composition(chanson(), run.config, b, analysis::RangeTable::defaults());
        CHECK(ra.state.transcript == rb.state.transcript);
        CHECK(ra.state.stage_history == rb.state.stage_history);
        CHECK(ra.final_abc == rb.final_abc);
        CHECK(ra.validation == rb.validation);
        CHECK(a.requests().size() == b.requests().size());
    }
}
