#include "composerx/baselines.hpp"

namespace composerx::baselines {

using orchestration::CompositionResult;
using orchestration::Stage;
using prompts::SingleAgentMethod;

std::string_view to_string(BaselineMethod method) {
    switch (method) {
        case BaselineMethod::ori:
            return "ori";
        case BaselineMethod::role:
            return "role";
        case BaselineMethod::cot:
            return "cot";
        case BaselineMethod::icl:
            return "icl";
    }
    return "";
}

std::optional<BaselineMethod> baseline_method_from_string(std::string_view text) {
    for (auto m : {BaselineMethod::ori, BaselineMethod::role, BaselineMethod::cot, BaselineMethod::icl}) {
        if (to_string(m) == text) return m;
    }
    return std::nullopt;
}

CompositionResult run_baseline(BaselineMethod method, const prompts::UserPrompt& prompt, llm::Backend& backend,
                               const std::vector<prompts::IclExample>& examples, const analysis::RangeTable& ranges,
                               const BaselineConfig& config) {
    std::vector<prompts::IclExample> used;
    if (method == BaselineMethod::icl) {
        if (examples.empty()) throw prompts::MissingExamples("the icl baseline needs at least one example");
        const auto n = std::min(std::max<std::size_t>(config.icl_examples, 1), examples.size());
        used.assign(examples.begin(), examples.begin() + static_cast<std::ptrdiff_t>(n));
    }

    std::vector<SingleAgentMethod> steps;
    switch (method) {
        case BaselineMethod::ori:
            steps = {SingleAgentMethod::ori};
            break;
        case BaselineMethod::role:
            steps = {SingleAgentMethod::role};
            break;
        case BaselineMethod::icl:
            steps = {SingleAgentMethod::icl};
            break;
        case BaselineMethod::cot:
            steps = {SingleAgentMethod::cot_step1, SingleAgentMethod::cot_step2, SingleAgentMethod::cot_step3};
            break;
    }

    CompositionResult result;
    auto& state = result.state;
    state.config.model = config.model;
    state.config.temperature = config.temperature;
    state.config.max_tokens = config.max_tokens;
    state.config.max_rounds = static_cast<int>(steps.size());
    state.config.retry = config.retry;
    state.stage = Stage::composing_melody;
    state.stage_history = {Stage::composing_melody};

    const std::string tag(to_string(method));
    const auto calls_before = backend.calls();
    std::vector<std::string> replies;
    for (auto step : steps) {
        llm::ChatRequest request;
        request.model = config.model;
        request.temperature = config.temperature;
        request.max_tokens = config.max_tokens;
        request.speaker_tag = tag;
        request.messages = prompts::render_single_agent(step, prompt, replies, used);
        llm::ChatResponse response;
        try {
            response = llm::complete(backend, request, config.retry);
        } catch (const llm::BackendError& e) {
            state.abort_reason = "backend error at call " + std::to_string(replies.size() + 1) + ": " + e.what();
            state.stage = Stage::aborted;
            state.stage_history.push_back(Stage::aborted);
            break;
        }
        state.usage += response.usage;
        state.transcript.push_back({llm::Role::assistant, response.content, tag});
        ++state.round;
        replies.push_back(response.content);
    }

    std::optional<std::string> abc_text;
    if (state.stage != Stage::aborted) {
        state.stage = Stage::done;
        state.stage_history.push_back(Stage::done);
        const auto blocks = abc::extract_abc_blocks(replies.back());
        if (!blocks.empty()) {
            abc_text = blocks.back();
            state.artifacts[prompts::AgentRole::arrangement] = blocks.back();
        }
    }
    orchestration::finalize_result(result, abc_text, prompt, ranges);
    result.token_usage = state.usage;
    result.backend_calls = backend.calls() - calls_before;
    return result;
}

}  // namespace composerx::baselines
