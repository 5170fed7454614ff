#include "composerx/orchestrator.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace composerx::orchestration {

namespace {

constexpr Stage kAllStages[] = {
    Stage::planning,         Stage::composing_melody, Stage::composing_harmony,   Stage::composing_instrument,
    Stage::reviewing,        Stage::revising_melody,  Stage::revising_harmony,    Stage::revising_instrument,
    Stage::arranging,        Stage::done,             Stage::aborted,
};

AgentRole deterministic_speaker(Stage stage) {
    switch (stage) {
        case Stage::planning:
            return AgentRole::leader;
        case Stage::composing_melody:
        case Stage::revising_melody:
            return AgentRole::melody;
        case Stage::composing_harmony:
        case Stage::revising_harmony:
            return AgentRole::harmony;
        case Stage::composing_instrument:
        case Stage::revising_instrument:
            return AgentRole::instrument;
        case Stage::reviewing:
            return AgentRole::reviewer;
        case Stage::arranging:
            return AgentRole::arrangement;
        case Stage::done:
        case Stage::aborted:
            break;
    }
    throw std::logic_error("no speaker for a terminal stage");
}

bool is_musician(AgentRole role) {
    return role == AgentRole::melody || role == AgentRole::harmony || role == AgentRole::instrument;
}

bool has_approve_line(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r*");
        const auto last = line.find_last_not_of(" \t\r*.!");
        if (first != std::string::npos && line.substr(first, last - first + 1) == "APPROVE") return true;
    }
    return false;
}

Stage next_stage(const ConversationState& state, const std::string& reply) {
    switch (state.stage) {
        case Stage::planning:
            return Stage::composing_melody;
        case Stage::composing_melody:
            return Stage::composing_harmony;
        case Stage::composing_harmony:
            return Stage::composing_instrument;
        case Stage::composing_instrument:
            return Stage::reviewing;
        case Stage::reviewing:
            if (state.config.reviewer_can_approve && has_approve_line(reply)) return Stage::arranging;
            return state.review_cycles_completed < state.config.max_review_cycles ? Stage::revising_melody
                                                                                   : Stage::arranging;
        case Stage::revising_melody:
            return Stage::revising_harmony;
        case Stage::revising_harmony:
            return Stage::revising_instrument;
        case Stage::revising_instrument:
            return Stage::reviewing;
        case Stage::arranging:
            return Stage::done;
        case Stage::done:
        case Stage::aborted:
            break;
    }
    throw std::logic_error("terminal stage has no successor");
}

std::string speaker_of(const llm::ChatMessage& m) {
    return m.speaker_tag.value_or(std::string(prompts::to_string(AgentRole::user_proxy)));
}

// The shared group chat as seen by `role`: its own turns are assistant turns,
// everyone else's arrive as labelled user turns.
std::vector<llm::ChatMessage> render_view(const ConversationState& state, AgentRole role) {
    std::vector<llm::ChatMessage> messages;
    messages.push_back({llm::Role::system, prompts::render_agent_system_prompt(role), std::nullopt});
    const std::string self(prompts::to_string(role));
    for (const auto& m : state.transcript) {
        const auto speaker = speaker_of(m);
        if (speaker == self) {
            messages.push_back({llm::Role::assistant, m.content, speaker});
        } else {
            messages.push_back({llm::Role::user, "[" + speaker + "]\n" + m.content, speaker});
        }
    }
    return messages;
}

llm::ChatRequest base_request(const OrchestratorConfig& config) {
    llm::ChatRequest request;
    request.model = config.model;
    request.temperature = config.temperature;
    request.max_tokens = config.max_tokens;
    return request;
}

std::string normalize_pick(std::string text) {
    std::string out;
    for (char c : text) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isalpha(uc) || c == '_') out.push_back(static_cast<char>(std::tolower(uc)));
        else if (!out.empty()) break;
    }
    return out;
}

AgentRole ask_manager(ConversationState& state, llm::Backend& manager, AgentRole fallback) {
    const std::vector<AgentRole> legal{fallback};
    std::string legal_list;
    for (auto role : legal) legal_list += std::string(legal_list.empty() ? "" : ", ") + std::string(prompts::to_string(role));

    auto request = base_request(state.config);
    request.speaker_tag = "manager";
    request.messages.push_back(
        {llm::Role::system,
         "You manage a group chat of music agents: leader, melody, harmony, instrument, reviewer and "
         "arrangement. Read the conversation and reply with the name of the agent who should speak next, "
         "and nothing else.",
         std::nullopt});
    for (const auto& m : state.transcript) {
        request.messages.push_back({llm::Role::user, "[" + speaker_of(m) + "]\n" + m.content, speaker_of(m)});
    }
    request.messages.push_back(
        {llm::Role::user, "Current stage: " + std::string(to_string(state.stage)) + ". Choose from: " + legal_list + ".",
         std::nullopt});

    std::string pick;
    try {
        const auto response = llm::complete(manager, request, state.config.retry);
        state.usage += response.usage;
        pick = normalize_pick(response.content);
    } catch (const llm::BackendError& e) {
        state.warnings.push_back(std::string("speaker selection failed, using the default speaker: ") + e.what());
        return fallback;
    }
    const auto role = prompts::agent_role_from_string(pick);
    if (role && std::find(legal.begin(), legal.end(), *role) != legal.end()) return *role;
    state.warnings.push_back("manager picked '" + pick + "', which is not legal at stage " +
                             std::string(to_string(state.stage)) + "; using " +
                             std::string(prompts::to_string(fallback)));
    return fallback;
}

void enter(ConversationState& state, Stage stage) {
    state.stage = stage;
    state.stage_history.push_back(stage);
}

}  // namespace

std::string_view to_string(Stage stage) {
    switch (stage) {
        case Stage::planning:
            return "planning";
        case Stage::composing_melody:
            return "composing_melody";
        case Stage::composing_harmony:
            return "composing_harmony";
        case Stage::composing_instrument:
            return "composing_instrument";
        case Stage::reviewing:
            return "reviewing";
        case Stage::revising_melody:
            return "revising_melody";
        case Stage::revising_harmony:
            return "revising_harmony";
        case Stage::revising_instrument:
            return "revising_instrument";
        case Stage::arranging:
            return "arranging";
        case Stage::done:
            return "done";
        case Stage::aborted:
            return "aborted";
    }
    return "";
}

std::optional<Stage> stage_from_string(std::string_view text) {
    for (auto s : kAllStages) {
        if (to_string(s) == text) return s;
    }
    return std::nullopt;
}

bool is_terminal(Stage stage) {
    return stage == Stage::done || stage == Stage::aborted;
}

const std::vector<std::pair<Stage, Stage>>& transition_edges() {
    static const std::vector<std::pair<Stage, Stage>> edges = [] {
        std::vector<std::pair<Stage, Stage>> e{
            {Stage::planning, Stage::composing_melody},
            {Stage::composing_melody, Stage::composing_harmony},
            {Stage::composing_harmony, Stage::composing_instrument},
            {Stage::composing_instrument, Stage::reviewing},
            {Stage::reviewing, Stage::revising_melody},
            {Stage::reviewing, Stage::arranging},
            {Stage::revising_melody, Stage::revising_harmony},
            {Stage::revising_harmony, Stage::revising_instrument},
            {Stage::revising_instrument, Stage::reviewing},
            {Stage::arranging, Stage::done},
        };
        for (auto s : kAllStages) {
            if (!is_terminal(s)) e.emplace_back(s, Stage::aborted);
        }
        return e;
    }();
    return edges;
}

void OrchestratorConfig::validate() const {
    if (max_rounds < 6) throw std::invalid_argument("max_rounds must be at least 6");
    if (max_review_cycles < 1) throw std::invalid_argument("max_review_cycles must be at least 1");
}

ConversationState start_conversation(const prompts::UserPrompt& prompt, const OrchestratorConfig& config) {
    config.validate();
    ConversationState state;
    state.config = config;
    state.transcript.push_back({llm::Role::user, prompt.text, std::string(prompts::to_string(AgentRole::user_proxy))});
    state.stage_history.push_back(Stage::planning);
    return state;
}

AgentRole next_speaker(ConversationState& state, llm::Backend* manager) {
    const auto fallback = deterministic_speaker(state.stage);
    if (state.config.selection_policy == SelectionPolicy::llm_managed && manager) {
        return ask_manager(state, *manager, fallback);
    }
    return fallback;
}

ConversationState advance(ConversationState state, llm::Backend& backend) {
    if (is_terminal(state.stage)) throw std::logic_error("advance on a finished conversation");
    if (state.round >= state.config.max_rounds) throw std::logic_error("advance past the round cap");

    const auto speaker = next_speaker(state, &backend);
    const std::string tag(prompts::to_string(speaker));

    auto request = base_request(state.config);
    request.speaker_tag = tag;
    request.messages = render_view(state, speaker);

    llm::ChatResponse response;
    try {
        response = llm::complete(backend, request, state.config.retry);
    } catch (const llm::BackendError& e) {
        state.abort_reason = "backend error during " + std::string(to_string(state.stage)) + ": " + e.what();
        enter(state, Stage::aborted);
        return state;
    }

    state.usage += response.usage;
    state.transcript.push_back({llm::Role::assistant, response.content, tag});
    ++state.round;

    if (is_musician(speaker) || speaker == AgentRole::arrangement) {
        const auto blocks = abc::extract_abc_blocks(response.content);
        if (!blocks.empty()) {
            state.artifacts[speaker] = blocks.back();
        } else {
            state.warnings.push_back(tag + " reply at round " + std::to_string(state.round) + " holds no ABC");
        }
    } else {
        state.artifacts[speaker] = response.content;
    }

    const auto from = state.stage;
    auto to = next_stage(state, response.content);
    if (from == Stage::revising_instrument && to == Stage::reviewing) ++state.review_cycles_completed;

    if (to != Stage::done && state.round >= state.config.max_rounds) {
        if (state.artifacts.contains(AgentRole::arrangement)) {
            to = Stage::done;
        } else {
            state.abort_reason = "round cap of " + std::to_string(state.config.max_rounds) + " reached before arrangement";
            to = Stage::aborted;
        }
    }
    enter(state, to);
    return state;
}

void finalize_result(CompositionResult& result, const std::optional<std::string>& abc_text,
                     const prompts::UserPrompt& prompt, const analysis::RangeTable& ranges) {
    result.final_abc = abc_text;
    result.final_tune.reset();
    result.parse_error.reset();
    result.validation.reset();
    if (!abc_text) return;
    abc::Warnings parse_warnings;
    try {
        result.final_tune = abc::parse_tune(*abc_text, &parse_warnings);
    } catch (const abc::ParseError& e) {
        result.parse_error = e.what();
        return;
    }
    auto report = analysis::validate(*result.final_tune, &prompt.attributes, ranges);
    report.warnings.insert(report.warnings.begin(), parse_warnings.begin(), parse_warnings.end());
    result.validation = std::move(report);
}

CompositionResult run_composition(const prompts::UserPrompt& prompt, const OrchestratorConfig& config,
                                  llm::Backend& backend, const analysis::RangeTable& ranges) {
    const auto calls_before = backend.calls();
    auto state = start_conversation(prompt, config);
    while (!is_terminal(state.stage)) state = advance(std::move(state), backend);

    CompositionResult result;
    std::optional<std::string> abc_text;
    if (state.stage == Stage::done) {
        if (const auto it = state.artifacts.find(AgentRole::arrangement); it != state.artifacts.end()) {
            abc_text = it->second;
        }
    }
    finalize_result(result, abc_text, prompt, ranges);
    result.token_usage = state.usage;
    result.backend_calls = backend.calls() - calls_before;
    result.state = std::move(state);
    return result;
}

}  // namespace composerx::orchestration
