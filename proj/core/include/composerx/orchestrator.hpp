#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "composerx/abc.hpp"
#include "composerx/analysis.hpp"
#include "composerx/llm.hpp"
#include "composerx/prompts.hpp"

namespace composerx::orchestration {

using prompts::AgentRole;

enum class Stage {
    planning,
    composing_melody,
    composing_harmony,
    composing_instrument,
    reviewing,
    revising_melody,
    revising_harmony,
    revising_instrument,
    arranging,
    done,
    aborted,
};

std::string_view to_string(Stage stage);
std::optional<Stage> stage_from_string(std::string_view text);
bool is_terminal(Stage stage);

// Every legal (from, to) stage transition.
const std::vector<std::pair<Stage, Stage>>& transition_edges();

enum class SelectionPolicy { deterministic, llm_managed };

struct OrchestratorConfig {
    // One round is one agent message; the seeding user message is not counted.
    int max_rounds = 12;
    int max_review_cycles = 1;
    SelectionPolicy selection_policy = SelectionPolicy::deterministic;
    // When set, a reviewer message containing a line "APPROVE" skips to arranging.
    bool reviewer_can_approve = false;
    std::string model = "gpt-4-turbo";
    double temperature = 0.7;
    std::optional<int> max_tokens;
    llm::RetryPolicy retry;

    // Throws std::invalid_argument (max_rounds < 6 or max_review_cycles < 1).
    void validate() const;
};

struct ConversationState {
    Stage stage = Stage::planning;
    int round = 0;
    std::vector<llm::ChatMessage> transcript;
    std::map<AgentRole, std::string> artifacts;
    int review_cycles_completed = 0;
    OrchestratorConfig config;
    llm::Usage usage;
    std::optional<std::string> abort_reason;
    std::vector<std::string> warnings;
    // Stages in the order they were entered, starting with planning.
    std::vector<Stage> stage_history;
};

struct CompositionResult {
    std::optional<std::string> final_abc;
    std::optional<abc::Tune> final_tune;
    std::optional<std::string> parse_error;
    ConversationState state;
    std::optional<analysis::ValidationReport> validation;
    llm::Usage token_usage;
    // Backend calls made for this composition.
    std::size_t backend_calls = 0;
};

// Fresh state whose transcript holds the user_proxy message.
ConversationState start_conversation(const prompts::UserPrompt& prompt, const OrchestratorConfig& config);

// The manager backend is consulted only under the llm_managed policy.
AgentRole next_speaker(ConversationState& state, llm::Backend* manager = nullptr);

// One agent turn: exactly one completion call for the selected speaker.
ConversationState advance(ConversationState state, llm::Backend& backend);

CompositionResult run_composition(const prompts::UserPrompt& prompt, const OrchestratorConfig& config,
                                  llm::Backend& backend, const analysis::RangeTable& ranges);

// Parses the last ABC candidate of `text` and validates it; shared with the single-agent baselines.
void finalize_result(CompositionResult& result, const std::optional<std::string>& abc_text,
                     const prompts::UserPrompt& prompt, const analysis::RangeTable& ranges);

}  // namespace composerx::orchestration
