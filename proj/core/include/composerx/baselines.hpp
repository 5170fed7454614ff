#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "composerx/orchestrator.hpp"

namespace composerx::baselines {

enum class BaselineMethod { ori, role, cot, icl };

std::string_view to_string(BaselineMethod method);
std::optional<BaselineMethod> baseline_method_from_string(std::string_view text);

struct BaselineConfig {
    std::string model = "gpt-4-turbo";
    double temperature = 0.7;
    std::optional<int> max_tokens;
    llm::RetryPolicy retry;
    // ICL examples placed in one request.
    std::size_t icl_examples = 1;
};

// Single-agent generation. The transcript holds the assistant replies only,
// tagged with the method name. icl without examples throws
// prompts::MissingExamples before any backend call.
orchestration::CompositionResult run_baseline(BaselineMethod method, const prompts::UserPrompt& prompt,
                                              llm::Backend& backend, const std::vector<prompts::IclExample>& examples,
                                              const analysis::RangeTable& ranges, const BaselineConfig& config = {});

}  // namespace composerx::baselines
