#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "composerx/llm.hpp"

namespace composerx::prompts {

struct PromptAttributes {
    std::string name;
    std::optional<std::string> tempo;
    std::optional<std::string> feeling;
    std::optional<std::vector<std::string>> chord_progression;
    std::optional<std::string> key;
    std::optional<int> bars;
    std::optional<std::vector<std::string>> instruments;
    std::optional<std::string> genre;
    std::optional<std::string> style;
    std::optional<std::string> motif;

    friend bool operator==(const PromptAttributes&, const PromptAttributes&) = default;
};

struct UserPrompt {
    std::string id;
    std::string text;
    PromptAttributes attributes;

    friend bool operator==(const UserPrompt&, const UserPrompt&) = default;
};

struct IclExample {
    std::string description;
    std::string abc;

    friend bool operator==(const IclExample&, const IclExample&) = default;
};

class SchemaError : public std::runtime_error {
public:
    SchemaError(std::size_t record_index, std::string field, std::string reason);
    std::size_t record_index() const { return record_index_; }
    const std::string& field() const { return field_; }
    const std::string& reason() const { return reason_; }

private:
    std::size_t record_index_;
    std::string field_;
    std::string reason_;
};

class DuplicateId : public std::runtime_error {
public:
    explicit DuplicateId(const std::string& id) : std::runtime_error("duplicate prompt id: " + id), id_(id) {}
    const std::string& id() const { return id_; }

private:
    std::string id_;
};

// A rendering precondition failed (CoT step without prior outputs).
class MissingContext : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class MissingExamples : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::vector<UserPrompt> parse_prompt_set(const std::string& json_text);
std::vector<UserPrompt> load_prompt_set(const std::filesystem::path& path);
std::string dump_prompt_set(const std::vector<UserPrompt>& prompts);
void save_prompt_set(const std::vector<UserPrompt>& prompts, const std::filesystem::path& path);

// Every example's ABC must parse; a failure is reported as SchemaError on field "abc".
std::vector<IclExample> parse_icl_store(const std::string& json_text);
std::vector<IclExample> load_icl_store(const std::filesystem::path& path);

// Bundled data compiled into the library.
std::vector<UserPrompt> starter_prompts();
std::vector<IclExample> bundled_icl_examples();

enum class SingleAgentMethod { ori, role, cot_step1, cot_step2, cot_step3, icl };

// Agent roles of the multi-agent session; user_proxy only seeds the conversation.
enum class AgentRole { leader, melody, harmony, instrument, reviewer, arrangement, user_proxy };

std::string_view to_string(AgentRole role);
std::optional<AgentRole> agent_role_from_string(std::string_view text);

// CoT steps need the replies of the previous steps in `context`, oldest first.
std::vector<llm::ChatMessage> render_single_agent(SingleAgentMethod method, const UserPrompt& prompt,
                                                  const std::vector<std::string>& context = {},
                                                  const std::vector<IclExample>& examples = {});

std::string render_agent_system_prompt(AgentRole role);

// Template texts, exposed for snapshot tests.
namespace templates {
extern const char* const kRolePlay;
extern const char* const kCotStep1;
std::string cot_step2(int bars);
std::string cot_step3(int bars);
extern const char* const kIcl;
extern const char* const kMelodyAgent;
}  // namespace templates

struct ExpandOptions {
    std::size_t seeds_per_call = 3;
    std::size_t max_calls = 1;
    std::uint32_t seed = 0x5eed;
    std::string model = "gpt-4-turbo";
    double temperature = 0.7;
    std::string id_prefix = "gen-";
    llm::RetryPolicy retry;
};

// Self-instruct expansion: asks the backend for new records in the prompt-set schema.
// Malformed records are dropped with a warning; backend errors propagate.
std::vector<UserPrompt> expand_prompts(const std::vector<UserPrompt>& seeds, std::size_t n, llm::Backend& backend,
                                       const ExpandOptions& options = {}, std::vector<std::string>* warnings = nullptr);

}  // namespace composerx::prompts
