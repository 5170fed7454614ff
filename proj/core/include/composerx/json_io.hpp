#pragma once

#include <nlohmann/json.hpp>

#include "composerx/analysis.hpp"
#include "composerx/llm.hpp"

// JSON forms of report and transcript types. Rationals are written as "n/d" strings.
namespace composerx::analysis {
void to_json(nlohmann::json& j, const BarAnomaly& v);
void from_json(const nlohmann::json& j, BarAnomaly& v);
void to_json(nlohmann::json& j, const AlignmentReport& v);
void from_json(const nlohmann::json& j, AlignmentReport& v);
void to_json(nlohmann::json& j, const RangeViolation& v);
void from_json(const nlohmann::json& j, RangeViolation& v);
void to_json(nlohmann::json& j, const KeyReport& v);
void from_json(const nlohmann::json& j, KeyReport& v);
void to_json(nlohmann::json& j, const ChordMatch& v);
void from_json(const nlohmann::json& j, ChordMatch& v);
void to_json(nlohmann::json& j, const KeyMatch& v);
void from_json(const nlohmann::json& j, KeyMatch& v);
void to_json(nlohmann::json& j, const PhraseEnding& v);
void from_json(const nlohmann::json& j, PhraseEnding& v);
void to_json(nlohmann::json& j, const ValidationReport& v);
void from_json(const nlohmann::json& j, ValidationReport& v);
}  // namespace composerx::analysis

namespace composerx::llm {
void to_json(nlohmann::json& j, const ChatMessage& v);
void from_json(const nlohmann::json& j, ChatMessage& v);
void to_json(nlohmann::json& j, const Usage& v);
void from_json(const nlohmann::json& j, Usage& v);
}  // namespace composerx::llm
