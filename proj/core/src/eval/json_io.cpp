#include "composerx/json_io.hpp"

#include <stdexcept>

namespace composerx::analysis {

using nlohmann::json;

namespace {

std::string rational_text(const Rational& r) {
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

Rational rational_from(const json& j) {
    if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
    const auto text = j.get<std::string>();
    const auto slash = text.find('/');
    try {
        if (slash == std::string::npos) return Rational(std::stoll(text));
        return Rational(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
    } catch (const std::exception&) {
        throw json::type_error::create(302, "not a rational: " + text, &j);
    }
}

AnomalyKind anomaly_kind_from(const std::string& text) {
    for (auto k : {AnomalyKind::short_bar, AnomalyKind::long_bar, AnomalyKind::empty_bar}) {
        if (to_string(k) == text) return k;
    }
    throw std::invalid_argument("unknown anomaly kind: " + text);
}

template <typename T>
void get_optional(const json& j, const char* key, std::optional<T>& out) {
    if (j.contains(key) && !j[key].is_null()) {
        out = j[key].get<T>();
    } else {
        out.reset();
    }
}

}  // namespace

void to_json(json& j, const BarAnomaly& v) {
    j = {{"voice_id", v.voice_id},
         {"bar_index", v.bar_index},
         {"expected_units", rational_text(v.expected_units)},
         {"actual_units", rational_text(v.actual_units)},
         {"kind", std::string(to_string(v.kind))},
         {"tolerated", v.tolerated}};
}

void from_json(const json& j, BarAnomaly& v) {
    v.voice_id = j.at("voice_id").get<std::string>();
    v.bar_index = j.at("bar_index").get<std::size_t>();
    v.expected_units = rational_from(j.at("expected_units"));
    v.actual_units = rational_from(j.at("actual_units"));
    v.kind = anomaly_kind_from(j.at("kind").get<std::string>());
    v.tolerated = j.at("tolerated").get<bool>();
}

void to_json(json& j, const AlignmentReport& v) {
    j = {{"aligned", v.aligned}, {"per_voice_bar_counts", v.per_voice_bar_counts}};
}

void from_json(const json& j, AlignmentReport& v) {
    v.aligned = j.at("aligned").get<bool>();
    v.per_voice_bar_counts = j.at("per_voice_bar_counts").get<std::map<std::string, std::size_t>>();
}

void to_json(json& j, const RangeViolation& v) {
    j = {{"voice_id", v.voice_id},       {"bar_index", v.bar_index},     {"event_index", v.event_index},
         {"midi", v.midi},               {"allowed_low", v.allowed_low}, {"allowed_high", v.allowed_high},
         {"instrument", v.instrument}};
}

void from_json(const json& j, RangeViolation& v) {
    v.voice_id = j.at("voice_id").get<std::string>();
    v.bar_index = j.at("bar_index").get<std::size_t>();
    v.event_index = j.at("event_index").get<std::size_t>();
    v.midi = j.at("midi").get<int>();
    v.allowed_low = j.at("allowed_low").get<int>();
    v.allowed_high = j.at("allowed_high").get<int>();
    v.instrument = j.at("instrument").get<std::string>();
}

void to_json(json& j, const KeyReport& v) {
    j = {{"applicable", v.applicable}, {"out_of_key_count", v.out_of_key_count}, {"total_pitched", v.total_pitched}};
}

void from_json(const json& j, KeyReport& v) {
    v.applicable = j.at("applicable").get<bool>();
    v.out_of_key_count = j.at("out_of_key_count").get<std::size_t>();
    v.total_pitched = j.at("total_pitched").get<std::size_t>();
}

void to_json(json& j, const ChordMatch& v) {
    j = {{"requested", v.requested}, {"extracted", v.extracted}, {"matched_positions", v.matched_positions}};
}

void from_json(const json& j, ChordMatch& v) {
    v.requested = j.at("requested").get<std::vector<std::string>>();
    v.extracted = j.at("extracted").get<std::vector<std::string>>();
    v.matched_positions = j.at("matched_positions").get<std::size_t>();
}

void to_json(json& j, const KeyMatch& v) {
    j = {{"requested", v.requested}, {"found", v.found}, {"matched", v.matched}};
}

void from_json(const json& j, KeyMatch& v) {
    v.requested = j.at("requested").get<std::string>();
    v.found = j.at("found").get<std::string>();
    v.matched = j.at("matched").get<bool>();
}

void to_json(json& j, const PhraseEnding& v) {
    j = {{"voice_id", v.voice_id},
         {"bar_index", v.bar_index},
         {"event_index", v.event_index},
         {"ending_midi", v.ending_midi},
         {"in_key_or_chord", v.in_key_or_chord}};
}

void from_json(const json& j, PhraseEnding& v) {
    v.voice_id = j.at("voice_id").get<std::string>();
    v.bar_index = j.at("bar_index").get<std::size_t>();
    v.event_index = j.at("event_index").get<std::size_t>();
    v.ending_midi = j.at("ending_midi").get<int>();
    v.in_key_or_chord = j.at("in_key_or_chord").get<bool>();
}

void to_json(json& j, const ValidationReport& v) {
    j = {{"bar_anomalies", v.bar_anomalies},
         {"alignment", v.alignment},
         {"range_violations", v.range_violations},
         {"key_report", v.key_report},
         {"chord_match", v.chord_match ? json(*v.chord_match) : json(nullptr)},
         {"key_match", v.key_match ? json(*v.key_match) : json(nullptr)},
         {"bars_requested", v.bars_requested ? json(*v.bars_requested) : json(nullptr)},
         {"bars_found", v.bars_found},
         {"phrase_endings", v.phrase_endings},
         {"warnings", v.warnings}};
}

void from_json(const json& j, ValidationReport& v) {
    v.bar_anomalies = j.at("bar_anomalies").get<std::vector<BarAnomaly>>();
    v.alignment = j.at("alignment").get<AlignmentReport>();
    v.range_violations = j.at("range_violations").get<std::vector<RangeViolation>>();
    v.key_report = j.at("key_report").get<KeyReport>();
    get_optional(j, "chord_match", v.chord_match);
    get_optional(j, "key_match", v.key_match);
    get_optional(j, "bars_requested", v.bars_requested);
    v.bars_found = j.at("bars_found").get<std::size_t>();
    v.phrase_endings = j.at("phrase_endings").get<std::vector<PhraseEnding>>();
    v.warnings = j.value("warnings", std::vector<std::string>{});
}

}  // namespace composerx::analysis

namespace composerx::llm {

using nlohmann::json;

void to_json(json& j, const ChatMessage& v) {
    j = {{"role", std::string(to_string(v.role))}, {"content", v.content}};
    if (v.speaker_tag) j["speaker"] = *v.speaker_tag;
}

void from_json(const json& j, ChatMessage& v) {
    const auto role = role_from_string(j.at("role").get<std::string>());
    if (!role) throw std::invalid_argument("unknown chat role: " + j.at("role").get<std::string>());
    v.role = *role;
    v.content = j.at("content").get<std::string>();
    if (j.contains("speaker") && !j["speaker"].is_null()) {
        v.speaker_tag = j["speaker"].get<std::string>();
    } else {
        v.speaker_tag.reset();
    }
}

void to_json(json& j, const Usage& v) {
    j = {{"prompt_tokens", v.prompt_tokens}, {"completion_tokens", v.completion_tokens}};
}

void from_json(const json& j, Usage& v) {
    v.prompt_tokens = j.at("prompt_tokens").get<std::int64_t>();
    v.completion_tokens = j.at("completion_tokens").get<std::int64_t>();
}

}  // namespace composerx::llm
