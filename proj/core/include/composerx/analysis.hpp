#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "composerx/abc.hpp"
#include "composerx/range_table.hpp"

namespace composerx::prompts {
struct PromptAttributes;
}

namespace composerx::analysis {

using abc::Rational;
using abc::Tune;
using abc::Warnings;

enum class AnomalyKind { short_bar, long_bar, empty_bar };

struct BarAnomaly {
    std::string voice_id;
    std::size_t bar_index = 0;
    Rational expected_units{0};
    Rational actual_units{0};
    AnomalyKind kind = AnomalyKind::short_bar;
    // Short pickup or closing bar (first bar, or bar ending in :| or |]).
    bool tolerated = false;

    friend bool operator==(const BarAnomaly&, const BarAnomaly&) = default;
};

struct AlignmentReport {
    bool aligned = true;
    std::map<std::string, std::size_t> per_voice_bar_counts;

    friend bool operator==(const AlignmentReport&, const AlignmentReport&) = default;
};

struct RangeViolation {
    std::string voice_id;
    std::size_t bar_index = 0;
    std::size_t event_index = 0;
    int midi = 0;
    int allowed_low = 0;
    int allowed_high = 127;
    std::string instrument;

    friend bool operator==(const RangeViolation&, const RangeViolation&) = default;
};

struct KeyReport {
    bool applicable = true;
    std::size_t out_of_key_count = 0;
    std::size_t total_pitched = 0;

    friend bool operator==(const KeyReport&, const KeyReport&) = default;
};

enum class ChordQuality { major, minor, dominant7, major7, minor7, diminished, augmented, unknown };

struct ChordSymbol {
    char root = 'C';
    abc::Accidental accidental = abc::Accidental::none;
    ChordQuality quality = ChordQuality::major;
    std::string suffix;  // verbatim quality text when quality == unknown
    std::string bass;    // slash bass ("E" in "C/E"), not part of matching

    // Canonical text: root, '#'/'b', then "", "m", "7", "maj7", "m7", "dim", "aug" or the raw suffix.
    std::string normalized() const;
    bool known() const { return quality != ChordQuality::unknown; }
    friend bool operator==(const ChordSymbol&, const ChordSymbol&) = default;
};

std::optional<ChordSymbol> parse_chord_symbol(std::string_view text);
// Pitch classes of the chord tones; empty for unknown qualities.
std::vector<int> chord_tones(const ChordSymbol& chord);

struct ChordMatch {
    // Requested progression repeated cyclically to the extracted length.
    std::vector<std::string> requested;
    std::vector<std::string> extracted;  // "" where a bar carries no chord symbol
    std::size_t matched_positions = 0;

    friend bool operator==(const ChordMatch&, const ChordMatch&) = default;
};

struct KeyMatch {
    std::string requested;
    std::string found;
    bool matched = false;

    friend bool operator==(const KeyMatch&, const KeyMatch&) = default;
};

struct PhraseEnding {
    std::string voice_id;
    std::size_t bar_index = 0;
    std::size_t event_index = 0;
    int ending_midi = 0;
    bool in_key_or_chord = false;

    friend bool operator==(const PhraseEnding&, const PhraseEnding&) = default;
};

struct ValidationReport {
    std::vector<BarAnomaly> bar_anomalies;
    AlignmentReport alignment;
    std::vector<RangeViolation> range_violations;
    KeyReport key_report;
    std::optional<ChordMatch> chord_match;
    std::optional<KeyMatch> key_match;
    std::optional<int> bars_requested;
    std::size_t bars_found = 0;
    std::vector<PhraseEnding> phrase_endings;
    std::vector<std::string> warnings;

    // Non-tolerated bar anomalies, misalignment or range violations.
    bool has_problems() const;

    friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

std::vector<BarAnomaly> check_bar_durations(const Tune& tune);
AlignmentReport check_voice_alignment(const Tune& tune);
std::vector<RangeViolation> check_pitch_ranges(const Tune& tune, const RangeTable& ranges,
                                               Warnings* warnings = nullptr);
KeyReport key_adherence(const Tune& tune);
// One entry per bar of the first voice carrying chord symbols; nullopt for bars without one.
std::vector<std::optional<ChordSymbol>> extract_chord_progression(const Tune& tune, Warnings* warnings = nullptr);
std::vector<PhraseEnding> find_phrase_endings(const Tune& tune);

ValidationReport validate(const Tune& tune, const prompts::PromptAttributes* attrs, const RangeTable& ranges);

// Bar lengths per voice with multi-bar rests expanded to whole bars.
std::vector<Rational> expanded_bar_units(const Tune& tune, const abc::VoicePart& voice);

std::string_view to_string(AnomalyKind kind);

}  // namespace composerx::analysis
