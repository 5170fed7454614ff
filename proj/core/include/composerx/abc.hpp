#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <boost/rational.hpp>

namespace composerx::abc {

using Rational = boost::rational<std::int64_t>;
using Warnings = std::vector<std::string>;

// Raised for any malformed ABC input. Line and column are 1-based.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, std::size_t column, std::string expected, std::string found);

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }
    const std::string& expected() const { return expected_; }
    const std::string& found() const { return found_; }

private:
    std::size_t line_;
    std::size_t column_;
    std::string expected_;
    std::string found_;
};

// A pitch falls outside the MIDI range [0, 127].
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

enum class Accidental { none, sharp, flat, natural };

struct Pitch {
    char letter = 'C';  // uppercase A-G
    Accidental accidental = Accidental::none;
    int octave = 0;  // 0 = ABC middle octave (uppercase letters)

    friend bool operator==(const Pitch&, const Pitch&) = default;
};

struct Rest {
    friend bool operator==(const Rest&, const Rest&) = default;
};

struct MultibarRest {
    int count = 1;
    friend bool operator==(const MultibarRest&, const MultibarRest&) = default;
};

using Chord = std::vector<Pitch>;

struct NoteEvent {
    std::variant<Pitch, Chord, Rest, MultibarRest> kind;
    Rational duration{1};
    bool tie_to_next = false;
    Rational tuplet_scale{1};
    // Set on the first event of a "(p" group to p; 0 everywhere else.
    int tuplet_start = 0;
    std::optional<std::string> chord_symbol;

    bool is_pitched() const;
    // Pitches carried by a note or chord; empty for rests.
    std::vector<Pitch> pitches() const;
    // duration × tuplet_scale, in unit-note-length units.
    Rational scaled_duration() const;

    friend bool operator==(const NoteEvent&, const NoteEvent&) = default;
};

enum class LeftDelim { plain, repeat_start };
enum class RightDelim { plain, repeat_end, double_bar, final_bar };

struct Bar {
    std::vector<NoteEvent> events;
    LeftDelim left_delim = LeftDelim::plain;
    RightDelim right_delim = RightDelim::plain;

    friend bool operator==(const Bar&, const Bar&) = default;
};

struct VoicePart {
    std::string voice_id;
    std::optional<std::string> name;
    std::optional<int> midi_program;
    // Voice properties other than name=, kept verbatim (e.g. clef=bass).
    std::string extra_properties;
    std::vector<Bar> bars;

    friend bool operator==(const VoicePart&, const VoicePart&) = default;
};

struct Meter {
    int numerator = 4;
    int denominator = 4;

    Rational value() const { return {numerator, denominator}; }
    friend bool operator==(const Meter&, const Meter&) = default;
};

enum class Mode { major, minor, other };

struct Key {
    char tonic = 'C';
    Accidental accidental = Accidental::none;  // none, sharp or flat
    Mode mode = Mode::major;
    // Verbatim mode text when mode == other (e.g. "Dor", "mix").
    std::string mode_text;

    friend bool operator==(const Key&, const Key&) = default;
};

struct TuneHeader {
    int reference_number = 1;
    std::string title;
    std::optional<std::string> composer;
    Meter meter;
    Rational unit_note_length{1, 8};
    Key key;
    std::optional<std::string> tempo;
    std::vector<std::string> extra_fields;

    friend bool operator==(const TuneHeader&, const TuneHeader&) = default;
};

struct Tune {
    TuneHeader header;
    std::vector<VoicePart> voices;

    // Bar length in unit-note-length units (meter / L).
    Rational units_per_bar() const;
    const VoicePart* find_voice(std::string_view id) const;

    friend bool operator==(const Tune&, const Tune&) = default;
};

Tune parse_tune(std::string_view text, Warnings* warnings = nullptr);
std::string serialize_tune(const Tune& tune);

// Fenced ``` blocks containing an "X:" line; falls back to a bare "X:" region.
std::vector<std::string> extract_abc_blocks(std::string_view transcript);

// Written pitch: uppercase C = 60, explicit accidental applied, key ignored.
int midi_number(const Pitch& pitch);

// Key parsing shared with prompt attributes ("C major", "Am", "F# minor").
std::optional<Key> parse_key_text(std::string_view text);
std::string key_to_string(const Key& key);

// Semitone alteration the key signature applies to each letter A..G (index 0 = A).
std::array<int, 7> key_signature(const Key& key);

// Resolves key signature and bar-scoped accidentals into sounding MIDI numbers
// for every pitch of every event in a bar, in event order.
std::vector<std::vector<int>> sounding_midi(const Bar& bar, const Key& key);

// Pitch class 0..11 of a letter/accidental pair after signature resolution.
int pitch_class(char letter, int alteration);

// Time-scale of a "(p" tuplet: q/p with q taken from the usual ABC defaults.
Rational tuplet_scale_for(int p, const Meter& meter);

std::string_view to_string(Accidental a);
std::string duration_to_string(const Rational& d);

}  // namespace composerx::abc
