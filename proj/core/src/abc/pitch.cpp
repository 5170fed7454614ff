#include "composerx/abc.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <utility>

namespace composerx::abc {

namespace {

int letter_index(char letter) {
    return std::toupper(static_cast<unsigned char>(letter)) - 'A';
}

// Semitones above C for A..G.
constexpr std::array<int, 7> kLetterPc = {9, 11, 0, 2, 4, 5, 7};

// Position on the circle of fifths for natural tonics A..G (C = 0).
constexpr std::array<int, 7> kLetterFifths = {3, 5, 0, 2, 4, -1, 1};

int accidental_shift(Accidental a) {
    switch (a) {
        case Accidental::sharp:
            return 1;
        case Accidental::flat:
            return -1;
        default:
            return 0;
    }
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

bool NoteEvent::is_pitched() const {
    return std::holds_alternative<Pitch>(kind) || std::holds_alternative<Chord>(kind);
}

std::vector<Pitch> NoteEvent::pitches() const {
    if (const auto* p = std::get_if<Pitch>(&kind)) return {*p};
    if (const auto* c = std::get_if<Chord>(&kind)) return *c;
    return {};
}

Rational NoteEvent::scaled_duration() const {
    return duration * tuplet_scale;
}

Rational Tune::units_per_bar() const {
    return header.meter.value() / header.unit_note_length;
}

const VoicePart* Tune::find_voice(std::string_view id) const {
    for (const auto& v : voices) {
        if (v.voice_id == id) return &v;
    }
    return nullptr;
}

int pitch_class(char letter, int alteration) {
    const int pc = kLetterPc[letter_index(letter)] + alteration;
    return ((pc % 12) + 12) % 12;
}

int midi_number(const Pitch& pitch) {
    const int midi = 60 + kLetterPc[letter_index(pitch.letter)] + accidental_shift(pitch.accidental) +
                     12 * pitch.octave;
    if (midi < 0 || midi > 127) {
        throw RangeError("pitch outside MIDI range: " + std::to_string(midi));
    }
    return midi;
}

std::array<int, 7> key_signature(const Key& key) {
    std::array<int, 7> alter{};
    if (key.mode == Mode::other) return alter;

    int fifths = kLetterFifths[letter_index(key.tonic)] + 7 * accidental_shift(key.accidental);
    if (key.mode == Mode::minor) fifths -= 3;

    constexpr std::string_view sharp_order = "FCGDAEB";
    constexpr std::string_view flat_order = "BEADGCF";
    if (fifths > 0) {
        for (int i = 0; i < fifths; ++i) alter[letter_index(sharp_order[i % 7])] += 1;
    } else {
        for (int i = 0; i < -fifths; ++i) alter[letter_index(flat_order[i % 7])] -= 1;
    }
    return alter;
}

std::vector<std::vector<int>> sounding_midi(const Bar& bar, const Key& key) {
    const auto signature = key_signature(key);
    std::map<std::pair<char, int>, int> carried;
    std::vector<std::vector<int>> out;
    out.reserve(bar.events.size());
    for (const auto& ev : bar.events) {
        std::vector<int> midis;
        for (const auto& p : ev.pitches()) {
            const auto slot = std::make_pair(p.letter, p.octave);
            int alt = 0;
            if (p.accidental != Accidental::none) {
                alt = accidental_shift(p.accidental);
                carried[slot] = alt;
            } else if (auto it = carried.find(slot); it != carried.end()) {
                alt = it->second;
            } else {
                alt = signature[letter_index(p.letter)];
            }
            const int midi = 60 + kLetterPc[letter_index(p.letter)] + alt + 12 * p.octave;
            if (midi < 0 || midi > 127) {
                throw RangeError("sounding pitch outside MIDI range: " + std::to_string(midi));
            }
            midis.push_back(midi);
        }
        out.push_back(std::move(midis));
    }
    return out;
}

std::optional<Key> parse_key_text(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    const char tonic = static_cast<char>(std::toupper(static_cast<unsigned char>(text.front())));
    if (tonic < 'A' || tonic > 'G') return std::nullopt;
    text.remove_prefix(1);

    Key key;
    key.tonic = tonic;
    if (!text.empty() && (text.front() == '#' || text.front() == 'b')) {
        // "Bb" is B flat, but "Bbm" too; a lone "b" after the tonic is always a flat sign.
        key.accidental = text.front() == '#' ? Accidental::sharp : Accidental::flat;
        text.remove_prefix(1);
    }

    const std::string mode = lower(trim(text));
    static const std::array<std::string_view, 5> major_names = {"", "maj", "major", "ion", "ionian"};
    static const std::array<std::string_view, 5> minor_names = {"m", "min", "minor", "aeo", "aeolian"};
    if (std::find(major_names.begin(), major_names.end(), mode) != major_names.end()) {
        key.mode = Mode::major;
    } else if (std::find(minor_names.begin(), minor_names.end(), mode) != minor_names.end()) {
        key.mode = Mode::minor;
    } else {
        key.mode = Mode::other;
        key.mode_text = std::string(trim(text));
    }
    return key;
}

std::string key_to_string(const Key& key) {
    std::string out(1, key.tonic);
    if (key.accidental == Accidental::sharp) out += '#';
    if (key.accidental == Accidental::flat) out += 'b';
    switch (key.mode) {
        case Mode::major:
            break;
        case Mode::minor:
            out += 'm';
            break;
        case Mode::other:
            out += key.mode_text;
            break;
    }
    return out;
}

Rational tuplet_scale_for(int p, const Meter& meter) {
    const bool compound = meter.numerator % 3 == 0 && meter.numerator > 3;
    int q = compound ? 3 : 2;
    switch (p) {
        case 2:
        case 4:
        case 8:
            q = 3;
            break;
        case 3:
        case 6:
            q = 2;
            break;
        default:
            break;
    }
    return Rational(q, p);
}

std::string_view to_string(Accidental a) {
    switch (a) {
        case Accidental::sharp:
            return "^";
        case Accidental::flat:
            return "_";
        case Accidental::natural:
            return "=";
        case Accidental::none:
            break;
    }
    return "";
}

std::string duration_to_string(const Rational& d) {
    const auto n = d.numerator();
    const auto m = d.denominator();
    if (m == 1) return n == 1 ? std::string{} : std::to_string(n);
    if (n == 1 && m == 2) return "/";
    if (n == 1) return "/" + std::to_string(m);
    return std::to_string(n) + "/" + std::to_string(m);
}

}  // namespace composerx::abc
