#include "composerx/analysis.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

#include "composerx/prompts.hpp"

namespace composerx::analysis {

namespace {

using abc::Bar;
using abc::MultibarRest;
using abc::NoteEvent;
using abc::RightDelim;
using abc::VoicePart;

struct BarUnits {
    Rational actual{0};
    Rational expected{0};
    int multibar = 0;  // total Z count
};

BarUnits measure(const Bar& bar, const Rational& per_bar) {
    BarUnits u;
    for (const auto& ev : bar.events) {
        if (const auto* z = std::get_if<MultibarRest>(&ev.kind)) {
            u.multibar += z->count;
        } else {
            u.actual += ev.scaled_duration();
        }
    }
    u.actual += per_bar * u.multibar;
    u.expected = per_bar * std::max(1, u.multibar);
    return u;
}

std::set<int> diatonic_set(const abc::Key& key) {
    std::set<int> pcs;
    if (key.mode == abc::Mode::other) return pcs;
    const auto sig = abc::key_signature(key);
    for (char letter = 'A'; letter <= 'G'; ++letter) pcs.insert(abc::pitch_class(letter, sig[letter - 'A']));
    return pcs;
}

int accidental_shift(abc::Accidental a) {
    return a == abc::Accidental::sharp ? 1 : a == abc::Accidental::flat ? -1 : 0;
}

const VoicePart* chord_voice(const Tune& tune) {
    for (const auto& v : tune.voices) {
        for (const auto& bar : v.bars) {
            for (const auto& ev : bar.events) {
                if (ev.chord_symbol) return &v;
            }
        }
    }
    return tune.voices.empty() ? nullptr : &tune.voices.front();
}

Rational median(std::vector<Rational> values) {
    if (values.empty()) return Rational(0);
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return (values[n / 2 - 1] + values[n / 2]) / 2;
}

std::string normalize_requested(const std::string& text) {
    if (auto c = parse_chord_symbol(text)) return c->normalized();
    return text;
}

}  // namespace

std::string_view to_string(AnomalyKind kind) {
    switch (kind) {
        case AnomalyKind::short_bar:
            return "short";
        case AnomalyKind::long_bar:
            return "long";
        case AnomalyKind::empty_bar:
            return "empty";
    }
    return "";
}

std::optional<ChordSymbol> parse_chord_symbol(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.empty()) return std::nullopt;
    const char root = text.front();
    if (root < 'A' || root > 'G') return std::nullopt;

    ChordSymbol chord;
    chord.root = root;
    text.remove_prefix(1);
    if (!text.empty() && (text.front() == '#' || text.front() == 'b')) {
        chord.accidental = text.front() == '#' ? abc::Accidental::sharp : abc::Accidental::flat;
        text.remove_prefix(1);
    }
    if (const auto slash = text.find('/'); slash != std::string_view::npos) {
        chord.bass = std::string(text.substr(slash + 1));
        text = text.substr(0, slash);
    }

    struct Alias {
        std::string_view text;
        ChordQuality quality;
    };
    static constexpr std::array<Alias, 20> aliases = {{
        {"", ChordQuality::major},         {"maj", ChordQuality::major},       {"M", ChordQuality::major},
        {"major", ChordQuality::major},    {"m", ChordQuality::minor},         {"min", ChordQuality::minor},
        {"minor", ChordQuality::minor},    {"-", ChordQuality::minor},         {"7", ChordQuality::dominant7},
        {"maj7", ChordQuality::major7},    {"M7", ChordQuality::major7},       {"ma7", ChordQuality::major7},
        {"m7", ChordQuality::minor7},      {"min7", ChordQuality::minor7},     {"-7", ChordQuality::minor7},
        {"dim", ChordQuality::diminished}, {"o", ChordQuality::diminished},    {"aug", ChordQuality::augmented},
        {"+", ChordQuality::augmented},    {"dom7", ChordQuality::dominant7},
    }};
    chord.quality = ChordQuality::unknown;
    for (const auto& a : aliases) {
        if (a.text == text) {
            chord.quality = a.quality;
            break;
        }
    }
    if (chord.quality == ChordQuality::unknown) chord.suffix = std::string(text);
    return chord;
}

std::string ChordSymbol::normalized() const {
    std::string out(1, root);
    if (accidental == abc::Accidental::sharp) out += '#';
    if (accidental == abc::Accidental::flat) out += 'b';
    switch (quality) {
        case ChordQuality::major:
            break;
        case ChordQuality::minor:
            out += "m";
            break;
        case ChordQuality::dominant7:
            out += "7";
            break;
        case ChordQuality::major7:
            out += "maj7";
            break;
        case ChordQuality::minor7:
            out += "m7";
            break;
        case ChordQuality::diminished:
            out += "dim";
            break;
        case ChordQuality::augmented:
            out += "aug";
            break;
        case ChordQuality::unknown:
            out += suffix;
            break;
    }
    return out;
}

std::vector<int> chord_tones(const ChordSymbol& chord) {
    std::vector<int> intervals;
    switch (chord.quality) {
        case ChordQuality::major:
            intervals = {0, 4, 7};
            break;
        case ChordQuality::minor:
            intervals = {0, 3, 7};
            break;
        case ChordQuality::dominant7:
            intervals = {0, 4, 7, 10};
            break;
        case ChordQuality::major7:
            intervals = {0, 4, 7, 11};
            break;
        case ChordQuality::minor7:
            intervals = {0, 3, 7, 10};
            break;
        case ChordQuality::diminished:
            intervals = {0, 3, 6};
            break;
        case ChordQuality::augmented:
            intervals = {0, 4, 8};
            break;
        case ChordQuality::unknown:
            return {};
    }
    const int root = abc::pitch_class(chord.root, accidental_shift(chord.accidental));
    for (auto& i : intervals) i = (root + i) % 12;
    return intervals;
}

std::vector<Rational> expanded_bar_units(const Tune& tune, const VoicePart& voice) {
    const auto per_bar = tune.units_per_bar();
    std::vector<Rational> out;
    for (const auto& bar : voice.bars) {
        const auto u = measure(bar, per_bar);
        if (u.multibar > 0 && u.actual == u.expected) {
            for (int i = 0; i < u.multibar; ++i) out.push_back(per_bar);
        } else {
            out.push_back(u.actual);
        }
    }
    return out;
}

std::vector<BarAnomaly> check_bar_durations(const Tune& tune) {
    const auto per_bar = tune.units_per_bar();
    std::vector<BarAnomaly> out;
    for (const auto& voice : tune.voices) {
        for (std::size_t b = 0; b < voice.bars.size(); ++b) {
            const auto& bar = voice.bars[b];
            const auto u = measure(bar, per_bar);
            BarAnomaly a{voice.voice_id, b, u.expected, u.actual};
            if (bar.events.empty()) {
                a.kind = AnomalyKind::empty_bar;
            } else if (u.actual < u.expected) {
                a.kind = AnomalyKind::short_bar;
                a.tolerated = b == 0 || bar.right_delim == RightDelim::repeat_end ||
                              bar.right_delim == RightDelim::final_bar;
            } else if (u.actual > u.expected) {
                a.kind = AnomalyKind::long_bar;
            } else {
                continue;
            }
            out.push_back(std::move(a));
        }
    }
    return out;
}

AlignmentReport check_voice_alignment(const Tune& tune) {
    AlignmentReport report;
    std::vector<std::vector<Rational>> per_voice;
    for (const auto& voice : tune.voices) {
        per_voice.push_back(expanded_bar_units(tune, voice));
        report.per_voice_bar_counts[voice.voice_id] = per_voice.back().size();
    }
    for (std::size_t v = 1; v < per_voice.size(); ++v) {
        if (per_voice[v] != per_voice.front()) report.aligned = false;
    }
    return report;
}

std::vector<RangeViolation> check_pitch_ranges(const Tune& tune, const RangeTable& ranges, Warnings* warnings) {
    std::vector<RangeViolation> out;
    for (const auto& voice : tune.voices) {
        std::optional<PitchRange> range;
        std::string instrument;
        if (voice.name && (range = ranges.by_name(*voice.name))) {
            instrument = canonical_instrument(*voice.name);
        } else if (voice.midi_program && (range = ranges.by_program(*voice.midi_program))) {
            instrument = "program " + std::to_string(*voice.midi_program);
        } else if ((range = ranges.by_name(voice.voice_id))) {
            instrument = canonical_instrument(voice.voice_id);
        }
        if (!range) {
            if (warnings) warnings->push_back("no pitch range for voice " + voice.voice_id + ", range check skipped");
            continue;
        }
        for (std::size_t b = 0; b < voice.bars.size(); ++b) {
            std::vector<std::vector<int>> midis;
            try {
                midis = abc::sounding_midi(voice.bars[b], tune.header.key);
            } catch (const abc::RangeError& e) {
                if (warnings) warnings->push_back("voice " + voice.voice_id + " bar " + std::to_string(b) + ": " + e.what());
                continue;
            }
            for (std::size_t e = 0; e < midis.size(); ++e) {
                for (int midi : midis[e]) {
                    if (!range->contains(midi)) {
                        out.push_back({voice.voice_id, b, e, midi, range->low_midi, range->high_midi, instrument});
                    }
                }
            }
        }
    }
    return out;
}

KeyReport key_adherence(const Tune& tune) {
    KeyReport report;
    const auto scale = diatonic_set(tune.header.key);
    report.applicable = !scale.empty();
    if (!report.applicable) return report;
    for (const auto& voice : tune.voices) {
        for (const auto& bar : voice.bars) {
            std::vector<std::vector<int>> midis;
            try {
                midis = abc::sounding_midi(bar, tune.header.key);
            } catch (const abc::RangeError&) {
                continue;
            }
            for (const auto& event : midis) {
                for (int midi : event) {
                    ++report.total_pitched;
                    if (!scale.contains(midi % 12)) ++report.out_of_key_count;
                }
            }
        }
    }
    return report;
}

std::vector<std::optional<ChordSymbol>> extract_chord_progression(const Tune& tune, Warnings* warnings) {
    std::vector<std::optional<ChordSymbol>> out;
    const auto* voice = chord_voice(tune);
    if (!voice) return out;
    for (const auto& bar : voice->bars) {
        std::optional<ChordSymbol> first;
        for (const auto& ev : bar.events) {
            if (!ev.chord_symbol) continue;
            auto chord = parse_chord_symbol(*ev.chord_symbol);
            if (!chord) {
                if (warnings) warnings->push_back("annotation is not a chord symbol: \"" + *ev.chord_symbol + "\"");
                continue;
            }
            if (!chord->known() && warnings) {
                warnings->push_back("unknown chord quality kept verbatim: \"" + *ev.chord_symbol + "\"");
            }
            first = std::move(chord);
            break;
        }
        out.push_back(std::move(first));
    }
    return out;
}

std::vector<PhraseEnding> find_phrase_endings(const Tune& tune) {
    std::vector<PhraseEnding> out;
    const auto scale = diatonic_set(tune.header.key);
    const auto progression = extract_chord_progression(tune);

    for (const auto& voice : tune.voices) {
        struct Slot {
            std::size_t bar;
            std::size_t event;
            const NoteEvent* ev;
            std::vector<int> midis;
        };
        std::vector<Slot> slots;
        std::vector<Rational> bar_median;
        for (std::size_t b = 0; b < voice.bars.size(); ++b) {
            const auto& bar = voice.bars[b];
            std::vector<std::vector<int>> midis(bar.events.size());
            try {
                midis = abc::sounding_midi(bar, tune.header.key);
            } catch (const abc::RangeError&) {
            }
            std::vector<Rational> durations;
            for (std::size_t e = 0; e < bar.events.size(); ++e) {
                if (!std::holds_alternative<MultibarRest>(bar.events[e].kind)) {
                    durations.push_back(bar.events[e].scaled_duration());
                }
                slots.push_back({b, e, &bar.events[e], midis[e]});
            }
            bar_median.push_back(median(std::move(durations)));
        }

        std::optional<ChordSymbol> active;
        std::size_t last_pitched = slots.size();
        for (std::size_t s = 0; s < slots.size(); ++s) {
            if (slots[s].ev->is_pitched()) last_pitched = s;
        }
        for (std::size_t s = 0; s < slots.size(); ++s) {
            const auto& slot = slots[s];
            if (slot.ev->chord_symbol) {
                if (auto c = parse_chord_symbol(*slot.ev->chord_symbol)) active = c;
            }
            if (!slot.ev->is_pitched() || slot.midis.empty()) continue;
            const bool long_note = slot.ev->scaled_duration() >= bar_median[slot.bar] * 2;
            const bool before_rest = s + 1 < slots.size() && !slots[s + 1].ev->is_pitched();
            // The last note of a voice closes its final phrase.
            const bool final_note = s == last_pitched;
            if (!long_note && !before_rest && !final_note) continue;

            const int top = *std::max_element(slot.midis.begin(), slot.midis.end());
            std::optional<ChordSymbol> chord = active;
            if (!chord && slot.bar < progression.size()) chord = progression[slot.bar];
            bool member = scale.contains(top % 12);
            if (!member && chord) {
                const auto tones = chord_tones(*chord);
                member = std::find(tones.begin(), tones.end(), top % 12) != tones.end();
            }
            out.push_back({voice.voice_id, slot.bar, slot.event, top, member});
        }
    }
    return out;
}

bool ValidationReport::has_problems() const {
    const bool bar_problem = std::any_of(bar_anomalies.begin(), bar_anomalies.end(),
                                         [](const BarAnomaly& a) { return !a.tolerated; });
    return bar_problem || !alignment.aligned || !range_violations.empty();
}

ValidationReport validate(const Tune& tune, const prompts::PromptAttributes* attrs, const RangeTable& ranges) {
    ValidationReport report;
    report.bar_anomalies = check_bar_durations(tune);
    report.alignment = check_voice_alignment(tune);
    report.range_violations = check_pitch_ranges(tune, ranges, &report.warnings);
    report.key_report = key_adherence(tune);
    report.phrase_endings = find_phrase_endings(tune);
    for (const auto& [id, count] : report.alignment.per_voice_bar_counts) {
        report.bars_found = std::max(report.bars_found, count);
    }
    const auto progression = extract_chord_progression(tune, &report.warnings);

    if (!attrs) return report;

    if (attrs->key) {
        KeyMatch km;
        km.found = abc::key_to_string(tune.header.key);
        if (auto requested = abc::parse_key_text(*attrs->key)) {
            km.requested = abc::key_to_string(*requested);
            km.matched = *requested == tune.header.key;
        } else {
            km.requested = *attrs->key;
            report.warnings.push_back("requested key not understood: " + *attrs->key);
        }
        report.key_match = std::move(km);
    }
    report.bars_requested = attrs->bars;

    if (attrs->chord_progression && !attrs->chord_progression->empty()) {
        const auto& requested = *attrs->chord_progression;
        ChordMatch cm;
        for (std::size_t i = 0; i < progression.size(); ++i) {
            cm.extracted.push_back(progression[i] ? progression[i]->normalized() : std::string{});
            cm.requested.push_back(normalize_requested(requested[i % requested.size()]));
            if (!cm.extracted.back().empty() && cm.extracted.back() == cm.requested.back()) ++cm.matched_positions;
        }
        report.chord_match = std::move(cm);
    }
    return report;
}

}  // namespace composerx::analysis
