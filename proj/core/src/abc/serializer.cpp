#include "composerx/abc.hpp"

#include <sstream>

namespace composerx::abc {

namespace {

constexpr std::size_t kBarsPerLine = 4;

void write_pitch(std::ostream& out, const Pitch& p) {
    out << to_string(p.accidental);
    if (p.octave >= 1) {
        out << static_cast<char>(p.letter - 'A' + 'a');
        for (int i = 1; i < p.octave; ++i) out << '\'';
    } else {
        out << p.letter;
        for (int i = 0; i < -p.octave; ++i) out << ',';
    }
}

void write_event(std::ostream& out, const NoteEvent& ev) {
    if (ev.tuplet_start > 0) out << '(' << ev.tuplet_start;
    if (ev.chord_symbol) out << '"' << *ev.chord_symbol << '"';
    if (const auto* p = std::get_if<Pitch>(&ev.kind)) {
        write_pitch(out, *p);
    } else if (const auto* c = std::get_if<Chord>(&ev.kind)) {
        out << '[';
        for (const auto& p : *c) write_pitch(out, p);
        out << ']';
    } else if (std::holds_alternative<Rest>(ev.kind)) {
        out << 'z';
    } else {
        const auto& m = std::get<MultibarRest>(ev.kind);
        out << 'Z';
        if (m.count != 1) out << m.count;
        return;
    }
    out << duration_to_string(ev.duration);
    if (ev.tie_to_next) out << '-';
}

std::string_view right_token(RightDelim d) {
    switch (d) {
        case RightDelim::repeat_end:
            return ":|";
        case RightDelim::double_bar:
            return "||";
        case RightDelim::final_bar:
            return "|]";
        case RightDelim::plain:
            break;
    }
    return "|";
}

void write_bars(std::ostream& out, const std::vector<Bar>& bars) {
    std::size_t on_line = 0;
    for (std::size_t b = 0; b < bars.size(); ++b) {
        const auto& bar = bars[b];
        // A repeat start always begins a line; a newline before "|:" merges with the previous bar line.
        const bool wrap = b > 0 && (bar.left_delim == LeftDelim::repeat_start ||
                                    (on_line >= kBarsPerLine && !bar.events.empty()));
        if (wrap) {
            out << '\n';
            on_line = 0;
        }
        if (bar.left_delim == LeftDelim::repeat_start) {
            out << "|:";
        } else if (on_line == 0 && bar.events.empty()) {
            // An empty bar needs a bar line on its left on the same line.
            out << '|';
        }
        if (bar.events.empty()) {
            out << ' ';
        } else {
            for (std::size_t e = 0; e < bar.events.size(); ++e) {
                if (e > 0) out << ' ';
                write_event(out, bar.events[e]);
            }
        }
        out << right_token(bar.right_delim);
        ++on_line;
    }
    if (!bars.empty()) out << '\n';
}

}  // namespace

std::string serialize_tune(const Tune& tune) {
    std::ostringstream out;
    const auto& h = tune.header;
    out << "X:" << h.reference_number << '\n';
    out << "T:" << h.title << '\n';
    if (h.composer) out << "C:" << *h.composer << '\n';
    out << "M:" << h.meter.numerator << '/' << h.meter.denominator << '\n';
    out << "L:" << h.unit_note_length.numerator() << '/' << h.unit_note_length.denominator() << '\n';
    if (h.tempo) out << "Q:" << *h.tempo << '\n';
    for (const auto& f : h.extra_fields) out << f << '\n';
    out << "K:" << key_to_string(h.key) << '\n';

    const bool implicit_single = tune.voices.size() == 1 && tune.voices[0].voice_id == "1" &&
                                 !tune.voices[0].name && !tune.voices[0].midi_program &&
                                 tune.voices[0].extra_properties.empty();
    for (const auto& v : tune.voices) {
        if (!implicit_single) {
            out << "V:" << v.voice_id;
            if (v.name) out << " name=\"" << *v.name << '"';
            if (!v.extra_properties.empty()) out << ' ' << v.extra_properties;
            out << '\n';
            if (v.midi_program) out << "%%MIDI program " << *v.midi_program << '\n';
        }
        write_bars(out, v.bars);
    }
    return out.str();
}

}  // namespace composerx::abc
