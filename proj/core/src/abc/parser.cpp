#include "composerx/abc.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <memory>

namespace composerx::abc {

ParseError::ParseError(std::size_t line, std::size_t column, std::string expected, std::string found)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": expected " + expected + ", found " + (found.empty() ? "end of input" : "'" + found + "'")),
      line_(line),
      column_(column),
      expected_(std::move(expected)),
      found_(std::move(found)) {}

namespace {

template <typename Kind>
NoteEvent event_of(Kind kind) {
    NoteEvent ev;
    ev.kind = std::move(kind);
    return ev;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool is_field_line(std::string_view line) {
    if (line.size() < 2 || !std::isalpha(static_cast<unsigned char>(line[0])) || line[1] != ':') return false;
    // "A:|" is a note followed by a repeat sign, not a field.
    return line.size() == 2 || (line[2] != '|' && line[2] != ':');
}

std::optional<int> to_int(std::string_view s) {
    s = trim(s);
    int value = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (s.empty() || ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

std::optional<Rational> to_fraction(std::string_view s) {
    s = trim(s);
    const auto slash = s.find('/');
    if (slash == std::string_view::npos) {
        auto n = to_int(s);
        if (!n || *n <= 0) return std::nullopt;
        return Rational(*n);
    }
    auto n = to_int(s.substr(0, slash));
    auto d = to_int(s.substr(slash + 1));
    if (!n || !d || *n <= 0 || *d <= 0) return std::nullopt;
    return Rational(*n, *d);
}

// A bar-line token: what it closes and what it opens.
struct BarToken {
    RightDelim closes = RightDelim::plain;
    LeftDelim opens = LeftDelim::plain;
    bool pure_repeat_start = false;  // exactly "|:"
};

struct VoiceBuilder {
    VoicePart part;
    Bar pending;
    bool saw_bar_token = false;
    bool gap_has_space = false;
    bool gap_has_newline = false;
    std::size_t tuplet_remaining = 0;
    Rational tuplet_scale{1};
    std::optional<std::string> pending_chord_symbol;
    std::size_t chord_symbol_line = 0;
    std::size_t chord_symbol_col = 0;
};

class Parser {
public:
    Parser(std::string_view text, Warnings* warnings) : warnings_(warnings) {
        std::size_t start = 0;
        while (start <= text.size()) {
            auto end = text.find('\n', start);
            if (end == std::string_view::npos) end = text.size();
            auto line = text.substr(start, end - start);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            lines_.push_back(line);
            if (end == text.size()) break;
            start = end + 1;
        }
    }

    Tune run() {
        std::size_t i = parse_header();
        for (; i < lines_.size(); ++i) parse_body_line(i);
        return finish();
    }

private:
    [[noreturn]] void fail(std::size_t line_idx, std::size_t col, std::string expected, std::string found) const {
        throw ParseError(line_idx + 1, col + 1, std::move(expected), std::move(found));
    }

    void warn(std::size_t line_idx, const std::string& msg) {
        if (warnings_) warnings_->push_back("line " + std::to_string(line_idx + 1) + ": " + msg);
    }

    std::size_t parse_header() {
        bool have_x = false;
        bool have_t = false;
        bool have_m = false;
        bool have_l = false;
        for (std::size_t i = 0; i < lines_.size(); ++i) {
            const auto raw = lines_[i];
            const auto line = trim(raw);
            if (line.empty()) continue;
            if (line.front() == '%') {
                header_directive(i, line);
                continue;
            }
            if (!is_field_line(line)) {
                std::string missing;
                for (auto [have, name] : {std::pair{have_x, "X:"}, {have_m, "M:"}, {have_l, "L:"}}) {
                    if (!have) missing += std::string(missing.empty() ? "" : ", ") + name;
                }
                missing += std::string(missing.empty() ? "" : ", ") + "K:";
                fail(i, 0, "mandatory header " + missing, std::string(line));
            }
            const char field = line[0];
            const auto value = trim(line.substr(2));
            switch (field) {
                case 'X': {
                    auto n = to_int(value);
                    if (!n || *n <= 0) fail(i, 2, "positive reference number", std::string(value));
                    tune_.header.reference_number = *n;
                    have_x = true;
                    break;
                }
                case 'T':
                    if (have_t) {
                        tune_.header.extra_fields.emplace_back(line);
                    } else {
                        tune_.header.title = std::string(value);
                        have_t = true;
                    }
                    break;
                case 'C':
                    if (tune_.header.composer) {
                        tune_.header.extra_fields.emplace_back(line);
                    } else {
                        tune_.header.composer = std::string(value);
                    }
                    break;
                case 'M':
                    tune_.header.meter = parse_meter(i, value);
                    have_m = true;
                    break;
                case 'L': {
                    auto l = to_fraction(value);
                    if (!l) fail(i, 2, "unit note length n/d", std::string(value));
                    tune_.header.unit_note_length = *l;
                    have_l = true;
                    break;
                }
                case 'Q':
                    tune_.header.tempo = std::string(value);
                    break;
                case 'V':
                    switch_voice(i, value);
                    break;
                case 'K': {
                    tune_.header.key = parse_key(i, value);
                    if (!have_x) fail(i, 0, "mandatory header X:", std::string(line));
                    if (!have_m) fail(i, 0, "mandatory header M:", std::string(line));
                    if (!have_l) fail(i, 0, "mandatory header L:", std::string(line));
                    if (!have_t) warn(i, "missing T: field, title left empty");
                    current_ = nullptr;
                    return i + 1;
                }
                default:
                    tune_.header.extra_fields.emplace_back(line);
                    warn(i, "unrecognized header field preserved: " + std::string(line));
                    break;
            }
        }
        fail(lines_.empty() ? 0 : lines_.size() - 1, 0, "mandatory header K:", "");
    }

    Meter parse_meter(std::size_t i, std::string_view value) {
        if (value == "C") return {4, 4};
        if (value == "C|") return {2, 2};
        const auto slash = value.find('/');
        if (slash != std::string_view::npos) {
            auto n = to_int(value.substr(0, slash));
            auto d = to_int(value.substr(slash + 1));
            if (n && d && *n > 0 && *d > 0) return {*n, *d};
        }
        fail(i, 2, "meter n/d, C or C|", std::string(value));
    }

    Key parse_key(std::size_t i, std::string_view value) {
        std::string kept;
        std::size_t pos = 0;
        const std::string v(value);
        while (pos < v.size()) {
            auto end = v.find(' ', pos);
            if (end == std::string::npos) end = v.size();
            auto token = std::string_view(v).substr(pos, end - pos);
            if (token.find('=') != std::string_view::npos) {
                warn(i, "ignored key property: " + std::string(token));
            } else if (!token.empty()) {
                kept += (kept.empty() ? "" : " ") + std::string(token);
            }
            pos = end + 1;
        }
        auto key = parse_key_text(kept);
        if (!key) fail(i, 2, "key (tonic A-G with optional mode)", std::string(value));
        if (key->mode == Mode::other) warn(i, "unrecognized key mode stored verbatim: " + key->mode_text);
        return *key;
    }

    void header_directive(std::size_t i, std::string_view line) {
        if (line.rfind("%%MIDI", 0) == 0) {
            midi_directive(i, line);
        } else if (line.rfind("%%", 0) == 0) {
            warn(i, "ignored directive: " + std::string(line));
        }
    }

    void midi_directive(std::size_t i, std::string_view line) {
        auto rest = trim(line.substr(6));
        if (rest.rfind("program", 0) != 0) {
            warn(i, "ignored MIDI directive: " + std::string(line));
            return;
        }
        rest = trim(rest.substr(7));
        std::vector<std::string_view> args;
        while (!rest.empty()) {
            auto end = rest.find_first_of(" \t");
            args.push_back(rest.substr(0, end));
            if (end == std::string_view::npos) break;
            rest = trim(rest.substr(end));
        }
        if (args.empty() || args.size() > 2) fail(i, 0, "%%MIDI program [voice] p", std::string(line));
        auto program = to_int(args.back());
        if (!program || *program < 0 || *program > 127) {
            fail(i, static_cast<std::size_t>(args.back().data() - lines_[i].data()), "MIDI program in [0,127]",
                 std::string(args.back()));
        }
        if (args.size() == 2) {
            pending_programs_[std::string(args[0])] = {*program, i};
            if (auto* vb = find_builder(args[0])) set_program(*vb, *program, i);
            return;
        }
        set_program(current_or_default(), *program, i);
    }

    void set_program(VoiceBuilder& vb, int program, std::size_t i) {
        if (vb.part.midi_program && *vb.part.midi_program != program) {
            warn(i, "multiple MIDI programs for voice " + vb.part.voice_id + ", last one wins");
        }
        vb.part.midi_program = program;
    }

    VoiceBuilder* find_builder(std::string_view id) {
        for (auto& vb : voices_) {
            if (vb->part.voice_id == id) return vb.get();
        }
        return nullptr;
    }

    VoiceBuilder& create_voice(std::string id) {
        voices_.push_back(std::make_unique<VoiceBuilder>());
        voices_.back()->part.voice_id = std::move(id);
        if (auto it = pending_programs_.find(voices_.back()->part.voice_id); it != pending_programs_.end()) {
            voices_.back()->part.midi_program = it->second.first;
        }
        return *voices_.back();
    }

    VoiceBuilder& current_or_default() {
        if (current_) return *current_;
        if (auto* one = find_builder("1")) {
            current_ = one;
        } else if (!voices_.empty()) {
            current_ = voices_.front().get();
        } else {
            current_ = &create_voice("1");
        }
        return *current_;
    }

    void switch_voice(std::size_t i, std::string_view value) {
        value = trim(value);
        const auto id_end = value.find_first_of(" \t");
        const auto id = value.substr(0, id_end);
        if (id.empty()) fail(i, 2, "voice id", "");
        auto* vb = find_builder(id);
        if (!vb) vb = &create_voice(std::string(id));
        current_ = vb;

        auto props = id_end == std::string_view::npos ? std::string_view{} : trim(value.substr(id_end));
        std::string extra;
        while (!props.empty()) {
            std::string_view token;
            const auto eq = props.find('=');
            const auto ws = props.find_first_of(" \t");
            if (eq != std::string_view::npos && (ws == std::string_view::npos || eq < ws) && eq + 1 < props.size() &&
                props[eq + 1] == '"') {
                const auto close = props.find('"', eq + 2);
                if (close == std::string_view::npos) fail(i, 0, "closing '\"' in voice property", std::string(props));
                token = props.substr(0, close + 1);
            } else {
                token = props.substr(0, ws);
            }
            const auto key = token.substr(0, token.find('='));
            if ((key == "name" || key == "nm") && token.find('=') != std::string_view::npos) {
                auto v = token.substr(token.find('=') + 1);
                if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
                vb->part.name = std::string(v);
            } else {
                extra += (extra.empty() ? "" : " ") + std::string(token);
            }
            props = token.size() >= props.size() ? std::string_view{} : trim(props.substr(token.size()));
        }
        if (!extra.empty()) vb->part.extra_properties = extra;
    }

    void parse_body_line(std::size_t i) {
        const auto line = lines_[i];
        for (auto& vb : voices_) vb->gap_has_newline = true;
        const auto trimmed = trim(line);
        if (trimmed.empty()) return;
        if (trimmed.front() == '%') {
            header_directive(i, trimmed);
            return;
        }
        if (is_field_line(trimmed)) {
            const char field = trimmed[0];
            const auto value = trim(trimmed.substr(2));
            if (field == 'V') {
                switch_voice(i, value);
            } else if (field == 'w' || field == 'W') {
                fail(i, 0, "music line (lyrics are not supported)", std::string(trimmed));
            } else if (std::string_view("XTCMLKQ").find(field) != std::string_view::npos) {
                fail(i, 0, "music line (mid-tune header changes are not supported)", std::string(trimmed));
            } else {
                tune_.header.extra_fields.emplace_back(trimmed);
                warn(i, "unrecognized field preserved: " + std::string(trimmed));
            }
            return;
        }
        parse_music(i, line);
    }

    // Reads an ABC duration suffix at line[pos]; returns 1 if none.
    Rational read_duration(std::size_t i, std::string_view line, std::size_t& pos) {
        const std::size_t start = pos;
        auto read_digits = [&]() -> std::optional<std::int64_t> {
            std::size_t b = pos;
            while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) ++pos;
            if (b == pos) return std::nullopt;
            std::int64_t v = 0;
            std::from_chars(line.data() + b, line.data() + pos, v);
            return v;
        };
        std::int64_t num = read_digits().value_or(1);
        std::int64_t den = 1;
        if (pos < line.size() && line[pos] == '/') {
            ++pos;
            if (auto d = read_digits()) {
                den = *d;
            } else {
                den = 2;
                while (pos < line.size() && line[pos] == '/') {
                    den *= 2;
                    ++pos;
                }
            }
            if (pos < line.size() && line[pos] == '/') {
                fail(i, pos, "duration n, /, /n or n/m", std::string(line.substr(start, pos - start + 1)));
            }
        }
        if (num <= 0 || den <= 0) {
            fail(i, start, "positive duration", std::string(line.substr(start, pos - start)));
        }
        return Rational(num, den);
    }

    // Accidental, letter and octave marks starting at line[pos].
    std::optional<Pitch> read_pitch(std::size_t i, std::string_view line, std::size_t& pos) {
        const std::size_t start = pos;
        Pitch p;
        if (pos < line.size() && (line[pos] == '^' || line[pos] == '_' || line[pos] == '=')) {
            p.accidental = line[pos] == '^' ? Accidental::sharp
                           : line[pos] == '_' ? Accidental::flat
                                              : Accidental::natural;
            ++pos;
            if (pos < line.size() && (line[pos] == '^' || line[pos] == '_')) {
                fail(i, pos, "note letter (double accidentals are not supported)", std::string(1, line[pos]));
            }
        }
        if (pos >= line.size()) fail(i, pos, "note letter A-G or a-g", "");
        const char c = line[pos];
        if (c >= 'A' && c <= 'G') {
            p.letter = c;
            p.octave = 0;
        } else if (c >= 'a' && c <= 'g') {
            p.letter = static_cast<char>(c - 'a' + 'A');
            p.octave = 1;
        } else {
            if (p.accidental == Accidental::none) return std::nullopt;
            fail(i, pos, "note letter A-G or a-g", std::string(1, c));
        }
        ++pos;
        while (pos < line.size() && (line[pos] == '\'' || line[pos] == ',')) {
            p.octave += line[pos] == '\'' ? 1 : -1;
            ++pos;
        }
        try {
            midi_number(p);
        } catch (const RangeError&) {
            fail(i, start, "pitch within MIDI range 0-127", std::string(line.substr(start, pos - start)));
        }
        return p;
    }

    void push_event(std::size_t i, std::size_t col, VoiceBuilder& vb, NoteEvent ev) {
        if (vb.pending_chord_symbol) {
            ev.chord_symbol = std::move(vb.pending_chord_symbol);
            vb.pending_chord_symbol.reset();
        }
        if (vb.tuplet_remaining > 0) {
            if (std::holds_alternative<MultibarRest>(ev.kind)) fail(i, col, "note or rest inside tuplet", "Z");
            ev.tuplet_scale = vb.tuplet_scale;
            --vb.tuplet_remaining;
        }
        vb.pending.events.push_back(std::move(ev));
        vb.gap_has_space = false;
        vb.gap_has_newline = false;
    }

    void close_bar(VoiceBuilder& vb, const BarToken& tok) {
        if (vb.pending_chord_symbol) {
            fail(vb.chord_symbol_line, vb.chord_symbol_col, "note or rest after chord symbol", "|");
        }
        if (!vb.pending.events.empty()) {
            vb.pending.right_delim = tok.closes;
            vb.part.bars.push_back(std::move(vb.pending));
        } else if (vb.saw_bar_token && !vb.gap_has_newline && vb.gap_has_space && !tok.pure_repeat_start) {
            // Whitespace between two bar lines on one line: an explicitly empty bar.
            vb.pending.right_delim = tok.closes;
            vb.part.bars.push_back(std::move(vb.pending));
        } else {
            // Adjacent bar lines (or one at the start of a line) merge.
            if (tok.closes != RightDelim::plain && !vb.part.bars.empty()) {
                vb.part.bars.back().right_delim = tok.closes;
            }
            if (tok.opens == LeftDelim::repeat_start) vb.pending.left_delim = LeftDelim::repeat_start;
            vb.saw_bar_token = true;
            vb.gap_has_space = false;
            vb.gap_has_newline = false;
            return;
        }
        vb.pending = Bar{};
        vb.pending.left_delim = tok.opens;
        vb.saw_bar_token = true;
        vb.gap_has_space = false;
        vb.gap_has_newline = false;
    }

    std::optional<BarToken> read_bar_token(std::string_view line, std::size_t& pos) {
        auto starts = [&](std::string_view s) { return line.substr(pos).rfind(s, 0) == 0; };
        BarToken t;
        if (starts(":|:")) {
            pos += 3;
            t = {RightDelim::repeat_end, LeftDelim::repeat_start};
        } else if (starts("::")) {
            pos += 2;
            t = {RightDelim::repeat_end, LeftDelim::repeat_start};
        } else if (starts(":|")) {
            pos += 2;
            t = {RightDelim::repeat_end, LeftDelim::plain};
        } else if (starts("|:")) {
            pos += 2;
            t = {RightDelim::plain, LeftDelim::repeat_start, true};
        } else if (starts("||")) {
            pos += 2;
            t = {RightDelim::double_bar, LeftDelim::plain};
        } else if (starts("|]")) {
            pos += 2;
            t = {RightDelim::final_bar, LeftDelim::plain};
        } else if (starts("|")) {
            pos += 1;
        } else {
            return std::nullopt;
        }
        return t;
    }

    void parse_music(std::size_t i, std::string_view line) {
        auto& vb0 = current_or_default();
        VoiceBuilder* vb = &vb0;
        std::size_t pos = 0;
        while (pos < line.size()) {
            const char c = line[pos];
            const std::size_t col = pos;
            if (c == ' ' || c == '\t') {
                vb->gap_has_space = true;
                ++pos;
                continue;
            }
            if (c == '%') break;
            if (c == '\\' && trim(line.substr(pos + 1)).empty()) break;
            if (c == '|' || c == ':') {
                auto tok = read_bar_token(line, pos);
                if (!tok) fail(i, col, "bar line", std::string(1, c));
                if (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) {
                    fail(i, pos, "music (numbered repeat endings are not supported)", std::string(1, line[pos]));
                }
                close_bar(*vb, *tok);
                continue;
            }
            if (c == '"') {
                const auto close = line.find('"', pos + 1);
                if (close == std::string_view::npos) fail(i, col, "closing '\"' of chord symbol", "");
                if (vb->pending_chord_symbol) fail(i, col, "note or rest after chord symbol", "\"");
                vb->pending_chord_symbol = std::string(line.substr(pos + 1, close - pos - 1));
                vb->chord_symbol_line = i;
                vb->chord_symbol_col = col;
                pos = close + 1;
                continue;
            }
            if (c == '[') {
                if (pos + 2 < line.size() && std::isalpha(static_cast<unsigned char>(line[pos + 1])) &&
                    line[pos + 2] == ':') {
                    const auto close = line.find(']', pos);
                    if (close == std::string_view::npos) fail(i, col, "']' closing inline field", "");
                    if (line[pos + 1] != 'V') {
                        fail(i, col, "inline voice field [V:id]", std::string(line.substr(pos, close - pos + 1)));
                    }
                    switch_voice(i, line.substr(pos + 3, close - pos - 3));
                    vb = current_;
                    pos = close + 1;
                    continue;
                }
                parse_chord(i, line, pos, *vb);
                continue;
            }
            if (c == '(') {
                if (pos + 1 < line.size() && line[pos + 1] >= '2' && line[pos + 1] <= '9') {
                    if (vb->tuplet_remaining > 0) fail(i, col, "tuplet notes", "(");
                    const int p = line[pos + 1] - '0';
                    vb->tuplet_remaining = static_cast<std::size_t>(p);
                    vb->tuplet_scale = tuplet_scale_for(p, tune_.header.meter);
                    pos += 2;
                    if (pos < line.size() && line[pos] == ':') {
                        fail(i, pos, "tuplet (p only; (p:q:r is not supported)", ":");
                    }
                    pending_tuplet_start_ = p;
                    pending_tuplet_voice_ = vb;
                    continue;
                }
                fail(i, col, "tuplet (2-(9 (slurs are not supported)", "(");
            }
            if (c == '-') fail(i, col, "note before tie", "-");
            if (c == 'z') {
                ++pos;
                NoteEvent ev = event_of(Rest{});
                ev.duration = read_duration(i, line, pos);
                if (pos < line.size() && line[pos] == '-') fail(i, pos, "note before tie", "-");
                emit(i, col, *vb, std::move(ev));
                continue;
            }
            if (c == 'Z') {
                ++pos;
                std::size_t b = pos;
                while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) ++pos;
                int count = 1;
                if (b != pos) {
                    count = *to_int(line.substr(b, pos - b));
                    if (count <= 0) fail(i, b, "positive bar count", std::string(line.substr(b, pos - b)));
                }
                if (pos < line.size() && line[pos] == '/') fail(i, pos, "whole-bar count after Z", "/");
                emit(i, col, *vb, event_of(MultibarRest{count}));
                continue;
            }
            if (c == '>' || c == '<') fail(i, col, "note (broken rhythm is not supported)", std::string(1, c));
            if (c == '{') fail(i, col, "note (grace notes are not supported)", "{");
            if (c == '!' || c == '+' || c == '.' || c == '~') {
                fail(i, col, "note (decorations are not supported)", std::string(1, c));
            }
            auto pitch = read_pitch(i, line, pos);
            if (!pitch) fail(i, col, "note letter A-G or a-g", std::string(1, c));
            NoteEvent ev = event_of(*pitch);
            ev.duration = read_duration(i, line, pos);
            if (pos < line.size() && line[pos] == '-') {
                ev.tie_to_next = true;
                ++pos;
            }
            emit(i, col, *vb, std::move(ev));
        }
    }

    void emit(std::size_t i, std::size_t col, VoiceBuilder& vb, NoteEvent ev) {
        if (pending_tuplet_voice_ == &vb && pending_tuplet_start_ > 0) {
            ev.tuplet_start = pending_tuplet_start_;
            pending_tuplet_start_ = 0;
            pending_tuplet_voice_ = nullptr;
        }
        push_event(i, col, vb, std::move(ev));
    }

    void parse_chord(std::size_t i, std::string_view line, std::size_t& pos, VoiceBuilder& vb) {
        const std::size_t col = pos;
        ++pos;
        Chord pitches;
        std::optional<Rational> inner;
        while (true) {
            if (pos >= line.size()) fail(i, col, "']' closing chord", "");
            if (line[pos] == ']') break;
            if (line[pos] == ' ') {
                ++pos;
                continue;
            }
            const std::size_t note_col = pos;
            auto p = read_pitch(i, line, pos);
            if (!p) fail(i, pos, "note letter in chord", std::string(1, line[pos]));
            const auto d = read_duration(i, line, pos);
            if (inner && *inner != d) fail(i, note_col, "equal note lengths inside chord", std::string(1, line[note_col]));
            inner = d;
            if (std::find(pitches.begin(), pitches.end(), *p) != pitches.end()) {
                fail(i, note_col, "distinct chord notes", std::string(line.substr(note_col, pos - note_col)));
            }
            pitches.push_back(*p);
        }
        ++pos;
        if (pitches.empty()) fail(i, col, "note inside chord", "]");
        NoteEvent ev = event_of(std::move(pitches));
        ev.duration = inner.value_or(Rational(1)) * read_duration(i, line, pos);
        if (pos < line.size() && line[pos] == '-') {
            ev.tie_to_next = true;
            ++pos;
        }
        emit(i, col, vb, std::move(ev));
    }

    Tune finish() {
        for (auto& vb : voices_) {
            if (vb->pending_chord_symbol) {
                fail(vb->chord_symbol_line, vb->chord_symbol_col, "note or rest after chord symbol", "");
            }
            if (vb->tuplet_remaining > 0) {
                fail(lines_.size() - 1, 0, "remaining tuplet notes in voice " + vb->part.voice_id, "");
            }
            if (!vb->pending.events.empty()) {
                vb->pending.right_delim = RightDelim::plain;
                vb->part.bars.push_back(std::move(vb->pending));
            }
        }
        for (const auto& [id, program] : pending_programs_) {
            if (!find_builder(id)) warn(program.second, "MIDI program for undeclared voice " + id);
        }
        if (voices_.empty()) create_voice("1");
        for (auto& vb : voices_) tune_.voices.push_back(std::move(vb->part));
        return std::move(tune_);
    }

    std::vector<std::string_view> lines_;
    Warnings* warnings_;
    Tune tune_;
    std::vector<std::unique_ptr<VoiceBuilder>> voices_;
    VoiceBuilder* current_ = nullptr;
    std::map<std::string, std::pair<int, std::size_t>> pending_programs_;
    int pending_tuplet_start_ = 0;
    VoiceBuilder* pending_tuplet_voice_ = nullptr;
};

}  // namespace

Tune parse_tune(std::string_view text, Warnings* warnings) {
    return Parser(text, warnings).run();
}

}  // namespace composerx::abc
