#include <doctest.h>

#include <map>

#include "composerx/abc.hpp"
#include "test_support.hpp"

using namespace composerx;
using namespace composerx::abc;
using composerx::testing::kTemplateTune;

namespace {

Rational bar_units(const Bar& bar) {
    Rational sum{0};
    for (const auto& ev : bar.events) sum += ev.duration * ev.tuplet_scale;
    return sum;
}

Pitch pitch_of(const NoteEvent& ev) {
    return std::get<Pitch>(ev.kind);
}

}  // namespace

TEST_CASE("template tune parses to one voice of eight 4/4 bars in C major") {
    const auto tune = parse_tune(kTemplateTune);
    REQUIRE(tune.voices.size() == 1);
    CHECK(tune.voices[0].voice_id == "1");
    CHECK(tune.voices[0].bars.size() == 8);
    CHECK(tune.header.meter == Meter{4, 4});
    CHECK(tune.header.unit_note_length == Rational(1, 8));
    CHECK(tune.header.key == Key{'C', Accidental::none, Mode::major, ""});
    CHECK(tune.header.title == "Title");
    CHECK(tune.header.composer == std::optional<std::string>("Composer"));
    for (const auto& bar : tune.voices[0].bars) CHECK(bar_units(bar) == Rational(8));

    const auto& bars = tune.voices[0].bars;
    CHECK(bars[0].left_delim == LeftDelim::repeat_start);
    CHECK(bars[3].right_delim == RightDelim::repeat_end);
    CHECK(bars[4].left_delim == LeftDelim::repeat_start);
    CHECK(bars[7].right_delim == RightDelim::repeat_end);
    REQUIRE(bars[0].events.size() == 6);
    CHECK(pitch_of(bars[0].events[0]) == Pitch{'G', Accidental::none, 0});
    CHECK(pitch_of(bars[0].events[3]) == Pitch{'C', Accidental::none, 1});
    CHECK(bars[0].events[4].duration == Rational(2));
    CHECK(std::holds_alternative<Rest>(bars[3].events[1].kind));
    CHECK(pitch_of(bars[6].events[3]) == Pitch{'B', Accidental::none, -1});
}

TEST_CASE("single rest tune") {
    const auto tune = parse_tune("X:1\nT:\nM:4/4\nL:1/4\nK:C\nz4|");
    REQUIRE(tune.voices.size() == 1);
    REQUIRE(tune.voices[0].bars.size() == 1);
    const auto& bar = tune.voices[0].bars[0];
    REQUIRE(bar.events.size() == 1);
    CHECK(std::holds_alternative<Rest>(bar.events[0].kind));
    CHECK(bar.events[0].duration == Rational(4));
    CHECK(tune.header.title.empty());
}

TEST_CASE("missing mandatory headers are parse errors naming the header") {
    SUBCASE("K") {
        try {
            parse_tune("X:1\nM:4/4\nL:1/8\nGABc d2e2|");
            FAIL("expected a ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("K:") != std::string::npos);
        }
    }
    SUBCASE("M") {
        CHECK_THROWS_AS(parse_tune("X:1\nL:1/8\nK:C\nGABc|"), ParseError);
    }
    SUBCASE("X") {
        CHECK_THROWS_AS(parse_tune("T:t\nM:4/4\nL:1/8\nK:C\nGABc|"), ParseError);
    }
}

TEST_CASE("missing title is accepted with a warning") {
    Warnings warnings;
    const auto tune = parse_tune("X:3\nM:3/4\nL:1/4\nK:G\nGAB|", &warnings);
    CHECK(tune.header.title.empty());
    CHECK_FALSE(warnings.empty());
}

TEST_CASE("CRLF input parses like LF input") {
    std::string crlf;
    for (char c : std::string(kTemplateTune)) {
        if (c == '\n') crlf += '\r';
        crlf += c;
    }
    CHECK(parse_tune(crlf) == parse_tune(kTemplateTune));
}

TEST_CASE("meter shorthands") {
    CHECK(parse_tune("X:1\nM:C\nL:1/8\nK:C\nC8|").header.meter == Meter{4, 4});
    CHECK(parse_tune("X:1\nM:C|\nL:1/8\nK:C\nC8|").header.meter == Meter{2, 2});
}

TEST_CASE("durations") {
    const auto tune = parse_tune("X:1\nM:4/4\nL:1/8\nK:C\nC C2 C/ C/4 C3/2 C// z3|");
    const auto& ev = tune.voices[0].bars[0].events;
    REQUIRE(ev.size() == 7);
    CHECK(ev[0].duration == Rational(1));
    CHECK(ev[1].duration == Rational(2));
    CHECK(ev[2].duration == Rational(1, 2));
    CHECK(ev[3].duration == Rational(1, 4));
    CHECK(ev[4].duration == Rational(3, 2));
    CHECK(ev[5].duration == Rational(1, 4));
    CHECK(ev[6].duration == Rational(3));
}

TEST_CASE("malformed input reports line and column") {
    SUBCASE("bad duration") {
        try {
            parse_tune("X:1\nM:4/4\nL:1/8\nK:C\nC2 D/0 E|");
            FAIL("expected a ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 5);
            CHECK(e.column() >= 4);
        }
    }
    SUBCASE("unclosed chord") {
        CHECK_THROWS_AS(parse_tune("X:1\nM:4/4\nL:1/8\nK:C\n[CEG C|"), ParseError);
    }
    SUBCASE("unclosed chord symbol") {
        CHECK_THROWS_AS(parse_tune("X:1\nM:4/4\nL:1/8\nK:C\n\"Am C2|"), ParseError);
    }
    SUBCASE("letter outside A-G") {
        try {
            parse_tune("X:1\nM:4/4\nL:1/8\nK:C\nC D H E|");
            FAIL("expected a ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 5);
            CHECK(e.column() == 5);
            CHECK(e.found() == "H");
        }
    }
    SUBCASE("MIDI program outside 0..127") {
        CHECK_THROWS_AS(parse_tune("X:1\nM:4/4\nL:1/8\nV:1\n%%MIDI program 128\nK:C\nC8|"), ParseError);
    }
}

TEST_CASE("unsupported constructs are rejected rather than skipped") {
    const std::string head = "X:1\nM:4/4\nL:1/8\nK:C\n";
    for (const char* body : {"C>D E2 F4|", "C<D E2 F4|", "{g}C2 D2 E4|", "!trill!C2 D2 E4|", "(CD) E2 F4|",
                             "~C2 D2 E4|", ".C2 D2 E4|", "C8|1 D8:|2 E8|]", "^^C8|", "__C8|"}) {
        CAPTURE(body);
        CHECK_THROWS_AS(parse_tune(head + body), ParseError);
    }
    CHECK_THROWS_AS(parse_tune(head + "C8|\nw: la la la\n"), ParseError);
}

TEST_CASE("unknown header fields are preserved with a warning") {
    Warnings warnings;
    const auto tune = parse_tune("X:1\nT:t\nR:reel\nZ:someone\nM:4/4\nL:1/8\nK:C\nC8|", &warnings);
    CHECK(tune.header.extra_fields == std::vector<std::string>{"R:reel", "Z:someone"});
    CHECK(warnings.size() >= 2);
    const auto text = serialize_tune(tune);
    CHECK(text.find("R:reel\nZ:someone\n") != std::string::npos);
}

TEST_CASE("voices from V: headers, inline markers and MIDI programs") {
    const auto tune = parse_tune(
        "X:1\nT:Duet\nM:4/4\nL:1/8\nV:1 name=\"Accordion\"\n%%MIDI program 21\nV:2 name=\"Violin\" clef=treble\n"
        "%%MIDI program 40\nK:C\nV:1\nC8|D8|\n[V:2] E8|F8|\n");
    REQUIRE(tune.voices.size() == 2);
    CHECK(tune.voices[0].voice_id == "1");
    CHECK(tune.voices[0].name == std::optional<std::string>("Accordion"));
    CHECK(tune.voices[0].midi_program == std::optional<int>(21));
    CHECK(tune.voices[1].midi_program == std::optional<int>(40));
    CHECK(tune.voices[1].extra_properties == "clef=treble");
    CHECK(tune.voices[1].bars.size() == 2);

    const auto text = serialize_tune(tune);
    std::size_t directives = 0;
    for (auto pos = text.find("%%MIDI program"); pos != std::string::npos; pos = text.find("%%MIDI program", pos + 1)) {
        ++directives;
    }
    CHECK(directives == 2);
    CHECK(parse_tune(text) == tune);
}

TEST_CASE("repeated MIDI program directives: last one wins with a warning") {
    Warnings warnings;
    const auto tune =
        parse_tune("X:1\nM:4/4\nL:1/8\nV:1\n%%MIDI program 1\n%%MIDI program 2\nK:C\nC8|", &warnings);
    CHECK(tune.voices[0].midi_program == std::optional<int>(2));
    CHECK_FALSE(warnings.empty());
}

TEST_CASE("chords, ties, tuplets, chord symbols and multibar rests") {
    const auto tune = parse_tune("X:1\nM:4/4\nL:1/8\nK:C\n\"Am\" [A,CE]2 (3cde C2- C2| Z2 | \"G7\" G8|]");
    const auto& bars = tune.voices[0].bars;
    REQUIRE(bars.size() == 3);
    const auto& first = bars[0].events;
    REQUIRE(first.size() == 6);
    CHECK(first[0].chord_symbol == std::optional<std::string>("Am"));
    CHECK(std::get<Chord>(first[0].kind).size() == 3);
    CHECK(first[0].duration == Rational(2));
    CHECK(first[1].tuplet_start == 3);
    CHECK(first[1].tuplet_scale == Rational(2, 3));
    CHECK(first[3].tuplet_scale == Rational(2, 3));
    CHECK(first[4].tie_to_next);
    CHECK(bar_units(bars[0]) == Rational(8));
    CHECK(std::get<MultibarRest>(bars[1].events[0].kind).count == 2);
    CHECK(bars[2].right_delim == RightDelim::final_bar);
}

TEST_CASE("duplicate chord pitches are rejected") {
    CHECK_THROWS_AS(parse_tune("X:1\nM:4/4\nL:1/8\nK:C\n[CEC]8|"), ParseError);
}

TEST_CASE("tuplet scale follows the meter") {
    CHECK(tuplet_scale_for(3, Meter{4, 4}) == Rational(2, 3));
    CHECK(tuplet_scale_for(2, Meter{4, 4}) == Rational(3, 2));
    CHECK(tuplet_scale_for(5, Meter{4, 4}) == Rational(2, 5));
    CHECK(tuplet_scale_for(5, Meter{6, 8}) == Rational(3, 5));
    CHECK(tuplet_scale_for(4, Meter{6, 8}) == Rational(3, 4));
}

TEST_CASE("key parsing") {
    CHECK(parse_key_text("C major") == Key{'C', Accidental::none, Mode::major, ""});
    CHECK(parse_key_text("Am") == Key{'A', Accidental::none, Mode::minor, ""});
    CHECK(parse_key_text("F# minor") == Key{'F', Accidental::sharp, Mode::minor, ""});
    CHECK(parse_key_text("Bb") == Key{'B', Accidental::flat, Mode::major, ""});
    const auto dorian = parse_key_text("D dor");
    REQUIRE(dorian);
    CHECK(dorian->mode == Mode::other);
    CHECK_FALSE(parse_key_text("H major"));
}

TEST_CASE("midi numbers") {
    CHECK(midi_number({'C', Accidental::none, 0}) == 60);
    CHECK(midi_number({'C', Accidental::none, 1}) == 72);
    CHECK(midi_number({'C', Accidental::none, -2}) == 36);
    CHECK(midi_number({'F', Accidental::none, 0}) == 65);
    CHECK(midi_number({'G', Accidental::none, 0}) == 67);
    CHECK(midi_number({'F', Accidental::sharp, 0}) == 66);
    CHECK(midi_number({'B', Accidental::flat, -1}) == 58);
    CHECK(midi_number({'C', Accidental::none, -5}) == 0);
    CHECK_THROWS_AS(midi_number({'C', Accidental::flat, -5}), RangeError);
    CHECK(midi_number({'G', Accidental::none, 5}) == 127);
    CHECK_THROWS_AS(midi_number({'G', Accidental::sharp, 5}), RangeError);
}

TEST_CASE("midi numbers against an independent octave oracle") {
    // Letter offsets above C and the MIDI number of each octave's C.
    const std::map<char, int> offset{{'C', 0}, {'D', 2}, {'E', 4}, {'F', 5}, {'G', 7}, {'A', 9}, {'B', 11}};
    for (int octave = -4; octave <= 4; ++octave) {
        for (const auto& [letter, semis] : offset) {
            const int expected = 12 * (octave + 5) + semis;
            CHECK(midi_number({letter, Accidental::none, octave}) == expected);
        }
    }
}

TEST_CASE("sounding pitch applies key signature and bar accidentals") {
    const auto tune = parse_tune("X:1\nM:4/4\nL:1/8\nK:G\nF ^c c =F F c2 z2|F8|");
    const auto bar0 = sounding_midi(tune.voices[0].bars[0], tune.header.key);
    REQUIRE(bar0.size() == 7);
    CHECK(bar0[0] == std::vector<int>{66});
    CHECK(bar0[1] == std::vector<int>{73});
    CHECK(bar0[2] == std::vector<int>{73});
    CHECK(bar0[3] == std::vector<int>{65});
    CHECK(bar0[4] == std::vector<int>{65});
    CHECK(bar0[6].empty());
    CHECK(sounding_midi(tune.voices[0].bars[1], tune.header.key)[0] == std::vector<int>{66});
}

TEST_CASE("serializer writes an empty title line") {
    auto tune = parse_tune(kTemplateTune);
    tune.header.title.clear();
    const auto text = serialize_tune(tune);
    CHECK(text.find("\nT:\n") != std::string::npos);
    CHECK(parse_tune(text) == tune);
}

TEST_CASE("template round trip") {
    const auto tune = parse_tune(kTemplateTune);
    CHECK(parse_tune(serialize_tune(tune)) == tune);
}

TEST_CASE("explicit empty bars survive a round trip") {
    const auto tune = parse_tune("X:1\nM:4/4\nL:1/8\nK:C\nC8| |D8|]");
    REQUIRE(tune.voices[0].bars.size() == 3);
    CHECK(tune.voices[0].bars[1].events.empty());
    CHECK(parse_tune(serialize_tune(tune)) == tune);
}

TEST_CASE("extracting ABC blocks") {
    SUBCASE("fenced template") {
        const auto blocks = extract_abc_blocks("Here you go:\n```\n" + std::string(kTemplateTune) + "```\nBye.");
        REQUIRE(blocks.size() == 1);
        CHECK(blocks[0] + "\n" == kTemplateTune);
    }
    SUBCASE("empty transcript") {
        CHECK(extract_abc_blocks("").empty());
    }
    SUBCASE("only the block holding X: qualifies") {
        const std::string text = "```\nsome code\n```\ntext\n```abc\nX:1\nK:C\nC|\n```\n";
        const auto blocks = extract_abc_blocks(text);
        REQUIRE(blocks.size() == 1);
        CHECK(blocks[0] == "X:1\nK:C\nC|");
    }
    SUBCASE("two qualifying blocks keep their order") {
        const auto blocks = extract_abc_blocks("```\nX:1\nK:C\nC|\n```\n```\nX:2\nK:G\nG|\n```");
        REQUIRE(blocks.size() == 2);
        CHECK(blocks[1] == "X:2\nK:G\nG|");
    }
    SUBCASE("bare region fallback") {
        const auto blocks = extract_abc_blocks("Sure!\nX:1\nT:t\nM:4/4\nL:1/8\nK:C\nC8|\nD8|\n\nHope you like it.");
        REQUIRE(blocks.size() == 1);
        CHECK(blocks[0] == "X:1\nT:t\nM:4/4\nL:1/8\nK:C\nC8|\nD8|");
    }
    SUBCASE("prose without notation") {
        CHECK(extract_abc_blocks("I could not write the piece, sorry.").empty());
    }
}

TEST_CASE("extraction is idempotent on its own outputs") {
    const std::string text = "intro\n```\n" + std::string(kTemplateTune) + "```\n";
    for (const auto& block : extract_abc_blocks(text)) {
        const auto again = extract_abc_blocks("```\n" + block + "\n```");
        REQUIRE(again.size() == 1);
        CHECK(again[0] == block);
    }
}
