#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace composerx::analysis {

struct PitchRange {
    int low_midi = 0;
    int high_midi = 127;

    bool contains(int midi) const { return midi >= low_midi && midi <= high_midi; }
    friend bool operator==(const PitchRange&, const PitchRange&) = default;
};

class RangeTableError : public std::runtime_error {
public:
    RangeTableError(std::size_t line, const std::string& reason)
        : std::runtime_error("range table line " + std::to_string(line) + ": " + reason), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Instrument pitch ranges keyed by canonical name or General MIDI program.
//
// Text format, one entry per line: "<name> <low> <high>" with scientific pitch
// names (C4 = MIDI 60), e.g. "contrabass C2 F4". A name made only of digits is a
// GM program number. Lines starting with '#' are comments.
class RangeTable {
public:
    static RangeTable parse(std::string_view text);
    static RangeTable load(const std::filesystem::path& path);
    // The table bundled with the library (data/ranges.txt).
    static const RangeTable& defaults();

    void set(std::string_view name, PitchRange range);
    void set(int program, PitchRange range);

    std::optional<PitchRange> by_name(std::string_view name) const;
    std::optional<PitchRange> by_program(int program) const;

    std::size_t size() const { return names_.size() + programs_.size(); }

private:
    std::map<std::string, PitchRange> names_;
    std::map<int, PitchRange> programs_;
};

// Lowercased, trimmed, with runs of space/'_'/'-' collapsed to one space.
std::string canonical_instrument(std::string_view name);

// "C4" -> 60, "F#2" -> 42, "Bb-1" -> 10.
std::optional<int> parse_scientific_pitch(std::string_view text);

}  // namespace composerx::analysis
