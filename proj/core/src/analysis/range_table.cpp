#include "composerx/range_table.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "default_ranges.inc"

namespace composerx::analysis {

namespace {

std::vector<std::string_view> tokens(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        const std::size_t start = pos;
        while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        if (pos > start) out.push_back(line.substr(start, pos - start));
    }
    return out;
}

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

}  // namespace

std::string canonical_instrument(std::string_view name) {
    std::string out;
    bool gap = false;
    for (unsigned char c : name) {
        if (std::isspace(c) || c == '_' || c == '-') {
            gap = !out.empty();
            continue;
        }
        if (gap) out += ' ';
        gap = false;
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

std::optional<int> parse_scientific_pitch(std::string_view text) {
    static constexpr int kPc[] = {9, 11, 0, 2, 4, 5, 7};
    if (text.empty()) return std::nullopt;
    const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(text.front())));
    if (letter < 'A' || letter > 'G') return std::nullopt;
    int pc = kPc[letter - 'A'];
    std::size_t pos = 1;
    if (pos < text.size() && (text[pos] == '#' || text[pos] == 'b')) {
        pc += text[pos] == '#' ? 1 : -1;
        ++pos;
    }
    int octave = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data() + pos, end, octave);
    if (pos == text.size() || ec != std::errc{} || ptr != end) return std::nullopt;
    const int midi = 12 * (octave + 1) + pc;
    if (midi < 0 || midi > 127) return std::nullopt;
    return midi;
}

RangeTable RangeTable::parse(std::string_view text) {
    RangeTable table;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const auto line = text.substr(start, end - start);
        ++line_no;
        start = end + 1;

        auto toks = tokens(line);
        if (toks.empty() || toks.front().front() == '#') {
            if (end == text.size()) break;
            continue;
        }
        if (toks.size() < 3) throw RangeTableError(line_no, "expected '<name> <low> <high>'");
        const auto low = parse_scientific_pitch(toks[toks.size() - 2]);
        const auto high = parse_scientific_pitch(toks[toks.size() - 1]);
        if (!low || !high) throw RangeTableError(line_no, "unreadable pitch name");
        if (*low > *high) throw RangeTableError(line_no, "low pitch above high pitch");

        std::string name;
        for (std::size_t i = 0; i + 2 < toks.size(); ++i) {
            if (i > 0) name += ' ';
            name += toks[i];
        }
        if (all_digits(name)) {
            const int program = std::stoi(name);
            if (program > 127) throw RangeTableError(line_no, "MIDI program outside 0-127");
            table.set(program, {*low, *high});
        } else {
            table.set(name, {*low, *high});
        }
        if (end == text.size()) break;
    }
    return table;
}

RangeTable RangeTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open range table: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

const RangeTable& RangeTable::defaults() {
    static const RangeTable table = parse(kDefaultRangeTable);
    return table;
}

void RangeTable::set(std::string_view name, PitchRange range) {
    names_[canonical_instrument(name)] = range;
}

void RangeTable::set(int program, PitchRange range) {
    programs_[program] = range;
}

std::optional<PitchRange> RangeTable::by_name(std::string_view name) const {
    if (auto it = names_.find(canonical_instrument(name)); it != names_.end()) return it->second;
    return std::nullopt;
}

std::optional<PitchRange> RangeTable::by_program(int program) const {
    if (auto it = programs_.find(program); it != programs_.end()) return it->second;
    return std::nullopt;
}

}  // namespace composerx::analysis
