#include "composerx/abc.hpp"

#include <cctype>

namespace composerx::abc {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

std::string_view ltrim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    return s;
}

bool is_blank(std::string_view s) {
    return ltrim(s).empty() || ltrim(s) == "\r";
}

bool is_fence(std::string_view line) {
    return ltrim(line).rfind("```", 0) == 0;
}

bool starts_tune(std::string_view line) {
    return ltrim(line).rfind("X:", 0) == 0;
}

std::string join(const std::vector<std::string_view>& lines, std::size_t from, std::size_t to) {
    std::string out;
    for (std::size_t i = from; i < to; ++i) {
        if (i > from) out += '\n';
        out += lines[i];
    }
    return out;
}

}  // namespace

std::vector<std::string> extract_abc_blocks(std::string_view transcript) {
    const auto lines = split_lines(transcript);
    std::vector<std::string> fenced;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!is_fence(lines[i])) continue;
        std::size_t close = i + 1;
        while (close < lines.size() && !is_fence(lines[close])) ++close;
        bool qualifies = false;
        for (std::size_t j = i + 1; j < close; ++j) qualifies = qualifies || starts_tune(lines[j]);
        // An unterminated fence runs to the end of the transcript.
        if (qualifies) fenced.push_back(join(lines, i + 1, close));
        i = close;
    }
    if (!fenced.empty()) return fenced;

    std::vector<std::string> bare;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!starts_tune(lines[i])) continue;
        std::size_t end = i + 1;
        bool in_body = false;
        for (; end < lines.size(); ++end) {
            const auto l = ltrim(lines[end]);
            if (is_blank(lines[end])) {
                if (in_body) break;
                continue;
            }
            if (l.rfind("K:", 0) == 0) in_body = true;
            if (is_fence(lines[end])) break;
        }
        std::size_t last = end;
        while (last > i && is_blank(lines[last - 1])) --last;
        bare.push_back(join(lines, i, last));
        i = end;
    }
    return bare;
}

}  // namespace composerx::abc
