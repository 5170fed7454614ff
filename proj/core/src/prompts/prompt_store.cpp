#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "composerx/abc.hpp"
#include "composerx/prompts.hpp"
#include "embedded_data.inc"

namespace composerx::prompts {

using nlohmann::json;

SchemaError::SchemaError(std::size_t record_index, std::string field, std::string reason)
    : std::runtime_error("record " + std::to_string(record_index) + ", field '" + field + "': " + reason),
      record_index_(record_index),
      field_(std::move(field)),
      reason_(std::move(reason)) {}

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

json parse_array(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(0, "<document>", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_array()) throw SchemaError(0, "<document>", "expected a JSON array");
    return doc;
}

std::optional<std::string> opt_string(const json& obj, const char* field, std::size_t index) {
    if (!obj.contains(field) || obj[field].is_null()) return std::nullopt;
    if (!obj[field].is_string()) throw SchemaError(index, std::string("attributes.") + field, "expected a string");
    return obj[field].get<std::string>();
}

std::optional<std::vector<std::string>> opt_string_list(const json& obj, const char* field, std::size_t index) {
    if (!obj.contains(field) || obj[field].is_null()) return std::nullopt;
    const auto& list = obj[field];
    if (!list.is_array()) throw SchemaError(index, std::string("attributes.") + field, "expected a list of strings");
    std::vector<std::string> out;
    for (const auto& item : list) {
        if (!item.is_string() || item.get<std::string>().empty()) {
            throw SchemaError(index, std::string("attributes.") + field, "entries must be nonempty strings");
        }
        out.push_back(item.get<std::string>());
    }
    return out;
}

UserPrompt parse_record(const json& rec, std::size_t index) {
    if (!rec.is_object()) throw SchemaError(index, "<record>", "expected an object");
    UserPrompt p;
    if (!rec.contains("id") || !rec["id"].is_string() || rec["id"].get<std::string>().empty()) {
        throw SchemaError(index, "id", "missing or not a nonempty string");
    }
    p.id = rec["id"].get<std::string>();
    if (!rec.contains("text") || !rec["text"].is_string() || rec["text"].get<std::string>().empty()) {
        throw SchemaError(index, "text", "missing or not a nonempty string");
    }
    p.text = rec["text"].get<std::string>();
    if (!rec.contains("attributes") || !rec["attributes"].is_object()) {
        throw SchemaError(index, "attributes", "missing or not an object");
    }
    const auto& a = rec["attributes"];
    if (!a.contains("name") || !a["name"].is_string()) throw SchemaError(index, "attributes.name", "missing name");
    p.attributes.name = a["name"].get<std::string>();
    p.attributes.tempo = opt_string(a, "tempo", index);
    p.attributes.feeling = opt_string(a, "feeling", index);
    p.attributes.key = opt_string(a, "key", index);
    p.attributes.genre = opt_string(a, "genre", index);
    p.attributes.style = opt_string(a, "style", index);
    p.attributes.motif = opt_string(a, "motif", index);
    p.attributes.chord_progression = opt_string_list(a, "chord_progression", index);
    p.attributes.instruments = opt_string_list(a, "instruments", index);
    if (a.contains("bars") && !a["bars"].is_null()) {
        if (!a["bars"].is_number_integer() || a["bars"].get<int>() < 1) {
            throw SchemaError(index, "attributes.bars", "expected a positive integer");
        }
        p.attributes.bars = a["bars"].get<int>();
    }
    return p;
}

json record_to_json(const UserPrompt& p) {
    json a = {{"name", p.attributes.name}};
    auto put = [&](const char* field, const auto& value) {
        if (value) a[field] = *value;
    };
    put("tempo", p.attributes.tempo);
    put("feeling", p.attributes.feeling);
    put("chord_progression", p.attributes.chord_progression);
    put("key", p.attributes.key);
    put("bars", p.attributes.bars);
    put("instruments", p.attributes.instruments);
    put("genre", p.attributes.genre);
    put("style", p.attributes.style);
    put("motif", p.attributes.motif);
    return {{"id", p.id}, {"text", p.text}, {"attributes", a}};
}

// The JSON array inside a model reply, tolerating code fences and surrounding prose.
std::optional<json> find_json_array(const std::string& reply) {
    const auto open = reply.find('[');
    const auto close = reply.rfind(']');
    if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
    try {
        auto doc = json::parse(reply.substr(open, close - open + 1));
        if (doc.is_array()) return doc;
    } catch (const json::parse_error&) {
    }
    return std::nullopt;
}

}  // namespace

std::vector<UserPrompt> parse_prompt_set(const std::string& json_text) {
    const auto doc = parse_array(json_text);
    std::vector<UserPrompt> out;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        auto p = parse_record(doc[i], i);
        if (!ids.insert(p.id).second) throw DuplicateId(p.id);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<UserPrompt> load_prompt_set(const std::filesystem::path& path) {
    return parse_prompt_set(read_file(path));
}

std::string dump_prompt_set(const std::vector<UserPrompt>& prompts) {
    json doc = json::array();
    for (const auto& p : prompts) doc.push_back(record_to_json(p));
    return doc.dump(2) + "\n";
}

void save_prompt_set(const std::vector<UserPrompt>& prompts, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << dump_prompt_set(prompts);
}

std::vector<IclExample> parse_icl_store(const std::string& json_text) {
    const auto doc = parse_array(json_text);
    std::vector<IclExample> out;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& rec = doc[i];
        if (!rec.is_object()) throw SchemaError(i, "<record>", "expected an object");
        if (!rec.contains("description") || !rec["description"].is_string()) {
            throw SchemaError(i, "description", "missing or not a string");
        }
        if (!rec.contains("abc") || !rec["abc"].is_string()) throw SchemaError(i, "abc", "missing or not a string");
        IclExample ex{rec["description"].get<std::string>(), rec["abc"].get<std::string>()};
        try {
            abc::parse_tune(ex.abc);
        } catch (const abc::ParseError& e) {
            throw SchemaError(i, "abc", e.what());
        }
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<IclExample> load_icl_store(const std::filesystem::path& path) {
    return parse_icl_store(read_file(path));
}

std::vector<UserPrompt> starter_prompts() {
    return parse_prompt_set(kStarterPromptsJson);
}

std::vector<IclExample> bundled_icl_examples() {
    return parse_icl_store(kIclExamplesJson);
}

std::vector<UserPrompt> expand_prompts(const std::vector<UserPrompt>& seeds, std::size_t n, llm::Backend& backend,
                                       const ExpandOptions& options, std::vector<std::string>* warnings) {
    if (seeds.empty()) throw std::invalid_argument("self-instruct expansion needs at least one seed prompt");
    if (n == 0) throw std::invalid_argument("number of prompts to generate must be positive");

    std::set<std::string> taken;
    for (const auto& s : seeds) taken.insert(s.id);
    std::size_t counter = 1;
    auto fresh_id = [&] {
        std::string id;
        do {
            id = options.id_prefix + std::to_string(counter++);
        } while (taken.contains(id));
        taken.insert(id);
        return id;
    };
    auto warn = [&](std::string msg) {
        if (warnings) warnings->push_back(std::move(msg));
    };

    std::mt19937 rng(options.seed);
    std::vector<UserPrompt> out;
    for (std::size_t call = 0; call < options.max_calls && out.size() < n; ++call) {
        std::vector<UserPrompt> sample;
        std::sample(seeds.begin(), seeds.end(), std::back_inserter(sample),
                    std::min(options.seeds_per_call, seeds.size()), rng);
        const std::size_t wanted = n - out.size();

        llm::ChatRequest request;
        request.model = options.model;
        request.temperature = options.temperature;
        request.speaker_tag = "self_instruct";
        request.messages = {
            {llm::Role::system,
             "You write prompts that musicians would give to a text-to-music composition system. Each prompt "
             "describes one short piece: its title, genre or style, tempo, feeling, key, number of bars, chord "
             "progression, instruments and, optionally, a motif.",
             std::nullopt},
            {llm::Role::user,
             "Here are example records:\n" + dump_prompt_set(sample) + "\nWrite " + std::to_string(wanted) +
                 " new records in exactly the same JSON format. Make them diverse in genre, key, meter, "
                 "instrumentation and mood, and keep the attributes consistent with the text. Return only a JSON "
                 "array.",
             std::nullopt},
        };
        const auto response = llm::complete(backend, request, options.retry);

        const auto array = find_json_array(response.content);
        if (!array) {
            warn("self-instruct reply contained no JSON array of records");
            continue;
        }
        for (std::size_t i = 0; i < array->size() && out.size() < n; ++i) {
            auto rec = (*array)[i];
            if (rec.is_object()) rec["id"] = "pending";
            try {
                auto p = parse_record(rec, i);
                p.id = fresh_id();
                out.push_back(std::move(p));
            } catch (const SchemaError& e) {
                warn(std::string("dropped generated record: ") + e.what());
            }
        }
    }
    return out;
}

}  // namespace composerx::prompts
