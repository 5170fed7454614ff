#include "composerx/eval.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <set>

#include "composerx/json_io.hpp"

namespace composerx::eval {

using nlohmann::json;
using orchestration::Stage;

std::string_view to_string(SystemKind system) {
    switch (system) {
        case SystemKind::multi:
            return "multi";
        case SystemKind::ori:
            return "ori";
        case SystemKind::role:
            return "role";
        case SystemKind::cot:
            return "cot";
        case SystemKind::icl:
            return "icl";
    }
    return "";
}

std::optional<SystemKind> system_kind_from_string(std::string_view text) {
    for (auto s : {SystemKind::multi, SystemKind::ori, SystemKind::role, SystemKind::cot, SystemKind::icl}) {
        if (to_string(s) == text) return s;
    }
    return std::nullopt;
}

std::optional<GroupBy> group_by_from_string(std::string_view text) {
    if (text == "none") return GroupBy::none;
    if (text == "system") return GroupBy::system;
    if (text == "model") return GroupBy::model;
    if (text == "system,model" || text == "system_model") return GroupBy::system_model;
    return std::nullopt;
}

RunRecord make_run_record(const orchestration::CompositionResult& result, std::string run_id, std::string prompt_id,
                          SystemKind system, std::string model, std::string timestamp) {
    RunRecord r;
    r.run_id = std::move(run_id);
    r.prompt_id = std::move(prompt_id);
    r.system = system;
    r.model = std::move(model);
    r.timestamp = std::move(timestamp);
    r.transcript = result.state.transcript;
    r.final_abc = result.final_abc;
    r.parse_ok = result.final_tune.has_value();
    r.abc_length = result.final_abc ? result.final_abc->size() : 0;
    r.validation = result.validation;
    r.usage = result.token_usage;
    r.backend_calls = result.backend_calls;
    r.terminal_stage = result.state.stage;
    r.abort_reason = result.state.abort_reason;
    return r;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buffer;
}

std::string Rate::str() const {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.3f", value());
    return buffer;
}

Rate success_rate(const std::vector<RunRecord>& records) {
    if (records.empty()) throw EmptyCorpus();
    Rate rate{0, records.size()};
    for (const auto& r : records) rate.count += r.parse_ok ? 1 : 0;
    return rate;
}

double mean_abc_length(const std::vector<RunRecord>& records, bool exclude_empty) {
    std::size_t n = 0;
    std::size_t sum = 0;
    for (const auto& r : records) {
        if (exclude_empty && r.abc_length == 0) continue;
        ++n;
        sum += r.abc_length;
    }
    if (n == 0) throw EmptyCorpus();
    return static_cast<double>(sum) / static_cast<double>(n);
}

MetricsSummary adherence_summary(const std::vector<RunRecord>& records, bool exclude_empty) {
    MetricsSummary s;
    s.n_runs = records.size();
    if (records.empty()) return s;
    s.success = success_rate(records);
    try {
        s.mean_abc_length = mean_abc_length(records, exclude_empty);
    } catch (const EmptyCorpus&) {
        s.mean_abc_length = 0.0;
    }

    std::size_t key_n = 0, key_hits = 0, bars_n = 0, bars_hits = 0, chord_n = 0;
    double chord_sum = 0.0;
    for (const auto& r : records) {
        if (!r.validation) {
            ++s.skipped_without_validation;
            continue;
        }
        const auto& v = *r.validation;
        if (v.key_match) {
            ++key_n;
            key_hits += v.key_match->matched ? 1 : 0;
        }
        if (v.bars_requested) {
            ++bars_n;
            bars_hits += static_cast<std::size_t>(*v.bars_requested) == v.bars_found ? 1 : 0;
        }
        if (v.chord_match && v.bars_found > 0) {
            ++chord_n;
            chord_sum += std::min(1.0, static_cast<double>(v.chord_match->matched_positions) /
                                           static_cast<double>(v.bars_found));
        }
    }
    if (key_n) s.key_match = static_cast<double>(key_hits) / static_cast<double>(key_n);
    if (bars_n) s.bar_count_match = static_cast<double>(bars_hits) / static_cast<double>(bars_n);
    if (chord_n) s.chord_adherence = chord_sum / static_cast<double>(chord_n);
    return s;
}

std::vector<MetricsSummary> summarize(const std::vector<RunRecord>& records, GroupBy group_by, bool exclude_empty) {
    if (records.empty()) throw EmptyCorpus();
    const bool by_system = group_by == GroupBy::system || group_by == GroupBy::system_model;
    const bool by_model = group_by == GroupBy::model || group_by == GroupBy::system_model;

    using GroupKey = std::pair<std::optional<SystemKind>, std::optional<std::string>>;
    std::map<GroupKey, std::vector<RunRecord>> groups;
    for (const auto& r : records) {
        GroupKey key{by_system ? std::optional(r.system) : std::nullopt,
                     by_model ? std::optional(r.model) : std::nullopt};
        groups[key].push_back(r);
    }
    std::vector<MetricsSummary> out;
    for (const auto& [key, members] : groups) {
        auto s = adherence_summary(members, exclude_empty);
        s.system = key.first;
        s.model = key.second;
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

std::map<std::string, const RunRecord*> first_per_prompt(const std::vector<RunRecord>& records) {
    std::map<std::string, const RunRecord*> out;
    for (const auto& r : records) {
        auto [it, inserted] = out.emplace(r.prompt_id, &r);
        if (!inserted && !it->second->parse_ok && r.parse_ok) it->second = &r;
    }
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

AbExport export_ab_pairs(const std::vector<RunRecord>& a, const std::vector<RunRecord>& b, std::uint32_t seed,
                         bool show_prompt) {
    const auto a_first = first_per_prompt(a);
    const auto b_first = first_per_prompt(b);

    AbExport result;
    std::mt19937 rng(seed);
    std::bernoulli_distribution coin(0.5);
    std::set<std::string> seen;
    for (const auto& r : a) {
        if (!seen.insert(r.prompt_id).second) continue;
        const auto other = b_first.find(r.prompt_id);
        if (other == b_first.end()) continue;
        const auto* ra = a_first.at(r.prompt_id);
        const auto* rb = other->second;

        char id[16];
        std::snprintf(id, sizeof id, "pair-%03zu", result.manifest.size() + 1);
        const std::string pair_id = id;
        const bool left_is_a = coin(rng);
        const auto* left = left_is_a ? ra : rb;
        const auto* right = left_is_a ? rb : ra;

        AbManifestRow row{pair_id, r.prompt_id, "samples/" + pair_id + "-left.abc",
                          "samples/" + pair_id + "-right.abc", seed, show_prompt};
        result.samples[row.left_path] = left->final_abc.value_or("");
        result.samples[row.right_path] = right->final_abc.value_or("");
        result.manifest.push_back(std::move(row));
        result.key.push_back({pair_id, left->run_id, right->run_id, left_is_a});
    }
    if (result.manifest.empty()) throw NoOverlap();
    return result;
}

void write_ab_export(const AbExport& pairing, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir / "samples", ec);
    if (ec) throw IoError("cannot create " + (dir / "samples").string() + ": " + ec.message());

    json manifest = json::array();
    for (const auto& row : pairing.manifest) {
        manifest.push_back({{"pair_id", row.pair_id},
                            {"prompt_id", row.prompt_id},
                            {"left_path", row.left_path},
                            {"right_path", row.right_path},
                            {"seed", row.seed},
                            {"prompt_shown", row.prompt_shown}});
    }
    json key = json::array();
    for (const auto& row : pairing.key) {
        key.push_back({{"pair_id", row.pair_id},
                       {"left_run_id", row.left_run_id},
                       {"right_run_id", row.right_run_id},
                       {"left_is_a", row.left_is_a}});
    }
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    write_text(dir / "ab_key.json", key.dump(2) + "\n");
    for (const auto& [path, text] : pairing.samples) write_text(dir / path, text);
}

std::string record_to_json_line(const RunRecord& r) {
    json j = {{"run_id", r.run_id},
              {"prompt_id", r.prompt_id},
              {"system", std::string(to_string(r.system))},
              {"model", r.model},
              {"timestamp", r.timestamp},
              {"transcript", r.transcript},
              {"final_abc", r.final_abc ? json(*r.final_abc) : json(nullptr)},
              {"parse_ok", r.parse_ok},
              {"abc_length", r.abc_length},
              {"validation", r.validation ? json(*r.validation) : json(nullptr)},
              {"usage", r.usage},
              {"backend_calls", r.backend_calls},
              {"terminal_stage", std::string(orchestration::to_string(r.terminal_stage))},
              {"abort_reason", r.abort_reason ? json(*r.abort_reason) : json(nullptr)}};
    return j.dump();
}

RunRecord record_from_json_line(const std::string& line, std::size_t line_number) {
    RunRecord r;
    try {
        const auto j = json::parse(line);
        r.run_id = j.at("run_id").get<std::string>();
        r.prompt_id = j.at("prompt_id").get<std::string>();
        const auto system = system_kind_from_string(j.at("system").get<std::string>());
        if (!system) throw RecordSchemaError(line_number, "unknown system " + j.at("system").dump());
        r.system = *system;
        r.model = j.at("model").get<std::string>();
        r.timestamp = j.at("timestamp").get<std::string>();
        r.transcript = j.at("transcript").get<std::vector<llm::ChatMessage>>();
        if (!j.at("final_abc").is_null()) r.final_abc = j["final_abc"].get<std::string>();
        r.parse_ok = j.at("parse_ok").get<bool>();
        r.abc_length = j.at("abc_length").get<std::size_t>();
        if (!j.at("validation").is_null()) r.validation = j["validation"].get<analysis::ValidationReport>();
        r.usage = j.at("usage").get<llm::Usage>();
        r.backend_calls = j.value("backend_calls", std::size_t{0});
        const auto stage = orchestration::stage_from_string(j.at("terminal_stage").get<std::string>());
        if (!stage) throw RecordSchemaError(line_number, "unknown terminal_stage " + j.at("terminal_stage").dump());
        r.terminal_stage = *stage;
        if (j.contains("abort_reason") && !j["abort_reason"].is_null()) {
            r.abort_reason = j["abort_reason"].get<std::string>();
        }
    } catch (const RecordSchemaError&) {
        throw;
    } catch (const std::exception& e) {
        throw RecordSchemaError(line_number, e.what());
    }
    if (r.parse_ok && !r.final_abc) throw RecordSchemaError(line_number, "parse_ok without final_abc");
    if (r.abc_length != (r.final_abc ? r.final_abc->size() : 0)) {
        throw RecordSchemaError(line_number, "abc_length disagrees with final_abc");
    }
    return r;
}

void persist_runs(const std::vector<RunRecord>& records, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot open " + path.string() + " for appending");
    for (const auto& r : records) out << record_to_json_line(r) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<RunRecord> load_runs(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<RunRecord> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(record_from_json_line(line, number));
    }
    return out;
}

RunSink::RunSink(std::filesystem::path path) : path_(std::move(path)) {}

void RunSink::append(const RunRecord& record) {
    std::lock_guard lock(mutex_);
    persist_runs({record}, path_);
}

}  // namespace composerx::eval
