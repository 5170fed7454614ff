#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "composerx/orchestrator.hpp"

namespace composerx::eval {

enum class SystemKind { multi, ori, role, cot, icl };

std::string_view to_string(SystemKind system);
std::optional<SystemKind> system_kind_from_string(std::string_view text);

struct RunRecord {
    std::string run_id;
    std::string prompt_id;
    SystemKind system = SystemKind::multi;
    std::string model;
    std::string timestamp;  // ISO 8601, UTC
    std::vector<llm::ChatMessage> transcript;
    std::optional<std::string> final_abc;
    bool parse_ok = false;
    std::size_t abc_length = 0;
    std::optional<analysis::ValidationReport> validation;
    llm::Usage usage;
    std::size_t backend_calls = 0;
    orchestration::Stage terminal_stage = orchestration::Stage::done;
    std::optional<std::string> abort_reason;

    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

RunRecord make_run_record(const orchestration::CompositionResult& result, std::string run_id, std::string prompt_id,
                          SystemKind system, std::string model, std::string timestamp);

// Current UTC time as 2026-01-31T12:00:00Z.
std::string utc_timestamp();

class EmptyCorpus : public std::invalid_argument {
public:
    EmptyCorpus() : std::invalid_argument("no runs to evaluate") {}
};

class NoOverlap : public std::invalid_argument {
public:
    NoOverlap() : std::invalid_argument("the two corpora share no prompt ids") {}
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A malformed run-record line; line numbers start at 1.
class RecordSchemaError : public std::runtime_error {
public:
    RecordSchemaError(std::size_t line, const std::string& reason)
        : std::runtime_error("runs file line " + std::to_string(line) + ": " + reason), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct Rate {
    std::size_t count = 0;
    std::size_t total = 0;
    double value() const { return total == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(total); }
    // Three decimals, e.g. "0.700".
    std::string str() const;
};

Rate success_rate(const std::vector<RunRecord>& records);
double mean_abc_length(const std::vector<RunRecord>& records, bool exclude_empty = false);

struct MetricsSummary {
    std::optional<SystemKind> system;
    std::optional<std::string> model;
    std::size_t n_runs = 0;
    Rate success;
    double mean_abc_length = 0.0;
    // Each rate is absent when no record in the group carries the data.
    std::optional<double> key_match;
    std::optional<double> bar_count_match;
    std::optional<double> chord_adherence;
    std::size_t skipped_without_validation = 0;
};

enum class GroupBy { none, system, model, system_model };

std::optional<GroupBy> group_by_from_string(std::string_view text);

MetricsSummary adherence_summary(const std::vector<RunRecord>& records, bool exclude_empty = false);
std::vector<MetricsSummary> summarize(const std::vector<RunRecord>& records, GroupBy group_by = GroupBy::system_model,
                                      bool exclude_empty = false);

struct AbManifestRow {
    std::string pair_id;
    std::string prompt_id;
    std::string left_path;
    std::string right_path;
    std::uint32_t seed = 0;
    bool prompt_shown = false;
};

// Kept apart from the manifest so raters never see which system produced a side.
struct AbKeyRow {
    std::string pair_id;
    std::string left_run_id;
    std::string right_run_id;
    bool left_is_a = true;
};

struct AbExport {
    std::vector<AbManifestRow> manifest;
    std::vector<AbKeyRow> key;
    // Relative sample path → ABC text.
    std::map<std::string, std::string> samples;
};

// Pairs the first run per prompt id (preferring parsed ones) of each corpus,
// in order of corpus A. Throws NoOverlap.
AbExport export_ab_pairs(const std::vector<RunRecord>& a, const std::vector<RunRecord>& b, std::uint32_t seed,
                         bool show_prompt = false);
// Writes manifest.json, ab_key.json and the sample files under `dir`.
void write_ab_export(const AbExport& pairing, const std::filesystem::path& dir);

std::string record_to_json_line(const RunRecord& record);
RunRecord record_from_json_line(const std::string& line, std::size_t line_number = 1);

// Appends one JSON line per record.
void persist_runs(const std::vector<RunRecord>& records, const std::filesystem::path& path);
std::vector<RunRecord> load_runs(const std::filesystem::path& path);

// Serialized append-only writer shared by concurrent runs.
class RunSink {
public:
    explicit RunSink(std::filesystem::path path);
    void append(const RunRecord& record);
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::mutex mutex_;
};

}  // namespace composerx::eval
