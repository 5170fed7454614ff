#include "composerx/cli.hpp"

#include <CLI11.hpp>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "composerx/baselines.hpp"
#include "composerx/eval.hpp"
#include "composerx/json_io.hpp"
#include "composerx/orchestrator.hpp"

namespace composerx::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FlagSpec {
    std::string flag;
    std::string help;
};

// Setting name → flag spelling and help. Config-file keys use the setting names.
const std::map<std::string, FlagSpec>& flag_names() {
    static const std::map<std::string, FlagSpec> names{
        {"backend", {"--backend", "mock or http"}},
        {"script", {"--script", "Reply script for the mock backend (JSON)"}},
        {"base_url", {"--base-url", "OpenAI-compatible endpoint [https://api.openai.com]"}},
        {"model", {"--model", "Model name [gpt-4-turbo]"}},
        {"temperature", {"--temperature", "Sampling temperature in [0, 2] [0.7]"}},
        {"max_tokens", {"--max-tokens", "Completion token limit per call"}},
        {"retries", {"--retries", "Retries on timeouts, 429 and 5xx [3]"}},
        {"retry_delay_ms", {"--retry-delay-ms", "First backoff delay, doubled per retry [500]"}},
        {"timeout_s", {"--timeout", "HTTP timeout in seconds [120]"}},
        {"max_rounds", {"--max-rounds", "Agent messages before the run is cut off, at least 6 [12]"}},
        {"max_review_cycles", {"--max-review-cycles", "Reviewer feedback rounds [1]"}},
        {"selection_policy", {"--selection", "deterministic or llm_managed [deterministic]"}},
        {"prompts", {"--prompts", "Prompt set (JSON); the bundled starter set by default"}},
        {"ranges", {"--ranges", "Instrument range table; the bundled table by default"}},
        {"icl_store", {"--icl-store", "Examples for the icl baseline (JSON)"}},
        {"out", {"--out", "Output directory [composerx-out]"}},
        {"seed", {"--seed", "Seed for prompt expansion and A/B shuffling"}},
        {"jobs", {"--jobs", "Prompts run in parallel [1]"}},
    };
    return names;
}

const std::vector<std::string> kBackendSettings{"backend", "script",  "base_url",       "model",
                                                "temperature", "max_tokens", "retries", "retry_delay_ms",
                                                "timeout_s"};
const std::vector<std::string> kOrchestratorSettings{"max_rounds", "max_review_cycles", "selection_policy"};
const std::vector<std::string> kRunSettings{"out", "seed", "jobs"};

struct FlagStore {
    std::map<std::string, std::string> values;
    std::vector<std::pair<std::string, CLI::Option*>> options;
    std::string config_path;

    void add(CLI::App* app, const std::vector<std::string>& settings) {
        for (const auto& s : settings) {
            const auto& spec = flag_names().at(s);
            options.emplace_back(s, app->add_option(spec.flag, values[s], spec.help));
        }
    }

    void add_config(CLI::App* app) {
        app->add_option("--config", config_path, "key = value settings file");
    }

    std::map<std::string, std::string> given() const {
        std::map<std::string, std::string> out;
        for (const auto& [name, opt] : options) {
            if (opt->count() > 0) out[name] = values.at(name);
        }
        return out;
    }
};

struct Settings {
    std::string backend;
    std::optional<fs::path> script;
    std::string base_url = "https://api.openai.com";
    std::string api_key;
    std::string model = "gpt-4-turbo";
    double temperature = 0.7;
    std::optional<int> max_tokens;
    int retries = 3;
    int retry_delay_ms = 500;
    int timeout_s = 120;
    int max_rounds = 12;
    int max_review_cycles = 1;
    orchestration::SelectionPolicy selection = orchestration::SelectionPolicy::deterministic;
    std::optional<fs::path> prompts;
    std::optional<fs::path> ranges;
    std::optional<fs::path> icl_store;
    fs::path out = "composerx-out";
    std::uint32_t seed = 0x5eed;
    int jobs = 1;
};

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::map<std::string, std::string> parse_config_file(const fs::path& path) {
    std::map<std::string, std::string> out;
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(number) + ": expected key = value");
        }
        const auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (key != "api_key" && !flag_names().contains(key)) {
            throw ConfigError(path.string() + ":" + std::to_string(number) + ": unknown key '" + key + "'");
        }
        out[key] = value;
    }
    return out;
}

int to_int(const std::string& name, const std::string& text, int min) {
    int value = 0;
    try {
        std::size_t used = 0;
        value = std::stoi(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
    } catch (const std::exception&) {
        throw ConfigError(name + ": '" + text + "' is not an integer");
    }
    if (value < min) throw ConfigError(name + " must be at least " + std::to_string(min));
    return value;
}

double to_double(const std::string& name, const std::string& text) {
    try {
        std::size_t used = 0;
        const double value = std::stod(text, &used);
        if (used == text.size()) return value;
    } catch (const std::exception&) {
    }
    throw ConfigError(name + ": '" + text + "' is not a number");
}

fs::path existing_path(const std::string& name, const std::string& text) {
    const auto path = fs::absolute(text);
    if (!fs::exists(path)) throw ConfigError(name + ": " + path.string() + " does not exist");
    return path;
}

// Precedence: flags over environment over config file over defaults.
Settings resolve_settings(const FlagStore& flags) {
    std::map<std::string, std::string> merged;
    if (!flags.config_path.empty()) {
        merged = parse_config_file(existing_path("--config", flags.config_path));
    }
    for (const auto& [env, key] : {std::pair{"COMPOSERX_API_KEY", "api_key"}, std::pair{"COMPOSERX_BASE_URL", "base_url"},
                                   std::pair{"COMPOSERX_MODEL", "model"}}) {
        if (const char* value = std::getenv(env); value && *value) merged[key] = value;
    }
    for (const auto& [key, value] : flags.given()) merged[key] = value;

    Settings s;
    for (const auto& [key, value] : merged) {
        if (key == "backend") {
            if (value != "mock" && value != "http") throw ConfigError("backend must be mock or http, not '" + value + "'");
            s.backend = value;
        } else if (key == "script") {
            s.script = existing_path("script", value);
        } else if (key == "base_url") {
            s.base_url = value;
        } else if (key == "api_key") {
            s.api_key = value;
        } else if (key == "model") {
            s.model = value;
        } else if (key == "temperature") {
            s.temperature = to_double(key, value);
            if (s.temperature < 0.0 || s.temperature > 2.0) throw ConfigError("temperature must be within [0, 2]");
        } else if (key == "max_tokens") {
            s.max_tokens = to_int(key, value, 1);
        } else if (key == "retries") {
            s.retries = to_int(key, value, 0);
        } else if (key == "retry_delay_ms") {
            s.retry_delay_ms = to_int(key, value, 0);
        } else if (key == "timeout_s") {
            s.timeout_s = to_int(key, value, 1);
        } else if (key == "max_rounds") {
            s.max_rounds = to_int(key, value, 6);
        } else if (key == "max_review_cycles") {
            s.max_review_cycles = to_int(key, value, 1);
        } else if (key == "selection_policy") {
            if (value == "deterministic") {
                s.selection = orchestration::SelectionPolicy::deterministic;
            } else if (value == "llm_managed" || value == "llm-managed") {
                s.selection = orchestration::SelectionPolicy::llm_managed;
            } else {
                throw ConfigError("selection must be deterministic or llm_managed, not '" + value + "'");
            }
        } else if (key == "prompts") {
            s.prompts = fs::absolute(value);
        } else if (key == "ranges") {
            s.ranges = existing_path(key, value);
        } else if (key == "icl_store") {
            s.icl_store = existing_path(key, value);
        } else if (key == "out") {
            s.out = fs::absolute(value);
        } else if (key == "seed") {
            s.seed = static_cast<std::uint32_t>(to_int(key, value, 0));
        } else if (key == "jobs") {
            s.jobs = to_int(key, value, 1);
        }
    }
    return s;
}

std::unique_ptr<llm::Backend> make_backend(const Settings& s) {
    if (s.backend.empty()) throw ConfigError("no backend configured; pass --backend mock or --backend http");
    if (s.backend == "mock") {
        if (!s.script) throw ConfigError("--backend mock needs --script <file>");
        try {
            return std::make_unique<llm::MockBackend>(llm::MockBackend::parse_script(read_file(*s.script)));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(s.script->string() + ": " + e.what());
        }
    }
    llm::HttpConfig config;
    config.base_url = s.base_url;
    config.api_key = s.api_key;
    config.timeout = std::chrono::seconds(s.timeout_s);
    return std::make_unique<llm::HttpBackend>(config);
}

llm::RetryPolicy retry_policy(const Settings& s) {
    llm::RetryPolicy policy;
    policy.retries = s.retries;
    policy.base_delay = std::chrono::milliseconds(s.retry_delay_ms);
    return policy;
}

std::vector<prompts::UserPrompt> load_prompts(const Settings& s) {
    if (!s.prompts) return prompts::starter_prompts();
    if (!fs::exists(*s.prompts)) throw ConfigError("prompts: " + s.prompts->string() + " does not exist");
    return prompts::load_prompt_set(*s.prompts);
}

analysis::RangeTable load_ranges(const Settings& s) {
    return s.ranges ? analysis::RangeTable::load(*s.ranges) : analysis::RangeTable::defaults();
}

const prompts::UserPrompt& find_prompt(const std::vector<prompts::UserPrompt>& set, const std::string& id) {
    for (const auto& p : set) {
        if (p.id == id) return p;
    }
    throw ConfigError("unknown prompt id '" + id + "'");
}

struct PromptSelection {
    std::string prompt_id;
    std::string text;
    bool all = false;
};

std::vector<prompts::UserPrompt> select_prompts(const Settings& s, const PromptSelection& sel) {
    if (!sel.text.empty()) {
        if (!sel.prompt_id.empty() || sel.all) throw ConfigError("give a prompt id, --text or --all, not several");
        prompts::UserPrompt p;
        p.id = "inline";
        p.text = sel.text;
        p.attributes.name = "inline";
        return {p};
    }
    const auto set = load_prompts(s);
    if (sel.all) {
        if (!sel.prompt_id.empty()) throw ConfigError("give a prompt id or --all, not both");
        return set;
    }
    if (sel.prompt_id.empty()) throw ConfigError("no prompt given; pass a prompt id, --text or --all");
    return {find_prompt(set, sel.prompt_id)};
}

std::string note_name(int midi) {
    static const char* const names[] = {"C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"};
    return std::string(names[((midi % 12) + 12) % 12]) + std::to_string(midi / 12 - 1);
}

std::string rational_text(const abc::Rational& r) {
    return r.denominator() == 1 ? std::to_string(r.numerator())
                                : std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

void print_report(const analysis::ValidationReport& r, std::ostream& out) {
    out << "bars found:       " << r.bars_found;
    if (r.bars_requested) out << " (requested " << *r.bars_requested << ")";
    out << "\nvoice alignment:  " << (r.alignment.aligned ? "aligned" : "MISALIGNED");
    std::string sep = " (";
    for (const auto& [voice, count] : r.alignment.per_voice_bar_counts) {
        out << sep << voice << ": " << count;
        sep = ", ";
    }
    out << (r.alignment.per_voice_bar_counts.empty() ? "" : ")") << "\n";
    if (r.key_match) {
        out << "key:              requested " << r.key_match->requested << ", found " << r.key_match->found << ", "
            << (r.key_match->matched ? "match" : "MISMATCH") << "\n";
    }
    if (r.key_report.applicable) {
        out << "out-of-key notes: " << r.key_report.out_of_key_count << " of " << r.key_report.total_pitched << "\n";
    }
    if (r.chord_match) {
        out << "chord match:      " << r.chord_match->matched_positions << " of " << r.chord_match->extracted.size()
            << " bars\n";
    }
    const auto ending_ok = std::count_if(r.phrase_endings.begin(), r.phrase_endings.end(),
                                         [](const auto& e) { return e.in_key_or_chord; });
    out << "phrase endings:   " << ending_ok << " of " << r.phrase_endings.size() << " in key or chord\n";

    out << "bar anomalies:    " << r.bar_anomalies.size() << "\n";
    for (const auto& a : r.bar_anomalies) {
        out << "  voice " << a.voice_id << " bar " << a.bar_index + 1 << ": " << analysis::to_string(a.kind) << ", "
            << rational_text(a.actual_units) << " of " << rational_text(a.expected_units) << " units"
            << (a.tolerated ? " (tolerated)" : "") << "\n";
    }
    out << "range violations: " << r.range_violations.size() << "\n";
    for (const auto& v : r.range_violations) {
        out << "  voice " << v.voice_id << " bar " << v.bar_index + 1 << " event " << v.event_index + 1 << ": "
            << note_name(v.midi) << " (MIDI " << v.midi << ") outside " << note_name(v.allowed_low) << "-"
            << note_name(v.allowed_high) << " for " << v.instrument << "\n";
    }
    for (const auto& w : r.warnings) out << "warning: " << w << "\n";
}

std::string make_run_id(const std::string& prompt_id, eval::SystemKind system) {
    static std::atomic<unsigned> sequence{0};
    auto stamp = eval::utc_timestamp();
    stamp.erase(std::remove_if(stamp.begin(), stamp.end(), [](char c) { return c == '-' || c == ':'; }), stamp.end());
    const auto seed = prompt_id + "|" + std::string(eval::to_string(system)) + "|" + stamp + "|" +
                      std::to_string(::getpid()) + "|" + std::to_string(sequence++);
    std::ostringstream id;
    id << stamp << "-" << std::hex << std::setw(8) << std::setfill('0')
       << (std::hash<std::string>{}(seed) & 0xffffffffu);
    return id.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw eval::IoError("cannot write " + path.string());
    out << text;
}

void write_run_files(const fs::path& out_dir, const eval::RunRecord& record) {
    const auto dir = out_dir / record.run_id;
    fs::create_directories(dir);
    write_text(dir / "transcript.json", json(record.transcript).dump(2) + "\n");
    if (record.final_abc) write_text(dir / "final.abc", *record.final_abc + "\n");
    write_text(dir / "validation.json",
               (record.validation ? json(*record.validation) : json(nullptr)).dump(2) + "\n");
}

int exit_code_for(const orchestration::CompositionResult& result) {
    if (result.state.stage == orchestration::Stage::aborted) return kExitAborted;
    return result.final_tune ? kExitOk : kExitIncomplete;
}

struct RunOutcome {
    std::string text;
    int code = kExitOk;
};

using RunFn = std::function<orchestration::CompositionResult(const prompts::UserPrompt&)>;

// Runs every prompt (in parallel with --jobs), writes records, prints results in prompt order.
int run_batch(const Settings& s, const std::vector<prompts::UserPrompt>& selected, eval::SystemKind system,
              const RunFn& run, std::ostream& out, std::ostream& err) {
    fs::create_directories(s.out);
    eval::RunSink sink(s.out / "runs.jsonl");
    std::vector<RunOutcome> outcomes(selected.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < selected.size(); i = next++) {
            const auto& prompt = selected[i];
            auto& outcome = outcomes[i];
            std::ostringstream text;
            try {
                const auto result = run(prompt);
                const auto record = eval::make_run_record(result, make_run_id(prompt.id, system), prompt.id, system,
                                                          s.model, eval::utc_timestamp());
                write_run_files(s.out, record);
                sink.append(record);

                text << "run " << record.run_id << " (" << eval::to_string(system) << ", prompt " << prompt.id
                     << "): " << orchestration::to_string(result.state.stage) << " after " << result.state.round
                     << " messages, " << result.backend_calls << " backend calls, " << result.token_usage.total()
                     << " tokens\n";
                if (result.state.abort_reason) text << "aborted: " << *result.state.abort_reason << "\n";
                for (const auto& w : result.state.warnings) text << "warning: " << w << "\n";
                if (!result.final_abc && result.state.stage == orchestration::Stage::done) {
                    text << "no ABC notation found in the final reply\n";
                }
                if (result.final_abc) text << "\n" << *result.final_abc << "\n\n";
                if (result.parse_error) text << "final ABC does not parse: " << *result.parse_error << "\n";
                if (result.validation) print_report(*result.validation, text);
                outcome.code = exit_code_for(result);
            } catch (const std::exception& e) {
                text << "run for prompt " << prompt.id << " failed: " << e.what() << "\n";
                outcome.code = kExitConfig;
            }
            outcome.text = text.str();
        }
    };

    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(s.jobs), selected.size());
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < workers; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();

    int code = kExitOk;
    for (const auto& o : outcomes) {
        (o.code == kExitConfig ? err : out) << o.text;
        code = std::max(code, o.code);
    }
    return code;
}

int cmd_compose(const Settings& s, const PromptSelection& sel, std::ostream& out, std::ostream& err) {
    orchestration::OrchestratorConfig config;
    config.max_rounds = s.max_rounds;
    config.max_review_cycles = s.max_review_cycles;
    config.selection_policy = s.selection;
    config.model = s.model;
    config.temperature = s.temperature;
    config.max_tokens = s.max_tokens;
    config.retry = retry_policy(s);
    config.validate();

    const auto selected = select_prompts(s, sel);
    const auto ranges = load_ranges(s);
    auto backend = make_backend(s);
    return run_batch(
        s, selected, eval::SystemKind::multi,
        [&](const prompts::UserPrompt& p) { return orchestration::run_composition(p, config, *backend, ranges); },
        out, err);
}

int cmd_baseline(const Settings& s, const std::string& method_text, const PromptSelection& sel, int icl_examples,
                 std::ostream& out, std::ostream& err) {
    const auto method = baselines::baseline_method_from_string(method_text);
    if (!method) throw ConfigError("unknown baseline method '" + method_text + "' (ori, role, cot or icl)");
    std::vector<prompts::IclExample> examples;
    if (*method == baselines::BaselineMethod::icl) {
        if (!s.icl_store) throw ConfigError("the icl baseline needs --icl-store <file>");
        examples = prompts::load_icl_store(*s.icl_store);
        if (examples.empty()) throw ConfigError("icl store " + s.icl_store->string() + " holds no examples");
    }
    baselines::BaselineConfig config;
    config.model = s.model;
    config.temperature = s.temperature;
    config.max_tokens = s.max_tokens;
    config.retry = retry_policy(s);
    config.icl_examples = static_cast<std::size_t>(icl_examples);

    const auto selected = select_prompts(s, sel);
    const auto ranges = load_ranges(s);
    auto backend = make_backend(s);
    const auto system = *eval::system_kind_from_string(baselines::to_string(*method));
    return run_batch(
        s, selected, system,
        [&](const prompts::UserPrompt& p) {
            return baselines::run_baseline(*method, p, *backend, examples, ranges, config);
        },
        out, err);
}

int cmd_validate(const Settings& s, const std::string& file, const std::string& prompt_id, bool as_json,
                 std::ostream& out, std::ostream& err) {
    const auto text = read_file(existing_path("abc file", file));
    std::optional<prompts::UserPrompt> prompt;
    if (!prompt_id.empty()) prompt = find_prompt(load_prompts(s), prompt_id);
    const auto ranges = load_ranges(s);

    abc::Warnings warnings;
    abc::Tune tune;
    try {
        tune = abc::parse_tune(text, &warnings);
    } catch (const abc::ParseError& e) {
        err << file << ":" << e.line() << ":" << e.column() << ": parse error: " << e.what() << "\n";
        return kExitConfig;
    }
    auto report = analysis::validate(tune, prompt ? &prompt->attributes : nullptr, ranges);
    report.warnings.insert(report.warnings.begin(), warnings.begin(), warnings.end());
    if (as_json) {
        out << json(report).dump(2) << "\n";
    } else {
        out << file << ": " << tune.voices.size() << " voice(s), M:" << tune.header.meter.numerator << "/"
            << tune.header.meter.denominator << ", K:" << abc::key_to_string(tune.header.key) << "\n";
        print_report(report, out);
    }
    return report.has_problems() ? kExitIncomplete : kExitOk;
}

std::string fmt_optional(const std::optional<double>& v) {
    if (!v) return "-";
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << *v;
    return s.str();
}

int cmd_eval(const Settings& s, const std::vector<std::string>& files, const std::string& group_by_text,
             bool exclude_empty, bool as_json, const std::string& ab_export, const std::string& ab_systems,
             bool show_prompt, std::ostream& out, std::ostream& err) {
    const auto group_by = eval::group_by_from_string(group_by_text);
    if (!group_by) throw ConfigError("--group-by must be none, system, model or system,model");
    std::vector<eval::RunRecord> records;
    for (const auto& f : files) {
        auto more = eval::load_runs(existing_path("runs file", f));
        records.insert(records.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
    }
    if (records.empty()) throw ConfigError("no run records to evaluate");

    const auto groups = eval::summarize(records, *group_by, exclude_empty);
    if (as_json) {
        json rows = json::array();
        for (const auto& g : groups) {
            json row = {{"n_runs", g.n_runs},
                        {"success_rate", g.success.value()},
                        {"success_count", g.success.count},
                        {"mean_abc_length", g.mean_abc_length},
                        {"skipped_without_validation", g.skipped_without_validation}};
            row["system"] = g.system ? json(std::string(eval::to_string(*g.system))) : json(nullptr);
            row["model"] = g.model ? json(*g.model) : json(nullptr);
            row["key_match"] = g.key_match ? json(*g.key_match) : json(nullptr);
            row["bar_count_match"] = g.bar_count_match ? json(*g.bar_count_match) : json(nullptr);
            row["chord_adherence"] = g.chord_adherence ? json(*g.chord_adherence) : json(nullptr);
            rows.push_back(row);
        }
        out << rows.dump(2) << "\n";
    } else {
        out << std::left << std::setw(8) << "system" << std::setw(16) << "model" << std::right << std::setw(6) << "runs"
            << std::setw(9) << "success" << std::setw(11) << "mean_len" << std::setw(8) << "key" << std::setw(8)
            << "bars" << std::setw(8) << "chords" << "\n";
        for (const auto& g : groups) {
            std::ostringstream mean;
            mean << std::fixed << std::setprecision(3) << g.mean_abc_length;
            out << std::left << std::setw(8) << (g.system ? std::string(eval::to_string(*g.system)) : "*")
                << std::setw(16) << g.model.value_or("*") << std::right << std::setw(6) << g.n_runs << std::setw(9)
                << g.success.str() << std::setw(11) << mean.str() << std::setw(8) << fmt_optional(g.key_match)
                << std::setw(8) << fmt_optional(g.bar_count_match) << std::setw(8)
                << fmt_optional(g.chord_adherence) << "\n";
        }
    }

    if (!ab_export.empty()) {
        const auto comma = ab_systems.find(',');
        const auto sys_a = eval::system_kind_from_string(ab_systems.substr(0, comma));
        const auto sys_b =
            comma == std::string::npos ? std::nullopt : eval::system_kind_from_string(ab_systems.substr(comma + 1));
        if (!sys_a || !sys_b || *sys_a == *sys_b) throw ConfigError("--ab-systems needs two systems, e.g. multi,ori");
        std::vector<eval::RunRecord> a, b;
        for (const auto& r : records) {
            if (r.system == *sys_a) a.push_back(r);
            if (r.system == *sys_b) b.push_back(r);
        }
        try {
            const auto pairing = eval::export_ab_pairs(a, b, s.seed, show_prompt);
            eval::write_ab_export(pairing, fs::absolute(ab_export));
            err << "wrote " << pairing.manifest.size() << " A/B pairs to " << ab_export << "\n";
        } catch (const eval::NoOverlap& e) {
            err << "A/B export: " << e.what() << "\n";
            return kExitIncomplete;
        }
    }
    return kExitOk;
}

int cmd_prompts_list(const Settings& s, std::ostream& out) {
    for (const auto& p : load_prompts(s)) out << p.id << "\t" << p.attributes.name << "\n";
    return kExitOk;
}

int cmd_prompts_expand(const Settings& s, int n, std::ostream& out, std::ostream& err) {
    if (!s.prompts) throw ConfigError("prompts expand needs --prompts <file> to grow");
    auto backend = make_backend(s);
    auto set = load_prompts(s);
    prompts::ExpandOptions options;
    options.seed = s.seed;
    options.model = s.model;
    options.temperature = s.temperature;
    options.retry = retry_policy(s);
    options.max_calls = static_cast<std::size_t>(n);
    std::vector<std::string> warnings;
    const auto added = prompts::expand_prompts(set, static_cast<std::size_t>(n), *backend, options, &warnings);
    for (const auto& w : warnings) err << "warning: " << w << "\n";
    set.insert(set.end(), added.begin(), added.end());
    prompts::save_prompt_set(set, *s.prompts);
    for (const auto& p : added) out << p.id << "\t" << p.attributes.name << "\n";
    if (added.size() < static_cast<std::size_t>(n)) {
        err << "generated " << added.size() << " of " << n << " requested prompts\n";
        return kExitIncomplete;
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-agent ABC music composition with LLM backends", "composerx"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for all subcommands");

    FlagStore flags;
    PromptSelection sel;
    std::string method;
    int icl_examples = 1;
    std::string abc_file;
    std::string validate_prompt;
    bool as_json = false;
    std::vector<std::string> run_files;
    std::string group_by = "system,model";
    bool exclude_empty = false;
    std::string ab_export;
    std::string ab_systems = "multi,ori";
    bool show_prompt = false;
    int expand_n = 0;

    auto add_selection = [&](CLI::App* sub) {
        sub->add_option("prompt", sel.prompt_id, "Prompt id from the prompt set");
        sub->add_option("--text", sel.text, "Inline prompt text instead of a prompt id");
        sub->add_flag("--all", sel.all, "Run every prompt of the set");
    };

    auto* compose = app.add_subcommand("compose", "Run the multi-agent composition pipeline");
    add_selection(compose);
    flags.add(compose, kBackendSettings);
    flags.add(compose, kOrchestratorSettings);
    flags.add(compose, {"prompts", "ranges"});
    flags.add(compose, kRunSettings);
    flags.add_config(compose);

    auto* baseline = app.add_subcommand("baseline", "Run a single-agent baseline (ori, role, cot, icl)");
    baseline->add_option("method", method, "ori, role, cot or icl")->required();
    add_selection(baseline);
    baseline->add_option("--icl-examples", icl_examples, "Examples per icl request")->check(CLI::PositiveNumber);
    flags.add(baseline, kBackendSettings);
    flags.add(baseline, {"prompts", "ranges", "icl_store"});
    flags.add(baseline, kRunSettings);
    flags.add_config(baseline);

    auto* validate = app.add_subcommand("validate", "Check an ABC file for bar, range and key problems");
    validate->add_option("file", abc_file, "ABC file")->required();
    validate->add_option("--prompt", validate_prompt, "Compare against this prompt's attributes");
    validate->add_flag("--json", as_json, "Print the report as JSON");
    flags.add(validate, {"prompts", "ranges"});
    flags.add_config(validate);

    auto* evaluate = app.add_subcommand("eval", "Summarize run records");
    evaluate->add_option("runs", run_files, "runs.jsonl files")->required();
    evaluate->add_option("--group-by", group_by, "none, system, model or system,model");
    evaluate->add_flag("--exclude-empty", exclude_empty, "Leave runs without ABC out of the mean length");
    evaluate->add_flag("--json", as_json, "Print the summary as JSON");
    evaluate->add_option("--ab-export", ab_export, "Write blinded A/B pairs to this directory");
    evaluate->add_option("--ab-systems", ab_systems, "The two systems to pair, e.g. multi,ori");
    evaluate->add_flag("--show-prompt", show_prompt, "Mark prompts as shown to raters in the manifest");
    flags.add(evaluate, {"seed"});
    flags.add_config(evaluate);

    auto* prompts_cmd = app.add_subcommand("prompts", "List or grow a prompt set");
    prompts_cmd->require_subcommand(1);
    auto* list = prompts_cmd->add_subcommand("list", "Print prompt ids and names");
    flags.add(list, {"prompts"});
    flags.add_config(list);
    auto* expand = prompts_cmd->add_subcommand("expand", "Generate new prompts from the set with the backend");
    expand->add_option("n", expand_n, "Number of prompts to add")->required()->check(CLI::PositiveNumber);
    flags.add(expand, kBackendSettings);
    flags.add(expand, {"prompts", "seed"});
    flags.add_config(expand);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        const auto settings = resolve_settings(flags);
        if (compose->parsed()) return cmd_compose(settings, sel, out, err);
        if (baseline->parsed()) return cmd_baseline(settings, method, sel, icl_examples, out, err);
        if (validate->parsed()) return cmd_validate(settings, abc_file, validate_prompt, as_json, out, err);
        if (evaluate->parsed()) {
            return cmd_eval(settings, run_files, group_by, exclude_empty, as_json, ab_export, ab_systems, show_prompt,
                            out, err);
        }
        if (list->parsed()) return cmd_prompts_list(settings, out);
        if (expand->parsed()) return cmd_prompts_expand(settings, expand_n, out, err);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}

}  // namespace composerx::cli
