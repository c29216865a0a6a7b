#include "sier/runner.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "sier/density.hpp"
#include "sier/selection.hpp"

namespace sier {

std::vector<ProblemRecord> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("dataset not readable: " + path);
    std::vector<ProblemRecord> records;
    std::set<std::string> ids;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::runtime_error("dataset line " + std::to_string(line_number) +
                                     ": malformed JSON: " + e.what());
        }
        ProblemRecord record;
        try {
            record.id = j.at("id").get<std::string>();
            record.question = j.at("question").get<std::string>();
            record.gold_answer = j.at("answer").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("dataset line " + std::to_string(line_number) +
                                     ": missing or invalid field: " + e.what());
        }
        if (record.question.empty()) {
            throw std::runtime_error("dataset line " + std::to_string(line_number) +
                                     ": empty question");
        }
        if (!ids.insert(record.id).second) {
            throw std::runtime_error("dataset line " + std::to_string(line_number) +
                                     ": duplicate id \"" + record.id + "\"");
        }
        records.push_back(std::move(record));
    }
    return records;
}

std::string result_line(const ProblemRecord& problem, const EngineConfig& config,
                        const RunOutcome& outcome) {
    nlohmann::ordered_json j;
    j["id"] = problem.id;
    j["mode"] = to_string(config.mode);
    j["config_hash"] = config_hash(config);
    j["status"] = "ok";
    j["gold"] = normalize_tag(problem.gold_answer);

    nlohmann::ordered_json selected = nlohmann::ordered_json::array();
    for (const auto& ind : outcome.selected.members) {
        selected.push_back(nlohmann::ordered_json::parse(serialize_individual(ind)));
    }
    j["selected"] = std::move(selected);

    nlohmann::ordered_json history_tags = nlohmann::ordered_json::array();
    for (const auto& ind : outcome.history.members) {
        if (ind.tag) {
            history_tags.push_back(*ind.tag);
        } else {
            history_tags.push_back(nullptr);
        }
    }
    j["history_tags"] = std::move(history_tags);

    j["evolution_triggered"] = outcome.meta.evolution_triggered;
    j["max_init_quality"] = outcome.meta.max_init_quality;

    const SolveMetadata& m = outcome.meta;
    j["costs"] = {{"init_tokens", m.init_cost.tokens},
                  {"evolution_tokens", m.evolution_cost.tokens},
                  {"finalize_tokens", m.finalize_cost.tokens},
                  {"total_tokens", m.total_tokens()}};
    // Logical counters only; wall-clock timing lives in the manifest so
    // results files stay byte-identical across reruns and worker counts.
    j["timing"] = {{"gen_calls", m.total_gen_calls()},
                   {"eval_calls", m.total_eval_calls()},
                   {"iterations", m.iterations},
                   {"steps", m.steps},
                   {"finalizations", m.finalizations}};
    return j.dump();
}

namespace {

std::string iso_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&t));
    return buf;
}

struct ExistingResults {
    std::vector<std::string> lines;
    std::set<std::string> ok_ids;
};

ExistingResults read_existing(const std::string& path) {
    ExistingResults existing;
    std::ifstream in(path);
    if (!in) return existing;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            nlohmann::json j = nlohmann::json::parse(line);
            if (j.value("status", "") == "ok") {
                existing.ok_ids.insert(j.at("id").get<std::string>());
                existing.lines.push_back(line);
            }
        } catch (const nlohmann::json::exception&) {
            // Half-written trailing line from an interrupt; drop it.
        }
    }
    return existing;
}

}  // namespace

RunArtifacts run_command(const RunOptions& options, Generator& generator,
                         Evaluator& evaluator) {
    namespace fs = std::filesystem;
    fs::create_directories(options.out_dir);

    std::vector<ProblemRecord> problems = load_dataset(options.dataset_path);
    std::string stem = fs::path(options.dataset_path).stem().string();
    RunArtifacts artifacts;
    artifacts.results_path = (fs::path(options.out_dir) /
                              (stem + "." + to_string(options.config.mode) + ".results.jsonl"))
                                 .string();
    artifacts.manifest_path = (fs::path(options.out_dir) /
                               (stem + "." + to_string(options.config.mode) + ".manifest.json"))
                                  .string();

    ExistingResults existing = read_existing(artifacts.results_path);
    std::string started_at = iso_timestamp();

    struct Slot {
        bool done = false;
        bool errored = false;
        std::string line;
        std::string error;
    };
    std::vector<Slot> slots(problems.size());
    std::vector<int> todo;
    for (int i = 0; i < static_cast<int>(problems.size()); ++i) {
        if (existing.ok_ids.count(problems[i].id)) {
            slots[i].done = true;  // kept from the previous run
        } else {
            todo.push_back(i);
        }
    }
    artifacts.resumed = static_cast<int>(problems.size() - todo.size());

    std::atomic<int> next{0};
    std::atomic<bool> abort{false};
    std::mutex density_mutex;
    std::ofstream density_dump;
    if (options.density_dump_path) {
        density_dump.open(*options.density_dump_path);
    }

    auto work = [&](int index) {
        const ProblemRecord& problem = problems[index];
        try {
            RunOutcome outcome = run_problem(problem, options.config, generator, evaluator);
            slots[index].line = result_line(problem, options.config, outcome);
            if (density_dump.is_open()) {
                DensityLandscape landscape = build_landscape(
                    outcome.history, options.config.stop_word, options.config.bandwidth);
                std::ostringstream buffer;
                dump_landscape(landscape, buffer);
                std::lock_guard lock(density_mutex);
                density_dump << "# problem " << problem.id << "\n" << buffer.str();
            }
        } catch (const std::exception& e) {
            slots[index].errored = true;
            slots[index].error = e.what();
            if (!options.keep_going) abort.store(true);
        }
        slots[index].done = true;
    };

    auto worker = [&] {
        while (!abort.load()) {
            int slot = next.fetch_add(1);
            if (slot >= static_cast<int>(todo.size())) break;
            work(todo[slot]);
        }
    };

    int workers = std::max(1, options.workers);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < std::min<int>(workers, todo.size()); ++w) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) th.join();
    }

    // Single writer, dataset order: resumed lines verbatim, new lines after
    // their problems finish. Problems never reached stay out of the file.
    std::ofstream out(artifacts.results_path, std::ios::trunc);
    for (const auto& line : existing.lines) out << line << "\n";
    nlohmann::ordered_json statuses = nlohmann::ordered_json::object();
    for (int i = 0; i < static_cast<int>(problems.size()); ++i) {
        const Slot& slot = slots[i];
        if (existing.ok_ids.count(problems[i].id)) {
            statuses[problems[i].id] = "ok";
            ++artifacts.ok;
            continue;
        }
        if (!slot.done || (!slot.errored && slot.line.empty())) {
            statuses[problems[i].id] = "skipped";
            ++artifacts.skipped;
        } else if (slot.errored) {
            statuses[problems[i].id] = "errored";
            ++artifacts.errored;
        } else {
            out << slot.line << "\n";
            statuses[problems[i].id] = "ok";
            ++artifacts.ok;
        }
    }
    out.close();

    nlohmann::ordered_json manifest;
    manifest["config_hash"] = config_hash(options.config);
    manifest["dataset"] = options.dataset_path;
    manifest["mode"] = to_string(options.config.mode);
    manifest["backends"] = options.backend_label;
    manifest["seed"] = options.config.seed;
    manifest["workers"] = options.workers;
    manifest["started_at"] = started_at;
    manifest["finished_at"] = iso_timestamp();
    manifest["problems"] = std::move(statuses);
    std::ofstream manifest_out(artifacts.manifest_path, std::ios::trunc);
    manifest_out << manifest.dump(2) << "\n";

    return artifacts;
}

std::vector<ProblemResult> load_results(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("results file not readable: " + path);
    std::vector<ProblemResult> results;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        ProblemResult r;
        r.problem_id = j.at("id").get<std::string>();
        r.gold_tag = j.value("gold", "");
        for (const auto& s : j.at("selected")) {
            Individual ind = deserialize_individual(s.dump());
            r.candidates.emplace_back(ind.tag, ind.quality);
        }
        for (const auto& t : j.at("history_tags")) {
            if (t.is_null()) {
                r.all_tags.push_back(std::nullopt);
            } else {
                r.all_tags.push_back(t.get<std::string>());
            }
        }
        r.evolution_triggered = j.value("evolution_triggered", false);
        r.max_init_quality = j.value("max_init_quality", 0.0);
        r.token_cost = j.at("costs").value("total_tokens", std::int64_t(0));
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace sier
