#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "sier/backends.hpp"
#include "sier/landscape.hpp"
#include "sier/metrics.hpp"
#include "sier/runner.hpp"
#include "sier/suite.hpp"

namespace {

using namespace sier;

std::string unescape(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            char c = s[++i];
            if (c == 'n') out += '\n';
            else if (c == 't') out += '\t';
            else if (c == '\\') out += '\\';
            else out += c;
        } else {
            out += s[i];
        }
    }
    return out;
}

/// Flat key=value config file; '#' starts a comment.
void apply_config_file(EngineConfig& config, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config file not readable: " + path);
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos) {
                throw std::runtime_error("config line " + std::to_string(line_number) +
                                         ": expected key = value");
            }
            continue;
        }
        auto trim = [](std::string v) {
            auto b = v.find_first_not_of(" \t\r");
            auto e = v.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        auto bad = [&](const std::string& why) {
            return std::runtime_error("config line " + std::to_string(line_number) + " (" +
                                      key + "): " + why);
        };
        if (key == "theta") config.theta = std::stod(value);
        else if (key == "bandwidth") config.bandwidth = std::stod(value);
        else if (key == "sample_size") config.sample_size = std::stoi(value);
        else if (key == "population_size") config.population_size = std::stoi(value);
        else if (key == "small_batch") config.small_batch = std::stoi(value);
        else if (key == "max_iterations") config.max_iterations = std::stoi(value);
        else if (key == "max_steps") config.max_steps = std::stoi(value);
        else if (key == "max_active_paths") config.max_active_paths = std::stoi(value);
        else if (key == "temperature") config.temperature = std::stod(value);
        else if (key == "top_p") config.top_p = std::stod(value);
        else if (key == "stop_word") config.stop_word = unescape(value);
        else if (key == "end_flag") config.end_flag = unescape(value);
        else if (key == "seed") config.seed = std::stoull(value);
        else if (key == "step_max_tokens") config.step_max_tokens = std::stoi(value);
        else if (key == "final_max_tokens") config.final_max_tokens = std::stoi(value);
        else if (key == "metric") {
            auto m = parse_metric_mode(value);
            if (!m) throw bad("unknown metric mode");
            config.metric = *m;
        } else if (key == "mode") {
            auto m = parse_run_mode(value);
            if (!m) throw bad("unknown run mode");
            config.mode = *m;
        } else if (key == "density_aggregation") {
            auto a = parse_density_aggregation(value);
            if (!a) throw bad("unknown aggregation");
            config.density_aggregation = *a;
        } else {
            throw bad("unknown key");
        }
    }
}

std::shared_ptr<const PlantedLandscape> load_landscape_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("landscape file not readable: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return std::make_shared<const PlantedLandscape>(PlantedLandscape::from_json(buffer.str()));
}

int cmd_run(const std::string& config_path, const std::string& dataset,
            const std::string& mode_name, const std::string& out_dir, std::uint64_t seed,
            bool seed_set, int workers, bool keep_going, std::optional<double> theta,
            std::optional<int> k, std::optional<double> bandwidth,
            const std::string& backend, const std::string& landscape_path,
            const std::string& density_dump) {
    EngineConfig config;
    if (!config_path.empty()) apply_config_file(config, config_path);
    if (!mode_name.empty()) {
        auto mode = parse_run_mode(mode_name);
        if (!mode) {
            std::cerr << "unknown mode: " << mode_name << "\n";
            return 2;
        }
        config.mode = *mode;
    }
    if (seed_set) config.seed = seed;
    if (theta) config.theta = *theta;
    if (k) config.sample_size = *k;
    if (bandwidth) config.bandwidth = *bandwidth;

    auto errors = validate_config(config);
    if (!errors.empty()) {
        for (const auto& e : errors) std::cerr << "config error: " << e.field << ": "
                                               << e.constraint << "\n";
        return 2;
    }

    RunOptions options;
    options.config = config;
    options.dataset_path = dataset;
    options.out_dir = out_dir;
    options.workers = workers;
    options.keep_going = keep_going;
    if (!density_dump.empty()) options.density_dump_path = density_dump;

    std::unique_ptr<Generator> generator;
    std::unique_ptr<Evaluator> evaluator;
    if (backend == "mock") {
        if (landscape_path.empty()) {
            std::cerr << "mock backend needs --landscape <file>\n";
            return 2;
        }
        auto landscape = load_landscape_file(landscape_path);
        options.backend_label = "mock:" + landscape->spec().name;
        generator = std::make_unique<MockGenerator>(landscape);
        evaluator = std::make_unique<MockEvaluator>(landscape);
    } else if (backend == "http") {
        HttpBackendOptions http = HttpBackendOptions::from_env();
        if (http.gen_url.empty() || http.eval_url.empty()) {
            std::cerr << "http backend needs GEN_URL and EVAL_URL\n";
            return 2;
        }
        options.backend_label = "http:" + http.gen_url + "," + http.eval_url;
        generator = std::make_unique<HttpGenerator>(http);
        evaluator = std::make_unique<HttpEvaluator>(http, config.stop_word);
    } else {
        std::cerr << "unknown backend: " << backend << "\n";
        return 2;
    }

    RunArtifacts artifacts;
    try {
        artifacts = run_command(options, *generator, *evaluator);
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return 2;
    }
    std::cout << "results:  " << artifacts.results_path << "\n"
              << "manifest: " << artifacts.manifest_path << "\n"
              << "ok " << artifacts.ok << " (resumed " << artifacts.resumed << "), errored "
              << artifacts.errored << ", skipped " << artifacts.skipped << "\n";

    auto results = load_results(artifacts.results_path);
    std::vector<MethodSummary> rows = {
        summarize(to_string(config.mode), results, config.theta)};
    std::cout << render_summary_table(rows);
    return artifacts.all_ok() ? 0 : 1;
}

LandscapeSpec builtin_landscape(const std::string& name) {
    for (const auto& land : default_suite().landscapes) {
        if (land.spec.name == name) return land.spec;
    }
    throw std::runtime_error("unknown builtin landscape: " + name +
                             " (have control, single_trap, dual_trap_deep)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Density-guided population search over step-by-step solution generation"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run one mode over a dataset");
    std::string config_path, dataset, mode_name, out_dir = "out", backend = "mock";
    std::string landscape_path, density_dump;
    std::uint64_t seed = 0;
    bool keep_going = false;
    int workers = 1;
    double theta_override = -1.0, bandwidth_override = -1.0;
    int k_override = -1;
    run->add_option("--config", config_path, "Flat key=value config file");
    run->add_option("--dataset", dataset, "JSONL dataset (id, question, answer)")->required();
    run->add_option("--mode", mode_name,
                    "sier | sier_no_fitness | sier_no_density | sier_no_evolution | cot | rgs");
    run->add_option("--out", out_dir, "Output directory");
    auto* seed_opt = run->add_option("--seed", seed, "Global seed");
    run->add_option("--workers", workers, "Problem-level worker threads");
    run->add_flag("--keep-going", keep_going, "Continue past errored problems");
    run->add_option("--theta", theta_override, "Override quality threshold");
    run->add_option("--k", k_override, "Override sample size");
    run->add_option("--bandwidth", bandwidth_override, "Override KDE bandwidth");
    run->add_option("--backend", backend, "mock | http");
    run->add_option("--landscape", landscape_path, "Landscape file for the mock backend");
    run->add_option("--dump-density", density_dump,
                    "Write per-problem token histograms (JSONL) to this file");

    // landscape
    auto* land_cmd = app.add_subcommand("landscape", "Generate a planted landscape file");
    std::string land_spec_path, land_name = "dual_trap_deep", land_out = "landscape.json";
    std::uint64_t land_seed = 303;
    land_cmd->add_option("--spec", land_spec_path, "Landscape spec JSON (overrides --name)");
    land_cmd->add_option("--name", land_name, "Builtin spec: control | single_trap | dual_trap_deep");
    land_cmd->add_option("--seed", land_seed, "Landscape seed");
    land_cmd->add_option("--out", land_out, "Output file");

    // mockdata
    auto* mock_cmd = app.add_subcommand("mockdata", "Emit a dataset of trials for a landscape");
    std::string mock_landscape, mock_out = "dataset.jsonl";
    int mock_count = 20;
    mock_cmd->add_option("--landscape", mock_landscape, "Landscape file")->required();
    mock_cmd->add_option("--count", mock_count, "Number of problems");
    mock_cmd->add_option("--out", mock_out, "Output dataset path");

    // suite
    auto* suite_cmd = app.add_subcommand("suite", "Paired-seed comparison across modes");
    std::string suite_path, suite_out_dir = "out";
    int suite_trials = -1, suite_workers = 1;
    suite_cmd->add_option("--spec", suite_path, "Suite spec JSON (defaults to the builtin suite)");
    suite_cmd->add_option("--out", suite_out_dir, "Output directory");
    suite_cmd->add_option("--trials", suite_trials, "Override trial count");
    suite_cmd->add_option("--workers", suite_workers, "Trial-level worker threads");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Theta sweep over the suite (mode=sier)");
    std::string sweep_suite_path, sweep_out_dir = "out";
    std::vector<double> sweep_thetas = {0.5, 0.6, 0.7, 0.8, 0.9, 0.99};
    int sweep_trials = -1, sweep_workers = 1;
    sweep_cmd->add_option("--spec", sweep_suite_path, "Suite spec JSON");
    sweep_cmd->add_option("--out", sweep_out_dir, "Output directory");
    sweep_cmd->add_option("--thetas", sweep_thetas, "Theta values");
    sweep_cmd->add_option("--trials", sweep_trials, "Override trial count");
    sweep_cmd->add_option("--workers", sweep_workers, "Trial-level worker threads");

    // report
    auto* report_cmd = app.add_subcommand("report", "Aggregate results files into one table");
    std::vector<std::string> report_files;
    std::string report_out;
    double report_theta = 0.99;
    report_cmd->add_option("files", report_files, "Results files")->required();
    report_cmd->add_option("--out", report_out, "Also write JSONL summary here");
    report_cmd->add_option("--theta", report_theta, "Theta for the identification report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) {
            return cmd_run(config_path, dataset, mode_name, out_dir, seed,
                           seed_opt->count() > 0, workers, keep_going,
                           theta_override >= 0 ? std::optional<double>(theta_override)
                                               : std::nullopt,
                           k_override > 0 ? std::optional<int>(k_override) : std::nullopt,
                           bandwidth_override > 0 ? std::optional<double>(bandwidth_override)
                                                  : std::nullopt,
                           backend, landscape_path, density_dump);
        }
        if (land_cmd->parsed()) {
            LandscapeSpec spec;
            if (!land_spec_path.empty()) {
                std::ifstream in(land_spec_path);
                if (!in) throw std::runtime_error("spec not readable: " + land_spec_path);
                std::stringstream buffer;
                buffer << in.rdbuf();
                spec = landscape_spec_from_json(buffer.str());
            } else {
                spec = builtin_landscape(land_name);
            }
            PlantedLandscape landscape = build_planted_landscape(spec, land_seed);
            std::ofstream out(land_out, std::ios::trunc);
            out << landscape.to_json() << "\n";
            std::cout << "wrote " << land_out << " (greedy path "
                      << (landscape.local_optima().empty() ? "reaches gold" : "hits a trap")
                      << ")\n";
            return 0;
        }
        if (mock_cmd->parsed()) {
            auto landscape = load_landscape_file(mock_landscape);
            std::ofstream out(mock_out, std::ios::trunc);
            for (int i = 0; i < mock_count; ++i) {
                nlohmann::ordered_json j;
                j["id"] = landscape->spec().name + "#" + std::to_string(i);
                j["question"] = "Reconstruct the hidden derivation for puzzle " +
                                landscape->spec().name + " and state the final value.";
                j["answer"] = landscape->spec().gold_answer;
                out << j.dump() << "\n";
            }
            std::cout << "wrote " << mock_out << " (" << mock_count << " problems)\n";
            return 0;
        }
        if (suite_cmd->parsed()) {
            SuiteSpec spec = suite_path.empty() ? default_suite() : load_suite(suite_path);
            if (suite_trials > 0) spec.trials = suite_trials;
            EngineConfig config;
            config.seed = spec.seed_base;
            SuiteReport report = run_suite(spec, config, suite_workers);
            std::string table = render_suite_table(report);
            std::cout << table;
            std::filesystem::create_directories(suite_out_dir);
            std::ofstream txt(std::filesystem::path(suite_out_dir) / (spec.name + ".suite.txt"));
            txt << table;
            std::ofstream jsonl(std::filesystem::path(suite_out_dir) /
                                (spec.name + ".suite.jsonl"));
            jsonl << suite_report_jsonl(report);
            return 0;
        }
        if (sweep_cmd->parsed()) {
            SuiteSpec spec =
                sweep_suite_path.empty() ? default_suite() : load_suite(sweep_suite_path);
            if (sweep_trials > 0) spec.trials = sweep_trials;
            EngineConfig config;
            config.seed = spec.seed_base;
            auto rows = run_theta_sweep(spec, config, sweep_thetas, sweep_workers);
            std::string table = render_sweep_table(rows);
            std::cout << table;
            std::filesystem::create_directories(sweep_out_dir);
            std::ofstream txt(std::filesystem::path(sweep_out_dir) / (spec.name + ".sweep.txt"));
            txt << table;
            return 0;
        }
        if (report_cmd->parsed()) {
            std::vector<MethodSummary> rows;
            for (const auto& file : report_files) {
                auto results = load_results(file);
                std::string label = std::filesystem::path(file).filename().string();
                rows.push_back(summarize(label, results, report_theta));
            }
            std::string table = render_summary_table(rows);
            std::cout << table;
            if (!report_out.empty()) {
                std::ofstream out(report_out, std::ios::trunc);
                out << summary_jsonl(rows);
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
