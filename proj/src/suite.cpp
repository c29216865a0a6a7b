#include "sier/suite.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace sier {

SuiteSpec default_suite() {
    SuiteSpec suite;
    suite.name = "default";
    suite.trials = 200;
    suite.seed_base = 1;

    LandscapeSpec control;
    control.name = "control";
    suite.landscapes.push_back({control, 101});

    LandscapeSpec single;
    single.name = "single_trap";
    single.traps = {{3, 0.90}};
    suite.landscapes.push_back({single, 202});

    // The earlier fork carries the weaker trap, so the shared gold/trap
    // prefix stays the per-step quality maximum until its own fork.
    LandscapeSpec dual;
    dual.name = "dual_trap_deep";
    dual.traps = {{2, 0.92}, {1, 0.89}};
    suite.landscapes.push_back({dual, 303});

    return suite;
}

std::string suite_to_json(const SuiteSpec& spec) {
    nlohmann::ordered_json j;
    j["name"] = spec.name;
    j["trials"] = spec.trials;
    j["seed_base"] = spec.seed_base;
    j["modes"] = nlohmann::ordered_json::array();
    for (RunMode m : spec.modes) j["modes"].push_back(to_string(m));
    j["landscapes"] = nlohmann::ordered_json::array();
    for (const auto& land : spec.landscapes) {
        nlohmann::ordered_json entry;
        entry["seed"] = land.seed;
        entry["spec"] = nlohmann::ordered_json::parse(landscape_spec_to_json(land.spec));
        j["landscapes"].push_back(entry);
    }
    return j.dump(2);
}

SuiteSpec load_suite(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("suite spec not readable: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    SuiteSpec spec;
    spec.name = j.value("name", spec.name);
    spec.trials = j.value("trials", spec.trials);
    spec.seed_base = j.value("seed_base", spec.seed_base);
    if (j.contains("modes")) {
        spec.modes.clear();
        for (const auto& m : j["modes"]) {
            auto mode = parse_run_mode(m.get<std::string>());
            if (!mode) throw std::runtime_error("suite spec: unknown mode " + m.dump());
            spec.modes.push_back(*mode);
        }
    }
    if (j.contains("landscapes")) {
        for (const auto& entry : j["landscapes"]) {
            SuiteLandscape land;
            land.seed = entry.value("seed", std::uint64_t(0));
            land.spec = landscape_spec_from_json(entry.at("spec").dump());
            spec.landscapes.push_back(std::move(land));
        }
    }
    if (spec.landscapes.empty()) throw std::runtime_error("suite spec: no landscapes");
    return spec;
}

namespace {

ProblemRecord trial_problem(const PlantedLandscape& landscape, const std::string& name,
                            int trial) {
    ProblemRecord problem;
    problem.id = name + "#" + std::to_string(trial);
    problem.question = "Reconstruct the hidden derivation for puzzle " + name +
                       " and state the final value.";
    problem.gold_answer = landscape.spec().gold_answer;
    return problem;
}

/// Index-dispensed parallel for; results land at their own index, so worker
/// count never changes the aggregate.
void parallel_trials(int trials, int workers, auto&& body) {
    if (workers <= 1) {
        for (int t = 0; t < trials; ++t) body(t);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&] {
        while (true) {
            int t = next.fetch_add(1);
            if (t >= trials) break;
            body(t);
        }
    };
    std::vector<std::thread> pool;
    int count = std::min(workers, trials);
    pool.reserve(count);
    for (int w = 0; w < count; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

}  // namespace

std::vector<ProblemResult> run_suite_cell(const PlantedLandscape& landscape,
                                          const std::string& landscape_name, RunMode mode,
                                          int trials, const EngineConfig& base_config,
                                          int workers) {
    EngineConfig config = base_config;
    config.mode = mode;

    auto shared = std::make_shared<const PlantedLandscape>(landscape);
    std::vector<ProblemResult> results(trials);
    parallel_trials(trials, workers, [&](int t) {
        MockGenerator generator(shared);
        MockEvaluator evaluator(shared);
        ProblemRecord problem = trial_problem(landscape, landscape_name, t);
        RunOutcome outcome = run_problem(problem, config, generator, evaluator);
        results[t] = to_problem_result(problem, outcome);
    });
    return results;
}

SuiteReport run_suite(const SuiteSpec& spec, const EngineConfig& base_config, int workers) {
    SuiteReport report;
    for (const auto& land : spec.landscapes) {
        PlantedLandscape landscape = build_planted_landscape(land.spec, land.seed);
        landscape.verify();  // ground truth must match fresh enumeration
        for (RunMode mode : spec.modes) {
            auto results = run_suite_cell(landscape, land.spec.name, mode, spec.trials,
                                          base_config, workers);
            SuiteRow row;
            row.landscape = land.spec.name;
            row.mode = mode;
            EngineConfig cfg = base_config;
            cfg.mode = mode;
            row.summary = summarize(to_string(mode), results, cfg.theta);
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

std::vector<ThetaSweepRow> run_theta_sweep(const SuiteSpec& spec,
                                           const EngineConfig& base_config,
                                           const std::vector<double>& thetas, int workers) {
    std::vector<ThetaSweepRow> rows;
    for (double theta : thetas) {
        EngineConfig config = base_config;
        config.theta = theta;
        config.mode = RunMode::Sier;

        std::vector<ProblemResult> pooled;
        for (const auto& land : spec.landscapes) {
            PlantedLandscape landscape = build_planted_landscape(land.spec, land.seed);
            auto results = run_suite_cell(landscape, land.spec.name, RunMode::Sier,
                                          spec.trials, config, workers);
            pooled.insert(pooled.end(), results.begin(), results.end());
        }
        MethodSummary s = summarize("sier", pooled, theta);
        rows.push_back({theta, s.trigger_rate, s.mean_tokens, s.pass_k, s.prm_k});
    }
    return rows;
}

std::string render_suite_table(const SuiteReport& report) {
    std::vector<MethodSummary> rows;
    std::string out;
    std::string current;
    for (const auto& row : report.rows) {
        if (row.landscape != current) {
            if (!rows.empty()) {
                out += render_summary_table(rows);
                rows.clear();
            }
            current = row.landscape;
            out += "== " + current + " ==\n";
        }
        rows.push_back(row.summary);
    }
    if (!rows.empty()) out += render_summary_table(rows);
    return out;
}

std::string render_sweep_table(const std::vector<ThetaSweepRow>& rows) {
    std::string out = "theta   trigger  tokens     pass@k  prm@k\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-7.2f %-8.3f %-10.1f %-7.3f %-7.3f\n", r.theta,
                      r.trigger_rate, r.mean_tokens, r.pass_k, r.prm_k);
        out += buf;
    }
    return out;
}

std::string suite_report_jsonl(const SuiteReport& report) {
    std::string out;
    for (const auto& row : report.rows) {
        nlohmann::ordered_json j;
        j["landscape"] = row.landscape;
        j["mode"] = to_string(row.mode);
        j["pass_at_k"] = row.summary.pass_k;
        j["major_at_k"] = row.summary.major_k;
        j["prm_at_k"] = row.summary.prm_k;
        j["diversity"] = row.summary.diversity;
        j["hit_rate"] = row.summary.hit_rate;
        j["mean_tokens"] = row.summary.mean_tokens;
        j["evolution_trigger_rate"] = row.summary.trigger_rate;
        out += j.dump();
        out += "\n";
    }
    return out;
}

}  // namespace sier
