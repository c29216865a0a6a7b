#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sier/landscape.hpp"
#include "sier/metrics.hpp"
#include "sier/types.hpp"

namespace sier {

struct SuiteLandscape {
    LandscapeSpec spec;
    std::uint64_t seed = 0;
};

/// A named batch of planted landscapes plus the trial/mode grid run over
/// them. Every mode sees identical rng streams per trial index, so the
/// comparisons are paired by seed.
struct SuiteSpec {
    std::string name = "default";
    std::vector<SuiteLandscape> landscapes;
    int trials = 200;
    std::uint64_t seed_base = 1;
    std::vector<RunMode> modes = {RunMode::Sier,          RunMode::SierNoFitness,
                                  RunMode::SierNoDensity, RunMode::SierNoEvolution,
                                  RunMode::Rgs,           RunMode::Cot};
};

/// Three landscapes: a no-trap control, a single-trap, and the dual-trap
/// deep landscape used by the escape comparison.
SuiteSpec default_suite();

SuiteSpec load_suite(const std::string& path);
std::string suite_to_json(const SuiteSpec& spec);

struct SuiteRow {
    std::string landscape;
    RunMode mode = RunMode::Sier;
    MethodSummary summary;
};

struct SuiteReport {
    std::vector<SuiteRow> rows;
};

/// Runs every (landscape, mode) cell over paired trials. Landscape ground
/// truth is re-verified before any trial runs.
SuiteReport run_suite(const SuiteSpec& spec, const EngineConfig& base_config,
                      int workers = 1);

/// As run_suite but returns the raw per-problem results for one cell.
std::vector<ProblemResult> run_suite_cell(const PlantedLandscape& landscape,
                                          const std::string& landscape_name, RunMode mode,
                                          int trials, const EngineConfig& base_config,
                                          int workers = 1);

struct ThetaSweepRow {
    double theta = 0.0;
    double trigger_rate = 0.0;
    double mean_tokens = 0.0;
    double pass_k = 0.0;
    double prm_k = 0.0;
};

/// Runs mode=sier over the whole suite once per theta.
std::vector<ThetaSweepRow> run_theta_sweep(const SuiteSpec& spec,
                                           const EngineConfig& base_config,
                                           const std::vector<double>& thetas,
                                           int workers = 1);

std::string render_suite_table(const SuiteReport& report);
std::string render_sweep_table(const std::vector<ThetaSweepRow>& rows);
std::string suite_report_jsonl(const SuiteReport& report);

}  // namespace sier
