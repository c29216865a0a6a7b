#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sier/backends.hpp"
#include "sier/search.hpp"
#include "sier/types.hpp"

namespace sier {

/// Per-problem scoring record: the selected candidates as (tag, quality)
/// pairs plus the facts the aggregate metrics need (full generated tag set,
/// initial quality, cost).
struct ProblemResult {
    std::string problem_id;
    std::string gold_tag;  // normalized
    std::vector<std::pair<std::optional<std::string>, double>> candidates;
    std::int64_t token_cost = 0;
    std::vector<std::optional<std::string>> all_tags;  // full set before selection
    bool evolution_triggered = false;
    double max_init_quality = 0.0;
};

ProblemResult to_problem_result(const ProblemRecord& problem, const RunOutcome& outcome);

/// Fraction of problems with at least one candidate tag equal to gold.
double pass_at_k(std::span<const ProblemResult> results);

/// Fraction where the modal candidate tag is gold; frequency ties break by
/// the higher maximum quality among the tied tags, then first appearance.
/// Untagged candidates never vote.
double major_at_k(std::span<const ProblemResult> results);

/// Fraction where the maximum-quality candidate (ties by first appearance)
/// carries the gold tag.
double prm_at_k(std::span<const ProblemResult> results);

/// Mean number of distinct candidate tags per problem; untagged candidates
/// count as one extra bucket at most once.
double diversity(std::span<const ProblemResult> results);

/// pass@k over the full generated set (all_tags) rather than the selection.
double hit_rate(std::span<const ProblemResult> results);

struct IdentificationReport {
    double flagged_fraction = 0.0;    // max init quality ≥ theta
    double unsolved_fraction = 1.0;   // complement
    std::optional<double> success_rate;  // among flagged: candidates contain gold
};

IdentificationReport identification_report(std::span<const ProblemResult> results,
                                           double theta);

/// k independent full generations, each evaluated once; candidates are all k.
/// Consumes the same init-phase rng streams as Engine::init_population so
/// comparisons pair by seed.
RunOutcome run_cot_baseline(const ProblemRecord& problem, const EngineConfig& config,
                            Generator& generator, Evaluator& evaluator);

/// Single path; every step samples k candidates and keeps the quality
/// argmax. No early accept. Produces one final candidate.
RunOutcome run_rgs_baseline(const ProblemRecord& problem, const EngineConfig& config,
                            Generator& generator, Evaluator& evaluator);

/// Unified dispatch across all run modes.
RunOutcome run_problem(const ProblemRecord& problem, const EngineConfig& config,
                       Generator& generator, Evaluator& evaluator);

struct MethodSummary {
    std::string label;
    int problems = 0;
    double pass_k = 0.0;
    double major_k = 0.0;
    double prm_k = 0.0;
    double diversity = 0.0;
    double hit_rate = 0.0;
    double mean_tokens = 0.0;
    double trigger_rate = 0.0;
    IdentificationReport identification;
};

MethodSummary summarize(const std::string& label, std::span<const ProblemResult> results,
                        double theta);

/// Aligned-column text table, one row per method.
std::string render_summary_table(std::span<const MethodSummary> rows);
/// Machine form: one JSON object per row.
std::string summary_jsonl(std::span<const MethodSummary> rows);

}  // namespace sier
