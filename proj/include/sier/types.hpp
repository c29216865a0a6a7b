#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sier {

/// How the evaluator folds per-step scores into one aggregate.
enum class MetricMode { Last, Min, Product };

enum class RunMode { Sier, SierNoFitness, SierNoDensity, SierNoEvolution, Cot, Rgs };

enum class DensityAggregation { Mean, Max };

/// A complete reasoning path: full text, token cost, aggregate quality,
/// per-step scores and the normalized answer tag (absent when no boxed
/// answer could be extracted).
struct Individual {
    std::string text;
    std::int64_t cost = 0;
    double quality = 0.0;
    std::vector<double> step_scores;
    std::optional<std::string> tag;

    bool operator==(const Individual&) const = default;
};

struct Population {
    std::vector<Individual> members;

    bool empty() const { return members.empty(); }
    std::size_t size() const { return members.size(); }
};

/// One accepted step of an in-progress path. quality/step_scores are the
/// evaluator's judgment of the whole prefix up to and including this step.
struct StepNode {
    std::string text;
    std::int64_t cost = 0;
    double quality = 0.0;
    std::vector<double> step_scores;
};

struct Path {
    std::vector<StepNode> nodes;
    bool complete = false;
    bool carried = false;  // already survived one failed expansion round

    std::string joined_text() const;
};

struct EngineConfig {
    double theta = 0.99;            // quality threshold
    double bandwidth = 2.0;         // KDE bandwidth, in step-index units
    int sample_size = 8;            // k, candidates per expansion
    int population_size = 8;        // N, initial population
    int small_batch = 2;            // b_s, early-accept window
    int max_iterations = 1;         // evolution iterations
    int max_steps = 40;             // step cap per path
    int max_active_paths = 8;       // beam cap after each step
    double temperature = 1.0;
    double top_p = 1.0;
    std::string stop_word = "\n\n";
    std::string end_flag = "\\boxed";
    std::uint64_t seed = 0;
    MetricMode metric = MetricMode::Last;
    RunMode mode = RunMode::Sier;
    DensityAggregation density_aggregation = DensityAggregation::Mean;
    int step_max_tokens = 512;
    int final_max_tokens = 4096;
};

struct ProblemRecord {
    std::string id;
    std::string question;
    std::string gold_answer;
};

struct ConfigError {
    std::string field;
    std::string constraint;
};

/// Empty result means the config satisfies every invariant; otherwise one
/// entry per violated constraint.
std::vector<ConfigError> validate_config(const EngineConfig& config);

std::string serialize_individual(const Individual& ind);
/// Throws std::runtime_error with the byte position on malformed records.
Individual deserialize_individual(const std::string& record);

/// Splits text at non-overlapping occurrences of stop_word. A trailing empty
/// segment (text ending exactly at a stop word) is dropped; "" gives {}.
std::vector<std::string> split_steps(std::string_view text, std::string_view stop_word);
std::size_t count_steps(std::string_view text, std::string_view stop_word);

/// True when the latest node text signals path completion. For the default
/// "\boxed" flag this requires a brace-balanced boxed group, not just the
/// literal substring.
bool contains_end_flag(std::string_view text, std::string_view end_flag);

std::string to_string(MetricMode m);
std::string to_string(RunMode m);
std::string to_string(DensityAggregation a);
std::optional<MetricMode> parse_metric_mode(std::string_view s);
std::optional<RunMode> parse_run_mode(std::string_view s);
std::optional<DensityAggregation> parse_density_aggregation(std::string_view s);

/// FNV-1a over the canonical field encoding; stable across runs and key
/// orderings. Covers only semantically meaningful values (not workers,
/// output paths, and so on, which live outside EngineConfig anyway).
std::string config_hash(const EngineConfig& config);

}  // namespace sier
