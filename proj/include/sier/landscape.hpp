#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sier/backends.hpp"
#include "sier/types.hpp"

namespace sier {

struct TrapSpec {
    int diverge_depth = 2;      // where the trap leaves its base gold path
    double final_score = 0.90;  // quality of the completed trap path
};

/// Parameters of a synthetic solution space: a depth×branching tree of step
/// strings with designated gold paths (the only ones whose final quality
/// clears a 0.99 threshold) and trap paths whose prefixes outscore the gold
/// prefixes early, so per-step greedy search walks into them.
struct LandscapeSpec {
    std::string name = "desk";
    int depth = 6;
    int branching = 4;
    int gold_count = 1;
    std::vector<TrapSpec> traps;

    // Sampling pulls: how strongly generated paths gravitate toward each
    // branch class. Contested = a trap is still reachable from the prefix.
    double trap_pull = 6.0;
    double gold_pull = 1.8;   // gold continuation at contested depths
    double clear_pull = 2.0;  // gold continuation once past every divergence

    // Score curves. Off-path scores stay below the gold prefix curve so
    // quality alone always separates the classes.
    double gold_prefix_base = 0.55;
    double gold_prefix_slope = 0.01;
    double gold_final_score = 0.995;
    double trap_prefix_base = 0.80;
    double off_min = 0.20;
    double off_max = 0.50;

    std::string gold_answer = "42";
};

using ChoicePath = std::vector<int>;

/// Fully materialized landscape: vocabulary, planted paths and the stamped
/// greedy ground truth. Immutable after construction; the mock backends
/// share one instance.
class PlantedLandscape {
public:
    static constexpr const char* kDelimiter = "\n\n";

    PlantedLandscape(LandscapeSpec spec, std::uint64_t seed);

    const LandscapeSpec& spec() const { return spec_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<ChoicePath>& global_optima() const { return golds_; }
    const std::vector<ChoicePath>& local_optima() const { return traps_; }
    const ChoicePath& greedy_path() const { return greedy_; }
    const std::vector<std::vector<std::string>>& step_vocabulary() const { return vocab_; }

    /// Step body for a non-final depth (no delimiter appended).
    const std::string& step_core(int depth, int choice) const;
    /// Full final step, boxed answer included, for the given complete path.
    std::string final_step_text(const ChoicePath& path) const;
    /// Whole-solution text for a complete path.
    std::string path_text(const ChoicePath& path) const;

    /// Maps a solution prefix back to choices; unrecognized steps become -1
    /// and everything after them is off-tree.
    std::vector<int> parse_choices(const std::string& prefix) const;

    /// Sampling weights over the next choice given the current prefix.
    std::vector<double> transition_weights(const ChoicePath& prefix) const;

    /// Evaluator score of step `index` within the (possibly partial) path.
    double step_score(const ChoicePath& choices, const std::vector<std::string>& raw_steps,
                      int index) const;

    std::string path_answer(const ChoicePath& path) const;
    double final_quality(const ChoicePath& path) const;

    /// All branching^depth complete paths with their planted qualities.
    std::vector<std::pair<ChoicePath, double>> quality_table() const;

    bool is_gold_prefix(const ChoicePath& prefix) const;
    bool is_trap_prefix(const ChoicePath& prefix) const;

    /// Recomputes the greedy path and every planted property; throws
    /// std::runtime_error when the spec is inconsistent.
    void verify() const;

    std::string to_json() const;
    static PlantedLandscape from_json(const std::string& text);

private:
    ChoicePath compute_greedy() const;
    double off_score(std::uint64_t h) const;

    LandscapeSpec spec_;
    std::uint64_t seed_ = 0;
    std::vector<ChoicePath> golds_;
    std::vector<ChoicePath> traps_;
    ChoicePath greedy_;
    std::vector<std::vector<std::string>> vocab_;  // [depth][choice], final depth holds cores
};

/// Builds and verifies a landscape; throws std::runtime_error on an
/// inconsistent spec (e.g. a trap colliding with a global optimum).
PlantedLandscape build_planted_landscape(const LandscapeSpec& spec, std::uint64_t seed);

LandscapeSpec landscape_spec_from_json(const std::string& text);
std::string landscape_spec_to_json(const LandscapeSpec& spec);

/// Deterministic generator over a planted landscape: a pure function of
/// (request, rng stream state).
class MockGenerator : public Generator {
public:
    explicit MockGenerator(std::shared_ptr<const PlantedLandscape> landscape)
        : landscape_(std::move(landscape)) {}
    GenerationResult generate(const GenerationRequest& request, RngStream& rng) override;

private:
    std::shared_ptr<const PlantedLandscape> landscape_;
};

/// Deterministic evaluator over the same landscape: a pure function of
/// (question, solution_prefix).
class MockEvaluator : public Evaluator {
public:
    explicit MockEvaluator(std::shared_ptr<const PlantedLandscape> landscape)
        : landscape_(std::move(landscape)) {}
    EvaluationResult evaluate(const std::string& question, const std::string& solution_prefix,
                              MetricMode mode) override;

private:
    std::shared_ptr<const PlantedLandscape> landscape_;
};

}  // namespace sier
