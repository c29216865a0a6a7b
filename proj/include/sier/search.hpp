#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sier/backends.hpp"
#include "sier/density.hpp"
#include "sier/types.hpp"

namespace sier {

struct PhaseCost {
    std::int64_t gen_calls = 0;
    std::int64_t eval_calls = 0;
    std::int64_t tokens = 0;
};

struct SolveMetadata {
    bool evolution_triggered = false;
    double max_init_quality = 0.0;
    PhaseCost init_cost;
    PhaseCost evolution_cost;
    PhaseCost finalize_cost;
    int finalizations = 0;
    int iterations = 0;
    int steps = 0;
    std::vector<std::string> diagnostics;
    double wall_time_ms = 0.0;  // never written into results lines

    std::int64_t total_tokens() const {
        return init_cost.tokens + evolution_cost.tokens + finalize_cost.tokens;
    }
    std::int64_t total_gen_calls() const {
        return init_cost.gen_calls + evolution_cost.gen_calls + finalize_cost.gen_calls;
    }
    std::int64_t total_eval_calls() const {
        return init_cost.eval_calls + evolution_cost.eval_calls + finalize_cost.eval_calls;
    }
};

struct RunOutcome {
    Population selected;
    Population history;
    SolveMetadata meta;
};

struct CandidateAudit {
    std::string text;
    double quality = 0.0;
    double density = 0.0;
};

struct ExpandOutcome {
    std::vector<Path> children;
    bool early_accept = false;
    int generations_used = 0;  // equals the accept index when early accept fires
    std::vector<CandidateAudit> candidates;
    std::vector<int> front;  // F1 indices into candidates; empty for early accept
    std::vector<double> child_quality;
    std::vector<double> child_density;
};

struct SearchState {
    std::vector<Path> active_paths;
    Population history;
    int step_index = 0;
    int iteration = 0;
};

/// Density-assisted population search over a generator/evaluator pair.
/// One instance per problem; all randomness flows through per-call stream
/// keys, so concurrent problems and repeated runs agree byte for byte.
class Engine {
public:
    Engine(EngineConfig config, Generator& generator, Evaluator& evaluator);

    /// N full generations (no step interruption), each evaluated once.
    Population init_population(const ProblemRecord& problem, PhaseCost& cost);

    static bool should_skip_evolution(const Population& history, double theta);

    /// One adaptive-sampling expansion of a single active path: early accept
    /// within the small batch, otherwise Pareto selection of (-density,
    /// quality) over all k candidates. Ablation modes change only the
    /// scoring rule.
    ExpandOutcome expand_path(const Path& path, const DensityLandscape& landscape,
                              const ProblemRecord& problem, int step_index, int path_index,
                              PhaseCost& cost);

    /// Evolution iterations with early stopping at theta; merged paths grow
    /// the returned history (which always retains the initial population).
    Population run_evolution(const ProblemRecord& problem, const Population& init,
                             SolveMetadata& meta);

    /// Concatenates nodes into an Individual; incomplete paths get one
    /// finalization generation first.
    Individual merge_path(Path path, const ProblemRecord& problem, int merge_index,
                          SolveMetadata& meta);

    /// init → evolution → cluster selection. Only valid for the sier* modes.
    RunOutcome solve(const ProblemRecord& problem);

    const EngineConfig& config() const { return config_; }

private:
    struct Candidate {
        std::string text;
        std::int64_t cost = 0;
        double quality = 0.0;
        std::vector<double> step_scores;
        bool finished = false;
        double density = 0.0;
    };

    Candidate sample_candidate(const ProblemRecord& problem, const std::string& prefix,
                               int step_index, int path_index, int sample_index,
                               PhaseCost& cost);
    Path extend(const Path& path, const Candidate& candidate) const;

    EngineConfig config_;
    Generator& generator_;
    Evaluator& evaluator_;
};

double max_quality(const Population& population);

}  // namespace sier
