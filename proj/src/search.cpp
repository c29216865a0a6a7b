#include "sier/search.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "sier/pareto.hpp"
#include "sier/rng.hpp"
#include "sier/selection.hpp"

namespace sier {

double max_quality(const Population& population) {
    double best = 0.0;
    for (const auto& ind : population.members) best = std::max(best, ind.quality);
    return best;
}

Engine::Engine(EngineConfig config, Generator& generator, Evaluator& evaluator)
    : config_(std::move(config)), generator_(generator), evaluator_(evaluator) {
    auto errors = validate_config(config_);
    if (!errors.empty()) {
        std::string what = "invalid engine config:";
        for (const auto& e : errors) what += " [" + e.field + ": " + e.constraint + "]";
        throw std::invalid_argument(what);
    }
}

Population Engine::init_population(const ProblemRecord& problem, PhaseCost& cost) {
    Population population;
    for (int i = 0; i < config_.population_size; ++i) {
        RngStream rng(stream_key(config_.seed, problem.id, Phase::Init, i, 0, 0));
        GenerationRequest request{problem.question, "", config_.temperature, config_.top_p,
                                  std::nullopt, config_.final_max_tokens};
        ++cost.gen_calls;
        GenerationResult gen = generator_.generate(request, rng);
        cost.tokens += gen.cost;

        Individual ind;
        ind.text = gen.text;
        ind.cost = gen.cost;
        if (!gen.text.empty()) {
            EvaluationResult eval =
                evaluator_.evaluate(problem.question, gen.text, config_.metric);
            ++cost.eval_calls;
            ind.quality = eval.aggregate;
            ind.step_scores = eval.step_scores;
            if (auto tag = extract_tag(gen.text)) ind.tag = normalize_tag(*tag);
        }
        population.members.push_back(std::move(ind));
    }
    return population;
}

bool Engine::should_skip_evolution(const Population& history, double theta) {
    return max_quality(history) >= theta;
}

Engine::Candidate Engine::sample_candidate(const ProblemRecord& problem,
                                           const std::string& prefix, int step_index,
                                           int path_index, int sample_index, PhaseCost& cost) {
    RngStream rng(stream_key(config_.seed, problem.id, Phase::Evolution, path_index,
                             step_index, sample_index));
    GenerationRequest request{problem.question, prefix,      config_.temperature,
                              config_.top_p,    config_.stop_word, config_.step_max_tokens};
    ++cost.gen_calls;
    GenerationResult gen = generator_.generate(request, rng);
    cost.tokens += gen.cost;

    Candidate cand;
    cand.text = gen.text;
    // Step texts keep their delimiter so concatenated prefixes stay
    // segmentable; mock output already carries it, wire output may not.
    if (!gen.finished && !cand.text.empty() && !cand.text.ends_with(config_.stop_word)) {
        cand.text += config_.stop_word;
    }
    cand.cost = gen.cost;
    cand.finished = gen.finished;
    if (!cand.text.empty()) {
        EvaluationResult eval =
            evaluator_.evaluate(problem.question, prefix + cand.text, config_.metric);
        ++cost.eval_calls;
        cand.quality = eval.aggregate;
        cand.step_scores = eval.step_scores;
    }
    return cand;
}

Path Engine::extend(const Path& path, const Candidate& candidate) const {
    Path child = path;
    child.nodes.push_back({candidate.text, candidate.cost, candidate.quality,
                           candidate.step_scores});
    child.complete =
        candidate.finished || contains_end_flag(candidate.text, config_.end_flag);
    child.carried = false;
    return child;
}

ExpandOutcome Engine::expand_path(const Path& path, const DensityLandscape& landscape,
                                  const ProblemRecord& problem, int step_index,
                                  int path_index, PhaseCost& cost) {
    ExpandOutcome out;
    const std::string prefix = path.joined_text();

    std::vector<Candidate> candidates;
    for (int j = 0; j < config_.sample_size; ++j) {
        Candidate cand;
        try {
            cand = sample_candidate(problem, prefix, step_index, path_index, j, cost);
        } catch (const BackendError&) {
            ++out.generations_used;
            continue;
        }
        ++out.generations_used;
        if (cand.text.empty()) continue;
        candidates.push_back(std::move(cand));
        if (j < config_.small_batch && candidates.back().quality >= config_.theta) {
            const Candidate& accepted = candidates.back();
            out.early_accept = true;
            out.children.push_back(extend(path, accepted));
            out.child_quality.push_back(accepted.quality);
            out.child_density.push_back(0.0);  // unused; filled on demand when capping
            for (const auto& c : candidates) {
                out.candidates.push_back({c.text, c.quality, 0.0});
            }
            return out;
        }
    }

    if (candidates.empty()) return out;  // caller applies carry-then-drop

    for (auto& cand : candidates) {
        cand.density = landscape.step_density(cand.text, step_index,
                                              config_.density_aggregation);
        out.candidates.push_back({cand.text, cand.quality, cand.density});
    }

    std::vector<int> chosen;
    switch (config_.mode) {
        case RunMode::SierNoDensity: {
            int best = 0;
            for (int i = 1; i < static_cast<int>(candidates.size()); ++i) {
                if (candidates[i].quality > candidates[best].quality) best = i;
            }
            chosen.push_back(best);
            break;
        }
        case RunMode::SierNoFitness: {
            std::vector<ObjectivePoint> points;
            points.reserve(candidates.size());
            for (const auto& c : candidates) points.push_back({{-c.density}});
            chosen = first_front(points);
            break;
        }
        default: {
            std::vector<ObjectivePoint> points;
            points.reserve(candidates.size());
            for (const auto& c : candidates) points.push_back({{-c.density, c.quality}});
            chosen = first_front(points);
            break;
        }
    }
    out.front = chosen;

    std::vector<std::string> seen;
    for (int idx : chosen) {
        const Candidate& cand = candidates[idx];
        if (std::find(seen.begin(), seen.end(), cand.text) != seen.end()) continue;
        seen.push_back(cand.text);
        out.children.push_back(extend(path, cand));
        out.child_quality.push_back(cand.quality);
        out.child_density.push_back(cand.density);
    }
    return out;
}

Population Engine::run_evolution(const ProblemRecord& problem, const Population& init,
                                 SolveMetadata& meta) {
    Population history = init;
    if (config_.mode == RunMode::SierNoEvolution) return history;
    if (should_skip_evolution(history, config_.theta)) return history;
    meta.evolution_triggered = true;

    struct ActiveEntry {
        Path path;
        double quality = 0.0;
        std::optional<double> density;
    };

    for (int iteration = 0; iteration < config_.max_iterations; ++iteration) {
        if (iteration > 0 && max_quality(history) >= config_.theta) break;
        ++meta.iterations;

        std::vector<ActiveEntry> active;
        active.push_back({Path{}, 0.0, std::nullopt});
        std::vector<Path> finished;

        for (int step = 0; step < config_.max_steps && !active.empty(); ++step) {
            ++meta.steps;
            DensityLandscape landscape =
                build_landscape(history, config_.stop_word, config_.bandwidth);

            std::vector<ActiveEntry> pool;
            for (int pi = 0; pi < static_cast<int>(active.size()); ++pi) {
                ActiveEntry& entry = active[pi];
                ExpandOutcome out = expand_path(entry.path, landscape, problem, step, pi,
                                                meta.evolution_cost);
                if (out.children.empty()) {
                    if (!entry.path.carried) {
                        entry.path.carried = true;
                        pool.push_back(entry);
                    } else {
                        meta.diagnostics.push_back("dropped path at step " +
                                                   std::to_string(step) + " for problem " +
                                                   problem.id + ": no candidates");
                    }
                    continue;
                }
                for (std::size_t c = 0; c < out.children.size(); ++c) {
                    Path& child = out.children[c];
                    if (child.complete) {
                        finished.push_back(std::move(child));
                    } else {
                        pool.push_back({std::move(child), out.child_quality[c],
                                        out.early_accept
                                            ? std::optional<double>{}
                                            : std::optional<double>{out.child_density[c]}});
                    }
                }
            }

            if (static_cast<int>(pool.size()) > config_.max_active_paths) {
                // Rank among surviving candidates, then quality, then order.
                for (auto& entry : pool) {
                    if (!entry.density && config_.mode != RunMode::SierNoDensity) {
                        const StepNode& node = entry.path.nodes.back();
                        entry.density = landscape.step_density(node.text, step,
                                                               config_.density_aggregation);
                    }
                }
                std::vector<int> order(pool.size());
                for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

                std::vector<int> rank(pool.size(), 0);
                if (config_.mode != RunMode::SierNoDensity) {
                    std::vector<ObjectivePoint> points;
                    points.reserve(pool.size());
                    for (const auto& entry : pool) {
                        if (config_.mode == RunMode::SierNoFitness) {
                            points.push_back({{-entry.density.value_or(0.0)}});
                        } else {
                            points.push_back({{-entry.density.value_or(0.0), entry.quality}});
                        }
                    }
                    rank = fast_non_dominated_sort(points).rank;
                }
                std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                    if (rank[a] != rank[b]) return rank[a] < rank[b];
                    return pool[a].quality > pool[b].quality;
                });
                std::vector<ActiveEntry> kept;
                for (int i = 0; i < config_.max_active_paths; ++i) {
                    kept.push_back(std::move(pool[order[i]]));
                }
                pool = std::move(kept);
            }
            active = std::move(pool);
        }

        for (auto& path : finished) {
            history.members.push_back(
                merge_path(std::move(path), problem, meta.finalizations, meta));
        }
        for (auto& entry : active) {
            if (entry.path.nodes.empty()) continue;  // never-expanded carrier
            history.members.push_back(
                merge_path(std::move(entry.path), problem, meta.finalizations, meta));
        }
    }
    return history;
}

Individual Engine::merge_path(Path path, const ProblemRecord& problem, int merge_index,
                              SolveMetadata& meta) {
    bool finalize_failed = false;
    if (!path.complete) {
        RngStream rng(stream_key(config_.seed, problem.id, Phase::Finalize, merge_index, 0, 0));
        GenerationRequest request{problem.question, path.joined_text(), config_.temperature,
                                  config_.top_p, std::nullopt, config_.final_max_tokens};
        ++meta.finalize_cost.gen_calls;
        ++meta.finalizations;
        try {
            GenerationResult gen = generator_.generate(request, rng);
            meta.finalize_cost.tokens += gen.cost;
            if (!gen.text.empty()) {
                EvaluationResult eval = evaluator_.evaluate(
                    problem.question, path.joined_text() + gen.text, config_.metric);
                ++meta.finalize_cost.eval_calls;
                path.nodes.push_back({gen.text, gen.cost, eval.aggregate, eval.step_scores});
                path.complete = gen.finished ||
                                contains_end_flag(gen.text, config_.end_flag);
            }
        } catch (const BackendError& e) {
            finalize_failed = true;
            meta.diagnostics.push_back("finalization failed for problem " + problem.id +
                                       ": " + e.what());
        }
    }

    Individual ind;
    for (const auto& node : path.nodes) {
        ind.text += node.text;
        ind.cost += node.cost;
        // This node's contribution: scores of the steps it added.
        std::size_t own = count_steps(node.text, config_.stop_word);
        std::size_t have = node.step_scores.size();
        std::size_t take = std::min(own, have);
        ind.step_scores.insert(ind.step_scores.end(), node.step_scores.end() - take,
                               node.step_scores.end());
    }
    if (!path.nodes.empty()) ind.quality = path.nodes.back().quality;
    if (!finalize_failed) {
        if (auto tag = extract_tag(ind.text)) ind.tag = normalize_tag(*tag);
    }
    return ind;
}

RunOutcome Engine::solve(const ProblemRecord& problem) {
    if (config_.mode == RunMode::Cot || config_.mode == RunMode::Rgs) {
        throw std::invalid_argument("Engine::solve handles sier* modes only");
    }
    auto start = std::chrono::steady_clock::now();

    RunOutcome outcome;
    Population init = init_population(problem, outcome.meta.init_cost);
    outcome.meta.max_init_quality = max_quality(init);
    outcome.history = run_evolution(problem, init, outcome.meta);
    outcome.selected = cluster_select(outcome.history, config_.sample_size);

    outcome.meta.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    return outcome;
}

}  // namespace sier
