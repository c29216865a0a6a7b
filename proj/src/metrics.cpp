#include "sier/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>

#include "json.hpp"

#include "sier/rng.hpp"
#include "sier/selection.hpp"

namespace sier {

ProblemResult to_problem_result(const ProblemRecord& problem, const RunOutcome& outcome) {
    ProblemResult r;
    r.problem_id = problem.id;
    r.gold_tag = normalize_tag(problem.gold_answer);
    for (const auto& ind : outcome.selected.members) {
        r.candidates.emplace_back(ind.tag, ind.quality);
    }
    r.token_cost = outcome.meta.total_tokens();
    for (const auto& ind : outcome.history.members) r.all_tags.push_back(ind.tag);
    r.evolution_triggered = outcome.meta.evolution_triggered;
    r.max_init_quality = outcome.meta.max_init_quality;
    return r;
}

namespace {

bool tag_is_gold(const std::optional<std::string>& tag, const std::string& gold) {
    return tag.has_value() && *tag == gold;
}

double mean_over(std::span<const ProblemResult> results, auto&& per_problem) {
    if (results.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& r : results) sum += per_problem(r);
    return sum / static_cast<double>(results.size());
}

}  // namespace

double pass_at_k(std::span<const ProblemResult> results) {
    return mean_over(results, [](const ProblemResult& r) {
        for (const auto& [tag, _] : r.candidates) {
            if (tag_is_gold(tag, r.gold_tag)) return 1.0;
        }
        return 0.0;
    });
}

double major_at_k(std::span<const ProblemResult> results) {
    return mean_over(results, [](const ProblemResult& r) {
        struct Vote {
            int count = 0;
            double best_quality = 0.0;
            int first = 0;
        };
        std::map<std::string, Vote> votes;
        for (int i = 0; i < static_cast<int>(r.candidates.size()); ++i) {
            const auto& [tag, quality] = r.candidates[i];
            if (!tag) continue;
            auto [it, inserted] = votes.try_emplace(*tag);
            if (inserted) {
                it->second.first = i;
                it->second.best_quality = quality;
            } else {
                it->second.best_quality = std::max(it->second.best_quality, quality);
            }
            ++it->second.count;
        }
        if (votes.empty()) return 0.0;
        const std::string* winner = nullptr;
        const Vote* best = nullptr;
        for (const auto& [tag, vote] : votes) {
            bool take = best == nullptr;
            if (!take) {
                if (vote.count != best->count) {
                    take = vote.count > best->count;
                } else if (vote.best_quality != best->best_quality) {
                    take = vote.best_quality > best->best_quality;
                } else {
                    take = vote.first < best->first;
                }
            }
            if (take) {
                winner = &tag;
                best = &vote;
            }
        }
        return *winner == r.gold_tag ? 1.0 : 0.0;
    });
}

double prm_at_k(std::span<const ProblemResult> results) {
    return mean_over(results, [](const ProblemResult& r) {
        if (r.candidates.empty()) return 0.0;
        int best = 0;
        for (int i = 1; i < static_cast<int>(r.candidates.size()); ++i) {
            if (r.candidates[i].second > r.candidates[best].second) best = i;
        }
        return tag_is_gold(r.candidates[best].first, r.gold_tag) ? 1.0 : 0.0;
    });
}

double diversity(std::span<const ProblemResult> results) {
    return mean_over(results, [](const ProblemResult& r) {
        std::vector<std::string> seen;
        bool untagged = false;
        for (const auto& [tag, _] : r.candidates) {
            if (!tag) {
                untagged = true;
            } else if (std::find(seen.begin(), seen.end(), *tag) == seen.end()) {
                seen.push_back(*tag);
            }
        }
        return static_cast<double>(seen.size() + (untagged ? 1 : 0));
    });
}

double hit_rate(std::span<const ProblemResult> results) {
    return mean_over(results, [](const ProblemResult& r) {
        for (const auto& tag : r.all_tags) {
            if (tag_is_gold(tag, r.gold_tag)) return 1.0;
        }
        return 0.0;
    });
}

IdentificationReport identification_report(std::span<const ProblemResult> results,
                                           double theta) {
    IdentificationReport report;
    if (results.empty()) return report;
    int flagged = 0;
    int flagged_with_gold = 0;
    for (const auto& r : results) {
        if (r.max_init_quality >= theta) {
            ++flagged;
            for (const auto& [tag, _] : r.candidates) {
                if (tag_is_gold(tag, r.gold_tag)) {
                    ++flagged_with_gold;
                    break;
                }
            }
        }
    }
    report.flagged_fraction = static_cast<double>(flagged) / results.size();
    report.unsolved_fraction = 1.0 - report.flagged_fraction;
    if (flagged > 0) {
        report.success_rate = static_cast<double>(flagged_with_gold) / flagged;
    }
    return report;
}

RunOutcome run_cot_baseline(const ProblemRecord& problem, const EngineConfig& config,
                            Generator& generator, Evaluator& evaluator) {
    auto start = std::chrono::steady_clock::now();

    // Identical to an initial population of k members: same phase, same
    // streams, so cot and sier pair by seed.
    EngineConfig cot_config = config;
    cot_config.mode = RunMode::Cot;
    cot_config.population_size = config.sample_size;
    Engine engine(cot_config, generator, evaluator);

    RunOutcome outcome;
    Population generations = engine.init_population(problem, outcome.meta.init_cost);
    outcome.meta.max_init_quality = max_quality(generations);
    outcome.selected = generations;
    outcome.history = std::move(generations);
    outcome.meta.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    return outcome;
}

RunOutcome run_rgs_baseline(const ProblemRecord& problem, const EngineConfig& config,
                            Generator& generator, Evaluator& evaluator) {
    auto start = std::chrono::steady_clock::now();
    RunOutcome outcome;
    SolveMetadata& meta = outcome.meta;

    Path path;
    for (int step = 0; step < config.max_steps && !path.complete; ++step) {
        ++meta.steps;
        std::string prefix = path.joined_text();
        struct Best {
            std::string text;
            std::int64_t cost = 0;
            double quality = -1.0;
            std::vector<double> step_scores;
            bool finished = false;
        } best;
        for (int j = 0; j < config.sample_size; ++j) {
            RngStream rng(stream_key(config.seed, problem.id, Phase::Evolution, 0, step, j));
            GenerationRequest request{problem.question, prefix,          config.temperature,
                                      config.top_p,     config.stop_word, config.step_max_tokens};
            ++meta.evolution_cost.gen_calls;
            GenerationResult gen;
            try {
                gen = generator.generate(request, rng);
            } catch (const BackendError&) {
                continue;
            }
            meta.evolution_cost.tokens += gen.cost;
            std::string text = gen.text;
            if (!gen.finished && !text.empty() && !text.ends_with(config.stop_word)) {
                text += config.stop_word;
            }
            if (text.empty()) continue;
            EvaluationResult eval =
                evaluator.evaluate(problem.question, prefix + text, config.metric);
            ++meta.evolution_cost.eval_calls;
            if (eval.aggregate > best.quality) {
                best = {text, gen.cost, eval.aggregate, eval.step_scores, gen.finished};
            }
        }
        if (best.quality < 0.0) {
            meta.diagnostics.push_back("rgs: no candidates at step " + std::to_string(step) +
                                       " for problem " + problem.id);
            break;
        }
        path.nodes.push_back({best.text, best.cost, best.quality, best.step_scores});
        path.complete = best.finished || contains_end_flag(best.text, config.end_flag);
    }

    Engine engine(config, generator, evaluator);
    Individual final_individual;
    if (!path.nodes.empty()) {
        final_individual = engine.merge_path(std::move(path), problem, 0, meta);
        outcome.selected.members.push_back(final_individual);
        outcome.history.members.push_back(std::move(final_individual));
    }
    meta.max_init_quality =
        outcome.history.empty() ? 0.0 : outcome.history.members.front().quality;
    meta.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    return outcome;
}

RunOutcome run_problem(const ProblemRecord& problem, const EngineConfig& config,
                       Generator& generator, Evaluator& evaluator) {
    switch (config.mode) {
        case RunMode::Cot:
            return run_cot_baseline(problem, config, generator, evaluator);
        case RunMode::Rgs:
            return run_rgs_baseline(problem, config, generator, evaluator);
        default: {
            Engine engine(config, generator, evaluator);
            return engine.solve(problem);
        }
    }
}

MethodSummary summarize(const std::string& label, std::span<const ProblemResult> results,
                        double theta) {
    MethodSummary s;
    s.label = label;
    s.problems = static_cast<int>(results.size());
    s.pass_k = pass_at_k(results);
    s.major_k = major_at_k(results);
    s.prm_k = prm_at_k(results);
    s.diversity = diversity(results);
    s.hit_rate = hit_rate(results);
    s.mean_tokens = mean_over(results, [](const ProblemResult& r) {
        return static_cast<double>(r.token_cost);
    });
    s.trigger_rate = mean_over(results, [](const ProblemResult& r) {
        return r.evolution_triggered ? 1.0 : 0.0;
    });
    s.identification = identification_report(results, theta);
    return s;
}

std::string render_summary_table(std::span<const MethodSummary> rows) {
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"method", "n", "pass@k", "major@k", "prm@k", "div", "hit", "tokens",
                     "trig"});
    auto fmt = [](double v, const char* spec = "%.3f") {
        char buf[32];
        std::snprintf(buf, sizeof(buf), spec, v);
        return std::string(buf);
    };
    for (const auto& r : rows) {
        cells.push_back({r.label, std::to_string(r.problems), fmt(r.pass_k), fmt(r.major_k),
                         fmt(r.prm_k), fmt(r.diversity, "%.2f"), fmt(r.hit_rate),
                         fmt(r.mean_tokens, "%.1f"), fmt(r.trigger_rate, "%.2f")});
    }
    std::vector<std::size_t> widths(cells[0].size(), 0);
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            widths[c] = std::max(widths[c], row[c].size());
        }
    }
    std::string out;
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out += row[c];
            if (c + 1 < row.size()) out += std::string(widths[c] - row[c].size() + 2, ' ');
        }
        out += "\n";
    }
    return out;
}

std::string summary_jsonl(std::span<const MethodSummary> rows) {
    std::string out;
    for (const auto& r : rows) {
        nlohmann::ordered_json j;
        j["method"] = r.label;
        j["problems"] = r.problems;
        j["pass_at_k"] = r.pass_k;
        j["major_at_k"] = r.major_k;
        j["prm_at_k"] = r.prm_k;
        j["diversity"] = r.diversity;
        j["hit_rate"] = r.hit_rate;
        j["mean_tokens"] = r.mean_tokens;
        j["evolution_trigger_rate"] = r.trigger_rate;
        j["flagged_fraction"] = r.identification.flagged_fraction;
        j["unsolved_fraction"] = r.identification.unsolved_fraction;
        if (r.identification.success_rate) {
            j["identification_success_rate"] = *r.identification.success_rate;
        }
        out += j.dump();
        out += "\n";
    }
    return out;
}

}  // namespace sier
