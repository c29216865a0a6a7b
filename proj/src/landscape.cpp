#include "sier/landscape.hpp"

#include <algorithm>
#include <stdexcept>

#include "json.hpp"

#include "sier/density.hpp"
#include "sier/rng.hpp"

namespace sier {

namespace {

bool starts_with_path(const ChoicePath& full, const ChoicePath& prefix) {
    if (prefix.size() > full.size()) return false;
    return std::equal(prefix.begin(), prefix.end(), full.begin());
}

bool any_extends(const std::vector<ChoicePath>& paths, const ChoicePath& prefix) {
    for (const auto& p : paths) {
        if (starts_with_path(p, prefix)) return true;
    }
    return false;
}

std::uint64_t hash_choices(std::uint64_t seed, const ChoicePath& choices, std::size_t upto) {
    std::uint64_t h = seed ^ 0x51ed270b9f6aa3cdULL;
    for (std::size_t i = 0; i < upto && i < choices.size(); ++i) {
        h = (h ^ static_cast<std::uint64_t>(choices[i] + 1)) * 0x100000001b3ULL;
    }
    return h;
}

double unit_from_hash(std::uint64_t h) {
    RngStream rng(h);
    return rng.next_double();
}

}  // namespace

PlantedLandscape::PlantedLandscape(LandscapeSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)), seed_(seed) {
    if (spec_.depth < 2) throw std::runtime_error("landscape: depth must be ≥ 2");
    if (spec_.branching < 2) throw std::runtime_error("landscape: branching must be ≥ 2");
    if (spec_.gold_count < 1) throw std::runtime_error("landscape: need a global optimum");

    RngStream derive(seed_ ^ fnv1a("landscape:" + spec_.name));

    // Gold paths: the first is free, later ones diverge from it mid-tree.
    ChoicePath base(spec_.depth);
    for (int d = 0; d < spec_.depth; ++d) {
        base[d] = static_cast<int>(derive.next_below(spec_.branching));
    }
    golds_.push_back(base);
    for (int g = 1; g < spec_.gold_count; ++g) {
        ChoicePath alt = base;
        int diverge = spec_.depth / 2;
        for (int d = diverge; d < spec_.depth; ++d) {
            alt[d] = static_cast<int>((base[d] + 1 + derive.next_below(spec_.branching - 1)) %
                                      spec_.branching);
        }
        while (std::find(golds_.begin(), golds_.end(), alt) != golds_.end()) {
            alt.back() = (alt.back() + 1) % spec_.branching;
        }
        golds_.push_back(alt);
    }

    for (const auto& trap : spec_.traps) {
        if (trap.diverge_depth < 0 || trap.diverge_depth >= spec_.depth) {
            throw std::runtime_error("landscape: trap diverge_depth out of range");
        }
        ChoicePath t = base;
        int d0 = trap.diverge_depth;
        t[d0] = static_cast<int>((base[d0] + 1 + derive.next_below(spec_.branching - 1)) %
                                 spec_.branching);
        for (int d = d0 + 1; d < spec_.depth; ++d) {
            t[d] = static_cast<int>(derive.next_below(spec_.branching));
        }
        int fuel = spec_.branching * spec_.depth;
        while ((std::find(golds_.begin(), golds_.end(), t) != golds_.end() ||
                std::find(traps_.begin(), traps_.end(), t) != traps_.end()) &&
               fuel-- > 0) {
            t.back() = (t.back() + 1) % spec_.branching;
        }
        if (std::find(golds_.begin(), golds_.end(), t) != golds_.end()) {
            throw std::runtime_error("landscape: trap collides with a global optimum");
        }
        if (std::find(traps_.begin(), traps_.end(), t) != traps_.end()) {
            throw std::runtime_error("landscape: duplicate trap path");
        }
        traps_.push_back(t);
    }

    vocab_.resize(spec_.depth);
    for (int d = 0; d < spec_.depth; ++d) {
        vocab_[d].resize(spec_.branching);
        for (int j = 0; j < spec_.branching; ++j) {
            std::string tag = std::to_string(d) + "_" + std::to_string(j);
            if (d + 1 < spec_.depth) {
                vocab_[d][j] = "step" + std::to_string(d + 1) + ": r" + tag + " u" + tag +
                               " v" + tag;
            } else {
                vocab_[d][j] = "step" + std::to_string(d + 1) + ": conclude w" + tag +
                               " so the answer is";
            }
        }
    }

    greedy_ = compute_greedy();
}

const std::string& PlantedLandscape::step_core(int depth, int choice) const {
    return vocab_.at(depth).at(choice);
}

std::string PlantedLandscape::final_step_text(const ChoicePath& path) const {
    return vocab_.back().at(path.back()) + " \\boxed{" + path_answer(path) + "}.";
}

std::string PlantedLandscape::path_text(const ChoicePath& path) const {
    std::string out;
    for (int d = 0; d + 1 < spec_.depth; ++d) {
        out += vocab_[d][path[d]];
        out += kDelimiter;
    }
    out += final_step_text(path);
    return out;
}

std::vector<int> PlantedLandscape::parse_choices(const std::string& prefix) const {
    std::vector<int> choices;
    bool off_tree = false;
    auto steps = split_steps(prefix, kDelimiter);
    for (std::size_t i = 0; i < steps.size(); ++i) {
        int match = -1;
        if (!off_tree && i < static_cast<std::size_t>(spec_.depth)) {
            const auto& options = vocab_[i];
            for (int j = 0; j < spec_.branching; ++j) {
                bool final_depth = i + 1 == static_cast<std::size_t>(spec_.depth);
                if (final_depth ? steps[i].starts_with(options[j]) : steps[i] == options[j]) {
                    match = j;
                    break;
                }
            }
        }
        if (match < 0) off_tree = true;
        choices.push_back(match);
    }
    return choices;
}

std::vector<double> PlantedLandscape::transition_weights(const ChoicePath& prefix) const {
    std::vector<double> weights(spec_.branching, 1.0);
    int depth = static_cast<int>(prefix.size());
    if (depth >= spec_.depth) return weights;

    bool contested = any_extends(traps_, prefix);
    if (!contested && !any_extends(golds_, prefix)) {
        // Paths that left the planted lines still gravitate to the
        // misleading steps, so trap tokens stay dense in sampled
        // populations while gold tokens stay rare. Position decides; a
        // wrong prefix never rejoins a class.
        for (int j = 0; j < spec_.branching; ++j) {
            for (const auto& trap : traps_) {
                if (trap[depth] == j) weights[j] = spec_.trap_pull;
            }
        }
        return weights;
    }

    for (int j = 0; j < spec_.branching; ++j) {
        ChoicePath extended = prefix;
        extended.push_back(j);
        if (any_extends(traps_, extended)) {
            weights[j] = spec_.trap_pull;
        } else if (any_extends(golds_, extended)) {
            weights[j] = contested ? spec_.gold_pull : spec_.clear_pull;
        }
    }
    return weights;
}

double PlantedLandscape::off_score(std::uint64_t h) const {
    return spec_.off_min + unit_from_hash(h) * (spec_.off_max - spec_.off_min);
}

double PlantedLandscape::step_score(const ChoicePath& choices,
                                    const std::vector<std::string>& raw_steps,
                                    int index) const {
    bool on_tree = true;
    for (int i = 0; i <= index; ++i) {
        if (i >= static_cast<int>(choices.size()) || choices[i] < 0) {
            on_tree = false;
            break;
        }
    }
    if (!on_tree || index >= spec_.depth) {
        std::uint64_t h = seed_ ^ 0x7c1592a6d3f0b84bULL;
        for (int i = 0; i <= index && i < static_cast<int>(raw_steps.size()); ++i) {
            h = (h ^ fnv1a(raw_steps[i])) * 0x100000001b3ULL;
        }
        return off_score(h);
    }

    ChoicePath head(choices.begin(), choices.begin() + index + 1);

    double best_trap = -1.0;
    for (std::size_t t = 0; t < traps_.size(); ++t) {
        if (starts_with_path(traps_[t], head)) {
            double f = spec_.traps[t].final_score;
            double s = spec_.trap_prefix_base +
                       (f - spec_.trap_prefix_base) *
                           (static_cast<double>(index + 1) / spec_.depth);
            best_trap = std::max(best_trap, s);
        }
    }
    if (best_trap >= 0.0) return best_trap;

    for (const auto& gold : golds_) {
        if (starts_with_path(gold, head)) {
            if (index + 1 == spec_.depth) return spec_.gold_final_score;
            return spec_.gold_prefix_base + spec_.gold_prefix_slope * index;
        }
    }

    return off_score(hash_choices(seed_, head, head.size()));
}

std::string PlantedLandscape::path_answer(const ChoicePath& path) const {
    if (std::find(golds_.begin(), golds_.end(), path) != golds_.end()) {
        return spec_.gold_answer;
    }
    for (std::size_t t = 0; t < traps_.size(); ++t) {
        if (traps_[t] == path) return std::to_string(11 + 2 * static_cast<int>(t));
    }
    return std::to_string(100 + hash_choices(seed_, path, path.size()) % 900);
}

double PlantedLandscape::final_quality(const ChoicePath& path) const {
    std::vector<std::string> raw;  // unused when the path is fully on-tree
    return step_score(path, raw, spec_.depth - 1);
}

std::vector<std::pair<ChoicePath, double>> PlantedLandscape::quality_table() const {
    std::vector<std::pair<ChoicePath, double>> table;
    ChoicePath path(spec_.depth, 0);
    while (true) {
        table.emplace_back(path, final_quality(path));
        int d = spec_.depth - 1;
        while (d >= 0 && path[d] == spec_.branching - 1) path[d--] = 0;
        if (d < 0) break;
        ++path[d];
    }
    return table;
}

bool PlantedLandscape::is_gold_prefix(const ChoicePath& prefix) const {
    return any_extends(golds_, prefix);
}

bool PlantedLandscape::is_trap_prefix(const ChoicePath& prefix) const {
    return any_extends(traps_, prefix);
}

ChoicePath PlantedLandscape::compute_greedy() const {
    ChoicePath path;
    std::vector<std::string> raw;
    for (int d = 0; d < spec_.depth; ++d) {
        int best = 0;
        double best_score = -1.0;
        for (int j = 0; j < spec_.branching; ++j) {
            ChoicePath trial = path;
            trial.push_back(j);
            double s = step_score(trial, raw, d);
            if (s > best_score) {
                best_score = s;
                best = j;
            }
        }
        path.push_back(best);
    }
    return path;
}

void PlantedLandscape::verify() const {
    if (spec_.gold_final_score < 0.99) {
        throw std::runtime_error("landscape: gold final score must be ≥ 0.99");
    }
    if (spec_.off_max >= spec_.gold_prefix_base) {
        throw std::runtime_error("landscape: off-path scores must stay below gold prefix scores");
    }
    for (std::size_t t = 0; t < traps_.size(); ++t) {
        const auto& ts = spec_.traps[t];
        if (ts.final_score >= spec_.gold_final_score) {
            throw std::runtime_error("landscape: trap final must stay below the gold final");
        }
        if (ts.final_score <= spec_.trap_prefix_base) {
            throw std::runtime_error("landscape: trap final must exceed the trap prefix base");
        }
        // Deception: the trap branch outscores the bare gold curve where it
        // forks. (The gold head itself can inherit another trap's score when
        // forks nest, so the comparison uses the curve value.)
        ChoicePath trap_head(traps_[t].begin(), traps_[t].begin() + ts.diverge_depth + 1);
        std::vector<std::string> raw;
        double gold_curve =
            spec_.gold_prefix_base + spec_.gold_prefix_slope * ts.diverge_depth;
        if (step_score(trap_head, raw, ts.diverge_depth) <= gold_curve) {
            throw std::runtime_error("landscape: trap does not outscore gold at its fork");
        }
        if (std::find(golds_.begin(), golds_.end(), traps_[t]) != golds_.end()) {
            throw std::runtime_error("landscape: trap equals a global optimum");
        }
    }
    ChoicePath greedy = compute_greedy();
    if (greedy != greedy_) {
        throw std::runtime_error("landscape: stamped greedy path is stale");
    }
    bool greedy_in_traps = std::find(traps_.begin(), traps_.end(), greedy) != traps_.end();
    bool greedy_in_golds = std::find(golds_.begin(), golds_.end(), greedy) != golds_.end();
    if (!traps_.empty() && !greedy_in_traps) {
        throw std::runtime_error("landscape: greedy path does not terminate at a trap");
    }
    if (traps_.empty() && !greedy_in_golds) {
        throw std::runtime_error("landscape: greedy path misses the global optimum");
    }
}

std::string PlantedLandscape::to_json() const {
    nlohmann::ordered_json j;
    j["name"] = spec_.name;
    j["seed"] = seed_;
    j["spec"] = nlohmann::ordered_json::parse(landscape_spec_to_json(spec_));
    j["global_optima"] = golds_;
    j["local_optima"] = traps_;
    j["greedy_path"] = greedy_;
    j["greedy_hits_trap"] =
        std::find(traps_.begin(), traps_.end(), greedy_) != traps_.end();
    j["verified"] = true;
    return j.dump(2);
}

PlantedLandscape PlantedLandscape::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    LandscapeSpec spec = landscape_spec_from_json(j.at("spec").dump());
    PlantedLandscape landscape(spec, j.at("seed").get<std::uint64_t>());
    if (j.at("greedy_path").get<ChoicePath>() != landscape.greedy_path()) {
        throw std::runtime_error("landscape file: stamped greedy path disagrees with rebuild");
    }
    landscape.verify();
    return landscape;
}

PlantedLandscape build_planted_landscape(const LandscapeSpec& spec, std::uint64_t seed) {
    PlantedLandscape landscape(spec, seed);
    landscape.verify();
    return landscape;
}

std::string landscape_spec_to_json(const LandscapeSpec& spec) {
    nlohmann::ordered_json j;
    j["name"] = spec.name;
    j["depth"] = spec.depth;
    j["branching"] = spec.branching;
    j["gold_count"] = spec.gold_count;
    j["traps"] = nlohmann::ordered_json::array();
    for (const auto& t : spec.traps) {
        j["traps"].push_back({{"diverge_depth", t.diverge_depth}, {"final_score", t.final_score}});
    }
    j["trap_pull"] = spec.trap_pull;
    j["gold_pull"] = spec.gold_pull;
    j["clear_pull"] = spec.clear_pull;
    j["gold_prefix_base"] = spec.gold_prefix_base;
    j["gold_prefix_slope"] = spec.gold_prefix_slope;
    j["gold_final_score"] = spec.gold_final_score;
    j["trap_prefix_base"] = spec.trap_prefix_base;
    j["off_min"] = spec.off_min;
    j["off_max"] = spec.off_max;
    j["gold_answer"] = spec.gold_answer;
    return j.dump(2);
}

LandscapeSpec landscape_spec_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    LandscapeSpec spec;
    spec.name = j.value("name", spec.name);
    spec.depth = j.value("depth", spec.depth);
    spec.branching = j.value("branching", spec.branching);
    spec.gold_count = j.value("gold_count", spec.gold_count);
    if (j.contains("traps")) {
        for (const auto& t : j["traps"]) {
            spec.traps.push_back({t.value("diverge_depth", 2), t.value("final_score", 0.9)});
        }
    }
    spec.trap_pull = j.value("trap_pull", spec.trap_pull);
    spec.gold_pull = j.value("gold_pull", spec.gold_pull);
    spec.clear_pull = j.value("clear_pull", spec.clear_pull);
    spec.gold_prefix_base = j.value("gold_prefix_base", spec.gold_prefix_base);
    spec.gold_prefix_slope = j.value("gold_prefix_slope", spec.gold_prefix_slope);
    spec.gold_final_score = j.value("gold_final_score", spec.gold_final_score);
    spec.trap_prefix_base = j.value("trap_prefix_base", spec.trap_prefix_base);
    spec.off_min = j.value("off_min", spec.off_min);
    spec.off_max = j.value("off_max", spec.off_max);
    spec.gold_answer = j.value("gold_answer", spec.gold_answer);
    return spec;
}

GenerationResult MockGenerator::generate(const GenerationRequest& request, RngStream& rng) {
    const auto& land = *landscape_;
    const auto& spec = land.spec();

    std::vector<int> choices = land.parse_choices(request.prefix);
    auto sample_next = [&](const ChoicePath& prefix) {
        std::vector<double> weights = land.transition_weights(prefix);
        double total = 0.0;
        for (double w : weights) total += w;
        double r = rng.next_double() * total;
        for (std::size_t j = 0; j < weights.size(); ++j) {
            r -= weights[j];
            if (r < 0.0) return static_cast<int>(j);
        }
        return static_cast<int>(weights.size()) - 1;
    };
    auto token_count = [](const std::string& text) {
        return static_cast<std::int64_t>(whitespace_tokens(text).size());
    };

    GenerationResult result;
    int depth = static_cast<int>(choices.size());
    if (depth >= spec.depth) {
        result.finished = true;
        return result;
    }

    if (request.stop) {
        int j = sample_next(choices);
        choices.push_back(j);
        if (depth + 1 == spec.depth) {
            result.text = land.final_step_text(choices);
            result.finished = true;
        } else {
            result.text = land.step_core(depth, j) + PlantedLandscape::kDelimiter;
            result.finished = false;
        }
        result.cost = token_count(result.text);
        if (result.cost > request.max_tokens) result.finished = false;
        return result;
    }

    // Full continuation down to a leaf, honoring the token budget.
    std::int64_t budget = request.max_tokens;
    for (int d = depth; d < spec.depth; ++d) {
        int j = sample_next(choices);
        choices.push_back(j);
        std::string piece = (d + 1 == spec.depth)
                                ? land.final_step_text(choices)
                                : land.step_core(d, j) + PlantedLandscape::kDelimiter;
        std::int64_t piece_cost = token_count(piece);
        if (result.cost + piece_cost > budget) {
            result.finished = false;
            return result;
        }
        result.text += piece;
        result.cost += piece_cost;
    }
    result.finished = true;
    return result;
}

EvaluationResult MockEvaluator::evaluate(const std::string& question,
                                         const std::string& solution_prefix,
                                         MetricMode mode) {
    (void)question;  // scores depend on the solution text only
    const auto& land = *landscape_;
    EvaluationResult result;
    auto steps = split_steps(solution_prefix, PlantedLandscape::kDelimiter);
    std::vector<int> choices = land.parse_choices(solution_prefix);
    for (int i = 0; i < static_cast<int>(steps.size()); ++i) {
        result.step_scores.push_back(land.step_score(choices, steps, i));
    }
    result.aggregate = aggregate_scores(result.step_scores, mode);
    return result;
}

}  // namespace sier
