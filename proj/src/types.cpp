#include "sier/types.hpp"
#include "sier/rng.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"

namespace sier {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t stream_key(std::uint64_t seed, std::string_view problem_id, Phase phase,
                         std::uint64_t path_index, std::uint64_t step_index,
                         std::uint64_t sample_index) {
    auto mix = [](std::uint64_t h, std::uint64_t v) {
        h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return h;
    };
    std::uint64_t h = mix(seed, fnv1a(problem_id));
    h = mix(h, static_cast<std::uint64_t>(phase));
    h = mix(h, path_index);
    h = mix(h, step_index);
    h = mix(h, sample_index);
    return h;
}

std::string Path::joined_text() const {
    std::string out;
    for (const auto& n : nodes) out += n.text;
    return out;
}

std::vector<ConfigError> validate_config(const EngineConfig& c) {
    std::vector<ConfigError> errs;
    auto add = [&](const char* field, const char* constraint) {
        errs.push_back({field, constraint});
    };
    if (!(c.theta > 0.0 && c.theta <= 1.0)) add("theta", "theta ∈ (0,1]");
    if (!(c.bandwidth > 0.0)) add("bandwidth", "bandwidth > 0");
    if (c.sample_size < 1) add("sample_size", "sample_size ≥ 1");
    if (c.population_size < 1) add("population_size", "population_size ≥ 1");
    if (c.small_batch < 1) add("small_batch", "small_batch ≥ 1");
    if (c.small_batch > c.sample_size) add("small_batch", "small_batch ≤ sample_size");
    if (c.max_iterations < 0) add("max_iterations", "max_iterations ≥ 0");
    if (c.max_steps < 1) add("max_steps", "max_steps ≥ 1");
    if (c.max_active_paths < 1) add("max_active_paths", "max_active_paths ≥ 1");
    if (!(c.temperature >= 0.0)) add("temperature", "temperature ≥ 0");
    if (!(c.top_p > 0.0 && c.top_p <= 1.0)) add("top_p", "top_p ∈ (0,1]");
    if (c.stop_word.empty()) add("stop_word", "stop_word non-empty");
    if (c.step_max_tokens < 1) add("step_max_tokens", "step_max_tokens ≥ 1");
    if (c.final_max_tokens < 1) add("final_max_tokens", "final_max_tokens ≥ 1");
    return errs;
}

std::string serialize_individual(const Individual& ind) {
    nlohmann::ordered_json j;
    j["text"] = ind.text;
    j["cost"] = ind.cost;
    j["quality"] = ind.quality;
    j["step_scores"] = ind.step_scores;
    if (ind.tag) j["tag"] = *ind.tag;
    return j.dump();
}

Individual deserialize_individual(const std::string& record) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(record);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("individual record parse error at byte " +
                                 std::to_string(e.byte) + ": " + e.what());
    }
    Individual ind;
    try {
        ind.text = j.at("text").get<std::string>();
        ind.cost = j.at("cost").get<std::int64_t>();
        ind.quality = j.at("quality").get<double>();
        ind.step_scores = j.at("step_scores").get<std::vector<double>>();
        if (j.contains("tag")) ind.tag = j.at("tag").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("individual record field error: ") + e.what());
    }
    return ind;
}

std::vector<std::string> split_steps(std::string_view text, std::string_view stop_word) {
    std::vector<std::string> steps;
    if (text.empty()) return steps;
    std::size_t pos = 0;
    while (true) {
        std::size_t hit = stop_word.empty() ? std::string_view::npos : text.find(stop_word, pos);
        if (hit == std::string_view::npos) {
            steps.emplace_back(text.substr(pos));
            break;
        }
        steps.emplace_back(text.substr(pos, hit - pos));
        pos = hit + stop_word.size();
        if (pos == text.size()) break;  // trailing stop word closes the last step
    }
    return steps;
}

std::size_t count_steps(std::string_view text, std::string_view stop_word) {
    return split_steps(text, stop_word).size();
}

namespace {

// Scans the balanced {...} group starting at the given '{'.
std::optional<std::string_view> balanced_group(std::string_view text, std::size_t open) {
    int depth = 0;
    for (std::size_t i = open; i < text.size(); ++i) {
        if (text[i] == '{') {
            ++depth;
        } else if (text[i] == '}') {
            --depth;
            if (depth == 0) return text.substr(open + 1, i - open - 1);
        }
    }
    return std::nullopt;
}

}  // namespace

bool contains_end_flag(std::string_view text, std::string_view end_flag) {
    if (end_flag.empty()) return false;
    std::size_t pos = text.rfind(end_flag);
    if (pos == std::string_view::npos) return false;
    if (end_flag == "\\boxed") {
        std::size_t open = pos + end_flag.size();
        if (open >= text.size() || text[open] != '{') return false;
        return balanced_group(text, open).has_value();
    }
    return true;
}

std::string to_string(MetricMode m) {
    switch (m) {
        case MetricMode::Last: return "last";
        case MetricMode::Min: return "min";
        case MetricMode::Product: return "product";
    }
    return "last";
}

std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::Sier: return "sier";
        case RunMode::SierNoFitness: return "sier_no_fitness";
        case RunMode::SierNoDensity: return "sier_no_density";
        case RunMode::SierNoEvolution: return "sier_no_evolution";
        case RunMode::Cot: return "cot";
        case RunMode::Rgs: return "rgs";
    }
    return "sier";
}

std::string to_string(DensityAggregation a) {
    return a == DensityAggregation::Mean ? "mean" : "max";
}

std::optional<MetricMode> parse_metric_mode(std::string_view s) {
    if (s == "last") return MetricMode::Last;
    if (s == "min") return MetricMode::Min;
    if (s == "product") return MetricMode::Product;
    return std::nullopt;
}

std::optional<RunMode> parse_run_mode(std::string_view s) {
    if (s == "sier") return RunMode::Sier;
    if (s == "sier_no_fitness") return RunMode::SierNoFitness;
    if (s == "sier_no_density") return RunMode::SierNoDensity;
    if (s == "sier_no_evolution") return RunMode::SierNoEvolution;
    if (s == "cot") return RunMode::Cot;
    if (s == "rgs") return RunMode::Rgs;
    return std::nullopt;
}

std::optional<DensityAggregation> parse_density_aggregation(std::string_view s) {
    if (s == "mean") return DensityAggregation::Mean;
    if (s == "max") return DensityAggregation::Max;
    return std::nullopt;
}

namespace {

std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

}  // namespace

std::string config_hash(const EngineConfig& c) {
    std::string canon;
    canon += "theta=" + format_double(c.theta) + ";";
    canon += "bandwidth=" + format_double(c.bandwidth) + ";";
    canon += "sample_size=" + std::to_string(c.sample_size) + ";";
    canon += "population_size=" + std::to_string(c.population_size) + ";";
    canon += "small_batch=" + std::to_string(c.small_batch) + ";";
    canon += "max_iterations=" + std::to_string(c.max_iterations) + ";";
    canon += "max_steps=" + std::to_string(c.max_steps) + ";";
    canon += "max_active_paths=" + std::to_string(c.max_active_paths) + ";";
    canon += "temperature=" + format_double(c.temperature) + ";";
    canon += "top_p=" + format_double(c.top_p) + ";";
    canon += "stop_word=" + std::string(c.stop_word) + ";";
    canon += "end_flag=" + std::string(c.end_flag) + ";";
    canon += "seed=" + std::to_string(c.seed) + ";";
    canon += "metric=" + to_string(c.metric) + ";";
    canon += "mode=" + to_string(c.mode) + ";";
    canon += "density_aggregation=" + to_string(c.density_aggregation) + ";";
    canon += "step_max_tokens=" + std::to_string(c.step_max_tokens) + ";";
    canon += "final_max_tokens=" + std::to_string(c.final_max_tokens) + ";";
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(canon)));
    return std::string(buf);
}

}  // namespace sier
