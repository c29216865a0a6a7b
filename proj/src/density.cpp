#include "sier/density.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "json.hpp"

namespace sier {

namespace {

bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

}  // namespace

std::vector<std::string> whitespace_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        if (i >= text.size()) break;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        tokens.emplace_back(text.substr(start, i - start));
    }
    return tokens;
}

std::vector<std::pair<std::string, int>> tokenize_steps(std::string_view text,
                                                        std::string_view stop_word) {
    std::vector<std::pair<std::string, int>> tokens;
    if (text.empty()) return tokens;

    // End positions of non-overlapping stop-word occurrences, left to right.
    std::vector<std::size_t> stop_ends;
    if (!stop_word.empty()) {
        std::size_t pos = 0;
        while ((pos = text.find(stop_word, pos)) != std::string_view::npos) {
            pos += stop_word.size();
            stop_ends.push_back(pos);
        }
    }

    std::size_t next_stop = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        if (i >= text.size()) break;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        while (next_stop < stop_ends.size() && stop_ends[next_stop] <= start) ++next_stop;
        tokens.emplace_back(std::string(text.substr(start, i - start)),
                            static_cast<int>(next_stop));
    }
    return tokens;
}

TokenHistory build_history(const Population& population, std::string_view stop_word) {
    TokenHistory history;
    for (const auto& ind : population.members) {
        for (auto& [token, step] : tokenize_steps(ind.text, stop_word)) {
            history.occurrences[token].push_back(step);
        }
    }
    return history;
}

double kernel(double distance, double bandwidth) {
    if (std::abs(distance) > bandwidth) return 0.0;
    return std::exp(-(distance * distance) / (2.0 * bandwidth * bandwidth));
}

double DensityLandscape::token_density(std::string_view token, int current_step) const {
    if (population_count_ <= 0) return 0.0;
    auto it = history_.occurrences.find(std::string(token));
    if (it == history_.occurrences.end()) return 0.0;
    double sum = 0.0;
    for (int s : it->second) {
        sum += kernel(static_cast<double>(current_step - s), bandwidth_);
    }
    return sum / static_cast<double>(population_count_);
}

double DensityLandscape::step_density(std::string_view step_text, int current_step,
                                      DensityAggregation agg) const {
    auto tokens = whitespace_tokens(step_text);
    if (tokens.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& token : tokens) {
        double d = token_density(token, current_step);
        if (agg == DensityAggregation::Max) {
            acc = std::max(acc, d);
        } else {
            acc += d;
        }
    }
    return agg == DensityAggregation::Max ? acc : acc / static_cast<double>(tokens.size());
}

DensityLandscape build_landscape(const Population& population, std::string_view stop_word,
                                 double bandwidth) {
    return DensityLandscape(build_history(population, stop_word),
                            static_cast<int>(population.size()), bandwidth);
}

void dump_landscape(const DensityLandscape& landscape, std::ostream& out) {
    std::map<std::string, std::map<int, int>> sorted;
    for (const auto& [token, steps] : landscape.history().occurrences) {
        auto& hist = sorted[token];
        for (int s : steps) ++hist[s];
    }
    for (const auto& [token, hist] : sorted) {
        nlohmann::ordered_json j;
        j["token"] = token;
        nlohmann::ordered_json steps = nlohmann::ordered_json::object();
        for (const auto& [step, count] : hist) steps[std::to_string(step)] = count;
        j["steps"] = steps;
        out << j.dump() << "\n";
    }
}

}  // namespace sier
