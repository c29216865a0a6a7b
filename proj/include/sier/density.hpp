#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sier/types.hpp"

namespace sier {

/// Token → multiset of step indices at which that token occurred across the
/// historical population. Duplicates are kept: the same token at the same
/// index from two individuals (or twice in one) is recorded twice.
struct TokenHistory {
    std::unordered_map<std::string, std::vector<int>> occurrences;
};

/// Maximal runs of non-whitespace characters, in order.
std::vector<std::string> whitespace_tokens(std::string_view text);

/// Whitespace tokenization with step attribution. A token's step index is
/// the number of non-overlapping stop-word occurrences ending at or before
/// the token's start, so the counter advances only for tokens read after a
/// stop word.
std::vector<std::pair<std::string, int>> tokenize_steps(std::string_view text,
                                                        std::string_view stop_word);

TokenHistory build_history(const Population& population, std::string_view stop_word);

/// Truncated Gaussian: exp(-d²/(2h²)) for |d| ≤ h, exactly 0 outside.
double kernel(double distance, double bandwidth);

class DensityLandscape {
public:
    DensityLandscape(TokenHistory history, int population_count, double bandwidth)
        : history_(std::move(history)), population_count_(population_count),
          bandwidth_(bandwidth) {}

    /// Kernel sum over the token's recorded step indices, divided by the
    /// population count. Unseen tokens give 0.
    double token_density(std::string_view token, int current_step) const;

    /// Density of a candidate step: per-token densities at current_step,
    /// folded by mean (default) or max.
    double step_density(std::string_view step_text, int current_step,
                        DensityAggregation agg = DensityAggregation::Mean) const;

    const TokenHistory& history() const { return history_; }
    int population_count() const { return population_count_; }
    double bandwidth() const { return bandwidth_; }

private:
    TokenHistory history_;
    int population_count_;
    double bandwidth_;
};

DensityLandscape build_landscape(const Population& population, std::string_view stop_word,
                                 double bandwidth);

/// Debug dump, one JSON line per token (sorted) with its step histogram.
void dump_landscape(const DensityLandscape& landscape, std::ostream& out);

}  // namespace sier
