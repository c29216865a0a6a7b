#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sier/types.hpp"

namespace sier {

/// Content of the last "\boxed{...}" group, scanning with brace balancing
/// (nested groups stay intact). Absent when there is no boxed group or the
/// final one never closes.
std::optional<std::string> extract_tag(std::string_view text);

/// Canonical form used for cluster equality and gold comparison: trims,
/// collapses whitespace runs, strips one outer $...$ pair and a trailing
/// period, and canonicalizes integers ("+007" → "7") and slash fractions
/// ("2/4" → "1/2"). Decimals are left alone.
std::string normalize_tag(std::string_view raw);

struct Cluster {
    std::optional<std::string> tag;  // nullopt is the shared untagged bucket
    std::vector<int> members;        // indices into the population, ascending
    int best_index = -1;             // earliest member with maximum quality
    double best_quality = 0.0;
};

/// Clusters by exact tag equality, in first-appearance order.
std::vector<Cluster> make_clusters(const Population& population);

/// Tag-based clustering selection: clusters sorted by best quality (ties by
/// first appearance), one best member per cluster until the target is met,
/// then the remainder filled by quality. Result size is
/// min(target, population size).
Population cluster_select(const Population& population, int target);

}  // namespace sier
