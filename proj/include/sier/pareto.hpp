#pragma once

#include <span>
#include <vector>

namespace sier {

/// Objective vector; every component is maximized. Callers negate anything
/// they want minimized (the engine submits (-density, quality)).
struct ObjectivePoint {
    std::vector<double> values;
};

/// True iff a is ≥ b in every objective and > in at least one.
/// Throws std::invalid_argument on dimension mismatch.
bool dominates(const ObjectivePoint& a, const ObjectivePoint& b);

struct FrontAssignment {
    std::vector<int> rank;                 // 1-based; rank[i] == 1 means i ∈ F1
    std::vector<std::vector<int>> fronts;  // F1, F2, ... index lists in input order
};

/// Fast non-dominated sort. Fronts partition the input; within a front,
/// indices keep input order. Throws std::invalid_argument on empty input or
/// mixed dimensions.
FrontAssignment fast_non_dominated_sort(std::span<const ObjectivePoint> points);

/// Indices of the non-dominated set, in input order.
std::vector<int> first_front(std::span<const ObjectivePoint> points);

}  // namespace sier
