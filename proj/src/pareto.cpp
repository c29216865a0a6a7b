#include "sier/pareto.hpp"

#include <algorithm>
#include <stdexcept>

namespace sier {

bool dominates(const ObjectivePoint& a, const ObjectivePoint& b) {
    if (a.values.size() != b.values.size()) {
        throw std::invalid_argument("dominates: objective dimensions differ");
    }
    bool strictly_better = false;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        if (a.values[i] < b.values[i]) return false;
        if (a.values[i] > b.values[i]) strictly_better = true;
    }
    return strictly_better;
}

FrontAssignment fast_non_dominated_sort(std::span<const ObjectivePoint> points) {
    const int n = static_cast<int>(points.size());
    if (n == 0) throw std::invalid_argument("fast_non_dominated_sort: empty input");
    const std::size_t dim = points[0].values.size();
    for (const auto& p : points) {
        if (p.values.size() != dim) {
            throw std::invalid_argument("fast_non_dominated_sort: mixed dimensions");
        }
    }

    std::vector<std::vector<int>> dominated_by(n);  // S_p
    std::vector<int> domination_count(n, 0);        // n_p

    FrontAssignment out;
    out.rank.assign(n, 0);
    std::vector<int> front;
    for (int p = 0; p < n; ++p) {
        for (int q = 0; q < n; ++q) {
            if (p == q) continue;
            if (dominates(points[p], points[q])) {
                dominated_by[p].push_back(q);
            } else if (dominates(points[q], points[p])) {
                ++domination_count[p];
            }
        }
        if (domination_count[p] == 0) {
            out.rank[p] = 1;
            front.push_back(p);
        }
    }

    int level = 1;
    while (!front.empty()) {
        out.fronts.push_back(front);
        std::vector<int> next;
        for (int p : front) {
            for (int q : dominated_by[p]) {
                if (--domination_count[q] == 0) {
                    out.rank[q] = level + 1;
                    next.push_back(q);
                }
            }
        }
        std::sort(next.begin(), next.end());
        front = std::move(next);
        ++level;
    }
    return out;
}

std::vector<int> first_front(std::span<const ObjectivePoint> points) {
    return fast_non_dominated_sort(points).fronts.front();
}

}  // namespace sier
