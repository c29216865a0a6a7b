#include "sier/selection.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <numeric>

namespace sier {

std::optional<std::string> extract_tag(std::string_view text) {
    static constexpr std::string_view kBoxed = "\\boxed{";
    std::size_t pos = text.rfind(kBoxed);
    if (pos == std::string_view::npos) return std::nullopt;
    std::size_t open = pos + kBoxed.size() - 1;  // at '{'
    int depth = 0;
    for (std::size_t i = open; i < text.size(); ++i) {
        if (text[i] == '{') {
            ++depth;
        } else if (text[i] == '}') {
            --depth;
            if (depth == 0) {
                return std::string(text.substr(open + 1, i - open - 1));
            }
        }
    }
    return std::nullopt;  // unbalanced after the final \boxed{
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string collapse_spaces(std::string_view s) {
    std::string out;
    bool in_run = false;
    for (char c : s) {
        if (is_space(c)) {
            in_run = true;
        } else {
            if (in_run && !out.empty()) out += ' ';
            in_run = false;
            out += c;
        }
    }
    return out;
}

// "", "+", "-" and non-digit content are rejected; digits beyond what fits
// an int64 are left to the caller untouched.
std::optional<std::int64_t> parse_integer(std::string_view s) {
    if (s.empty()) return std::nullopt;
    bool negative = false;
    std::size_t i = 0;
    if (s[0] == '+' || s[0] == '-') {
        negative = s[0] == '-';
        i = 1;
    }
    if (i >= s.size() || s.size() - i > 18) return std::nullopt;
    std::int64_t value = 0;
    for (; i < s.size(); ++i) {
        if (!is_digit(s[i])) return std::nullopt;
        value = value * 10 + (s[i] - '0');
    }
    return negative ? -value : value;
}

std::string canonicalize_numeric(const std::string& s) {
    if (auto whole = parse_integer(s)) return std::to_string(*whole);

    std::size_t slash = s.find('/');
    if (slash != std::string::npos && slash == s.rfind('/')) {
        std::string num_part = trim(std::string_view(s).substr(0, slash));
        std::string den_part = trim(std::string_view(s).substr(slash + 1));
        auto num = parse_integer(num_part);
        auto den = parse_integer(den_part);
        if (num && den && *den != 0) {
            std::int64_t n = *num, d = *den;
            if (d < 0) {
                n = -n;
                d = -d;
            }
            std::int64_t g = std::gcd(n < 0 ? -n : n, d);
            if (g > 1) {
                n /= g;
                d /= g;
            }
            if (d == 1) return std::to_string(n);
            return std::to_string(n) + "/" + std::to_string(d);
        }
    }
    return s;
}

}  // namespace

std::string normalize_tag(std::string_view raw) {
    std::string s = collapse_spaces(trim(raw));
    if (s.size() >= 2 && s.front() == '$' && s.back() == '$') {
        s = trim(std::string_view(s).substr(1, s.size() - 2));
    }
    if (!s.empty() && s.back() == '.') {
        s = trim(std::string_view(s).substr(0, s.size() - 1));
    }
    return canonicalize_numeric(s);
}

std::vector<Cluster> make_clusters(const Population& population) {
    std::vector<Cluster> clusters;
    std::map<std::optional<std::string>, std::size_t> index_of;
    for (int i = 0; i < static_cast<int>(population.size()); ++i) {
        const Individual& ind = population.members[i];
        auto it = index_of.find(ind.tag);
        if (it == index_of.end()) {
            it = index_of.emplace(ind.tag, clusters.size()).first;
            clusters.push_back({ind.tag, {}, -1, 0.0});
        }
        Cluster& c = clusters[it->second];
        c.members.push_back(i);
        if (c.best_index < 0 || ind.quality > c.best_quality) {
            c.best_index = i;
            c.best_quality = ind.quality;
        }
    }
    return clusters;
}

Population cluster_select(const Population& population, int target) {
    Population selected;
    if (population.empty() || target <= 0) return selected;

    std::vector<Cluster> clusters = make_clusters(population);
    std::stable_sort(clusters.begin(), clusters.end(),
                     [](const Cluster& a, const Cluster& b) {
                         return a.best_quality > b.best_quality;
                     });

    std::vector<bool> taken(population.size(), false);
    for (const Cluster& c : clusters) {
        if (static_cast<int>(selected.size()) >= target) break;
        selected.members.push_back(population.members[c.best_index]);
        taken[c.best_index] = true;
    }

    if (static_cast<int>(selected.size()) < target) {
        std::vector<int> rest;
        for (int i = 0; i < static_cast<int>(population.size()); ++i) {
            if (!taken[i]) rest.push_back(i);
        }
        std::stable_sort(rest.begin(), rest.end(), [&](int a, int b) {
            return population.members[a].quality > population.members[b].quality;
        });
        for (int i : rest) {
            if (static_cast<int>(selected.size()) >= target) break;
            selected.members.push_back(population.members[i]);
        }
    }
    return selected;
}

}  // namespace sier
