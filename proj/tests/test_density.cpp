#include <cmath>

#include "doctest.h"

#include "sier/density.hpp"
#include "sier/rng.hpp"

using namespace sier;

namespace {

// Direct evaluation of the density estimate: kernel sum over recorded
// occurrences divided by the population count, truncated Gaussian kernel.
double brute_force_density(const std::vector<int>& occurrences, int population_count,
                           double bandwidth, int query) {
    if (population_count == 0) return 0.0;
    double sum = 0.0;
    for (int s : occurrences) {
        double d = static_cast<double>(query - s);
        if (std::abs(d) <= bandwidth) sum += std::exp(-(d * d) / (2.0 * bandwidth * bandwidth));
    }
    return sum / population_count;
}

}  // namespace

TEST_CASE("tokenize_steps hand traces") {
    auto toks = tokenize_steps("a b\n\nc", "\n\n");
    REQUIRE(toks.size() == 3);
    CHECK(toks[0] == std::pair<std::string, int>{"a", 0});
    CHECK(toks[1] == std::pair<std::string, int>{"b", 0});
    CHECK(toks[2] == std::pair<std::string, int>{"c", 1});

    CHECK(tokenize_steps("", "\n\n").empty());

    auto single = tokenize_steps("x", "\n\n");
    REQUIRE(single.size() == 1);
    CHECK(single[0] == std::pair<std::string, int>{"x", 0});
}

TEST_CASE("tokenize_steps with a non-whitespace stop word inside a token") {
    // A token containing the stop word keeps the index it started with;
    // later tokens advance.
    auto toks = tokenize_steps("x.y z", ".");
    REQUIRE(toks.size() == 2);
    CHECK(toks[0] == std::pair<std::string, int>{"x.y", 0});
    CHECK(toks[1] == std::pair<std::string, int>{"z", 1});
}

TEST_CASE("build_history records multiplicities") {
    Population pop;
    pop.members.push_back({"a\n\nb", 2, 0.5, {0.5, 0.5}, std::nullopt});
    pop.members.push_back({"a\n\nb", 2, 0.5, {0.5, 0.5}, std::nullopt});
    auto history = build_history(pop, "\n\n");
    CHECK(history.occurrences.at("a") == std::vector<int>{0, 0});
    CHECK(history.occurrences.at("b") == std::vector<int>{1, 1});
}

TEST_CASE("build_history of an empty population is empty") {
    CHECK(build_history(Population{}, "\n\n").occurrences.empty());
}

TEST_CASE("duplicate token within one path counts twice") {
    Population pop;
    pop.members.push_back({"a a", 2, 0.5, {0.5}, std::nullopt});
    auto history = build_history(pop, "\n\n");
    CHECK(history.occurrences.at("a") == std::vector<int>{0, 0});
}

TEST_CASE("kernel values") {
    CHECK(kernel(0.0, 2.0) == 1.0);
    CHECK(kernel(3.0, 2.0) == 0.0);
    CHECK(kernel(2.0, 2.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
    CHECK(kernel(-2.0, 2.0) == kernel(2.0, 2.0));
    CHECK(kernel(2.0000001, 2.0) == 0.0);
}

TEST_CASE("token_density worked examples") {
    TokenHistory history;
    history.occurrences["t"] = {3, 3};
    DensityLandscape landscape(history, 2, 2.0);
    CHECK(landscape.token_density("t", 3) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(landscape.token_density("unseen", 3) == 0.0);

    TokenHistory far;
    far.occurrences["t"] = {0};
    DensityLandscape far_landscape(far, 1, 2.0);
    CHECK(far_landscape.token_density("t", 10) == 0.0);
}

TEST_CASE("step_density is the mean over tokens") {
    TokenHistory history;
    history.occurrences["a"] = {0};  // density 0.5 at step 0 with N=2
    DensityLandscape landscape(history, 2, 2.0);
    CHECK(landscape.step_density("a b", 0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(landscape.step_density("novel tokens only", 0) == 0.0);
    CHECK(landscape.step_density("a a", 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(landscape.step_density("a b", 0, DensityAggregation::Max) ==
          doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("oracle equivalence on random histories") {
    RngStream rng(404);
    const double bandwidths[] = {0.5, 1.0, 2.0, 5.0};
    for (int trial = 0; trial < 50; ++trial) {
        int individuals = 1 + static_cast<int>(rng.next_below(100));
        TokenHistory history;
        std::vector<std::string> vocab = {"alpha", "beta", "gamma", "delta"};
        for (const auto& token : vocab) {
            int occurrences = static_cast<int>(rng.next_below(60));
            for (int o = 0; o < occurrences; ++o) {
                history.occurrences[token].push_back(static_cast<int>(rng.next_below(50)));
            }
        }
        double h = bandwidths[rng.next_below(4)];
        DensityLandscape landscape(history, individuals, h);
        for (const auto& token : vocab) {
            for (int q = 0; q < 50; q += 7) {
                double expected = brute_force_density(
                    landscape.history().occurrences.count(token)
                        ? landscape.history().occurrences.at(token)
                        : std::vector<int>{},
                    individuals, h, q);
                CHECK(landscape.token_density(token, q) ==
                      doctest::Approx(expected).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("adding an occurrence never decreases the unnormalized sum") {
    RngStream rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        TokenHistory history;
        int occurrences = static_cast<int>(rng.next_below(20));
        for (int o = 0; o < occurrences; ++o) {
            history.occurrences["t"].push_back(static_cast<int>(rng.next_below(30)));
        }
        int query = static_cast<int>(rng.next_below(30));
        DensityLandscape before(history, 1, 2.0);
        double base = before.token_density("t", query);

        history.occurrences["t"].push_back(query);
        DensityLandscape after(history, 1, 2.0);
        CHECK(after.token_density("t", query) >= base);
    }
}

TEST_CASE("locality: occurrences outside the radius leave the value bit-identical") {
    TokenHistory near;
    near.occurrences["t"] = {4, 5, 6};
    DensityLandscape a(near, 3, 2.0);
    double base = a.token_density("t", 5);

    TokenHistory padded = near;
    padded.occurrences["t"].push_back(20);
    padded.occurrences["t"].push_back(0);
    DensityLandscape b(padded, 3, 2.0);
    CHECK(b.token_density("t", 5) == base);
}

TEST_CASE("densities are non-negative and kernel stays in [0,1]") {
    RngStream rng(8);
    for (int trial = 0; trial < 500; ++trial) {
        double d = rng.next_double() * 20.0 - 10.0;
        double h = rng.next_double() * 5.0 + 1e-6;
        double k = kernel(d, h);
        CHECK(k >= 0.0);
        CHECK(k <= 1.0);
    }
}
