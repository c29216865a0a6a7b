#include <stdexcept>

#include "doctest.h"

#include "sier/rng.hpp"
#include "sier/types.hpp"

using namespace sier;

TEST_CASE("validate_config accepts the defaults") {
    EngineConfig config;
    CHECK(validate_config(config).empty());
}

TEST_CASE("validate_config reports every violation with field and constraint") {
    EngineConfig config;
    config.small_batch = 9;
    config.sample_size = 8;
    config.bandwidth = 0.0;

    auto errors = validate_config(config);
    REQUIRE(errors.size() == 2);
    bool saw_small_batch = false, saw_bandwidth = false;
    for (const auto& e : errors) {
        if (e.field == "small_batch") {
            saw_small_batch = true;
            CHECK(e.constraint == "small_batch ≤ sample_size");
        }
        if (e.field == "bandwidth") {
            saw_bandwidth = true;
            CHECK(e.constraint == "bandwidth > 0");
        }
    }
    CHECK(saw_small_batch);
    CHECK(saw_bandwidth);
}

TEST_CASE("validate_config theta boundaries") {
    EngineConfig config;
    config.theta = 0.0;
    CHECK_FALSE(validate_config(config).empty());
    config.theta = 1.0;
    CHECK(validate_config(config).empty());
    config.theta = 1.0001;
    CHECK_FALSE(validate_config(config).empty());
}

TEST_CASE("individual serialization round trip") {
    Individual ind{"a\n\nb", 5, 0.7, {0.8, 0.7}, "42"};
    Individual back = deserialize_individual(serialize_individual(ind));
    CHECK(back == ind);
}

TEST_CASE("absent tag round-trips as absent, not empty") {
    Individual ind{"no answer", 3, 0.2, {0.2}, std::nullopt};
    Individual back = deserialize_individual(serialize_individual(ind));
    CHECK_FALSE(back.tag.has_value());
    CHECK(back == ind);
}

TEST_CASE("quality 1.0 and awkward doubles survive with full precision") {
    Individual ind{"x", 1, 1.0, {0.1 + 0.2, 1.0 / 3.0, 1e-17}, std::nullopt};
    Individual back = deserialize_individual(serialize_individual(ind));
    CHECK(back.quality == 1.0);
    CHECK(back.step_scores == ind.step_scores);
}

TEST_CASE("malformed record reports a position") {
    CHECK_THROWS_WITH_AS(deserialize_individual("{\"text\": "),
                         doctest::Contains("byte"), std::runtime_error);
}

TEST_CASE("round trip is identity on random individuals") {
    RngStream rng(77);
    for (int i = 0; i < 200; ++i) {
        Individual ind;
        int len = static_cast<int>(rng.next_below(20));
        for (int c = 0; c < len; ++c) {
            ind.text += static_cast<char>('a' + rng.next_below(26));
            if (rng.next_below(5) == 0) ind.text += "\n\n";
        }
        ind.cost = static_cast<std::int64_t>(rng.next_below(10000));
        ind.quality = rng.next_double();
        int steps = static_cast<int>(rng.next_below(6));
        for (int s = 0; s < steps; ++s) ind.step_scores.push_back(rng.next_double());
        if (rng.next_below(2) == 0) ind.tag = std::to_string(rng.next_below(1000));
        CHECK(deserialize_individual(serialize_individual(ind)) == ind);
    }
}

TEST_CASE("split_steps basics") {
    CHECK(split_steps("", "\n\n").empty());
    CHECK(split_steps("a", "\n\n") == std::vector<std::string>{"a"});
    CHECK(split_steps("a\n\nb", "\n\n") == std::vector<std::string>{"a", "b"});
    CHECK(split_steps("a\n\n", "\n\n") == std::vector<std::string>{"a"});
    CHECK(split_steps("a\n\n\n\nb", "\n\n") == std::vector<std::string>{"a", "", "b"});
}

TEST_CASE("path text reconstruction is byte-identical") {
    Path path;
    path.nodes.push_back({"first step\n\n", 3, 0.5, {0.5}});
    path.nodes.push_back({"second step\n\n", 3, 0.6, {0.5, 0.6}});
    path.nodes.push_back({"done \\boxed{42}.", 3, 0.9, {0.5, 0.6, 0.9}});
    CHECK(path.joined_text() == "first step\n\nsecond step\n\ndone \\boxed{42}.");
}

TEST_CASE("contains_end_flag needs a closed boxed group for the default flag") {
    CHECK(contains_end_flag("so \\boxed{42}.", "\\boxed"));
    CHECK(contains_end_flag("so \\boxed{\\frac{1}{2}}", "\\boxed"));
    CHECK_FALSE(contains_end_flag("so \\boxed{42", "\\boxed"));
    CHECK_FALSE(contains_end_flag("nothing here", "\\boxed"));
    CHECK(contains_end_flag("STOP now", "STOP"));
}

TEST_CASE("config hash tracks semantic fields only") {
    EngineConfig a, b;
    CHECK(config_hash(a) == config_hash(b));
    b.theta = 0.5;
    CHECK(config_hash(a) != config_hash(b));
    b = a;
    b.mode = RunMode::Cot;
    CHECK(config_hash(a) != config_hash(b));
    b = a;
    b.seed = 9;
    CHECK(config_hash(a) != config_hash(b));
}
