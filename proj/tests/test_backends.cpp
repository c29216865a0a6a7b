#include <atomic>
#include <fstream>
#include <memory>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"

#include "sier/backends.hpp"
#include "sier/density.hpp"
#include "sier/landscape.hpp"
#include "sier/rng.hpp"

using namespace sier;

namespace {

LandscapeSpec dual_trap_spec() {
    LandscapeSpec spec;
    spec.name = "dual_trap_deep";
    spec.traps = {{2, 0.92}, {1, 0.89}};
    return spec;
}

std::shared_ptr<const PlantedLandscape> shared_landscape(const LandscapeSpec& spec,
                                                         std::uint64_t seed) {
    return std::make_shared<const PlantedLandscape>(build_planted_landscape(spec, seed));
}

}  // namespace

TEST_CASE("aggregate_scores per metric mode") {
    std::vector<double> scores = {0.9, 0.4, 0.8};
    CHECK(aggregate_scores(scores, MetricMode::Last) == 0.8);
    CHECK(aggregate_scores(scores, MetricMode::Min) == 0.4);
    CHECK(aggregate_scores(scores, MetricMode::Product) ==
          doctest::Approx(0.9 * 0.4 * 0.8));
}

TEST_CASE("same seed gives identical landscapes and files") {
    auto a = build_planted_landscape(dual_trap_spec(), 303);
    auto b = build_planted_landscape(dual_trap_spec(), 303);
    CHECK(a.to_json() == b.to_json());
    CHECK(a.global_optima() == b.global_optima());
    CHECK(a.local_optima() == b.local_optima());
}

TEST_CASE("landscape file round trip keeps the stamped ground truth") {
    auto a = build_planted_landscape(dual_trap_spec(), 303);
    auto b = PlantedLandscape::from_json(a.to_json());
    CHECK(a.to_json() == b.to_json());
}

TEST_CASE("greedy path terminates at a trap on deceptive landscapes") {
    auto land = build_planted_landscape(dual_trap_spec(), 303);
    const auto& traps = land.local_optima();
    CHECK(std::find(traps.begin(), traps.end(), land.greedy_path()) != traps.end());
}

TEST_CASE("greedy path reaches gold without traps") {
    LandscapeSpec spec;
    spec.name = "control";
    auto land = build_planted_landscape(spec, 101);
    const auto& golds = land.global_optima();
    CHECK(std::find(golds.begin(), golds.end(), land.greedy_path()) != golds.end());
}

TEST_CASE("trap colliding with gold is a construction error") {
    LandscapeSpec spec = dual_trap_spec();
    spec.gold_final_score = 0.98;  // below the 0.99 floor
    CHECK_THROWS_AS(build_planted_landscape(spec, 303), std::runtime_error);

    LandscapeSpec flat = dual_trap_spec();
    flat.traps[0].final_score = 0.70;  // below the trap prefix base
    CHECK_THROWS_AS(build_planted_landscape(flat, 303), std::runtime_error);
}

TEST_CASE("mock generator is deterministic under a fixed seed") {
    auto land = shared_landscape(dual_trap_spec(), 303);
    MockGenerator gen(land);
    GenerationRequest req{"q", "", 1.0, 1.0, std::nullopt, 4096};

    RngStream a(42), b(42);
    auto ra = gen.generate(req, a);
    auto rb = gen.generate(req, b);
    CHECK(ra.text == rb.text);
    CHECK(ra.cost == rb.cost);
    CHECK(ra.finished);
    CHECK(ra.cost == static_cast<std::int64_t>(whitespace_tokens(ra.text).size()));
}

TEST_CASE("stop-sequence contract: one step at a time, delimiter kept once") {
    auto land = shared_landscape(dual_trap_spec(), 303);
    MockGenerator gen(land);
    GenerationRequest req{"q", "", 1.0, 1.0, std::string("\n\n"), 512};
    RngStream rng(7);
    auto result = gen.generate(req, rng);
    CHECK_FALSE(result.finished);
    // At most one step: exactly one delimiter, at the very end.
    CHECK(result.text.ends_with("\n\n"));
    CHECK(count_steps(result.text, "\n\n") == 1);
    CHECK(result.text.find("\n\n") == result.text.size() - 2);
}

TEST_CASE("mock evaluator scores every step and is pure") {
    auto land = shared_landscape(dual_trap_spec(), 303);
    MockEvaluator eval(land);
    std::string gold_text = land->path_text(land->global_optima().front());

    auto r1 = eval.evaluate("q", gold_text, MetricMode::Last);
    auto r2 = eval.evaluate("q", gold_text, MetricMode::Last);
    CHECK(r1.step_scores == r2.step_scores);
    CHECK(r1.step_scores.size() == count_steps(gold_text, "\n\n"));
    CHECK(r1.aggregate >= 0.99);

    // Planted gold paths score at least 0.99 on every step? No: prefixes are
    // modest by design; only the final step clears the threshold.
    CHECK(r1.step_scores.back() >= 0.99);
}

TEST_CASE("trap paths stay below the gold final quality") {
    auto land = shared_landscape(dual_trap_spec(), 303);
    MockEvaluator eval(land);
    for (const auto& trap : land->local_optima()) {
        auto r = eval.evaluate("q", land->path_text(trap), MetricMode::Last);
        CHECK(r.aggregate < 0.99);
        CHECK(r.aggregate >= 0.80);
    }
}

TEST_CASE("trap prefixes outscore gold prefixes at the fork") {
    auto land = shared_landscape(dual_trap_spec(), 303);
    MockEvaluator eval(land);
    const auto& trap = land->local_optima()[0];
    const auto& gold = land->global_optima()[0];
    int fork = land->spec().traps[0].diverge_depth;

    auto text_upto = [&](const ChoicePath& path, int depth) {
        std::string out;
        for (int d = 0; d <= depth; ++d) {
            out += land->step_core(d, path[d]);
            out += PlantedLandscape::kDelimiter;
        }
        return out;
    };
    auto trap_eval = eval.evaluate("q", text_upto(trap, fork), MetricMode::Last);
    auto gold_eval = eval.evaluate("q", text_upto(gold, fork), MetricMode::Last);
    CHECK(trap_eval.aggregate > gold_eval.aggregate);
}

TEST_CASE("quality table enumerates every leaf") {
    LandscapeSpec small;
    small.name = "tiny";
    small.depth = 3;
    small.branching = 2;
    auto land = build_planted_landscape(small, 9);
    auto table = land.quality_table();
    CHECK(table.size() == 8);
    int golds = 0;
    for (const auto& [path, quality] : table) {
        if (quality >= 0.99) ++golds;
    }
    CHECK(golds == 1);
}

TEST_CASE("metric modes flow through the evaluator") {
    auto land = shared_landscape(dual_trap_spec(), 303);
    MockEvaluator eval(land);
    std::string text = land->path_text(land->global_optima().front());
    auto last = eval.evaluate("q", text, MetricMode::Last);
    auto low = eval.evaluate("q", text, MetricMode::Min);
    CHECK(low.aggregate ==
          *std::min_element(last.step_scores.begin(), last.step_scores.end()));
}

// -- HTTP pair against a local server replaying recorded fixtures ----------

namespace {

struct FixtureServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> gen_failures_left{0};

    explicit FixtureServer(const std::string& fixture_path) {
        std::ifstream in(fixture_path);
        REQUIRE(in);
        std::string line;
        std::vector<std::pair<nlohmann::json, nlohmann::json>> completions, scores;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto j = nlohmann::json::parse(line);
            if (j.at("endpoint") == "/v1/completions") {
                completions.emplace_back(j.at("request"), j.at("response"));
            } else {
                scores.emplace_back(j.at("request"), j.at("response"));
            }
        }
        server.Post("/v1/completions", [this, completions](const httplib::Request& req,
                                                           httplib::Response& res) {
            if (gen_failures_left.fetch_sub(1) > 0) {
                res.status = 503;
                res.set_content("unavailable", "text/plain");
                return;
            }
            auto body = nlohmann::json::parse(req.body);
            for (const auto& [expected, reply] : completions) {
                if (body.at("prompt") == expected.at("prompt")) {
                    res.set_content(reply.dump(), "application/json");
                    return;
                }
            }
            res.status = 404;
        });
        server.Post("/score", [scores](const httplib::Request& req, httplib::Response& res) {
            auto body = nlohmann::json::parse(req.body);
            for (const auto& [expected, reply] : scores) {
                if (body.at("steps") == expected.at("steps")) {
                    res.set_content(reply.dump(), "application/json");
                    return;
                }
            }
            res.status = 404;
        });
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~FixtureServer() {
        server.stop();
        thread.join();
    }

    HttpBackendOptions options() const {
        HttpBackendOptions opts;
        std::string url = "http://127.0.0.1:" + std::to_string(port);
        opts.gen_url = url;
        opts.eval_url = url;
        opts.timeout_s = 5.0;
        opts.sleep_on_retry = false;
        return opts;
    }
};

std::string fixture_path() {
    return std::string(SIER_FIXTURE_DIR) + "/http_replay.jsonl";
}

}  // namespace

TEST_CASE("http generator returns the fixture text and token count verbatim") {
    FixtureServer server(fixture_path());
    HttpGenerator gen(server.options());
    GenerationRequest req{"What is 6*7?", "", 1.0, 1.0, std::nullopt, 128};
    RngStream rng(1);
    auto result = gen.generate(req, rng);
    CHECK(result.text == "We compute 6*7 = 42.\n\nSo the answer is \\boxed{42}.");
    CHECK(result.cost == 13);
    CHECK(result.finished);
}

TEST_CASE("http generator marks stop-sequence output unfinished") {
    FixtureServer server(fixture_path());
    HttpGenerator gen(server.options());
    GenerationRequest req{"What is 6*7?", "step one", 1.0, 1.0, std::string("\n\n"), 128};
    RngStream rng(1);
    auto result = gen.generate(req, rng);
    CHECK(result.text == "We compute 6*7 = 42.");
    CHECK_FALSE(result.finished);
}

TEST_CASE("http generator retries transport failures then succeeds") {
    FixtureServer server(fixture_path());
    server.gen_failures_left = 2;
    HttpGenerator gen(server.options());
    GenerationRequest req{"What is 6*7?", "", 1.0, 1.0, std::nullopt, 128};
    RngStream rng(1);
    auto result = gen.generate(req, rng);
    CHECK(result.cost == 13);

    server.gen_failures_left = 5;  // more failures than the attempt budget
    RngStream rng2(1);
    CHECK_THROWS_AS(gen.generate(req, rng2), BackendError);
}

TEST_CASE("http evaluator sends split steps and clamps out-of-range scores") {
    FixtureServer server(fixture_path());
    HttpEvaluator eval(server.options(), "\n\n");
    auto result = eval.evaluate("What is 6*7?",
                                "We compute 6*7 = 42.\n\nSo the answer is \\boxed{42}.",
                                MetricMode::Last);
    REQUIRE(result.step_scores.size() == 2);
    CHECK(result.step_scores[0] == 0.9);
    CHECK(result.step_scores[1] == 1.0);  // fixture says 1.7, clamped
    CHECK(result.aggregate == 1.0);
    CHECK(eval.clamp_warnings() == 1);
}
