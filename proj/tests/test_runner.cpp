#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <unistd.h>

#include "doctest.h"

#include "sier/landscape.hpp"
#include "sier/runner.hpp"
#include "sier/suite.hpp"

using namespace sier;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("sier_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::shared_ptr<const PlantedLandscape> dual_trap_landscape() {
    LandscapeSpec spec;
    spec.name = "dual_trap_deep";
    spec.traps = {{2, 0.92}, {1, 0.89}};
    return std::make_shared<const PlantedLandscape>(build_planted_landscape(spec, 303));
}

std::string mock_dataset(const std::shared_ptr<const PlantedLandscape>& landscape, int count) {
    std::string data;
    for (int i = 0; i < count; ++i) {
        data += "{\"id\": \"p" + std::to_string(i) + "\", \"question\": \"solve it\", "
                "\"answer\": \"" + landscape->spec().gold_answer + "\"}\n";
    }
    return data;
}

}  // namespace

TEST_CASE("load_dataset happy path") {
    TempDir dir;
    write_file(dir.file("data.jsonl"),
               "{\"id\":\"a\",\"question\":\"q1\",\"answer\":\"1\"}\n"
               "\n"
               "{\"id\":\"b\",\"question\":\"q2\",\"answer\":\"2\"}\n"
               "{\"id\":\"c\",\"question\":\"q3\",\"answer\":\"3\"}\n");
    auto records = load_dataset(dir.file("data.jsonl"));
    REQUIRE(records.size() == 3);
    CHECK(records[1].id == "b");
    CHECK(records[1].question == "q2");
    CHECK(records[1].gold_answer == "2");
}

TEST_CASE("load_dataset errors carry line numbers and ids") {
    TempDir dir;
    write_file(dir.file("missing.jsonl"),
               "{\"id\":\"a\",\"question\":\"q1\",\"answer\":\"1\"}\n"
               "{\"id\":\"b\",\"question\":\"q2\"}\n");
    CHECK_THROWS_WITH_AS(load_dataset(dir.file("missing.jsonl")),
                         doctest::Contains("line 2"), std::runtime_error);

    write_file(dir.file("dup.jsonl"),
               "{\"id\":\"p1\",\"question\":\"q1\",\"answer\":\"1\"}\n"
               "{\"id\":\"p1\",\"question\":\"q2\",\"answer\":\"2\"}\n");
    CHECK_THROWS_WITH_AS(load_dataset(dir.file("dup.jsonl")), doctest::Contains("p1"),
                         std::runtime_error);

    write_file(dir.file("broken.jsonl"), "{not json}\n");
    CHECK_THROWS_WITH_AS(load_dataset(dir.file("broken.jsonl")),
                         doctest::Contains("line 1"), std::runtime_error);
}

TEST_CASE("run_command writes results, manifest, and is worker-count invariant") {
    auto landscape = dual_trap_landscape();
    TempDir dir;
    write_file(dir.file("data.jsonl"), mock_dataset(landscape, 6));

    auto run_with = [&](const std::string& out_dir, int workers) {
        RunOptions options;
        options.config.seed = 9;
        options.config.mode = RunMode::Sier;
        options.dataset_path = dir.file("data.jsonl");
        options.out_dir = (dir.path / out_dir).string();
        options.workers = workers;
        options.backend_label = "mock:test";
        MockGenerator generator(landscape);
        MockEvaluator evaluator(landscape);
        return run_command(options, generator, evaluator);
    };

    RunArtifacts one = run_with("w1", 1);
    RunArtifacts four = run_with("w4", 4);
    CHECK(one.ok == 6);
    CHECK(one.all_ok());
    CHECK(read_file(one.results_path) == read_file(four.results_path));
    CHECK(read_file(one.results_path).find("wall") == std::string::npos);

    auto results = load_results(one.results_path);
    REQUIRE(results.size() == 6);
    for (const auto& r : results) CHECK(r.gold_tag == "42");
}

TEST_CASE("resume skips completed problems and keeps their bytes") {
    auto landscape = dual_trap_landscape();
    TempDir dir;
    write_file(dir.file("data.jsonl"), mock_dataset(landscape, 4));

    RunOptions options;
    options.config.seed = 4;
    options.dataset_path = dir.file("data.jsonl");
    options.out_dir = (dir.path / "out").string();
    options.backend_label = "mock:test";
    MockGenerator generator(landscape);
    MockEvaluator evaluator(landscape);

    RunArtifacts first = run_command(options, generator, evaluator);
    std::string before = read_file(first.results_path);

    // Truncate to two lines to fake an interrupt.
    std::istringstream stream(before);
    std::string line, truncated;
    for (int i = 0; i < 2 && std::getline(stream, line); ++i) truncated += line + "\n";
    write_file(first.results_path, truncated);

    RunArtifacts second = run_command(options, generator, evaluator);
    CHECK(second.resumed == 2);
    CHECK(read_file(second.results_path) == before);
}

TEST_CASE("errored problems abort by default and continue with keep_going") {
    class ExplodingGenerator : public Generator {
    public:
        GenerationResult generate(const GenerationRequest&, RngStream&) override {
            throw BackendError("refused", 3);
        }
    };
    auto landscape = dual_trap_landscape();
    TempDir dir;
    write_file(dir.file("data.jsonl"), mock_dataset(landscape, 3));

    RunOptions options;
    options.dataset_path = dir.file("data.jsonl");
    options.out_dir = (dir.path / "out").string();
    options.backend_label = "mock:test";
    ExplodingGenerator generator;
    MockEvaluator evaluator(landscape);

    RunArtifacts aborted = run_command(options, generator, evaluator);
    CHECK(aborted.errored >= 1);
    CHECK_FALSE(aborted.all_ok());

    options.keep_going = true;
    options.out_dir = (dir.path / "out2").string();
    RunArtifacts kept = run_command(options, generator, evaluator);
    CHECK(kept.errored == 3);
    CHECK(kept.skipped == 0);
}

TEST_CASE("default suite ships three verified landscapes") {
    SuiteSpec suite = default_suite();
    REQUIRE(suite.landscapes.size() == 3);
    CHECK(suite.trials >= 100);
    for (const auto& land : suite.landscapes) {
        PlantedLandscape built = build_planted_landscape(land.spec, land.seed);
        built.verify();
    }
}

TEST_CASE("suite spec round-trips through JSON") {
    TempDir dir;
    SuiteSpec suite = default_suite();
    write_file(dir.file("suite.json"), suite_to_json(suite));
    SuiteSpec loaded = load_suite(dir.file("suite.json"));
    CHECK(loaded.name == suite.name);
    CHECK(loaded.trials == suite.trials);
    CHECK(loaded.modes == suite.modes);
    REQUIRE(loaded.landscapes.size() == suite.landscapes.size());
    CHECK(loaded.landscapes[2].spec.traps.size() == 2);
}

TEST_CASE("suite cells pair seeds across modes") {
    SuiteSpec suite = default_suite();
    suite.trials = 5;
    const auto& land = suite.landscapes[2];
    PlantedLandscape landscape = build_planted_landscape(land.spec, land.seed);
    EngineConfig config;
    config.seed = suite.seed_base;

    // cot and sier share the init phase: identical max init qualities.
    auto cot = run_suite_cell(landscape, land.spec.name, RunMode::Cot, suite.trials, config);
    auto sier = run_suite_cell(landscape, land.spec.name, RunMode::Sier, suite.trials, config);
    REQUIRE(cot.size() == sier.size());
    for (std::size_t i = 0; i < cot.size(); ++i) {
        CHECK(cot[i].max_init_quality == sier[i].max_init_quality);
    }
}
