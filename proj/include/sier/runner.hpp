#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sier/backends.hpp"
#include "sier/metrics.hpp"
#include "sier/types.hpp"

namespace sier {

/// Line-delimited JSON with fields id, question, answer. Malformed lines and
/// duplicate ids raise std::runtime_error naming the line / id.
std::vector<ProblemRecord> load_dataset(const std::string& path);

enum class ProblemStatus { Ok, Errored, Skipped };

struct RunOptions {
    EngineConfig config;
    std::string dataset_path;
    std::string out_dir;
    int workers = 1;
    bool keep_going = false;
    std::string backend_label;  // recorded in the manifest
    std::optional<std::string> density_dump_path;
};

struct RunArtifacts {
    std::string results_path;
    std::string manifest_path;
    int ok = 0;
    int errored = 0;
    int skipped = 0;
    int resumed = 0;
    bool all_ok() const { return errored == 0 && skipped == 0; }
};

/// One deterministic results line per problem: id, mode, config hash, the
/// selected individuals, costs and logical timing counters. Wall-clock data
/// stays out so reruns are byte-identical.
std::string result_line(const ProblemRecord& problem, const EngineConfig& config,
                        const RunOutcome& outcome);

/// Executes one mode over a dataset with a bounded worker pool and a single
/// ordered writer. Problems already marked ok in an existing results file
/// are not rerun and their lines are kept byte for byte.
RunArtifacts run_command(const RunOptions& options, Generator& generator,
                         Evaluator& evaluator);

/// Per-method summaries from results files written by run_command.
std::vector<ProblemResult> load_results(const std::string& path);

}  // namespace sier
