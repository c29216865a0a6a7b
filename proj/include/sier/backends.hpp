#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "sier/rng.hpp"
#include "sier/types.hpp"

namespace sier {

struct GenerationRequest {
    std::string question;
    std::string prefix;
    double temperature = 1.0;
    double top_p = 1.0;
    std::optional<std::string> stop;
    int max_tokens = 512;
};

struct GenerationResult {
    std::string text;
    std::int64_t cost = 0;   // backend-reported token count
    bool finished = false;   // natural termination, not stop sequence or token cap
};

struct EvaluationResult {
    double aggregate = 0.0;
    std::vector<double> step_scores;  // one per stop-word-delimited step
};

/// Raised when a backend call fails for good after its retry budget.
class BackendError : public std::runtime_error {
public:
    BackendError(const std::string& what, int attempts)
        : std::runtime_error(what), attempts_(attempts) {}
    int attempts() const { return attempts_; }

private:
    int attempts_;
};

double aggregate_scores(std::span<const double> scores, MetricMode mode);

class Generator {
public:
    virtual ~Generator() = default;
    virtual GenerationResult generate(const GenerationRequest& request, RngStream& rng) = 0;
};

class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual EvaluationResult evaluate(const std::string& question,
                                      const std::string& solution_prefix,
                                      MetricMode mode) = 0;
};

/// Connection settings for the HTTP pair, resolvable from GEN_URL, EVAL_URL,
/// API_TOKEN and REQUEST_TIMEOUT_S.
struct HttpBackendOptions {
    std::string gen_url;
    std::string eval_url;
    std::string api_token;
    double timeout_s = 60.0;
    std::string model;  // forwarded verbatim when non-empty
    int max_attempts = 3;
    double backoff_start_s = 0.5;
    bool sleep_on_retry = true;  // tests turn this off

    static HttpBackendOptions from_env();
};

/// OpenAI-style completions client: POST {gen_url}/v1/completions, reading
/// choices[0].text, usage.completion_tokens and finish_reason. Transport
/// errors and 5xx responses retry with exponential backoff.
class HttpGenerator : public Generator {
public:
    explicit HttpGenerator(HttpBackendOptions options);
    GenerationResult generate(const GenerationRequest& request, RngStream& rng) override;

private:
    HttpBackendOptions options_;
};

/// Step-score client: POST {eval_url}/score with {question, steps:[...]},
/// reading {step_scores:[...]}. Aggregation happens here, per metric mode;
/// out-of-range scores are clamped and counted.
class HttpEvaluator : public Evaluator {
public:
    HttpEvaluator(HttpBackendOptions options, std::string stop_word);
    EvaluationResult evaluate(const std::string& question,
                              const std::string& solution_prefix,
                              MetricMode mode) override;

    std::uint64_t clamp_warnings() const { return clamp_warnings_.load(); }

private:
    HttpBackendOptions options_;
    std::string stop_word_;
    std::atomic<std::uint64_t> clamp_warnings_{0};
};

}  // namespace sier
