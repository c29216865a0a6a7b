#include "sier/backends.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace sier {

double aggregate_scores(std::span<const double> scores, MetricMode mode) {
    if (scores.empty()) return 0.0;
    switch (mode) {
        case MetricMode::Last:
            return scores.back();
        case MetricMode::Min:
            return *std::min_element(scores.begin(), scores.end());
        case MetricMode::Product: {
            double p = 1.0;
            for (double s : scores) p *= s;
            return p;
        }
    }
    return scores.back();
}

HttpBackendOptions HttpBackendOptions::from_env() {
    HttpBackendOptions opts;
    if (const char* v = std::getenv("GEN_URL")) opts.gen_url = v;
    if (const char* v = std::getenv("EVAL_URL")) opts.eval_url = v;
    if (const char* v = std::getenv("API_TOKEN")) opts.api_token = v;
    if (const char* v = std::getenv("REQUEST_TIMEOUT_S")) opts.timeout_s = std::atof(v);
    if (const char* v = std::getenv("GEN_MODEL")) opts.model = v;
    return opts;
}

namespace {

struct ParsedUrl {
    std::string host_port;  // scheme://host:port
    std::string base_path;  // leading path, possibly empty
};

ParsedUrl split_url(const std::string& url) {
    std::size_t scheme = url.find("://");
    std::size_t path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) return {url, ""};
    return {url.substr(0, path_start), url.substr(path_start)};
}

/// POSTs JSON with retry on transport failures and 5xx. 4xx fails fast.
nlohmann::json post_json(const HttpBackendOptions& opts, const std::string& url,
                         const std::string& path, const nlohmann::json& body) {
    auto [host, base] = split_url(url);
    int attempts = 0;
    double backoff = opts.backoff_start_s;
    std::string last_error;
    while (attempts < opts.max_attempts) {
        ++attempts;
        httplib::Client client(host);
        client.set_connection_timeout(std::chrono::duration<double>(opts.timeout_s));
        client.set_read_timeout(std::chrono::duration<double>(opts.timeout_s));
        httplib::Headers headers;
        if (!opts.api_token.empty()) {
            headers.emplace("Authorization", "Bearer " + opts.api_token);
        }
        auto res = client.Post(base + path, headers, body.dump(), "application/json");
        if (res && res->status >= 200 && res->status < 300) {
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::parse_error& e) {
                throw BackendError("backend returned malformed JSON: " + std::string(e.what()),
                                   attempts);
            }
        }
        if (res && res->status >= 400 && res->status < 500) {
            throw BackendError("backend rejected request (" + std::to_string(res->status) +
                                   "): " + res->body,
                               attempts);
        }
        last_error = res ? "status " + std::to_string(res->status)
                         : "transport error: " + httplib::to_string(res.error());
        if (attempts < opts.max_attempts && opts.sleep_on_retry) {
            std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
            backoff *= 2.0;
        }
    }
    throw BackendError("backend unreachable after " + std::to_string(attempts) +
                           " attempts: " + last_error,
                       attempts);
}

}  // namespace

HttpGenerator::HttpGenerator(HttpBackendOptions options) : options_(std::move(options)) {}

GenerationResult HttpGenerator::generate(const GenerationRequest& request, RngStream& rng) {
    nlohmann::json body;
    if (!options_.model.empty()) body["model"] = options_.model;
    body["prompt"] = request.question + "\n" + request.prefix;
    body["temperature"] = request.temperature;
    body["top_p"] = request.top_p;
    body["max_tokens"] = request.max_tokens;
    body["seed"] = rng.next_u64() & 0x7fffffffULL;
    if (request.stop) body["stop"] = *request.stop;

    nlohmann::json reply = post_json(options_, options_.gen_url, "/v1/completions", body);

    GenerationResult result;
    if (reply.contains("choices") && !reply["choices"].empty()) {
        const auto& choice = reply["choices"][0];
        result.text = choice.value("text", std::string());
        std::string finish = choice.value("finish_reason", std::string());
        // With a stop sequence in play, "stop" is ambiguous between natural
        // termination and the stop word; treat it as the stop word.
        result.finished = finish == "stop" && !request.stop.has_value();
    }
    if (reply.contains("usage")) {
        result.cost = reply["usage"].value("completion_tokens", std::int64_t(0));
    }
    return result;
}

HttpEvaluator::HttpEvaluator(HttpBackendOptions options, std::string stop_word)
    : options_(std::move(options)), stop_word_(std::move(stop_word)) {}

EvaluationResult HttpEvaluator::evaluate(const std::string& question,
                                         const std::string& solution_prefix,
                                         MetricMode mode) {
    nlohmann::json body;
    body["question"] = question;
    body["steps"] = split_steps(solution_prefix, stop_word_);

    nlohmann::json reply = post_json(options_, options_.eval_url, "/score", body);

    EvaluationResult result;
    if (reply.contains("step_scores")) {
        for (const auto& v : reply["step_scores"]) {
            double s = v.get<double>();
            if (s < 0.0 || s > 1.0) {
                s = std::clamp(s, 0.0, 1.0);
                clamp_warnings_.fetch_add(1);
            }
            result.step_scores.push_back(s);
        }
    }
    result.aggregate = aggregate_scores(result.step_scores, mode);
    return result;
}

}  // namespace sier
