#pragma once

#include <condition_variable>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "memloop/environment.hpp"

namespace memloop {

struct ScriptExhaustedError : std::runtime_error {
    explicit ScriptExhaustedError(std::size_t turn)
        : std::runtime_error("replay script exhausted at turn " + std::to_string(turn)) {}
};
struct TransportError : std::runtime_error {
    explicit TransportError(const std::string& what) : std::runtime_error(what) {}
};
struct TimeoutError : TransportError {
    explicit TimeoutError(const std::string& what) : TransportError(what) {}
};

// One rendered exchange with a chat model.
struct PolicyTurn {
    std::string rendered_prompt;
    std::string response;
};

// Deterministic template fill of the per-turn user prompt. Streaming turns
// carry the article section; answer turns substitute the pending question and
// omit the article block.
std::string render_prompt(const TaskInstance& task, const Observation& observation,
                          const EpisodeConfig& config);

// Instructional system prompt matching the schema's tag vocabulary.
std::string render_system_prompt(const SchemaVariant& schema);

// Returns scripted responses in order, ignoring observations. Serves a single
// episode; throws ScriptExhaustedError past the last entry.
class ReplayPolicy : public Policy {
public:
    explicit ReplayPolicy(std::vector<std::string> script);
    std::string respond(const TaskInstance& task, const Observation& observation) override;

private:
    std::vector<std::string> script_;
    std::size_t next_ = 0;
};

// Model-free baseline: stores every sentence that mentions a question keyword,
// keeps a standing read for the question text, and answers with the tail of
// the best retrieved sentence after its last keyword hit.
class HeuristicPolicy : public Policy {
public:
    explicit HeuristicPolicy(SchemaVariant schema);
    std::string respond(const TaskInstance& task, const Observation& observation) override;

private:
    SchemaVariant schema_;
};

struct RemotePolicyConfig {
    std::string endpoint;  // e.g. "http://127.0.0.1:8800"
    std::string path = "/v1/chat/completions";
    std::string model = "default";
    double temperature = 0.7;
    double top_p = 1.0;
    int max_in_flight = 4;
    int timeout_ms = 30000;
    int max_retries = 3;
    std::string api_key;  // MEMLOOP_API_KEY overrides
};

// Reads a "key = value" config file ('#' starts a comment). Unknown keys are
// rejected so typos do not silently fall back to defaults.
RemotePolicyConfig load_policy_config(const std::filesystem::path& path);

// Chat-completion client: posts the rendered prompt, retries transient
// failures with exponential backoff, and bounds in-flight requests.
class RemotePolicy : public Policy {
public:
    RemotePolicy(RemotePolicyConfig config, EpisodeConfig episode_config);
    std::string respond(const TaskInstance& task, const Observation& observation) override;

    // Exposed for tests: one raw round trip without prompt rendering.
    std::string complete(const std::string& system_prompt, const std::string& user_prompt);

private:
    RemotePolicyConfig config_;
    EpisodeConfig episode_config_;
    std::string system_prompt_;

    std::mutex slots_mutex_;
    std::condition_variable slots_cv_;
    int slots_in_use_ = 0;
};

}  // namespace memloop
