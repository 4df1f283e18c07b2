#include "memloop/environment.hpp"

#include <unordered_set>

#include "memloop/text.hpp"

namespace memloop {

void EpisodeConfig::validate() const {
    if (chunk_size_tokens < 1) throw std::invalid_argument("chunk_size_tokens must be >= 1");
    if (retrieve_k < 1) throw std::invalid_argument("retrieve_k must be >= 1");
    if (chunk_overlap_tokens < 0) throw std::invalid_argument("chunk_overlap_tokens must be >= 0");
    if (chunk_overlap_tokens >= chunk_size_tokens) {
        throw std::invalid_argument("chunk overlap must be smaller than the chunk size");
    }
    if (max_parse_diagnostics_shown < 0) {
        throw std::invalid_argument("max_parse_diagnostics_shown must be >= 0");
    }
}

const char* to_string(Phase phase) {
    switch (phase) {
        case Phase::streaming: return "streaming";
        case Phase::answering: return "answering";
        case Phase::done: return "done";
    }
    return "?";
}

ChunkPlan plan_chunks(const std::vector<std::string>& documents, const EpisodeConfig& config,
                      const TokenCounter& counter) {
    config.validate();

    ChunkPlan plan;
    bool any_content = false;
    for (std::size_t i = 0; i < documents.size(); ++i) {
        if (i > 0) {
            // Delimiter between documents, carrying the ordinal of the one
            // that follows. Markers are atomic: never split mid-marker.
            plan.atoms.push_back("=== Document " + std::to_string(i + 1) + " ===");
            plan.is_marker.push_back(true);
        }
        for (std::string& word : split_words(documents[i])) {
            plan.atoms.push_back(std::move(word));
            plan.is_marker.push_back(false);
            any_content = true;
        }
    }
    if (!any_content) throw EmptyCorpusError("document stream has no content");

    const std::size_t n = plan.atoms.size();
    std::vector<double> cost(n);
    for (std::size_t i = 0; i < n; ++i) cost[i] = counter.count(plan.atoms[i]);

    const double budget = static_cast<double>(config.chunk_size_tokens);
    const double overlap = static_cast<double>(config.chunk_overlap_tokens);
    constexpr double kEps = 1e-9;

    std::size_t start = 0;
    while (start < n) {
        double acc = 0.0;
        std::size_t end = start;
        while (end < n && acc + cost[end] <= budget + kEps) {
            acc += cost[end];
            ++end;
        }
        if (end == start) end = start + 1;  // an atom larger than the budget goes out alone
        plan.windows.push_back({start, end});

        std::size_t next = end;
        double back = 0.0;
        while (next > start + 1 && back + cost[next - 1] <= overlap + kEps) {
            back += cost[next - 1];
            --next;
        }
        start = next;
    }
    return plan;
}

namespace {

std::string render_window(const ChunkPlan& plan, std::size_t start, std::size_t end) {
    std::string out;
    for (std::size_t i = start; i < end; ++i) {
        if (i > start) out += (plan.is_marker[i] || plan.is_marker[i - 1]) ? '\n' : ' ';
        out += plan.atoms[i];
    }
    return out;
}

}  // namespace

std::vector<std::string> chunk_stream(const std::vector<std::string>& documents,
                                      const EpisodeConfig& config, const TokenCounter& counter) {
    const ChunkPlan plan = plan_chunks(documents, config, counter);
    std::vector<std::string> chunks;
    chunks.reserve(plan.windows.size());
    for (const auto& [start, end] : plan.windows) {
        chunks.push_back(render_window(plan, start, end));
    }
    return chunks;
}

Environment::Environment(EpisodeConfig config, std::shared_ptr<EmbeddingProvider> provider,
                         std::shared_ptr<const TokenCounter> counter)
    : config_(config), counter_(std::move(counter)), retriever_(std::move(provider)) {
    config_.validate();
    if (!counter_) throw std::invalid_argument("Environment: token counter is required");
}

std::pair<EpisodeState, Observation> Environment::reset(const TaskInstance& task) {
    if (task.questions.empty()) throw std::invalid_argument("task has no questions");
    if (task.questions.size() != task.gold.size()) {
        throw std::invalid_argument("task questions/gold mismatch");
    }

    std::vector<std::string> texts;
    texts.reserve(task.documents.size());
    for (const auto& doc : task.documents) texts.push_back(doc.text);

    EpisodeState state;
    state.task = task;
    state.chunks = chunk_stream(texts, config_, *counter_);
    state.answers.assign(task.questions.size(), "");

    Observation first;
    first.step = 0;
    first.env_chunk = state.chunks.front();
    state.last_observation = first;
    return {std::move(state), first};
}

std::vector<std::pair<std::int64_t, std::string>> Environment::evaluate_reads(EpisodeState& state) {
    std::vector<std::pair<std::int64_t, std::string>> out;
    std::unordered_set<std::int64_t> seen;
    const std::size_t cap = static_cast<std::size_t>(config_.retrieve_k);
    for (const auto& query : state.pending_read_queries) {
        for (const auto& hit : retriever_.top_k(state.memory, query, config_.retrieve_k)) {
            if (out.size() >= cap) break;
            if (seen.insert(hit.id).second) {
                out.emplace_back(hit.id, state.memory.entries.at(hit.id).content);
            }
        }
        if (out.size() >= cap) break;
    }
    return out;
}

std::optional<Observation> Environment::step(EpisodeState& state, const std::string& policy_text) {
    if (state.phase == Phase::done) throw EpisodeDoneError{};

    const Observation current = state.last_observation;
    ActionSequence seq = parse_actions(policy_text, config_.schema);
    state.memory.step = current.step;
    ApplyReport report = apply_sequence(state.memory, seq);

    std::vector<std::string> diagnostics;
    for (const auto& d : seq.diagnostics) diagnostics.push_back(format_diagnostic(d));
    for (auto& d : report.failure_diagnostics()) diagnostics.push_back(std::move(d));

    const bool was_answering = state.phase == Phase::answering;
    if (was_answering) {
        if (!seq.final_answer) diagnostics.push_back("answer turn without an <answer> tag");
        state.answers[state.question_cursor] = seq.final_answer.value_or("");
        ++state.question_cursor;
    } else if (seq.final_answer) {
        diagnostics.push_back("answer ignored during the streaming phase");
    }

    std::vector<std::string> new_queries;
    for (const auto& q : report.pending_reads) {
        std::string trimmed = trim(q);
        if (trimmed.empty()) {
            diagnostics.push_back("empty read query skipped");
        } else {
            new_queries.push_back(std::move(trimmed));
        }
    }
    if (config_.schema.kind == SchemaKind::prompt) {
        // Standing query: replaced when a new one arrives, kept otherwise.
        if (!new_queries.empty()) state.pending_read_queries = std::move(new_queries);
    } else {
        // Per-step read: no query this step means nothing retrieved next step.
        state.pending_read_queries = std::move(new_queries);
    }

    state.transcript.push_back({current, policy_text, std::move(seq), diagnostics});

    if (was_answering) {
        if (state.question_cursor >= state.task.questions.size()) {
            state.phase = Phase::done;
            return std::nullopt;
        }
    } else {
        ++state.cursor;
        if (state.cursor >= state.chunks.size()) state.phase = Phase::answering;
    }

    Observation next;
    next.step = current.step + 1;
    next.scratchpad = state.memory.scratchpad;
    next.active_queries = state.pending_read_queries;
    next.retrieved = evaluate_reads(state);
    if (static_cast<int>(diagnostics.size()) > config_.max_parse_diagnostics_shown) {
        diagnostics.resize(static_cast<std::size_t>(config_.max_parse_diagnostics_shown));
    }
    next.diagnostics = std::move(diagnostics);
    if (state.phase == Phase::streaming) {
        next.env_chunk = state.chunks[state.cursor];
    } else {
        next.pending_question = state.task.questions[state.question_cursor];
    }
    state.last_observation = next;
    return next;
}

EpisodeRun Environment::run_episode(const TaskInstance& task, Policy& policy,
                                    const std::string& task_id) {
    auto [state, first] = reset(task);
    std::optional<Observation> current = first;
    while (current) {
        const std::string text = policy.respond(state.task, *current);
        current = step(state, text);
    }

    TrajectoryRecord record;
    record.task_id = task_id;
    record.answers = state.answers;
    record.per_step_actions.reserve(state.transcript.size());
    record.token_spans.reserve(state.transcript.size());
    for (const auto& entry : state.transcript) {
        record.per_step_actions.push_back(entry.actions);
        record.token_spans.push_back(
            {entry.observation.step, static_cast<int>(split_words(entry.policy_text).size())});
    }
    return {std::move(state), std::move(record)};
}

nlohmann::json observation_to_json(const Observation& obs) {
    nlohmann::json retrieved = nlohmann::json::array();
    for (const auto& [id, content] : obs.retrieved) {
        retrieved.push_back({{"id", id}, {"content", content}});
    }
    return {
        {"step", obs.step},
        {"env_chunk", obs.env_chunk ? nlohmann::json(*obs.env_chunk) : nlohmann::json(nullptr)},
        {"scratchpad", obs.scratchpad},
        {"retrieved", std::move(retrieved)},
        {"active_queries", obs.active_queries},
        {"pending_question",
         obs.pending_question ? nlohmann::json(*obs.pending_question) : nlohmann::json(nullptr)},
        {"diagnostics", obs.diagnostics},
    };
}

nlohmann::json transcript_step_to_json(const TranscriptStep& step) {
    nlohmann::json actions = nlohmann::json::array();
    for (const auto& action : step.actions.actions) actions.push_back(action_to_json(action));
    return {
        {"step", step.observation.step},
        {"observation", observation_to_json(step.observation)},
        {"policy_text", step.policy_text},
        {"actions", std::move(actions)},
        {"final_answer", step.actions.final_answer ? nlohmann::json(*step.actions.final_answer)
                                                   : nlohmann::json(nullptr)},
        {"diagnostics", step.diagnostics},
    };
}

std::string transcript_to_jsonl(const std::vector<TranscriptStep>& transcript) {
    std::string out;
    for (const auto& step : transcript) {
        out += transcript_step_to_json(step).dump();
        out += '\n';
    }
    return out;
}

}  // namespace memloop
