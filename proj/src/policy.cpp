#include "memloop/policy.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <thread>
#include <unordered_set>

#include "httplib.h"
#include "json.hpp"
#include "memloop/io.hpp"
#include "memloop/text.hpp"

namespace memloop {

namespace {

constexpr std::string_view kEmptyPlaceholder = "(empty)";
constexpr std::string_view kNonePlaceholder = "(none)";

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += sep;
        out += p;
    }
    return out;
}

std::string question_block(const TaskInstance& task) {
    if (task.questions.size() == 1) return task.questions.front();
    std::string out;
    for (std::size_t i = 0; i < task.questions.size(); ++i) {
        if (!out.empty()) out += '\n';
        out += std::to_string(i + 1) + ". " + task.questions[i];
    }
    return out;
}

std::string memory_block(const Observation& obs) {
    if (obs.retrieved.empty()) return std::string(kEmptyPlaceholder);
    std::string out;
    for (const auto& [id, content] : obs.retrieved) {
        if (!out.empty()) out += '\n';
        out += "Memory " + std::to_string(id) + ": " + content;
    }
    return out;
}

std::string diagnostics_block(const Observation& obs) {
    if (obs.diagnostics.empty()) return std::string(kNonePlaceholder);
    std::string out;
    for (const auto& d : obs.diagnostics) {
        if (!out.empty()) out += '\n';
        out += "- " + d;
    }
    return out;
}

std::string tips_block(const SchemaVariant& schema) {
    const char* read_tag = schema.kind == SchemaKind::prompt ? "<update_query>" : "<read_memory>";
    std::string tips;
    tips += "Do not change the retrieval query over and over. If the memory you want does not ";
    tips += "come back, it is not in the database.\n";
    tips += "Avoid issuing ";
    tips += read_tag;
    tips += " more than once per response; one long composite query of keywords works better, ";
    tips += "since matching is by semantic embedding.";
    return tips;
}

}  // namespace

std::string render_prompt(const TaskInstance& task, const Observation& observation,
                          const EpisodeConfig& config) {
    const bool answering = observation.pending_question.has_value();

    std::string prompt;
    if (answering) {
        prompt += "This is the question you need to answer using only your memories:\n\n";
        prompt += *observation.pending_question;
    } else {
        prompt += "This is the question you need to solve:\n\n";
        prompt += question_block(task);
    }
    prompt += "\n\nThis is your scratchpad from the previous turn.\n\n";
    prompt += observation.scratchpad.empty() ? std::string(kEmptyPlaceholder)
                                             : observation.scratchpad;
    prompt += "\n\nThis is the current query to retrieve memory from the database:\n\n";
    prompt += observation.active_queries.empty() ? std::string(kNonePlaceholder)
                                                 : join(observation.active_queries, "; ");
    prompt += "\n\nThis is the current memory related to the query:\n\n";
    prompt += memory_block(observation);
    prompt += "\n\nNotes from the previous step:\n\n";
    prompt += diagnostics_block(observation);
    if (answering) {
        prompt += "\n\nAnswer the question now. Give your final answer inside ";
        prompt += "<answer></answer> tags.";
    } else {
        prompt += "\n\nTips:\n";
        prompt += tips_block(config.schema);
        prompt += "\n\nThis is the article:\n\n";
        prompt += observation.env_chunk.value_or(std::string(kEmptyPlaceholder));
    }
    return prompt;
}

std::string render_system_prompt(const SchemaVariant& schema) {
    std::string out;
    out += "You read one section of a long document stream per turn and keep notes in two ";
    out += "places: a scratchpad and a long-term memory store.\n\n";
    out += "The scratchpad is a single block of text shown back to you every turn. Writing it ";
    out += "replaces the whole block, so rewrite it each turn with whatever must stay in view.\n\n";
    out += "The long-term store is a vector database of numbered entries. You operate on it ";
    out += "with paired XML tags, and you may emit several actions in one response:\n\n";
    if (schema.kind == SchemaKind::prompt) {
        out += "<add_memory>content</add_memory> stores a new entry. Do not re-add what is "
               "already stored.\n";
        out += "<modify_memory>Memory i: content</modify_memory> rewrites entry i. Prefer "
               "modifying entries over piling up new ones.\n";
        out += "<delete_memory>Memory i</delete_memory> removes entry i. You must delete "
               "duplicate memory entries!\n";
        out += "<update_query>keywords</update_query> sets the standing retrieval query. "
               "Matching entries come back on your next turn; nothing is retrieved until you "
               "set a query.\n";
        out += "<update_memory>content</update_memory> overwrites the scratchpad.\n";
    } else {
        out += "<create_memory>content</create_memory> stores a new entry. Do not re-add what "
               "is already stored.\n";
        out += "<read_memory>query</read_memory> retrieves matching entries on your next turn. "
               "Reads are per-turn: no read, no retrieval.\n";
        out += "<update_memory>id: content</update_memory> rewrites the entry with that id. "
               "Prefer rewriting entries over piling up new ones.\n";
        out += "<delete_memory>id</delete_memory> removes the entry. You must delete duplicate "
               "memory entries!\n";
    }
    out += "\nWhen a question is posed, answer from your memories only and put the final ";
    out += "answer inside <answer></answer> tags.";
    return out;
}

ReplayPolicy::ReplayPolicy(std::vector<std::string> script) : script_(std::move(script)) {}

std::string ReplayPolicy::respond(const TaskInstance&, const Observation&) {
    if (next_ >= script_.size()) throw ScriptExhaustedError(next_);
    return script_[next_++];
}

namespace {

const std::unordered_set<std::string>& stopwords() {
    static const std::unordered_set<std::string> kStopwords = {
        "a",    "an",    "and",   "are",   "as",    "at",    "be",     "been",  "but",
        "by",   "can",   "could", "did",   "do",    "does",  "during", "for",   "from",
        "had",  "has",   "have",  "her",   "his",   "how",   "in",     "into",  "is",
        "it",   "its",   "may",   "might", "must",  "of",    "on",     "or",    "over",
        "that", "the",   "their", "then",  "there", "these", "this",   "those", "through",
        "to",   "under", "was",   "were",  "what",  "when",  "where",  "which", "who",
        "whom", "whose", "why",   "will",  "with",  "would",
    };
    return kStopwords;
}

std::string strip_punct_lower(std::string_view word) {
    std::string out;
    for (char c : word) {
        const unsigned char uc = static_cast<unsigned char>(c);
        if (std::ispunct(uc)) continue;
        out += static_cast<char>(std::tolower(uc));
    }
    return out;
}

std::unordered_set<std::string> question_keywords(const std::vector<std::string>& questions) {
    std::unordered_set<std::string> keywords;
    for (const auto& q : questions) {
        for (const auto& raw : split_words(q)) {
            std::string word = strip_punct_lower(raw);
            if (word.size() < 2 && !std::isdigit(static_cast<unsigned char>(word.empty() ? ' ' : word[0]))) {
                continue;
            }
            if (word.empty() || stopwords().count(word)) continue;
            keywords.insert(std::move(word));
        }
    }
    return keywords;
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> sentences;
    std::string current;
    for (char c : text) {
        current += c;
        if (c == '.' || c == '!' || c == '?' || c == '\n') {
            std::string trimmed = trim(current);
            if (!trimmed.empty()) sentences.push_back(std::move(trimmed));
            current.clear();
        }
    }
    std::string trimmed = trim(current);
    if (!trimmed.empty()) sentences.push_back(std::move(trimmed));
    return sentences;
}

bool is_marker_line(std::string_view sentence) {
    return sentence.rfind("===", 0) == 0;
}

// Tail of the sentence after its last keyword hit, leading stopwords removed.
std::string best_span(const std::string& content,
                      const std::unordered_set<std::string>& keywords) {
    const std::vector<std::string> words = split_words(content);
    std::ptrdiff_t last_hit = -1;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (keywords.count(strip_punct_lower(words[i]))) last_hit = static_cast<std::ptrdiff_t>(i);
    }
    std::size_t begin = last_hit < 0 ? 0 : static_cast<std::size_t>(last_hit) + 1;
    while (begin < words.size() && stopwords().count(strip_punct_lower(words[begin]))) ++begin;
    if (begin >= words.size()) return content;
    std::string out;
    for (std::size_t i = begin; i < words.size(); ++i) {
        if (!out.empty()) out += ' ';
        out += words[i];
    }
    return out;
}

}  // namespace

HeuristicPolicy::HeuristicPolicy(SchemaVariant schema) : schema_(schema) {}

std::string HeuristicPolicy::respond(const TaskInstance& task, const Observation& observation) {
    ActionSequence seq;
    if (observation.pending_question) {
        const auto keywords = question_keywords({*observation.pending_question});
        std::string answer = "unknown";
        if (!observation.retrieved.empty()) {
            answer = best_span(observation.retrieved.front().second, keywords);
        }
        seq.actions.push_back(ReadAction{*observation.pending_question});
        seq.final_answer = answer;
        return render_actions(seq, schema_);
    }

    const auto keywords = question_keywords(task.questions);
    if (observation.env_chunk) {
        for (const auto& sentence : split_sentences(*observation.env_chunk)) {
            if (is_marker_line(sentence)) continue;
            bool hit = false;
            for (const auto& raw : split_words(sentence)) {
                if (keywords.count(strip_punct_lower(raw))) {
                    hit = true;
                    break;
                }
            }
            if (hit) seq.actions.push_back(CreateAction{sentence});
        }
    }
    seq.actions.push_back(ReadAction{join(task.questions, "; ")});
    return render_actions(seq, schema_);
}

RemotePolicyConfig load_policy_config(const std::filesystem::path& path) {
    RemotePolicyConfig config;
    const std::string body = read_file(path);
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        std::size_t eol = body.find('\n', pos);
        if (eol == std::string::npos) eol = body.size();
        std::string line = trim(std::string_view(body).substr(pos, eol - pos));
        pos = eol + 1;
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("policy config line " + std::to_string(line_no) +
                                        ": expected key = value");
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key == "endpoint") config.endpoint = value;
        else if (key == "path") config.path = value;
        else if (key == "model") config.model = value;
        else if (key == "temperature") config.temperature = std::stod(value);
        else if (key == "top_p") config.top_p = std::stod(value);
        else if (key == "max_in_flight") config.max_in_flight = std::stoi(value);
        else if (key == "timeout_ms") config.timeout_ms = std::stoi(value);
        else if (key == "max_retries") config.max_retries = std::stoi(value);
        else if (key == "api_key") config.api_key = value;
        else {
            throw std::invalid_argument("policy config: unknown key \"" + key + "\"");
        }
    }
    if (const char* env_key = std::getenv("MEMLOOP_API_KEY")) {
        config.api_key = env_key;
    }
    return config;
}

RemotePolicy::RemotePolicy(RemotePolicyConfig config, EpisodeConfig episode_config)
    : config_(std::move(config)),
      episode_config_(episode_config),
      system_prompt_(render_system_prompt(episode_config.schema)) {
    if (config_.endpoint.empty()) {
        throw std::invalid_argument("RemotePolicy: endpoint is required");
    }
    if (config_.max_in_flight < 1) {
        throw std::invalid_argument("RemotePolicy: max_in_flight must be >= 1");
    }
}

std::string RemotePolicy::respond(const TaskInstance& task, const Observation& observation) {
    PolicyTurn turn;
    turn.rendered_prompt = render_prompt(task, observation, episode_config_);
    turn.response = complete(system_prompt_, turn.rendered_prompt);
    return turn.response;
}

std::string RemotePolicy::complete(const std::string& system_prompt,
                                   const std::string& user_prompt) {
    {
        std::unique_lock<std::mutex> lock(slots_mutex_);
        slots_cv_.wait(lock, [this] { return slots_in_use_ < config_.max_in_flight; });
        ++slots_in_use_;
    }
    struct SlotGuard {
        RemotePolicy* self;
        ~SlotGuard() {
            std::lock_guard<std::mutex> lock(self->slots_mutex_);
            --self->slots_in_use_;
            self->slots_cv_.notify_one();
        }
    } guard{this};

    nlohmann::json body = {
        {"model", config_.model},
        {"messages",
         {{{"role", "system"}, {"content", system_prompt}},
          {{"role", "user"}, {"content", user_prompt}}}},
        {"temperature", config_.temperature},
        {"top_p", config_.top_p},
    };
    const std::string payload = body.dump();

    std::string last_error;
    bool timed_out = false;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(50 << (attempt - 1)));
        }
        httplib::Client client(config_.endpoint);
        client.set_connection_timeout(0, config_.timeout_ms * 1000);
        client.set_read_timeout(0, config_.timeout_ms * 1000);
        httplib::Headers headers;
        if (!config_.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + config_.api_key);
        }
        auto res = client.Post(config_.path, headers, payload, "application/json");
        if (!res) {
            timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                        res.error() == httplib::Error::Read;
            last_error = "transport: " + httplib::to_string(res.error());
            continue;
        }
        timed_out = false;
        if (res->status >= 500 || res->status == 429) {
            last_error = "http " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw TransportError("chat endpoint returned http " + std::to_string(res->status) +
                                 ": " + res->body.substr(0, 200));
        }
        auto parsed = nlohmann::json::parse(res->body, nullptr, /*allow_exceptions=*/false);
        if (parsed.is_discarded()) {
            throw TransportError("chat endpoint returned malformed JSON: " +
                                 res->body.substr(0, 200));
        }
        try {
            return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw TransportError("chat response missing choices[0].message.content: " +
                                 res->body.substr(0, 200));
        }
    }
    const std::string what = "chat endpoint unreachable after " +
                             std::to_string(config_.max_retries + 1) + " attempts: " + last_error;
    if (timed_out) throw TimeoutError(what);
    throw TransportError(what);
}

}  // namespace memloop
