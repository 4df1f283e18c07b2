#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <iostream>
#include <thread>

#include "memloop/io.hpp"
#include "memloop/policy.hpp"
#include "memloop/rng.hpp"
#include "memloop/task_builder.hpp"
#include "memloop/text.hpp"

namespace memloop::cli {

namespace {

std::filesystem::path g_last_run_dir;

std::string instance_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "instance_%03zu", i);
    return buf;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, value);
    return buf;
}

double estimate_tokens(const TaskInstance& task, const TokenCounter& counter) {
    double total = 0.0;
    for (const auto& doc : task.documents) total += counter.count(doc.text);
    // Account for the between-document marker lines the environment inserts.
    if (!task.documents.empty()) {
        total += counter.count("=== Document 1 ===") *
                 static_cast<double>(task.documents.size() - 1);
    }
    return total;
}

}  // namespace

std::filesystem::path last_run_dir() { return g_last_run_dir; }

int cmd_build(const BuildOptions& options) {
    if (options.mode != "niah" && options.mode != "multiq") {
        std::cerr << "build: --mode must be niah or multiq\n";
        return kExitInvalidInput;
    }
    if (options.n_instances < 1 || options.total_docs < 1) {
        std::cerr << "build: --n-instances and --total-docs must be >= 1\n";
        return kExitInvalidInput;
    }

    const IngestResult source = ingest(options.source);
    std::vector<TaskInstance> tasks;
    tasks.reserve(static_cast<std::size_t>(options.n_instances));
    bool reused_warned = false;
    for (int i = 0; i < options.n_instances; ++i) {
        const std::uint64_t index = static_cast<std::uint64_t>(i);
        const std::uint64_t instance_seed = derive_seed(options.seed, "instance", index);
        SeededRng picker(derive_seed(options.seed, "pick", index));
        TaskInstance task;
        if (options.mode == "niah") {
            const auto& sample = source.samples[picker.below(source.samples.size())];
            task = build_niah(sample, source.distractor_pool, options.total_docs, instance_seed);
        } else {
            const int max_q = static_cast<int>(
                std::min<std::size_t>(10, source.samples.size()));
            const int nq = 1 + static_cast<int>(picker.below(static_cast<std::uint64_t>(max_q)));
            task = build_multiq(source.samples, source.distractor_pool, nq, options.total_docs,
                                instance_seed);
        }
        if (task.distractors_reused && !reused_warned) {
            std::cerr << "build: distractor pool smaller than needed; sampling with replacement\n";
            reused_warned = true;
        }
        tasks.push_back(std::move(task));
    }
    save_tasks(options.out, tasks);

    const auto counter = default_token_counter();
    double mean_docs = 0.0;
    double mean_tokens = 0.0;
    for (const auto& t : tasks) {
        mean_docs += static_cast<double>(t.documents.size());
        mean_tokens += estimate_tokens(t, *counter);
    }
    mean_docs /= static_cast<double>(tasks.size());
    mean_tokens /= static_cast<double>(tasks.size());
    std::printf("built %zu %s instances -> %s (skipped %zu source rows)\n", tasks.size(),
                options.mode.c_str(), options.out.string().c_str(), source.skipped);
    std::printf("mean documents per instance: %.1f, mean token estimate: %.0f\n", mean_docs,
                mean_tokens);
    return kExitOk;
}

namespace {

std::vector<std::vector<std::string>> load_replay_scripts(const std::filesystem::path& path,
                                                          std::size_t n_instances) {
    const JsonlResult raw = read_jsonl(path);
    if (raw.bad_lines > 0 || raw.rows.empty()) {
        throw std::invalid_argument("replay script must be JSONL with one entry per line");
    }
    std::vector<std::vector<std::string>> scripts;
    for (const auto& row : raw.rows) {
        const nlohmann::json& arr = row.is_object() && row.contains("responses")
                                        ? row["responses"]
                                        : row;
        if (!arr.is_array()) {
            throw std::invalid_argument(
                "replay script lines must be arrays or {\"responses\": [...]}");
        }
        scripts.push_back(arr.get<std::vector<std::string>>());
    }
    if (scripts.size() != n_instances && scripts.size() != 1) {
        throw std::invalid_argument("replay script has " + std::to_string(scripts.size()) +
                                    " lines for " + std::to_string(n_instances) + " instances");
    }
    return scripts;
}

struct InstanceResult {
    bool ok = false;
    std::string error;
    nlohmann::json answers_line;
};

}  // namespace

int cmd_run(const RunOptions& options) {
    options.episode.validate();
    const std::vector<TaskInstance> tasks = load_tasks(options.task_file);
    if (tasks.empty()) {
        std::cerr << "run: task file is empty\n";
        return kExitInvalidInput;
    }

    nlohmann::json manifest = {
        {"chunk_size_tokens", options.episode.chunk_size_tokens},
        {"retrieve_k", options.episode.retrieve_k},
        {"schema", to_string(options.episode.schema.kind)},
        {"chunk_overlap_tokens", options.episode.chunk_overlap_tokens},
        {"max_parse_diagnostics_shown", options.episode.max_parse_diagnostics_shown},
        {"policy", options.policy},
        {"seed", options.seed},
        {"task_file", options.task_file.string()},
        {"temperature", options.temperature},
        {"script", options.script.string()},
        {"endpoint", options.endpoint},
        {"parallel", options.parallel},
    };
    const std::string run_id =
        options.run_id.empty() ? hex64(fnv1a64(manifest.dump())) : options.run_id;
    const std::filesystem::path run_dir = options.out_dir / run_id;
    manifest["run_id"] = run_id;
    manifest["output_dir"] = run_dir.string();

    std::filesystem::create_directories(run_dir / "transcripts");
    write_file(run_dir / "manifest.json", manifest.dump(2) + "\n");
    g_last_run_dir = run_dir;

    // Policy construction. Replay gets one policy per instance (scripts are
    // positional); heuristic is stateless; remote is shared so the in-flight
    // bound covers the whole run.
    std::vector<std::vector<std::string>> scripts;
    std::shared_ptr<RemotePolicy> remote;
    if (options.policy == "replay") {
        if (options.script.empty()) {
            std::cerr << "run: --policy replay requires --script\n";
            return kExitInvalidInput;
        }
        scripts = load_replay_scripts(options.script, tasks.size());
    } else if (options.policy == "remote") {
        RemotePolicyConfig remote_config;
        if (!options.remote_config.empty()) {
            remote_config = load_policy_config(options.remote_config);
        }
        if (!options.endpoint.empty()) remote_config.endpoint = options.endpoint;
        remote_config.temperature = options.temperature;
        remote = std::make_shared<RemotePolicy>(remote_config, options.episode);
    } else if (options.policy != "heuristic") {
        std::cerr << "run: unknown policy \"" << options.policy << "\"\n";
        return kExitInvalidInput;
    }

    Environment env(options.episode, std::make_shared<HashEmbedder>());
    std::vector<InstanceResult> results(tasks.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            InstanceResult& result = results[i];
            try {
                std::unique_ptr<Policy> owned;
                Policy* policy = nullptr;
                if (options.policy == "replay") {
                    const auto& script = scripts.size() == 1 ? scripts[0] : scripts[i];
                    owned = std::make_unique<ReplayPolicy>(script);
                    policy = owned.get();
                } else if (options.policy == "heuristic") {
                    owned = std::make_unique<HeuristicPolicy>(options.episode.schema);
                    policy = owned.get();
                } else {
                    policy = remote.get();
                }
                EpisodeRun run = env.run_episode(tasks[i], *policy, instance_name(i));
                write_file(run_dir / "transcripts" / (instance_name(i) + ".jsonl"),
                           transcript_to_jsonl(run.state.transcript));
                nlohmann::json counts = nlohmann::json::object();
                for (const auto& [kind, n] : count_actions(run.record.per_step_actions)) {
                    counts[to_string(kind)] = n;
                }
                result.answers_line = {
                    {"task", i},
                    {"task_id", run.record.task_id},
                    {"questions", tasks[i].questions},
                    {"answers", run.record.answers},
                    {"gold", tasks[i].gold},
                    {"action_counts", std::move(counts)},
                };
                result.ok = true;
            } catch (const std::exception& e) {
                result.error = e.what();
            }
        }
    };

    const int n_workers = std::max(1, std::min<int>(options.parallel,
                                                    static_cast<int>(tasks.size())));
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    std::vector<nlohmann::json> answer_lines;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i].ok) {
            answer_lines.push_back(results[i].answers_line);
        } else {
            ++failures;
            std::cerr << "run: " << instance_name(i) << " failed: " << results[i].error << "\n";
        }
    }
    write_jsonl(run_dir / "answers.jsonl", answer_lines);

    std::printf("run %s: %zu/%zu instances completed -> %s\n", run_id.c_str(),
                tasks.size() - failures, tasks.size(), run_dir.string().c_str());
    return failures == tasks.size() ? kExitPartialFailure : kExitOk;
}

namespace {

struct MissingTranscriptsError : std::runtime_error {
    explicit MissingTranscriptsError(const std::string& what) : std::runtime_error(what) {}
};

struct RunScore {
    double em = 0.0;
    std::vector<double> per_instance;
    std::vector<std::vector<int>> per_question;
    ActionStats stats;
};

RunScore score_run_dir(const std::filesystem::path& run_dir) {
    const auto answers_path = run_dir / "answers.jsonl";
    if (!std::filesystem::exists(answers_path)) {
        throw MissingTranscriptsError("no answers.jsonl under " + run_dir.string());
    }
    const JsonlResult answers = read_jsonl(answers_path);
    if (answers.rows.empty()) {
        throw MissingTranscriptsError("no completed instances under " + run_dir.string());
    }

    RunScore score;
    std::vector<TrajectoryRecord> records;
    double em_sum = 0.0;
    for (const auto& row : answers.rows) {
        const auto preds = row.at("answers").get<std::vector<std::string>>();
        const auto gold = row.at("gold").get<std::vector<std::vector<std::string>>>();
        std::vector<int> ems;
        ems.reserve(preds.size());
        for (std::size_t q = 0; q < preds.size(); ++q) ems.push_back(em_reward(preds[q], gold[q]));
        const double instance_em = task_reward(preds, gold);
        score.per_instance.push_back(instance_em);
        score.per_question.push_back(std::move(ems));
        em_sum += instance_em;

        // Action counts come from the serialized transcript, not from memory:
        // anything scoreable from a run directory alone stays scoreable.
        TrajectoryRecord record;
        record.task_id = row.value("task_id", "");
        const auto transcript_path = run_dir / "transcripts" / (record.task_id + ".jsonl");
        const JsonlResult transcript = read_jsonl(transcript_path);
        for (const auto& line : transcript.rows) {
            ActionSequence seq;
            for (const auto& aj : line.at("actions")) {
                seq.actions.push_back(action_from_json(aj));
            }
            record.per_step_actions.push_back(std::move(seq));
        }
        record.reward = instance_em;
        records.push_back(std::move(record));
    }
    score.em = em_sum / static_cast<double>(answers.rows.size());
    score.stats = action_stats(records);
    return score;
}

}  // namespace

int cmd_score(const ScoreOptions& options) {
    if (options.run_dirs.empty()) {
        std::cerr << "score: at least one run directory is required\n";
        return kExitInvalidInput;
    }
    try {
        std::vector<RunScore> scores;
        for (const auto& dir : options.run_dirs) {
            RunScore score = score_run_dir(dir);
            nlohmann::json report = {
                {"em", score.em},
                {"per_instance", score.per_instance},
                {"per_question", score.per_question},
                {"action_stats", action_stats_to_json(score.stats)},
            };
            write_file(dir / "scores.json", report.dump(2) + "\n");
            write_file(dir / "action_stats.csv", action_stats_csv(score.stats));
            scores.push_back(std::move(score));
        }

        if (scores.size() == 1) {
            std::printf("em %.4f over %zu instances\n", scores[0].em,
                        scores[0].per_instance.size());
        } else {
            double mean = 0.0;
            for (std::size_t i = 0; i < scores.size(); ++i) {
                std::printf("run %s: em %.4f\n", options.run_dirs[i].string().c_str(),
                            scores[i].em);
                mean += scores[i].em;
            }
            std::printf("mean em over %zu runs: %.4f\n", scores.size(),
                        mean / static_cast<double>(scores.size()));
        }
        return kExitOk;
    } catch (const MissingTranscriptsError& e) {
        std::cerr << "score: " << e.what() << "\n";
        return kExitInvalidInput;
    }
}

int cmd_advantage(const AdvantageOptions& options) {
    if (options.group_size < 1) {
        std::cerr << "advantage: --group-size must be >= 1\n";
        return kExitInvalidInput;
    }
    std::vector<double> rewards;
    {
        const std::string body = read_file(options.rewards_file);
        std::size_t pos = 0;
        while (pos <= body.size()) {
            std::size_t eol = body.find('\n', pos);
            if (eol == std::string::npos) eol = body.size();
            const std::string line = trim(std::string_view(body).substr(pos, eol - pos));
            pos = eol + 1;
            if (line.empty()) continue;
            try {
                std::size_t used = 0;
                const double value = std::stod(line, &used);
                if (used != line.size()) throw std::invalid_argument(line);
                rewards.push_back(value);
            } catch (const std::exception&) {
                std::cerr << "advantage: unparseable reward line \"" << line << "\"\n";
                return kExitInvalidInput;
            }
        }
    }
    if (rewards.empty() || rewards.size() % static_cast<std::size_t>(options.group_size) != 0) {
        std::cerr << "advantage: reward count " << rewards.size()
                  << " is not a positive multiple of group size " << options.group_size << "\n";
        return kExitInvalidInput;
    }

    std::string out;
    char buf[64];
    const std::size_t groups = rewards.size() / static_cast<std::size_t>(options.group_size);
    for (std::size_t g = 0; g < groups; ++g) {
        const auto begin = rewards.begin() + static_cast<std::ptrdiff_t>(
                                                 g * static_cast<std::size_t>(options.group_size));
        const GroupAdvantage group = make_group_advantage(
            "group" + std::to_string(g), std::vector<double>(begin, begin + options.group_size));
        double sum = 0.0;
        for (double a : group.advantages) sum += a;
        if (std::abs(sum) > 1e-9) {
            std::cerr << "advantage: group " << g << " advantages are not zero-sum\n";
            return kExitPartialFailure;
        }
        for (double a : group.advantages) {
            std::snprintf(buf, sizeof(buf), "%.17g\n", a);
            out += buf;
        }
    }
    write_file(options.out, out);
    std::printf("wrote %zu advantages in %zu groups -> %s\n", rewards.size(), groups,
                options.out.string().c_str());
    return kExitOk;
}

}  // namespace memloop::cli
