#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "memloop/environment.hpp"

namespace memloop::cli {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitPartialFailure = 1;
inline constexpr int kExitInvalidInput = 2;

struct BuildOptions {
    std::filesystem::path source;
    std::string mode = "niah";  // niah | multiq
    int total_docs = 200;
    int n_instances = 10;
    std::uint64_t seed = 0;
    std::filesystem::path out;
};

struct RunOptions {
    std::filesystem::path task_file;
    std::string policy = "replay";  // replay | heuristic | remote
    std::filesystem::path script;   // replay responses (JSONL)
    std::filesystem::path remote_config;
    std::string endpoint;  // overrides the config file endpoint
    double temperature = 0.7;
    EpisodeConfig episode;
    std::uint64_t seed = 0;
    int parallel = 1;
    std::filesystem::path out_dir;  // parent; the run directory goes underneath
    std::string run_id;             // derived from the manifest when empty
};

struct ScoreOptions {
    std::vector<std::filesystem::path> run_dirs;
};

struct AdvantageOptions {
    std::filesystem::path rewards_file;  // one reward per line
    int group_size = 16;
    std::filesystem::path out;
};

int cmd_build(const BuildOptions& options);
int cmd_run(const RunOptions& options);
int cmd_score(const ScoreOptions& options);
int cmd_advantage(const AdvantageOptions& options);

// The run directory created by the last cmd_run call in this process; lets
// callers locate a derived run id without parsing stdout.
std::filesystem::path last_run_dir();

}  // namespace memloop::cli
