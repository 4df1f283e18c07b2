#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"memloop: agent memory environments, rollouts and scoring"};
    app.require_subcommand(1);

    memloop::cli::BuildOptions build;
    auto* build_cmd = app.add_subcommand("build", "construct task instances from a QA source");
    build_cmd->add_option("--source", build.source, "source QA JSONL file")->required();
    build_cmd->add_option("--mode", build.mode, "niah | multiq")->default_val("niah");
    build_cmd->add_option("--total-docs", build.total_docs, "documents per instance")
        ->default_val(200);
    build_cmd->add_option("--n-instances", build.n_instances, "instances to build")
        ->default_val(10);
    build_cmd->add_option("--seed", build.seed, "base seed")->default_val(0);
    build_cmd->add_option("--out", build.out, "output task JSONL")->required();

    memloop::cli::RunOptions run;
    std::string schema_name = "table";
    auto* run_cmd = app.add_subcommand("run", "run a policy over task instances");
    run_cmd->add_option("--tasks", run.task_file, "task JSONL from build")->required();
    run_cmd->add_option("--policy", run.policy, "replay | heuristic | remote")
        ->default_val("replay");
    run_cmd->add_option("--script", run.script, "replay responses JSONL");
    run_cmd->add_option("--config", run.remote_config, "remote policy config file");
    run_cmd->add_option("--endpoint", run.endpoint, "chat endpoint override");
    run_cmd->add_option("--temperature", run.temperature, "sampling temperature")
        ->default_val(0.7);
    run_cmd->add_option("--chunk-size", run.episode.chunk_size_tokens, "chunk budget in tokens")
        ->default_val(4096);
    run_cmd->add_option("--retrieve-k", run.episode.retrieve_k, "entries per retrieval")
        ->default_val(6);
    run_cmd->add_option("--overlap", run.episode.chunk_overlap_tokens, "chunk overlap in tokens")
        ->default_val(0);
    run_cmd->add_option("--schema", schema_name, "table | prompt")->default_val("table");
    run_cmd->add_option("--seed", run.seed, "base seed")->default_val(0);
    run_cmd->add_option("--parallel", run.parallel, "concurrent instances")->default_val(1);
    run_cmd->add_option("--out", run.out_dir, "parent output directory")->required();
    run_cmd->add_option("--run-id", run.run_id, "override the derived run id");

    memloop::cli::ScoreOptions score;
    auto* score_cmd = app.add_subcommand("score", "score one or more run directories");
    score_cmd->add_option("runs", score.run_dirs, "run directories")->required();

    memloop::cli::AdvantageOptions advantage;
    auto* advantage_cmd =
        app.add_subcommand("advantage", "group-relative advantages from a rewards file");
    advantage_cmd->add_option("--rewards", advantage.rewards_file, "one reward per line")
        ->required();
    advantage_cmd->add_option("--group-size", advantage.group_size, "rollout group size")
        ->default_val(16);
    advantage_cmd->add_option("--out", advantage.out, "output advantages file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (build_cmd->parsed()) return memloop::cli::cmd_build(build);
        if (run_cmd->parsed()) {
            run.episode.schema = memloop::schema_from_string(schema_name);
            return memloop::cli::cmd_run(run);
        }
        if (score_cmd->parsed()) return memloop::cli::cmd_score(score);
        if (advantage_cmd->parsed()) return memloop::cli::cmd_advantage(advantage);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return memloop::cli::kExitInvalidInput;
    }
    return memloop::cli::kExitInvalidInput;
}
