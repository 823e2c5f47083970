// r2write command-line entrypoint.
#include <csignal>
#include <iostream>
#include <optional>
#include <thread>

#include <pthread.h>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "r2write/app.hpp"
#include "r2write/config.hpp"
#include "r2write/errors.hpp"
#include "r2write/server.hpp"

namespace {

using namespace r2write;

enum ExitCode { kOk = 0, kItemErrors = 1, kUsage = 2, kFailure = 3 };

struct PathFlags {
    std::string input;
    std::string output;
    std::string checkpoint_dir;
    std::optional<std::size_t> limit;
};

void add_path_flags(CLI::App* sub, PathFlags& flags) {
    sub->add_option("--input,-i", flags.input, "Input JSONL file");
    sub->add_option("--output,-o", flags.output, "Output file");
    sub->add_option("--checkpoint-dir", flags.checkpoint_dir, "Checkpoint directory (default: <output>.ckpt)");
    sub->add_option("--limit", flags.limit, "Process at most this many new items, then stop");
}

void apply_paths(PipelineConfig& config, const PathFlags& flags) {
    if (!flags.input.empty()) config.paths.input = flags.input;
    if (!flags.output.empty()) config.paths.output = flags.output;
    if (!flags.checkpoint_dir.empty()) config.paths.checkpoint_dir = flags.checkpoint_dir;
}

int report(const app::RunSummary& summary) {
    std::cout << app::to_json(summary).dump(2) << std::endl;
    if (summary.errors > 0) {
        std::cerr << summary.stage << ": " << summary.errors << " of " << summary.items << " items failed" << std::endl;
        return kItemErrors;
    }
    return kOk;
}

int serve(const PipelineConfig& config, ChatClient& client) {
    const auto [host, port] = app::parse_addr(config.serve_addr);

    // Handle SIGINT/SIGTERM on a dedicated thread; server threads inherit the mask.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    app::RewardServer server(config.reward, client);
    const int bound = server.bind(host, port);
    spdlog::info("reward service listening on {}:{}", host, bound);
    std::cout << json{{"listening", host + ":" + std::to_string(bound)}}.dump() << std::endl;

    std::jthread waiter([&server, signals] {
        int sig = 0;
        sigwait(&signals, &sig);
        spdlog::info("signal {} received, shutting down", sig);
        server.stop();
    });
    server.listen();
    pthread_kill(waiter.native_handle(), SIGTERM);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("r2write"));

    CLI::App cli{"Writing-task data synthesis and reward tooling"};
    cli.set_version_flag("--version", std::string(app::version()));
    cli.require_subcommand(1);
    cli.fallthrough();
    cli.failure_message(CLI::FailureMessage::help);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> max_in_flight;
    bool resume = false;
    std::string log_level = "info";
    cli.add_option("--config,-c", config_path, "INI configuration file")->check(CLI::ExistingFile);
    cli.add_option("--seed", seed, "Seed for reward slot assignment");
    cli.add_option("--max-in-flight", max_in_flight, "Concurrent requests per backend")->check(CLI::Range(1, 4096));
    cli.add_flag("--resume", resume, "Continue from the stage checkpoint");
    cli.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

    PathFlags paths;
    std::string difficulty;
    std::string answers;
    std::string rubrics;
    std::optional<std::size_t> top_k;
    std::optional<std::size_t> min_tokens;
    std::optional<double> dedup_threshold;
    std::optional<std::size_t> max_tokens;
    std::optional<int> max_turns;
    std::optional<double> alpha;
    bool batch = false;
    bool serve_mode = false;
    std::string addr;
    bool revisions = false;

    auto* curate = cli.add_subcommand("curate", "Filter, deduplicate, truncate and optionally rank a query corpus");
    add_path_flags(curate, paths);
    curate->add_option("--difficulty", difficulty, "Difficulty records JSONL for top-k ranking");
    curate->add_option("--top-k", top_k, "Keep the k queries with the largest difficulty gap");
    curate->add_option("--min-tokens", min_tokens, "Drop queries with fewer tokens");
    curate->add_option("--dedup-threshold", dedup_threshold, "3-gram Jaccard similarity above which a query is dropped");
    curate->add_option("--max-tokens", max_tokens, "Truncate query plus materials to this many tokens");

    auto* rubric_cmd = cli.add_subcommand("rubrics", "Generate key-point rubrics and quality criteria per query");
    add_path_flags(rubric_cmd, paths);
    rubric_cmd->add_option("--answers", answers, "Model answers JSONL {query_id, answer}; enables difficulty scoring");
    rubric_cmd->add_option("--difficulty", difficulty, "Where to write difficulty records");

    auto* synth = cli.add_subcommand("synthesize", "Run the writer-judge refinement loop per query");
    add_path_flags(synth, paths);
    synth->add_option("--rubrics", rubrics, "Rubric sets JSONL from the rubrics stage");
    synth->add_option("--max-turns", max_turns, "Refinement iterations after the first draft");

    auto* reward = cli.add_subcommand("reward", "Score samples in batch or serve the reward endpoint");
    add_path_flags(reward, paths);
    auto* batch_flag = reward->add_flag("--batch", batch, "Score a JSONL file of reward requests");
    auto* serve_flag = reward->add_flag("--serve", serve_mode, "Serve POST /v1/reward and GET /healthz");
    batch_flag->excludes(serve_flag);
    reward->add_option("--addr", addr, "host:port for --serve");
    reward->add_option("--alpha", alpha, "Answer-reward weight in (0, 1)");

    auto* bench = cli.add_subcommand("bench", "Score reflection segments of benchmark samples");
    add_path_flags(bench, paths);

    auto* patterns = cli.add_subcommand("patterns", "Classify reasoning patterns in traces");
    add_path_flags(patterns, paths);
    patterns->add_flag("--revisions", revisions, "Also classify revision types (RA/FLC/QE)");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        PipelineConfig config = config_path.empty() ? PipelineConfig{} : load_config(config_path);
        apply_paths(config, paths);
        if (seed) config.reward.seed = *seed;
        if (max_in_flight) {
            config.writer.backend.max_in_flight = *max_in_flight;
            config.judge.backend.max_in_flight = *max_in_flight;
        }
        if (!difficulty.empty()) config.paths.difficulty = difficulty;
        if (!answers.empty()) config.paths.answers = answers;
        if (!rubrics.empty()) config.paths.rubrics = rubrics;
        if (top_k) config.corpus.top_k = *top_k;
        if (min_tokens) config.corpus.min_tokens = *min_tokens;
        if (dedup_threshold) config.corpus.dedup_threshold = *dedup_threshold;
        if (max_tokens) config.corpus.max_tokens = *max_tokens;
        if (max_turns) config.synthesis.max_turns = *max_turns;
        if (alpha) config.reward.alpha = *alpha;
        if (!addr.empty()) config.serve_addr = addr;
        config.validate();

        app::RunOptions options;
        options.resume = resume;
        options.limit = paths.limit;
        options.revisions = revisions;

        if (curate->parsed()) return report(app::cmd_curate(config));

        if (reward->parsed() && !batch && !serve_mode) throw UsageError("reward needs --batch or --serve");
        const app::Clients clients = app::make_clients(config);
        if (rubric_cmd->parsed()) return report(app::cmd_rubrics(config, options, *clients.router));
        if (synth->parsed()) return report(app::cmd_synthesize(config, options, *clients.router));
        if (reward->parsed() && serve_mode) return serve(config, *clients.router);
        if (reward->parsed()) return report(app::cmd_reward_batch(config, options, *clients.router));
        if (bench->parsed()) return report(app::cmd_bench(config, options, *clients.router));
        if (patterns->parsed()) return report(app::cmd_patterns(config, options, *clients.router));
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << cli.help();
        return kUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.kind() << ": " << e.what() << std::endl;
        return kFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return kFailure;
    }
    return kUsage;
}
