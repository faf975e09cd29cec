#include "config.hpp"
#include "runner.hpp"

#include "mcre/error.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo experiments for Markov chains in random environments", "mcre"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;

    const std::vector<std::pair<std::string, std::string>> commands{
        {"simulate", "forward path of the chain and its environment (CSV t,y,x)"},
        {"couple", "coalescence curve of the coupled pair and its decay fit"},
        {"backward", "distance between backward laws from two starts, per n"},
        {"check", "drift, geometric-mean, log-moment and minorization checks"},
        {"goodtimes", "good times of one environment realization"},
        {"lyapunov", "top Lyapunov exponent of the drift or companion matrices"},
        {"lln", "running ergodic average along a stationary path"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "YAML experiment configuration")->required();
        sub->add_option("--out", out_dir, "output directory (created when missing)");
        sub->add_option("--seed", seed, "master seed; overrides the config");
        sub->add_option("--threads", threads, "worker threads; results do not depend on it")
            ->check(CLI::Range(1u, 1024u));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }
    const std::string subcommand = app.get_subcommands().front()->get_name();

    mcre::cli::Config config;
    try {
        config = mcre::cli::load_config(config_path, subcommand, seed);
    } catch (const mcre::cli::ConfigError& e) {
        std::cerr << "mcre: config error: " << config_path;
        if (e.line() > 0) std::cerr << ":" << e.line();
        std::cerr << ": field '" << e.field() << "': " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        mcre::cli::RunOptions options;
        options.out_dir = out_dir;
        options.threads = threads;
        for (const auto& path : mcre::cli::run(config, options)) std::cout << path.string() << "\n";
    } catch (const mcre::Error& e) {
        std::cerr << "mcre: runtime error in module '" << e.module() << "': " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "mcre: runtime error in module 'cli': " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
