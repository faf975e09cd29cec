#pragma once

#include "expression.hpp"

#include "mcre/environment.hpp"
#include "mcre/models.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcre::cli {

/// Invalid configuration: names the offending field and, when known, its line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, int line, const std::string& what);
    const std::string& field() const noexcept { return field_; }
    int line() const noexcept { return line_; }

private:
    std::string field_;
    int line_;
};

inline const std::vector<std::string> kSubcommands{"simulate", "couple", "backward", "check", "goodtimes", "lyapunov", "lln"};

struct SimulateParams {
    std::size_t steps = 100;
    Point start;
};

struct CoupleParams {
    std::vector<std::size_t> ns;
    std::size_t replicas = 10000;
    Point z, z_bar;
    std::string schedule = "fixed-level";
    double R = 0.0;
    double eta_min = 0.0;
    std::size_t burn_in = 1000;
    std::uint64_t C1_max = 1000;
    std::uint64_t C2_max = 1'000'000'000'000'000ULL;
};

struct BackwardParams {
    std::vector<std::size_t> ns;
    Point z, z_prime;
    std::string mode;  // exact | coupling
    std::size_t replicas = 10000;
    double R = 0.0;
};

struct CheckParams {
    std::vector<Point> xs;  // environment tuples (drift.p values each, newest first)
    std::vector<Point> ys;
    std::size_t n_mc = 10000;
    std::size_t n = 10000;  // blocks for the geometric mean and log+ checks
    double R = 0.0;
};

struct GoodtimesParams {
    std::size_t n = 10000;
    std::size_t burn_in = 20000;
    std::uint64_t C1_max = 1000;
    std::uint64_t C2_max = 1'000'000'000'000'000ULL;
    std::optional<std::uint64_t> C1, C2;
};

struct LyapunovParams {
    std::size_t n = 10000;
    std::string norm = "l1";
};

struct LlnParams {
    std::size_t n = 10000;
    std::size_t n_backward = 1000;
    Expression f;
    std::vector<std::size_t> checkpoints;
    Point z;
};

struct Config {
    std::string subcommand;
    std::uint64_t seed = 0;
    EnvironmentSpec environment;
    std::optional<models::ModelBundle> model;
    std::string model_kind;
    std::string output_prefix;

    SimulateParams simulate;
    CoupleParams couple;
    BackwardParams backward;
    CheckParams check;
    GoodtimesParams goodtimes;
    LyapunovParams lyapunov;
    LlnParams lln;

    /// Every setting after defaults were applied, for the JSON echo.
    nlohmann::ordered_json resolved;
};

/// Parses and validates `path` for `subcommand`. `seed_override` replaces
/// the configured seed. Throws ConfigError.
Config load_config(const std::string& path, const std::string& subcommand, std::optional<std::uint64_t> seed_override);

}  // namespace mcre::cli
