#pragma once

#include "config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mcre::cli {

inline constexpr const char* kSchemaVersion = "1.0";

struct RunOptions {
    std::filesystem::path out_dir = ".";
    unsigned threads = 1;
};

/// Runs the configured subcommand and returns the paths it wrote.
/// Library failures propagate as mcre::Error.
std::vector<std::filesystem::path> run(const Config& config, const RunOptions& options);

/// Shortest round-trip decimal form of v ("nan", "inf", "-inf" for non-finite).
std::string format_number(double v);

}  // namespace mcre::cli
