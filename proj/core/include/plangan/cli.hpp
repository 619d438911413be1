#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace plangan::cli {

// Parsed command line; option presence mirrors the flag set.
struct Command {
    std::string verb;
    std::optional<std::string> config_path;
    std::optional<std::string> out;
    std::optional<std::string> data;
    std::optional<std::string> checkpoint;
    std::optional<std::string> diagrams;
    std::optional<std::string> bucket;
    std::optional<std::string> variant;
    std::optional<std::string> only;
    std::optional<std::uint64_t> seed;
    std::optional<long> steps;
    std::optional<int> count;
    std::optional<int> samples;
    std::optional<int> min_rooms;
    std::optional<int> max_rooms;
    std::optional<double> mask_ratio;
    bool no_cna = false;
    bool no_nna = false;
    bool no_gmb = false;
    bool no_pretrain = false;
};

// Throws UsageError on malformed input; a --help request yields verb "help".
Command parse(const std::vector<std::string>& args);

int run(const Command& cmd);

// parse + run + error reporting; returns the process exit status
// (0 success, 2 usage error, 1 runtime failure)
int main(int argc, const char* const* argv);

const std::vector<std::string>& ablation_preset_names();

}  // namespace plangan::cli
