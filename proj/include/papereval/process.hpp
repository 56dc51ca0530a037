#pragma once

#include <string>
#include <vector>

#include "papereval/common.hpp"

namespace papereval {

struct ProcessResult {
    int exit_code = -1;
    /// Combined stdout and stderr, in arrival order.
    std::string output;
    /// True when the executable could not be started at all.
    bool not_found = false;
};

/// Runs `argv` in `working_dir`, feeding `input` on stdin. Blocks until exit.
ProcessResult run_process(const std::vector<std::string>& argv, const fs::path& working_dir,
                          const std::string& input = {});

/// Splits a command line on whitespace, honouring single and double quotes.
std::vector<std::string> split_command(const std::string& command);

}  // namespace papereval
