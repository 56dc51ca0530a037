#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace papereval::write {
struct WriteResult;
}

namespace papereval::cli {

/// Process exit codes. Every error path maps to exactly one of these.
enum ExitCode : int {
    kOk = 0,
    kUsageOrIo = 1,           ///< bad flags, unreadable or unwritable files
    kValidation = 2,          ///< bundle validation, schema mismatch, missing rubric
    kIncompleteRun = 3,       ///< a metric family missing without explanation
    kJudgeConfig = 4,         ///< judge/verifier misconfigured or unreachable
    kBudgetExhausted = 5,     ///< writer loops hit their caps
    kToolUnavailable = 6,     ///< writer agent or compiler could not run
};

/// Exit code of the write command for a finished run.
int write_exit_code(const write::WriteResult& result);

/// Runs the command line; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace papereval::cli
