#pragma once

// Error taxonomy shared by the library and the CLI.
//
// The CLI maps these to process exit codes: config/usage problems -> 2,
// missing inputs -> 3, violated internal invariants -> 4. Library code throws;
// nothing in the library calls exit().

#include <stdexcept>
#include <string>

namespace vardiv {

// Bad configuration or bad arguments to an operation.
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

// A referenced file or directory does not exist or cannot be read.
struct MissingInputError : std::runtime_error {
    explicit MissingInputError(const std::string& msg) : std::runtime_error(msg) {}
};

// A postcondition or internal invariant failed; indicates a bug, not bad input.
struct InternalError : std::logic_error {
    explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

} // namespace vardiv
