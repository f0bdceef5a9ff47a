#pragma once

#include <stdexcept>
#include <string>

namespace bsac {

// Tensor/layer dimension mismatches.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse: wrong call order, out-of-range arguments, unknown names.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values produced where finite ones are required.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed config / declaration text.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid experiment configuration (bad keys, dimension mismatches).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Strategy-graph validation failures.
struct CycleError : std::runtime_error {
    explicit CycleError(const std::string& msg) : std::runtime_error(msg) {}
};
struct ReferenceError : std::runtime_error {
    explicit ReferenceError(const std::string& msg) : std::runtime_error(msg) {}
};
struct PartitionError : std::runtime_error {
    explicit PartitionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Replay buffer cannot serve the request yet.
struct NotReadyError : std::runtime_error {
    explicit NotReadyError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bsac
