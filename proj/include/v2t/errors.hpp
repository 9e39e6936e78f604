#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace v2t {

// Bad arguments or shape mismatches caught at a module boundary.
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// File loading problems; `kind` lets callers react without parsing messages.
struct LoadError : std::runtime_error {
    enum class Kind { missing_file, malformed_line, duplicate_id, empty_file, bad_format };

    LoadError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}

    Kind kind;
};

// Non-finite losses or gradients; the offending step is rejected.
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Gateway failure classes: could not reach the service, the service spoke
// the wrong shape, or the model produced an unusable result.
struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BackendError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Pipeline stage failure; remembers which stage died.
struct IterationError : std::runtime_error {
    IterationError(std::string stage_, const std::string& msg)
        : std::runtime_error(msg), stage(std::move(stage_)) {}

    std::string stage;
};

} // namespace v2t
