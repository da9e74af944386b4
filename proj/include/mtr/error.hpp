// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mtr {

enum class Errc {
    // schema
    WrappedObject,
    MalformedJson,
    MissingFunctionWrapper,
    DuplicateToolName,
    InvalidToolName,
    InvalidSchema,
    // trace
    UnclosedTag,
    InterleavingViolation,
    // agents
    UnboundPlaceholder,
    ToolGenerationFailed,
    OutputSchemaViolation,
    BackendTimeout,
    BackendError,
    // dataset
    LengthMismatch,
    EmptyCorpus,
    EmptyFit,
    // plumbing
    Config,
    Io,
};

std::string_view errc_name(Errc code) noexcept;

/// Every fault raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace mtr
