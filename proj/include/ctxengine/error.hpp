#pragma once

#include <stdexcept>
#include <string>

namespace ctxengine {

/// File-system or other environmental failure (CLI exit code 1).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input, configuration, or flag values (CLI exit code 2).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace ctxengine
