#pragma once

#include <stdexcept>
#include <string>

namespace g4rl {

/// Input or parameter dimensions disagree.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An operation was called in a state that its contract forbids.
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Malformed configuration, maze layout or serialized artifact.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Environment misuse, e.g. stepping an episode that already ended.
class ProtocolError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace g4rl
