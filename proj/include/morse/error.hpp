#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace morse {

/// Bad user input: unreadable files, malformed lines, invalid parameters.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A model or thresholds file that fails validation on load.
class CorruptArtifact : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline InputError line_error(const std::string& what, std::size_t line_no) {
    return InputError(what + " at line " + std::to_string(line_no));
}

} // namespace morse
