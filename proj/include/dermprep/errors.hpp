#pragma once

#include <stdexcept>
#include <string>

namespace dermprep {

/// Malformed or inconsistent input data (CSV contents, id mismatches,
/// violated format preconditions). The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem and codec failures. The CLI maps this to exit code 3.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dermprep
