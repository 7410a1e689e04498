#pragma once

#include <stdexcept>
#include <string>

namespace charattr {

// Bad command line or config (CLI exit code 1).
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& m) : std::runtime_error(m) {}
};

// Bad or mismatched input data / files (CLI exit code 2).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& m) : std::runtime_error(m) {}
};

// Non-finite values during training (CLI exit code 3).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace charattr
