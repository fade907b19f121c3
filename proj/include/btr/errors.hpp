#pragma once

#include <stdexcept>
#include <string>

namespace btr {

// Malformed or inconsistent input data (bad JSONL, missing fields,
// vocabulary mismatches). CLI maps this to exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (singular systems, non-finite sampling weights).
// CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace btr
