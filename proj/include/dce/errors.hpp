#pragma once

#include <stdexcept>
#include <string>

namespace dce {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid user-supplied parameter or configuration value.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

// Shape mismatch between operands (vector lengths, matrix dims, ...).
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& what) : Error(what) {}
};

// Dataset ingestion problems (missing file/column, unusable rows, ...).
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

// Step size outside the range admitted by the mixing matrix construction.
class AlphaOutOfRange : public Error {
public:
    explicit AlphaOutOfRange(const std::string& what) : Error(what) {}
};

class Disconnected : public Error {
public:
    explicit Disconnected(const std::string& what) : Error(what) {}
};

// Non-finite estimate (or runaway norm) detected during iteration.
class Diverged : public Error {
public:
    Diverged(long iteration, const std::string& what)
        : Error(what), iteration(iteration) {}
    long iteration;
};

}  // namespace dce
