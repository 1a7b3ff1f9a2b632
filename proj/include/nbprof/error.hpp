#pragma once

#include <stdexcept>
#include <string>

namespace nbprof {

/// Base class for all library errors.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid arguments or parameter values supplied by the caller.
class usage_error : public error {
public:
    explicit usage_error(const std::string& what) : error(what) {}
};

/// Malformed or inconsistent input data (files, logs, matrices).
class data_error : public error {
public:
    explicit data_error(const std::string& what) : error(what) {}
};

/// Violated internal assumption; indicates a bug or an unrecoverable
/// numerical breakdown, not bad user input.
class internal_error : public error {
public:
    explicit internal_error(const std::string& what) : error(what) {}
};

} // namespace nbprof
