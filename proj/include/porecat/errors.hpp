#pragma once

#include <stdexcept>
#include <string>

namespace porecat {

/// Invalid user input: bad mesh parameters, schema violations, bad constants.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Linear or nonlinear solver failure, NaN detection, dt underflow.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rate expression syntax error. `position` is the 0-based character offset.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t position, std::string expected)
        : std::runtime_error(what + " at position " + std::to_string(position)),
          position_(position), expected_(std::move(expected)) {}

    std::size_t position() const noexcept { return position_; }
    const std::string& expected() const noexcept { return expected_; }

private:
    std::size_t position_;
    std::string expected_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define PORECAT_REQUIRE(cond, Err, msg) \
    do {                                \
        if (!(cond)) throw Err(msg);    \
    } while (false)

} // namespace porecat
