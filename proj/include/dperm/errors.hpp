#pragma once

#include <stdexcept>
#include <string>

namespace dperm {

// Error taxonomy mirrors the CLI exit codes: schema/config problems,
// privacy-requirement violations, solver non-convergence, and I/O.

class schema_error : public std::runtime_error {
public:
    explicit schema_error(const std::string& what) : std::runtime_error(what) {}
};

// A named requirement of the release mechanism was violated. Callers must not
// catch this to silently weaken privacy; the requirement tag says which check
// failed ("epsilon", "phi", "strong_convexity", ...).
class privacy_error : public std::runtime_error {
public:
    privacy_error(std::string requirement, const std::string& what)
        : std::runtime_error(what), requirement_(std::move(requirement)) {}

    const std::string& requirement() const noexcept { return requirement_; }

private:
    std::string requirement_;
};

class solver_error : public std::runtime_error {
public:
    explicit solver_error(const std::string& what) : std::runtime_error(what) {}
};

class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dperm
