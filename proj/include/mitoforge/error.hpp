#pragma once

#include <stdexcept>
#include <string>

namespace mitoforge {

/// Coarse failure class; the CLI maps each to a distinct exit code.
enum class ErrorKind { Config, Input, Numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string module, const std::string& what);

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& module() const noexcept { return module_; }

private:
    ErrorKind kind_;
    std::string module_;
};

/// Invalid parameters or configuration (bad factor, bad preset, malformed config).
class ConfigError : public Error {
public:
    ConfigError(std::string module, const std::string& what)
        : Error(ErrorKind::Config, std::move(module), what) {}
};

/// Unreadable, malformed or geometrically unusable input data.
class InputError : public Error {
public:
    InputError(std::string module, const std::string& what)
        : Error(ErrorKind::Input, std::move(module), what) {}
};

/// Non-finite values or divergence during a numeric procedure.
class NumericError : public Error {
public:
    NumericError(std::string module, const std::string& what)
        : Error(ErrorKind::Numeric, std::move(module), what) {}
};

int exit_code_for(ErrorKind kind) noexcept;
const char* to_string(ErrorKind kind) noexcept;

}  // namespace mitoforge
