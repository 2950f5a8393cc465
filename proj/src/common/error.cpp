#include "mitoforge/error.hpp"

namespace mitoforge {

Error::Error(ErrorKind kind, std::string module, const std::string& what)
    : std::runtime_error(what), kind_(kind), module_(std::move(module)) {}

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Config: return 2;
        case ErrorKind::Input: return 3;
        case ErrorKind::Numeric: return 4;
    }
    return 1;
}

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Config: return "config";
        case ErrorKind::Input: return "input";
        case ErrorKind::Numeric: return "numeric";
    }
    return "unknown";
}

}  // namespace mitoforge
