// Error types shared across the library.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace quasilin {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parse failure; offset is the byte position in the input text.
struct SyntaxError : Error {
    std::size_t offset;
    SyntaxError(const std::string& what, std::size_t off) : Error(what), offset(off) {}
};

struct UnknownSymbolError : Error {
    std::string symbol;
    explicit UnknownSymbolError(const std::string& sym)
        : Error("unknown symbol '" + sym + "'"), symbol(sym) {}
};

// Arithmetic left the domain of a node (division by zero, sqrt of a negative).
struct DomainError : Error {
    using Error::Error;
};

struct DimensionMismatchError : Error {
    using Error::Error;
};

struct NotControllableError : Error {
    using Error::Error;
};

// A flow or trajectory left the declared domain box.
struct BoxExitError : Error {
    using Error::Error;
};

// A requested approximation quality cannot be certified on the given data.
struct CannotAchieveError : Error {
    using Error::Error;
};

// Malformed user input (system files, CLI matrices, ...).
struct InputError : Error {
    using Error::Error;
};

}  // namespace quasilin
